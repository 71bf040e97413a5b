use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite real-valued class stored as an `|H| x |X|` value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteClass {
    values: Vec<Vec<f64>>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

/// Limits of the exact calculators. Exceeding one is a capacity error, never an approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    pub max_functions: usize,
    pub max_instances: usize,
    pub max_depth: usize,
    pub max_rademacher_n: usize,
    pub max_seq_rademacher_n: usize,
    pub max_seq_rademacher_instances: usize,
    pub max_experts: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_functions: 64,
            max_instances: 12,
            max_depth: 8,
            max_rademacher_n: 22,
            max_seq_rademacher_n: 3,
            max_seq_rademacher_instances: 6,
            max_experts: 100_000,
        }
    }
}

pub(crate) fn cap(name: &'static str, limit: usize, requested: usize) -> Result<()> {
    if requested > limit {
        Err(Error::Capacity {
            cap: name,
            limit,
            requested,
        })
    } else {
        Ok(())
    }
}

impl FiniteClass {
    /// Builds a class from rows; duplicate rows are dropped (first occurrence kept).
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..values.len()).map(|i| format!("h{i}")).collect();
        Self::with_labels(values, labels)
    }

    pub fn with_labels(values: Vec<Vec<f64>>, row_labels: Vec<String>) -> Result<Self> {
        let first = values.first().ok_or_else(|| Error::arg("class must be non-empty"))?;
        let nx = first.len();
        if nx == 0 {
            return Err(Error::arg("instance space must be non-empty"));
        }
        if row_labels.len() != values.len() {
            return Err(Error::arg("one label per row"));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut labels = Vec::new();
        for (row, label) in values.into_iter().zip(row_labels) {
            Error::check_dim(nx, row.len())?;
            if let Some(v) = row.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
                return Err(Error::Domain(format!("class value {v} outside [-1, 1]")));
            }
            if !rows.contains(&row) {
                rows.push(row);
                labels.push(label);
            }
        }
        Ok(Self {
            values: rows,
            row_labels: labels,
            col_labels: (0..nx).map(|j| format!("x{j}")).collect(),
        })
    }

    /// Every `{-1, +1}` labelling of `nx` points.
    pub fn full_binary(nx: usize) -> Result<Self> {
        cap("instances", 16, nx)?;
        let rows = (0..1usize << nx)
            .map(|m| {
                (0..nx)
                    .map(|j| if m >> j & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    /// Constant functions with the given values.
    pub fn constants(levels: &[f64], nx: usize) -> Result<Self> {
        Self::new(levels.iter().map(|&c| vec![c; nx]).collect())
    }

    pub fn n_functions(&self) -> usize {
        self.values.len()
    }

    pub fn n_instances(&self) -> usize {
        self.values[0].len()
    }

    pub fn value(&self, f: usize, x: usize) -> f64 {
        self.values[f][x]
    }

    pub fn row(&self, f: usize) -> &[f64] {
        &self.values[f]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == 1.0 || v == -1.0)
    }

    /// Pointwise multiple `c f`, `|c| <= 1`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c.abs() > 1.0 {
            return Err(Error::arg("scaling must keep values in [-1, 1]"));
        }
        Self::new(
            self.values
                .iter()
                .map(|r| r.iter().map(|v| c * v).collect())
                .collect(),
        )
    }

    /// Class restricted to the rows in `mask`.
    pub fn subclass(&self, mask: u64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..self.n_functions())
            .filter(|&f| mask >> f & 1 == 1)
            .map(|f| self.values[f].clone())
            .collect();
        Self::new(rows)
    }

    /// Mask of all rows; requires at most 64 functions.
    pub fn full_mask(&self) -> u64 {
        let n = self.n_functions();
        if n >= 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    pub(crate) fn check_caps(&self, caps: &Caps) -> Result<()> {
        cap("functions", caps.max_functions.min(64), self.n_functions())?;
        cap("instances", caps.max_instances, self.n_instances())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_and_validation() {
        let c = FiniteClass::new(vec![vec![1.0, 0.5], vec![1.0, 0.5], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(c.n_functions(), 2);
        assert!(FiniteClass::new(vec![vec![1.5]]).is_err());
        assert!(FiniteClass::new(vec![]).is_err());
        assert!(FiniteClass::new(vec![vec![1.0], vec![1.0, 1.0]]).is_err());
        assert_eq!(FiniteClass::full_binary(3).unwrap().n_functions(), 8);
        assert!(FiniteClass::full_binary(3).unwrap().is_binary());
    }
}
