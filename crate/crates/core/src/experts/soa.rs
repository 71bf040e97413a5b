use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::complexity::{Caps, FiniteClass, SeqFatOracle};
use crate::error::{Error, Result};

const TIE: f64 = 1e-12;

/// Levels `-1 + (2k+1) alpha/2` whose bins `(r - alpha/2, r + alpha/2]` meet `(-1, 1]`.
pub fn alpha_grid(alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::arg("alpha must be positive"));
    }
    let mut grid = Vec::new();
    let mut k = 0usize;
    while -1.0 + k as f64 * alpha < 1.0 - TIE {
        grid.push(-1.0 + (2 * k + 1) as f64 * alpha / 2.0);
        k += 1;
    }
    Ok(grid)
}

fn bin_index(grid: &[f64], alpha: f64, a: f64) -> usize {
    let guess = ((a + 1.0) / alpha).ceil() as i64 - 1;
    let last = grid.len() as i64 - 1;
    let lo = (guess - 1).clamp(0, last) as usize;
    let hi = (guess + 1).clamp(0, last) as usize;
    let mut best = lo;
    for k in lo..=hi {
        if (grid[k] - a).abs() < (grid[best] - a).abs() - TIE {
            best = k;
        }
    }
    best
}

/// Nearest grid level to `a`; ties go to the smaller level.
pub fn discretize(a: f64, alpha: f64) -> Result<f64> {
    let grid = alpha_grid(alpha)?;
    Ok(grid[bin_index(&grid, alpha, a)])
}

/// Fat-SOA prediction rule over version spaces of one class, with memoized predictions.
pub struct FatSoa<'a> {
    oracle: SeqFatOracle<'a>,
    alpha: f64,
    grid: Vec<f64>,
    /// `bins[x][f]`: grid index of `f(x)`.
    bins: Vec<Vec<usize>>,
    memo: HashMap<(u64, usize), f64>,
}

impl<'a> FatSoa<'a> {
    pub fn new(class: &'a FiniteClass, alpha: f64, caps: &Caps) -> Result<Self> {
        let grid = alpha_grid(alpha)?;
        let bins = (0..class.n_instances())
            .map(|x| {
                (0..class.n_functions())
                    .map(|f| bin_index(&grid, alpha, class.value(f, x)))
                    .collect()
            })
            .collect();
        Ok(Self {
            oracle: SeqFatOracle::new(class, alpha, caps)?,
            alpha,
            grid,
            bins,
            memo: HashMap::new(),
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn class(&self) -> &FiniteClass {
        self.oracle.class()
    }

    pub fn level_index(&self, a: f64) -> usize {
        bin_index(&self.grid, self.alpha, a)
    }

    pub fn fat(&mut self, v: u64) -> Option<usize> {
        self.oracle.fat(v)
    }

    /// `V(r, x)`: rows of `v` whose value at `x` discretizes to level `r`.
    pub fn restrict(&self, v: u64, level: usize, x: usize) -> u64 {
        let mut out = 0;
        let mut m = v;
        while m != 0 {
            let f = m.trailing_zeros() as usize;
            m &= m - 1;
            if self.bins[x][f] == level {
                out |= 1 << f;
            }
        }
        out
    }

    /// Grid indices attaining the maximal fat value of `V(r, x)`.
    pub fn argmax_levels(&mut self, v: u64, x: usize) -> Vec<usize> {
        let fats: Vec<Option<usize>> = (0..self.grid.len())
            .map(|r| {
                let sub = self.restrict(v, r, x);
                self.oracle.fat(sub)
            })
            .collect();
        let best = fats.iter().copied().max().flatten();
        (0..self.grid.len()).filter(|&r| fats[r] == best).collect()
    }

    /// Prediction at `x` for version space `v`, clamped into `[-1, 1]`.
    pub fn predict(&mut self, v: u64, x: usize) -> f64 {
        if let Some(&p) = self.memo.get(&(v, x)) {
            return p;
        }
        let levels = self.argmax_levels(v, x);
        let mean = levels.iter().map(|&r| self.grid[r]).sum::<f64>() / levels.len() as f64;
        let p = mean.clamp(-1.0, 1.0);
        self.memo.insert((v, x), p);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoaUpdate {
    pub round: usize,
    pub fat_before: usize,
    pub fat_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatSoaRun {
    pub predictions: Vec<f64>,
    /// Rounds with `|prediction - y| > alpha`.
    pub mistakes: usize,
    pub updates: Vec<SoaUpdate>,
}

/// Realizable Fat-SOA over a stream of `(instance index, label)` pairs.
pub fn fat_soa_run(
    class: &FiniteClass,
    alpha: f64,
    stream: &[(usize, f64)],
    caps: &Caps,
) -> Result<FatSoaRun> {
    let mut soa = FatSoa::new(class, alpha, caps)?;
    let mut v = class.full_mask();
    let mut run = FatSoaRun {
        predictions: Vec::with_capacity(stream.len()),
        mistakes: 0,
        updates: vec![],
    };
    for (t, &(x, y)) in stream.iter().enumerate() {
        if x >= class.n_instances() {
            return Err(Error::arg(format!("instance index {x} out of range")));
        }
        let p = soa.predict(v, x);
        run.predictions.push(p);
        if (p - y).abs() > alpha + TIE {
            run.mistakes += 1;
            let before = soa.fat(v).unwrap_or(0);
            let level = soa.level_index(y);
            v = soa.restrict(v, level, x);
            let after = soa
                .fat(v)
                .ok_or_else(|| Error::Protocol(format!("version space emptied at round {t}")))?;
            run.updates.push(SoaUpdate {
                round: t,
                fat_before: before,
                fat_after: after,
            });
        }
    }
    Ok(run)
}
