use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{argmax_piece, LossEval, LossInstance, Piece};
use crate::point::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub h: Point,
    pub index: usize,
    pub eps: i8,
    pub value: f64,
    pub subgrad: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: Option<u64>,
    pub pieces: Vec<(Point, f64)>,
    pub signs: Vec<i8>,
    pub queries: Vec<Point>,
    pub answers: Vec<(f64, Point)>,
}

/// First-order oracle that commits to one signed piece per query, choosing the
/// piece the query point can least afford to see flipped.
#[derive(Debug, Clone)]
pub struct ResistingOracle {
    bank: Vec<(Point, f64)>,
    m: usize,
    remaining: Vec<usize>,
    committed: Vec<Piece>,
    log: Vec<QueryRecord>,
    finalized: bool,
}

impl ResistingOracle {
    pub fn new(m: usize, bank: Vec<(Point, f64)>) -> Result<Self> {
        if m == 0 {
            return Err(Error::arg("at least one query"));
        }
        if bank.len() < m {
            return Err(Error::arg(format!("need at least {m} pieces, got {}", bank.len())));
        }
        let d = bank[0].0.dim();
        for (x, s) in &bank {
            Error::check_dim(d, x.dim())?;
            if !s.is_finite() {
                return Err(Error::arg("piece offsets must be finite"));
            }
        }
        Ok(Self {
            remaining: (0..bank.len()).collect(),
            bank,
            m,
            committed: vec![],
            log: vec![],
            finalized: false,
        })
    }

    /// Bank `x_i = e_i` in `R^m` with `s_i = 0`.
    pub fn orthonormal(m: usize) -> Result<Self> {
        Self::new(m, (0..m).map(|i| (Point::basis(m.max(1), i), 0.0)).collect())
    }

    /// `inf_eps sup_{||h|| <= 1} min_i eps_i <h, e_i>` for the orthonormal bank.
    pub fn orthonormal_value(m: usize) -> f64 {
        1.0 / (m as f64).sqrt()
    }

    pub fn queries_made(&self) -> usize {
        self.log.len()
    }

    pub fn log(&self) -> &[QueryRecord] {
        &self.log
    }

    pub fn query(&mut self, h: &Point) -> Result<LossEval> {
        if self.finalized {
            return Err(Error::Protocol("query after finalization".into()));
        }
        if self.log.len() >= self.m {
            return Err(Error::Protocol(format!("query budget of {} exhausted", self.m)));
        }
        Error::check_dim(self.bank[0].0.dim(), h.dim())?;
        let mut pick = (0usize, f64::NEG_INFINITY, 0.0);
        for (pos, &i) in self.remaining.iter().enumerate() {
            let (x, s) = &self.bank[i];
            let v = s - h.dot(x);
            if v.abs() > pick.1 {
                pick = (pos, v.abs(), v);
            }
        }
        let index = self.remaining.remove(pick.0);
        let eps = if pick.2 >= 0.0 { 1 } else { -1 };
        let (x, s) = self.bank[index].clone();
        self.committed.push(Piece { eps, x, s });
        let (j, value) = argmax_piece(&self.committed, h);
        let subgrad = self.committed[j].x.scaled(-f64::from(self.committed[j].eps));
        self.log.push(QueryRecord {
            h: h.clone(),
            index,
            eps,
            value,
            subgrad: subgrad.clone(),
        });
        Ok(LossEval { value, subgrad })
    }

    /// The committed instance `max_j eps_j (s_j - <h, x_j>)`; no queries are accepted afterwards.
    pub fn finalize(&mut self) -> Result<LossInstance> {
        if self.committed.is_empty() {
            return Err(Error::Protocol("finalize before any query".into()));
        }
        self.finalized = true;
        LossInstance::max_of_signed_linear(self.committed.clone())
    }

    pub fn transcript(&self, seed: Option<u64>) -> Transcript {
        Transcript {
            seed,
            pieces: self.bank.clone(),
            signs: self.committed.iter().map(|p| p.eps).collect(),
            queries: self.log.iter().map(|q| q.h.clone()).collect(),
            answers: self.log.iter().map(|q| (q.value, q.subgrad.clone())).collect(),
        }
    }
}
