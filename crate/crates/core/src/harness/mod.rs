//! Experiment orchestration: seeded trials, bound checking, rate fitting and result files.

mod config;
mod counterexample;
mod games;
mod oracle;
mod regret;
mod rows;
mod stability;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    split_seed, AdversaryKind, ExperimentConfig, GeometryKind, PolicyKind, SamplerKind, StabilityRule,
};
pub use counterexample::{counterexample_experiment, hidden_population_risk, CounterexampleSummary};
pub use games::{
    block_experiment, complexity_report, experts_experiment, BlockSummary, ComplexityReport,
};
pub use oracle::{oracle_complexity_curve, OracleAlgorithm};
pub use regret::{build_geometry, regret_stream, run_regret_experiment};
pub use rows::{
    emit, format_f64, rows_from_csv, rows_to_csv, sort_rows, write_atomic, BoundRecord, Format,
    ResultRow,
};
pub use stability::{
    estimate_ro_stability, rerm_excess_risk_experiment, stability_experiment, StabilityEstimate,
};

use crate::error::{Error, Result};
use crate::point::Point;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rows and bound evaluations of one experiment, plus an experiment-specific summary.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub bounds: Vec<BoundRecord>,
    pub summary: serde_json::Value,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Self {
            version: VERSION.to_string(),
            experiment: experiment.to_string(),
            config: config.clone(),
            rows: vec![],
            bounds: vec![],
            summary: serde_json::Value::Null,
        }
    }

    pub fn finish(mut self) -> Self {
        sort_rows(&mut self.rows);
        self
    }
}

/// Runs `f` on every trial index, in parallel when `threads != 1`, and collects in trial order.
pub(crate) fn run_trials<T, F>(threads: usize, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if threads == 1 || trials <= 1 {
        return (0..trials).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::arg(format!("thread pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(f).collect())
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn unit_vector(d: usize, r: &mut ChaCha8Rng) -> Point {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(r)).collect();
        let p = Point::from(v);
        let n = p.l2_norm();
        if n > 1e-12 {
            return p.scaled(1.0 / n);
        }
    }
}

// Wall time of `f` in ms when requested, zero otherwise so output files stay reproducible.
pub(crate) fn timed<T>(record: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    let ms = if record { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    Ok((v, ms))
}

/// Least-squares line through `(log n, log value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits `observed ~ C n^exponent` over the n grid after averaging trials per `n`.
pub fn fit_rate(rows: &[ResultRow]) -> Result<RateFit> {
    let mut by_n: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for r in rows {
        let e = by_n.entry(r.n).or_insert((0.0, 0));
        e.0 += r.observed;
        e.1 += 1;
    }
    if by_n.len() < 3 {
        return Err(Error::arg(format!("need at least 3 grid points, got {}", by_n.len())));
    }
    let pts: Vec<(f64, f64)> = by_n
        .iter()
        .map(|(&n, &(s, c))| {
            let mean = s / c as f64;
            if mean > 0.0 {
                Ok(((n as f64).ln(), mean.ln()))
            } else {
                Err(Error::Domain(format!("mean at n = {n} is {mean}; log fit needs positive values")))
            }
        })
        .collect::<Result<_>>()?;
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - exponent * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(RateFit {
        exponent,
        intercept,
        r2,
    })
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
