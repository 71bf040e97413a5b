use rand::RngCore;
use serde::Serialize;

use super::{mean_stderr, rng, run_trials, split_seed, timed, BoundRecord, ExperimentConfig, ExperimentReport, ResultRow};
use crate::adversary::{hidden_coordinate_stream, unobserved_coordinates, unobserved_probability};
use crate::error::{Error, Result};
use crate::geometry::{Constraint, GeometrySpec};
use crate::losses::DEFAULT_EPS_BIAS;
use crate::md::{erm_solve, sgd_counterexample};
use crate::point::Point;

const EXPERIMENT: &str = "counterexample";

/// Population risk of `h` on the biased hidden-coordinate problem at `x = 0`.
///
/// The mask term `E ||alpha * h||` is a Monte-Carlo average over `draws` uniform masks;
/// the bias term is exact. Returns `(estimate, stderr)`.
pub fn hidden_population_risk(h: &Point, eps_bias: f64, draws: usize, seed: u64) -> Result<(f64, f64)> {
    if draws < 2 {
        return Err(Error::arg("need at least two Monte-Carlo draws"));
    }
    let d = h.dim();
    let sq: Vec<f64> = h.iter().map(|v| v * v).collect();
    let mut r = rng(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let mut acc = 0.0;
        for base in (0..d).step_by(64) {
            let mut bits = r.next_u64();
            if d - base < 64 {
                bits &= (1u64 << (d - base)) - 1;
            }
            while bits != 0 {
                acc += sq[base + bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
        }
        let v = acc.sqrt();
        s += v;
        s2 += v * v;
    }
    let k = draws as f64;
    let mean = s / k;
    let var = ((s2 - k * mean * mean) / (k - 1.0)).max(0.0);
    let mut bias = 0.0;
    let mut w = 0.5;
    for v in h.iter() {
        bias += eps_bias * w * (v - 1.0) * (v - 1.0);
        w *= 0.5;
    }
    Ok((mean + bias, (var / k).sqrt()))
}

/// Minimum population risk, attained at `h = 0`.
fn optimal_risk(d: usize, eps_bias: f64) -> f64 {
    eps_bias * (1.0 - 0.5f64.powi(d as i32))
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleSummary {
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    pub unobserved_frequency: f64,
    pub unobserved_probability: f64,
    pub conditioned_trials: usize,
    pub erm_risk_mean: f64,
    pub erm_risk_stderr: f64,
    pub optimal_risk: f64,
    pub sgd_suboptimality_mean: f64,
    pub sgd_suboptimality_stderr: f64,
    /// Largest Monte-Carlo standard error of a single risk evaluation.
    pub mc_stderr_max: f64,
    pub sgd_bound: f64,
}

struct Trial {
    unobserved: bool,
    erm_risk: Option<f64>,
    sgd_subopt: f64,
    mc_stderr: f64,
    runtime_ms: f64,
}

fn one_trial(cfg: &ExperimentConfig, d: usize, n: usize, seed: u64) -> Result<Trial> {
    let ball = GeometrySpec::euclidean(d, Constraint::L2Ball { radius: 1.0 })?;
    let lstar = optimal_risk(d, DEFAULT_EPS_BIAS);
    let (t, runtime_ms) = timed(cfg.record_runtime, || {
        let sample = hidden_coordinate_stream(d, n, true, seed)?;
        let unobserved = !unobserved_coordinates(&sample).is_empty();
        let mut mc_stderr: f64 = 0.0;
        let erm_risk = if unobserved {
            let h = erm_solve(&sample, &ball, cfg.erm_budget)?.point;
            let (risk, se) = hidden_population_risk(&h, DEFAULT_EPS_BIAS, cfg.mc_draws, split_seed(seed, 1))?;
            mc_stderr = mc_stderr.max(se);
            Some(risk)
        } else {
            None
        };
        let h = sgd_counterexample(&sample)?;
        let (risk, se) = hidden_population_risk(&h, DEFAULT_EPS_BIAS, cfg.mc_draws, split_seed(seed, 2))?;
        Ok(Trial {
            unobserved,
            erm_risk,
            sgd_subopt: risk - lstar,
            mc_stderr: mc_stderr.max(se),
            runtime_ms: 0.0,
        })
    })?;
    Ok(Trial { runtime_ms, ..t })
}

/// ERM versus SGD on the biased hidden-coordinate problem in dimension `cfg.d`, for each `n` of the grid.
pub fn counterexample_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let d = cfg.d;
    let mut report = ExperimentReport::new(EXPERIMENT, cfg);
    let mut summaries = vec![];
    for &n in &cfg.n_grid {
        let trials = run_trials(cfg.threads, cfg.trials, |i| {
            let seed = cfg.trial_seed(i);
            one_trial(cfg, d, n, seed).map(|t| (i, seed, t))
        })?;
        let p = unobserved_probability(d, n);
        let sgd_bound = (2.0 * (1.0 + DEFAULT_EPS_BIAS) / n as f64).sqrt();
        report.bounds.push(BoundRecord::new(EXPERIMENT, n, "unobserved_probability", &[("d", d as f64), ("n", n as f64)], p));
        report.bounds.push(BoundRecord::new(
            EXPERIMENT,
            n,
            "sgd_excess_risk",
            &[("n", n as f64), ("eps_bias", DEFAULT_EPS_BIAS)],
            sgd_bound,
        ));
        report.bounds.push(BoundRecord::new(EXPERIMENT, n, "erm_risk_floor", &[], 0.5));
        let mut erm = vec![];
        let mut sgd = vec![];
        let mut hits = 0;
        let mut mc_max: f64 = 0.0;
        for (i, seed, t) in &trials {
            let mut push = |metric: &str, observed: f64, bound: f64| {
                let mut row = ResultRow::new(EXPERIMENT, n, *i, *seed, metric, observed, bound);
                row.runtime_ms = t.runtime_ms;
                report.rows.push(row);
            };
            push("unobserved", if t.unobserved { 1.0 } else { 0.0 }, p);
            push("sgd_suboptimality", t.sgd_subopt, sgd_bound);
            if let Some(r) = t.erm_risk {
                push("erm_risk", r, 0.5);
                erm.push(r);
            }
            hits += usize::from(t.unobserved);
            sgd.push(t.sgd_subopt);
            mc_max = mc_max.max(t.mc_stderr);
        }
        let (erm_mean, erm_se) = mean_stderr(&erm);
        let (sgd_mean, sgd_se) = mean_stderr(&sgd);
        summaries.push(CounterexampleSummary {
            d,
            n,
            trials: cfg.trials,
            unobserved_frequency: hits as f64 / cfg.trials as f64,
            unobserved_probability: p,
            conditioned_trials: erm.len(),
            erm_risk_mean: erm_mean,
            erm_risk_stderr: erm_se,
            optimal_risk: optimal_risk(d, DEFAULT_EPS_BIAS),
            sgd_suboptimality_mean: sgd_mean,
            sgd_suboptimality_stderr: sgd_se,
            mc_stderr_max: mc_max,
            sgd_bound,
        });
    }
    report.summary = serde_json::to_value(&summaries)?;
    Ok(report.finish())
}
