use rand::Rng;
use serde::Serialize;

use super::{mean_stderr, rng, run_trials, BoundRecord, ExperimentConfig, ExperimentReport, ResultRow};
use crate::adversary::{block_sign_stream, BlockAdversaryPlan};
use crate::complexity::{littlestone_dim, seq_fat, seq_rademacher, stat_fat, stat_rademacher, FiniteClass};
use crate::error::Result;
use crate::experts::{agnostic_supervised_run, ewa_run};

fn class_of(cfg: &ExperimentConfig, default_points: usize) -> Result<FiniteClass> {
    if cfg.class.is_empty() {
        FiniteClass::full_binary(default_points)
    } else {
        FiniteClass::new(cfg.class.clone())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockSummary {
    pub depth: usize,
    pub n: usize,
    pub block_len: usize,
    pub trials: usize,
    pub mean_regret: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub lower_bound: f64,
}

/// EWA over the rows of the class against the block-sign adversary built from its
/// sequential fat certificate. Losses are `|f(x) - y| / 2`, so the forced regret is
/// half the absolute-loss value `alpha sqrt(d / (8n))`.
///
/// The class defaults to the full binary class on `cfg.d` points.
pub fn block_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let id = "block";
    let class = class_of(cfg, cfg.d)?;
    let mut report = ExperimentReport::new(id, cfg);
    let mut summary = vec![];
    let k = class.n_functions();
    let priors = vec![1.0 / k as f64; k];
    for &n in &cfg.n_grid {
        let plan = BlockAdversaryPlan::from_class(&class, cfg.alpha, n, &cfg.caps)?;
        let lb = plan.lower_bound() / 2.0;
        report.bounds.push(BoundRecord::new(
            id,
            n,
            "block_sign_lower",
            &[("alpha", cfg.alpha), ("d", plan.depth() as f64), ("n", n as f64)],
            lb,
        ));
        let out = run_trials(cfg.threads, cfg.trials, |i| {
            let seed = cfg.trial_seed(i);
            let stream = block_sign_stream(&plan, seed);
            let losses: Vec<Vec<f64>> = stream
                .pairs
                .iter()
                .map(|&(x, y)| (0..k).map(|f| 0.5 * (class.value(f, x) - y).abs()).collect())
                .collect();
            let run = ewa_run(&priors, &losses)?;
            let best = (0..k)
                .map(|f| losses.iter().map(|l| l[f]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            Ok((i, seed, (run.total() - best) / n as f64))
        })?;
        let regrets: Vec<f64> = out.iter().map(|o| o.2).collect();
        for (i, seed, r) in out {
            report.rows.push(ResultRow::new(id, n, i, seed, "regret", r, lb));
        }
        let (mean, se) = mean_stderr(&regrets);
        summary.push(BlockSummary {
            depth: plan.depth(),
            n,
            block_len: plan.k,
            trials: cfg.trials,
            mean_regret: mean,
            stderr: se,
            ci95: (mean - 1.96 * se, mean + 1.96 * se),
            lower_bound: lb,
        });
    }
    report.summary = serde_json::to_value(&summary)?;
    Ok(report.finish())
}

/// Agnostic learning through Fat-SOA experts on noisy labels of a random class member.
///
/// Each round draws `x` uniformly; the label is `f*(x)`, replaced with probability
/// `cfg.noise` by a uniform draw from `[-1, 1]`.
pub fn experts_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let id = "experts";
    let class = class_of(cfg, 2)?;
    let mut report = ExperimentReport::new(id, cfg);
    let mut summary = vec![];
    for &n in &cfg.n_grid {
        let out = run_trials(cfg.threads, cfg.trials, |i| {
            let seed = cfg.trial_seed(i);
            let mut r = rng(seed);
            let target = r.random_range(0..class.n_functions());
            let stream: Vec<(usize, f64)> = (0..n)
                .map(|_| {
                    let x = r.random_range(0..class.n_instances());
                    let y = if r.random_bool(cfg.noise.clamp(0.0, 1.0)) {
                        r.random_range(-1.0..=1.0)
                    } else {
                        class.value(target, x)
                    };
                    (x, y)
                })
                .collect();
            let run = agnostic_supervised_run(&class, &stream, cfg.max_scale, &cfg.caps)?;
            Ok((i, seed, run))
        })?;
        if let Some((_, _, first)) = out.first() {
            for s in &first.scales {
                report.bounds.push(BoundRecord::new(
                    id,
                    n,
                    "agnostic_scale",
                    &[("alpha", s.alpha), ("fat", s.fat as f64), ("n", n as f64), ("experts", s.experts as f64)],
                    s.bound,
                ));
            }
            summary.push(serde_json::json!({ "n": n, "scales": first.scales }));
        }
        for (i, seed, run) in out {
            report.rows.push(ResultRow::new(id, n, i, seed, "regret", run.trace.regret(), run.bound));
        }
    }
    report.summary = serde_json::Value::Array(summary);
    Ok(report.finish())
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityReport {
    pub n_functions: usize,
    pub n_instances: usize,
    pub alpha: f64,
    pub seq_fat: usize,
    pub seq_fat_saturated: bool,
    pub littlestone_dim: Option<usize>,
    pub stat_fat: usize,
    /// Over the sample made of every instance once.
    pub stat_rademacher: f64,
    pub seq_rademacher_depth: usize,
    pub seq_rademacher: f64,
}

/// Exact complexity measures of the configured class; over-cap inputs fail with a capacity error.
pub fn complexity_report(cfg: &ExperimentConfig) -> Result<ComplexityReport> {
    let class = class_of(cfg, cfg.d)?;
    class.check_caps(&cfg.caps)?;
    let fat = seq_fat(&class, cfg.alpha, &cfg.caps)?;
    let sample: Vec<usize> = (0..class.n_instances()).collect();
    Ok(ComplexityReport {
        n_functions: class.n_functions(),
        n_instances: class.n_instances(),
        alpha: cfg.alpha,
        seq_fat: fat.value,
        seq_fat_saturated: fat.saturated,
        littlestone_dim: if class.is_binary() { Some(littlestone_dim(&class, &cfg.caps)?) } else { None },
        stat_fat: stat_fat(&class, cfg.alpha, &cfg.caps)?.value,
        stat_rademacher: stat_rademacher(&class, &sample, &cfg.caps)?,
        seq_rademacher_depth: cfg.depth,
        seq_rademacher: seq_rademacher(&class, cfg.depth, &cfg.caps)?,
    })
}
