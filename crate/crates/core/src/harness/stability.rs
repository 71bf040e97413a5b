use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{mean_stderr, rng, run_trials, split_seed, unit_vector, BoundRecord, ExperimentConfig, ExperimentReport, ResultRow, SamplerKind, StabilityRule};
use crate::error::{Error, Result};
use crate::geometry::{Constraint, GeometrySpec};
use crate::losses::{LossInstance, DEFAULT_EPS_BIAS};
use crate::md::{erm_solve, md_step, rerm_solve, sgd_counterexample, step_size_lipschitz, MdState};
use crate::point::Point;

#[derive(Debug, Clone, Serialize)]
pub struct StabilityEstimate {
    pub n: usize,
    pub trials: usize,
    pub estimate: f64,
    pub stderr: f64,
    /// Set when too few trials were run for the standard error to be trusted.
    pub warning: Option<String>,
}

/// Monte-Carlo average-RO stability of `rule`:
/// `|(1/n) sum_i E[l(A(S^(i)); z'_i) - l(A(S); z'_i)]|`, where `S^(i)` swaps `z_i` for `z'_i`.
pub fn estimate_ro_stability<A, S>(rule: A, sampler: S, n: usize, trials: usize, seed: u64, threads: usize) -> Result<StabilityEstimate>
where
    A: Fn(&[LossInstance]) -> Result<Point> + Sync + Send,
    S: Fn(&mut ChaCha8Rng) -> Result<LossInstance> + Sync + Send,
{
    if n == 0 || trials == 0 {
        return Err(Error::arg("n and trials must be >= 1"));
    }
    let per_trial = run_trials(threads, trials, |t| {
        let mut r = rng(split_seed(seed, t as u64));
        let s: Vec<LossInstance> = (0..n).map(|_| sampler(&mut r)).collect::<Result<_>>()?;
        let fresh: Vec<LossInstance> = (0..n).map(|_| sampler(&mut r)).collect::<Result<_>>()?;
        let h = rule(&s)?;
        let mut acc = 0.0;
        let mut swapped = s.clone();
        for i in 0..n {
            swapped[i] = fresh[i].clone();
            let hi = rule(&swapped)?;
            acc += fresh[i].value(&hi)? - fresh[i].value(&h)?;
            swapped[i] = s[i].clone();
        }
        Ok(acc / n as f64)
    })?;
    let (mean, stderr) = mean_stderr(&per_trial);
    Ok(StabilityEstimate {
        n,
        trials,
        estimate: mean.abs(),
        stderr,
        warning: (trials < 30).then(|| format!("only {trials} trials; standard error is unreliable below 30")),
    })
}

fn ball(d: usize) -> Result<GeometrySpec> {
    GeometrySpec::euclidean(d, Constraint::L2Ball { radius: 1.0 })
}

/// Mean of the linear-ball sampler: `0.3 e_1`.
fn linear_ball_mean(d: usize) -> Point {
    Point::basis(d, 0).scaled(0.3)
}

pub(crate) fn sample(kind: SamplerKind, d: usize, r: &mut ChaCha8Rng) -> Result<LossInstance> {
    match kind {
        SamplerKind::LinearBall => Ok(LossInstance::linear(linear_ball_mean(d).add(&unit_vector(d, r).scaled(0.7)))),
        SamplerKind::HiddenCoord => {
            let alpha = (0..d).map(|_| r.random_range(0..=1u8)).collect();
            LossInstance::hidden_coord_biased(Point::zeros(d), alpha, DEFAULT_EPS_BIAS)
        }
    }
}

pub(crate) fn apply_rule(cfg: &ExperimentConfig, g: &GeometrySpec, s: &[LossInstance]) -> Result<Point> {
    match cfg.rule {
        StabilityRule::Erm => Ok(erm_solve(s, g, cfg.erm_budget)?.point),
        StabilityRule::Rerm => Ok(rerm_solve(s, g, cfg.lambda, cfg.erm_budget)?.point),
        StabilityRule::Sgd => sgd_counterexample(s),
        StabilityRule::AveragedMd => {
            let eta = step_size_lipschitz(g.sup_psi()?, s.len(), 1.0, g.p())?;
            let mut st = MdState::new(g);
            for z in s {
                st = md_step(&st, g, &z.eval(&st.h)?.subgrad, eta)?;
            }
            st.average()
        }
        StabilityRule::Constant => Ok(Point::zeros(g.d())),
    }
}

/// Average-RO stability of the configured rule and sampler for every `n`.
pub fn stability_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let id = "stability";
    let g = ball(cfg.d)?;
    let mut report = ExperimentReport::new(id, cfg);
    let mut estimates = vec![];
    for &n in &cfg.n_grid {
        let est = estimate_ro_stability(
            |s| apply_rule(cfg, &g, s),
            |r| sample(cfg.sampler, cfg.d, r),
            n,
            cfg.trials,
            split_seed(cfg.seed, n as u64),
            cfg.threads,
        )?;
        let bound = match cfg.rule {
            StabilityRule::Rerm => {
                let b = 4.0 / (cfg.lambda * n as f64);
                report.bounds.push(BoundRecord::new(id, n, "rerm_stability", &[("l", 1.0), ("lambda", cfg.lambda), ("n", n as f64)], b));
                b
            }
            StabilityRule::Constant => 0.0,
            _ => f64::INFINITY,
        };
        report.rows.push(ResultRow::new(id, n, 0, cfg.seed, "ro_stability", est.estimate, bound));
        report.rows.push(ResultRow::new(id, n, 0, cfg.seed, "ro_stability_stderr", est.stderr, f64::INFINITY));
        estimates.push(est);
    }
    report.summary = serde_json::to_value(&estimates)?;
    Ok(report.finish())
}

#[derive(Debug, Clone, Serialize)]
struct ExcessSummary {
    n: usize,
    lambda: f64,
    metric: &'static str,
    mean: f64,
    stderr: f64,
    bound: f64,
}

/// Excess risk of regularized ERM on linear losses `x = 0.3 e_1 + 0.7 u` over the unit ball.
///
/// Emits `rerm_excess` (regularized objective at `cfg.lambda`, against `4/(lambda n)`) and
/// `rerm_tuned_excess` (plain risk at `lambda = 4/sqrt(n)`, against `4 sqrt(1/n)(1 + 8/n)`).
/// Both risks are exact since the population objective is `<h, mu> (+ lambda/2 ||h||^2)`.
pub fn rerm_excess_risk_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let id = "rerm";
    let d = cfg.d;
    let g = ball(d)?;
    let mu = linear_ball_mean(d);
    let mut report = ExperimentReport::new(id, cfg);
    let mut summary = vec![];
    for &n in &cfg.n_grid {
        let nf = n as f64;
        let tuned = (16.0 / nf).sqrt();
        let reg_opt = {
            let h = g.project(&mu.scaled(-1.0 / cfg.lambda))?;
            h.dot(&mu) + 0.5 * cfg.lambda * h.dot(&h)
        };
        let plain_opt = -mu.l2_norm();
        let out = run_trials(cfg.threads, cfg.trials, |i| {
            let seed = cfg.trial_seed(i);
            let mut r = rng(seed);
            let s: Vec<LossInstance> = (0..n).map(|_| sample(SamplerKind::LinearBall, d, &mut r)).collect::<Result<_>>()?;
            let h = rerm_solve(&s, &g, cfg.lambda, cfg.erm_budget)?.point;
            let reg = h.dot(&mu) + 0.5 * cfg.lambda * h.dot(&h) - reg_opt;
            let ht = rerm_solve(&s, &g, tuned, cfg.erm_budget)?.point;
            Ok((i, seed, reg, ht.dot(&mu) - plain_opt))
        })?;
        let b_reg = 4.0 / (cfg.lambda * nf);
        let b_tuned = 4.0 * (1.0 / nf).sqrt() * (1.0 + 8.0 / nf);
        report.bounds.push(BoundRecord::new(id, n, "rerm_strongly_convex", &[("l", 1.0), ("lambda", cfg.lambda), ("n", nf)], b_reg));
        report.bounds.push(BoundRecord::new(id, n, "rerm_tuned", &[("l", 1.0), ("b", 1.0), ("lambda", tuned), ("n", nf)], b_tuned));
        let (mut regs, mut tuns) = (vec![], vec![]);
        for (i, seed, reg, tun) in out {
            report.rows.push(ResultRow::new(id, n, i, seed, "rerm_excess", reg, b_reg));
            report.rows.push(ResultRow::new(id, n, i, seed, "rerm_tuned_excess", tun, b_tuned));
            regs.push(reg);
            tuns.push(tun);
        }
        for (metric, xs, lambda, bound) in [("rerm_excess", &regs, cfg.lambda, b_reg), ("rerm_tuned_excess", &tuns, tuned, b_tuned)] {
            let (mean, stderr) = mean_stderr(xs);
            summary.push(ExcessSummary { n, lambda, metric, mean, stderr, bound });
        }
    }
    report.summary = serde_json::to_value(&summary)?;
    Ok(report.finish())
}
