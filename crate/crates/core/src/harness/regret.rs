use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rng, run_trials, timed, unit_vector, AdversaryKind, BoundRecord, ExperimentConfig, ExperimentReport, GeometryKind, PolicyKind, ResultRow};
use crate::error::{Error, Result};
use crate::geometry::{Constraint, GeometrySpec};
use crate::losses::LossInstance;
use crate::md::{
    lipschitz_regret_bound, run_online_md, run_uniformly_convex_md, smooth_regret_bound, Comparator, StepPolicy,
};
use crate::point::Point;

const EXPERIMENT: &str = "regret";

pub fn build_geometry(cfg: &ExperimentConfig) -> Result<GeometrySpec> {
    match cfg.geometry {
        GeometryKind::Euclidean => GeometrySpec::euclidean(cfg.d, Constraint::L2Ball { radius: cfg.radius }),
        GeometryKind::Entropic => GeometrySpec::entropic(cfg.d),
        GeometryKind::Lp => GeometrySpec::lp_proxy(
            cfg.r,
            cfg.d,
            1.0,
            Constraint::LpBall {
                p: cfg.r,
                radius: cfg.radius,
            },
        ),
    }
}

fn sign(r: &mut ChaCha8Rng) -> f64 {
    if r.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

// A feasible target point with |<h*, x>| <= 1/2 whenever ||x||_* <= 1.
fn target(g: &GeometrySpec, r: &mut ChaCha8Rng) -> Result<Point> {
    let d = g.d();
    match g.constraint() {
        Constraint::Simplex => {
            let w: Vec<f64> = (0..d).map(|_| r.random::<f64>() + 1e-3).collect();
            let s: f64 = w.iter().sum();
            Ok(Point::from(w.iter().map(|v| 0.5 * v / s).collect::<Vec<_>>()))
        }
        _ => {
            let u = unit_vector(d, r);
            let n = g.norm(&u)?;
            Ok(u.scaled(0.5 / n))
        }
    }
}

/// Loss stream of one trial and, when the stream has a zero-loss point, that point.
pub fn regret_stream(cfg: &ExperimentConfig, g: &GeometrySpec, n: usize, seed: u64) -> Result<(Vec<LossInstance>, Option<Point>)> {
    let d = g.d();
    let mut r = rng(seed);
    let unit = |r: &mut ChaCha8Rng| -> Result<Point> {
        let u = unit_vector(d, r);
        let n = g.dual_norm(&u)?;
        Ok(u.scaled(1.0 / n))
    };
    let mut hstar = None;
    let stream = match cfg.adversary {
        AdversaryKind::SignConstant => (0..n)
            .map(|_| LossInstance::linear(Point::basis(d, 0).scaled(sign(&mut r))))
            .collect(),
        AdversaryKind::RandomUnit => (0..n)
            .map(|_| Ok(LossInstance::linear(unit(&mut r)?.scaled(sign(&mut r)))))
            .collect::<Result<_>>()?,
        AdversaryKind::SignCube => (0..n)
            .map(|_| LossInstance::linear(Point::from((0..d).map(|_| sign(&mut r)).collect::<Vec<_>>())))
            .collect(),
        AdversaryKind::Zero => (0..n).map(|_| LossInstance::linear(Point::zeros(d))).collect(),
        AdversaryKind::SmoothedAbs | AdversaryKind::SmoothedAbsNoisy => {
            let h = target(g, &mut r)?;
            let noisy = cfg.adversary == AdversaryKind::SmoothedAbsNoisy;
            let s = (0..n)
                .map(|_| {
                    let x = unit(&mut r)?;
                    let xi = if noisy { 0.5 * sign(&mut r) } else { 0.0 };
                    Ok(LossInstance::smoothed_abs(x.clone(), h.dot(&x) + xi))
                })
                .collect::<Result<_>>()?;
            hstar = Some(h);
            s
        }
        AdversaryKind::RidgeLinear => (0..n)
            .map(|_| {
                let x = unit(&mut r)?.scaled(0.5);
                LossInstance::regularized(LossInstance::linear(x), cfg.sigma)
            })
            .collect::<Result<_>>()?,
    };
    Ok((stream, hstar))
}

fn check_combo(cfg: &ExperimentConfig) -> Result<()> {
    use AdversaryKind::*;
    let ok = match cfg.policy {
        PolicyKind::Lipschitz => !matches!(cfg.adversary, RidgeLinear),
        PolicyKind::Smooth => matches!(cfg.adversary, SmoothedAbs | SmoothedAbsNoisy),
        PolicyKind::UniformlyConvex => matches!(cfg.adversary, RidgeLinear) && cfg.geometry == GeometryKind::Euclidean,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::arg(format!(
            "policy {:?} cannot be paired with adversary {:?} on geometry {:?}",
            cfg.policy, cfg.adversary, cfg.geometry
        )))
    }
}

struct Trial {
    regret: f64,
    runtime_ms: f64,
}

fn one_trial(cfg: &ExperimentConfig, g: &GeometrySpec, n: usize, seed: u64) -> Result<(Trial, BoundRecord)> {
    let (stream, hstar) = regret_stream(cfg, g, n, seed)?;
    for z in &stream {
        let lip = match z {
            LossInstance::Regularized { inner, .. } => inner.lipschitz_bound(g)?,
            _ => z.lipschitz_bound(g)?,
        };
        if lip > 1.0 + 1e-9 {
            return Err(Error::arg(format!(
                "adversary {:?} produces losses with Lipschitz constant {lip} > 1 in geometry {}",
                cfg.adversary,
                g.id()
            )));
        }
    }
    let sup = g.sup_psi()?;
    let comparator = match (&hstar, cfg.adversary) {
        (Some(h), AdversaryKind::SmoothedAbs) => Comparator::Points { points: vec![h.clone()] },
        (Some(_), _) => Comparator::Erm { budget: cfg.erm_budget },
        (None, _) => Comparator::Analytic,
    };
    let ((regret, record), runtime_ms) = timed(cfg.record_runtime, || match cfg.policy {
        PolicyKind::Lipschitz => {
            let policy = StepPolicy::LipschitzRate { sup_psi: sup, n, b: 1.0, p: g.p() };
            let trace = run_online_md(g, &policy, &stream, &comparator)?;
            let bound = lipschitz_regret_bound(sup, n, g.q());
            let rec = BoundRecord::new(EXPERIMENT, n, "md_lipschitz", &[("sup_psi", sup), ("n", n as f64), ("b", 1.0), ("q", g.q())], bound);
            Ok((trace.regret(), rec))
        }
        PolicyKind::Smooth => {
            let h = stream
                .iter()
                .map(|z| z.smoothness_constant(g).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max)
                .max(1.0);
            if h > 1.0 + 1e-9 {
                return Err(Error::arg(format!("stream smoothness {h} exceeds H = 1")));
            }
            let l_star = if cfg.adversary == AdversaryKind::SmoothedAbsNoisy { 0.25 } else { 0.0 };
            let policy = StepPolicy::SmoothRate { sup_psi: sup, n, h: 1.0, l_star, p: g.p() };
            let trace = run_online_md(g, &policy, &stream, &comparator)?;
            let bound = smooth_regret_bound(sup, n, 1.0, l_star, g.q());
            let rec = BoundRecord::new(
                EXPERIMENT,
                n,
                "md_smooth",
                &[("sup_psi", sup), ("n", n as f64), ("h", 1.0), ("l_star", l_star), ("q", g.q())],
                bound,
            );
            Ok((trace.regret(), rec))
        }
        PolicyKind::UniformlyConvex => {
            let run = run_uniformly_convex_md(g, cfg.sigma, 2.0, cfg.lambda, g, &stream, &Comparator::Analytic)?;
            let rec = BoundRecord::new(
                EXPERIMENT,
                n,
                "md_uniformly_convex",
                &[("n", n as f64), ("sigma", cfg.sigma), ("q_prime", 2.0), ("sup_r", run.r_sup)],
                run.bound,
            );
            Ok((run.trace.regret(), rec))
        }
    })?;
    Ok((Trial { regret, runtime_ms }, record))
}

/// Online MD against the configured adversary for every `n` and trial.
pub fn run_regret_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    check_combo(cfg)?;
    let g = build_geometry(cfg)?;
    let mut report = ExperimentReport::new(EXPERIMENT, cfg);
    for &n in &cfg.n_grid {
        let out = run_trials(cfg.threads, cfg.trials, |i| {
            let seed = cfg.trial_seed(i);
            one_trial(cfg, &g, n, seed).map(|t| (i, seed, t))
        })?;
        let mut recorded = false;
        for (i, seed, (t, rec)) in out {
            let mut row = ResultRow::new(EXPERIMENT, n, i, seed, "regret", t.regret, rec.value);
            row.runtime_ms = t.runtime_ms;
            report.rows.push(row);
            if !recorded {
                report.bounds.push(rec);
                recorded = true;
            }
        }
    }
    if cfg.n_grid.len() >= 3 && report.rows.iter().all(|r| r.observed > 0.0) {
        report.summary = serde_json::to_value(super::fit_rate(&report.rows)?)?;
    }
    Ok(report.finish())
}
