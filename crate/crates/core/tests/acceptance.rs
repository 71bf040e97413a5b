//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL` line.

use std::io::Write;
use std::time::Instant;

use mirrorlearn::complexity::{littlestone_dim, seq_fat, stat_fat, stat_rademacher};
use mirrorlearn::experts::{ewa_bound, ewa_run, fat_soa_run};
use mirrorlearn::harness::{
    block_experiment, counterexample_experiment, fit_rate, oracle_complexity_curve, rerm_excess_risk_experiment,
    run_regret_experiment, ExperimentConfig, OracleAlgorithm, ResultRow,
};
use mirrorlearn::{Caps, Constraint, FiniteClass, GeometrySpec, LossInstance, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: usize, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} | {detail}\n", if pass { "PASS" } else { "FAIL" });
    // Bypass the test harness capture so the line always reaches the log.
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn cfg(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

const GRID: &str = "[64, 256, 1024, 4096]";

fn worst_excess(rows: &[ResultRow], slack: f64) -> f64 {
    rows.iter().map(|r| r.observed - r.bound - slack).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn criterion_01_md_lipschitz() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = vec![];
    for adv in ["random_unit", "sign_constant"] {
        let rep = run_regret_experiment(&cfg(&format!(
            r#"{{"adversary": "{adv}", "n_grid": {GRID}, "trials": 50, "seed": 1}}"#
        )))
        .unwrap();
        let excess = worst_excess(&rep.rows, 0.0);
        let fit = fit_rate(&rep.rows).unwrap();
        let ok = excess <= 0.0 && (-0.60..=-0.40).contains(&fit.exponent);
        for r in &rep.rows {
            assert!((r.bound - 2.0 * (0.5 / r.n as f64).sqrt()).abs() < 1e-15);
        }
        pass &= ok;
        details.push(format!("{adv}: max(regret-bound)={excess:.3e} exponent={:.3}", fit.exponent));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 30.0;
    verdict(1, pass, &format!("{} runtime={secs:.2}s", details.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_02_entropic_simplex() {
    let rep = run_regret_experiment(&cfg(&format!(
        r#"{{"geometry": "entropic", "d": 8, "adversary": "sign_cube", "n_grid": {GRID}, "trials": 50, "seed": 2}}"#
    )))
    .unwrap();
    for r in &rep.rows {
        assert!((r.bound - 2.0 * (8f64.ln() / r.n as f64).sqrt()).abs() < 1e-14);
    }
    let excess = worst_excess(&rep.rows, 0.0);
    let pass = excess <= 0.0;
    verdict(2, pass, &format!("{} runs, max(regret-bound)={excess:.3e}", rep.rows.len()));
    assert!(pass);
}

#[test]
fn criterion_03_smooth_optimistic() {
    let zero = run_regret_experiment(&cfg(
        r#"{"policy": "smooth", "adversary": "smoothed_abs", "n_grid": [256, 1024], "trials": 20, "seed": 3}"#,
    ))
    .unwrap();
    for r in &zero.rows {
        assert!((r.bound - 40.0 * 0.5 / r.n as f64).abs() < 1e-15);
    }
    let e0 = worst_excess(&zero.rows, 1e-9);
    let noisy = run_regret_experiment(&cfg(
        r#"{"policy": "smooth", "adversary": "smoothed_abs_noisy", "n_grid": [256, 1024], "trials": 20, "seed": 3}"#,
    ))
    .unwrap();
    for r in &noisy.rows {
        let ratio = 0.5 / r.n as f64;
        assert!((r.bound - ((64.0f64 * 0.25).sqrt() * ratio.sqrt() + 40.0 * ratio)).abs() < 1e-15);
    }
    let e1 = worst_excess(&noisy.rows, 0.0);
    let pass = e0 <= 0.0 && e1 <= 0.0;
    verdict(3, pass, &format!("L*=0: max(regret-bound-1e-9)={e0:.3e}; L*=1/4: max(regret-bound)={e1:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_04_strongly_convex() {
    let rep = run_regret_experiment(&cfg(
        r#"{"policy": "uniformly_convex", "adversary": "ridge_linear", "sigma": 1.0, "lambda": 1.0,
            "n_grid": [64, 256, 1024], "trials": 50, "seed": 4}"#,
    ))
    .unwrap();
    for r in &rep.rows {
        let n = r.n as f64;
        assert!((r.bound - (2.0 * n.ln() / n + 0.5 / n)).abs() < 1e-15);
    }
    let excess = worst_excess(&rep.rows, 0.0);
    let pass = excess <= 0.0;
    verdict(4, pass, &format!("{} runs, max(regret-bound)={excess:.3e}", rep.rows.len()));
    assert!(pass);
}

#[test]
fn criterion_05_counterexample() {
    let start = Instant::now();
    let rep = counterexample_experiment(&cfg(r#"{"d": 256, "n_grid": [8], "trials": 200, "seed": 5}"#)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let s = &rep.summary[0];
    let f = |k: &str| s[k].as_f64().unwrap();
    let freq = f("unobserved_frequency");
    let erm = f("erm_risk_mean");
    let sgd = f("sgd_suboptimality_mean");
    let se = f("sgd_suboptimality_stderr").max(f("mc_stderr_max"));
    let sgd_bound = (2.0f64 * 1.01 / 8.0).sqrt() + 3.0 * se;
    let pass = freq >= 0.6 && erm >= 0.4 && sgd <= sgd_bound && secs < 60.0;
    verdict(
        5,
        pass,
        &format!(
            "unobserved freq={freq:.3} (>=0.6, exact prob {:.3}); ERM risk={erm:.4}+-{:.4} over {} trials (>=0.4); \
             SGD subopt={sgd:.2e} (<= {sgd_bound:.4}); runtime={secs:.1}s",
            f("unobserved_probability"),
            f("erm_risk_stderr"),
            s["conditioned_trials"],
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_regularized_erm() {
    let rep = rerm_excess_risk_experiment(&cfg(r#"{"d": 5, "lambda": 1.0, "n_grid": [128, 512], "trials": 200, "seed": 6}"#))
        .unwrap();
    let mut pass = true;
    let mut details = vec![];
    for s in rep.summary.as_array().unwrap() {
        let (mean, se, bound) = (s["mean"].as_f64().unwrap(), s["stderr"].as_f64().unwrap(), s["bound"].as_f64().unwrap());
        let ok = mean <= bound + 3.0 * se;
        pass &= ok;
        details.push(format!("{} n={}: {mean:.3e}+-{se:.1e} vs {bound:.3e}", s["metric"].as_str().unwrap(), s["n"]));
    }
    verdict(6, pass, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_07_resisting_oracle() {
    let c = cfg(r#"{"d": 8, "m_grid": [4, 16, 64], "trials": 20, "seed": 7}"#);
    let mut pass = true;
    let mut worst_resist = f64::INFINITY;
    let mut worst_benign = f64::NEG_INFINITY;
    for alg in [OracleAlgorithm::MirrorDescent, OracleAlgorithm::GradientDescent] {
        let rep = oracle_complexity_curve(&c, alg).unwrap();
        for r in &rep.rows {
            if r.metric_name == "resisting_gap" {
                assert!((r.bound - 1.0 / (r.n as f64).sqrt()).abs() < 1e-15);
                worst_resist = worst_resist.min(r.observed - r.bound);
                pass &= r.observed >= r.bound - 1e-9;
            } else {
                worst_benign = worst_benign.max(r.observed - r.bound);
                pass &= r.observed <= r.bound;
            }
        }
    }
    verdict(
        7,
        pass,
        &format!("min(resisting gap - 1/sqrt(m))={worst_resist:.3e}; max(benign gap - bound)={worst_benign:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_block_sign_lower_bound() {
    let rep = block_experiment(&cfg(r#"{"d": 4, "alpha": 2.0, "n_grid": [64], "trials": 500, "seed": 8}"#)).unwrap();
    let s = &rep.summary[0];
    let mean = s["mean_regret"].as_f64().unwrap();
    let ci = (s["ci95"][0].as_f64().unwrap(), s["ci95"][1].as_f64().unwrap());
    let target = 0.9 * (4.0f64 / (8.0 * 64.0)).sqrt();
    assert_eq!(s["depth"].as_u64(), Some(4));
    let pass = mean >= target;
    verdict(8, pass, &format!("mean regret={mean:.4} 95% CI [{:.4}, {:.4}] vs 0.9*sqrt(d/8n)={target:.4}", ci.0, ci.1));
    assert!(pass);
}

#[test]
fn criterion_09_ewa_bound() {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let mut pass = true;
    let mut min_slack = f64::INFINITY;
    for inst in 0..100 {
        let k = r.random_range(1..=8);
        let n = r.random_range(1..=256);
        let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
        let z: f64 = raw.iter().sum();
        let priors: Vec<f64> = raw.iter().map(|p| p / z).collect();
        // Alternate between uniform losses, 0/1 losses and a switching adversary.
        let losses: Vec<Vec<f64>> = (0..n)
            .map(|t| {
                (0..k)
                    .map(|i| match inst % 3 {
                        0 => r.random::<f64>(),
                        1 => f64::from(u8::from(r.random_bool(0.5))),
                        _ => f64::from(u8::from((t / 8 + i) % 2 == 0)),
                    })
                    .collect()
            })
            .collect();
        let run = ewa_run(&priors, &losses).unwrap();
        for i in 0..k {
            let li: f64 = losses.iter().map(|l| l[i]).sum();
            let slack = li + ewa_bound(n, priors[i]) - run.total();
            min_slack = min_slack.min(slack);
            pass &= slack >= 0.0;
        }
    }
    verdict(9, pass, &format!("100 instances, min(bound - excess loss)={min_slack:.3}"));
    assert!(pass);
}

fn random_class(r: &mut ChaCha8Rng, binary: bool) -> FiniteClass {
    let nx = r.random_range(2..=5);
    let k = r.random_range(2..=12);
    let levels = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let rows = (0..k)
        .map(|_| {
            (0..nx)
                .map(|_| if binary { if r.random_bool(0.5) { 1.0 } else { -1.0 } } else { levels[r.random_range(0..5)] })
                .collect()
        })
        .collect();
    FiniteClass::new(rows).unwrap()
}

#[test]
fn criterion_10_fat_soa() {
    let caps = Caps::default();
    let mut r = ChaCha8Rng::seed_from_u64(10);
    let mut pass = true;
    let mut total_updates = 0;
    let mut tight = 0;
    for i in 0..100 {
        let class = random_class(&mut r, i % 4 == 0);
        let alpha = [0.25, 0.5, 1.0][i % 3];
        let target = r.random_range(0..class.n_functions());
        let stream: Vec<(usize, f64)> = (0..40)
            .map(|_| {
                let x = r.random_range(0..class.n_instances());
                (x, class.value(target, x))
            })
            .collect();
        let fat = seq_fat(&class, alpha, &caps).unwrap();
        assert!(!fat.saturated);
        let run = fat_soa_run(&class, alpha, &stream, &caps).unwrap();
        pass &= run.mistakes <= fat.value;
        pass &= run.updates.iter().all(|u| u.fat_after < u.fat_before);
        total_updates += run.updates.len();
        tight += usize::from(run.mistakes == fat.value);
    }
    verdict(10, pass, &format!("100 classes, {total_updates} updates all strictly decreasing, {tight} runs at the bound"));
    assert!(pass);
}

#[test]
fn criterion_11_complexity_calculators() {
    let caps = Caps::default();
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let mut pass = true;
    for _ in 0..50 {
        let class = random_class(&mut r, true);
        let ld = littlestone_dim(&class, &caps).unwrap();
        for alpha in [0.5, 1.0, 2.0] {
            pass &= seq_fat(&class, alpha, &caps).unwrap().value == ld;
        }
        pass &= (ld as f64) <= (class.n_functions() as f64).log2() + 1e-12;
    }
    for i in 0..50 {
        let class = random_class(&mut r, i % 2 == 0);
        for alpha in [0.25, 0.5, 1.0, 2.0] {
            pass &= seq_fat(&class, alpha, &caps).unwrap().value >= stat_fat(&class, alpha, &caps).unwrap().value;
        }
    }
    let constants = FiniteClass::constants(&[-1.0, 1.0], 2).unwrap();
    let rad = stat_rademacher(&constants, &[0, 1], &caps).unwrap();
    pass &= rad == 0.5;
    verdict(11, pass, &format!("seq_fat = Ldim on 50 binary classes; seq_fat >= stat_fat on 50 classes; rad(+-1 constants, n=2)={rad}"));
    assert!(pass);
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

fn ball_point(r: &mut ChaCha8Rng, d: usize, p: f64) -> Point {
    let v = Point::from((0..d).map(|_| r.random_range(-1.0..1.0)).collect::<Vec<_>>());
    let n = v.lp_norm(p);
    v.scaled(r.random_range(0.05..0.95) / n)
}

fn simplex_point(r: &mut ChaCha8Rng, d: usize) -> Point {
    let w: Vec<f64> = (0..d).map(|_| r.random_range(0.01..1.0)).collect();
    let s: f64 = w.iter().sum();
    Point::from(w.iter().map(|v| v / s).collect::<Vec<_>>())
}

#[test]
fn criterion_12_numerics() {
    let d = 5;
    let mut r = ChaCha8Rng::seed_from_u64(12);
    let geometries = [
        GeometrySpec::euclidean(d, Constraint::L2Ball { radius: 1.0 }).unwrap(),
        GeometrySpec::entropic(d).unwrap(),
        GeometrySpec::lp_proxy(1.5, d, 1.0, Constraint::LpBall { p: 1.5, radius: 1.0 }).unwrap(),
        GeometrySpec::lp_proxy(3.0, d, 1.0, Constraint::LpBall { p: 3.0, radius: 1.0 }).unwrap(),
    ];
    let (mut grad_worst, mut conj_worst, mut breg_min, mut self_bound_worst) = (0.0f64, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    let step = 1e-6;
    let draw = |g: &GeometrySpec, r: &mut ChaCha8Rng| {
        if g.constraint() == Constraint::Simplex {
            simplex_point(r, d)
        } else {
            ball_point(r, d, g.r())
        }
    };
    for g in &geometries {
        for _ in 0..1000 {
            let h = draw(g, &mut r);
            let h0 = draw(g, &mut r);
            // Directional derivative; tangent to the simplex for the entropic proxy.
            let mut v = Point::from((0..d).map(|_| r.random_range(-1.0..1.0)).collect::<Vec<_>>());
            if g.constraint() == Constraint::Simplex {
                let m = v.iter().sum::<f64>() / d as f64;
                v = v.map(|c| c - m);
            }
            let fd = (g.psi(&h.add(&v.scaled(step))).unwrap() - g.psi(&h.sub(&v.scaled(step))).unwrap()) / (2.0 * step);
            grad_worst = grad_worst.max(rel_err(fd, g.grad_psi(&h).unwrap().dot(&v)));
            let back = g.grad_psi_star(&g.grad_psi(&h).unwrap()).unwrap();
            conj_worst = conj_worst.max(back.max_abs_diff(&h) / h.iter().fold(0.0f64, |m, c| m.max(c.abs())));
            breg_min = breg_min.min(g.bregman(&h, &h0).unwrap().value);
        }
    }
    let euclid = &geometries[0];
    for _ in 0..1000 {
        let h = ball_point(&mut r, d, 2.0);
        let x = ball_point(&mut r, d, 2.0);
        let y = r.random_range(-1.0..1.0);
        let mask: Vec<u8> = (0..d).map(|_| r.random_range(0..=1u8)).collect();
        let losses = [
            LossInstance::linear(x.clone()),
            LossInstance::smoothed_abs(x.clone(), y),
            LossInstance::abs_supervised(x.clone(), y).unwrap(),
            LossInstance::hidden_coord_biased(x.clone(), mask.clone(), 0.01).unwrap(),
            LossInstance::regularized(LossInstance::smoothed_abs(x.clone(), y), 0.7).unwrap(),
        ];
        let v = Point::from((0..d).map(|_| r.random_range(-1.0..1.0)).collect::<Vec<_>>());
        for z in &losses {
            // Skip points within a step of a kink.
            let kink = match z {
                LossInstance::AbsSupervised { .. } => (h.dot(&x) - y).abs() < 1e-3,
                LossInstance::HiddenCoordBiased { .. } => mask.iter().all(|&m| m == 0),
                _ => false,
            };
            if kink {
                continue;
            }
            let fd = (z.value(&h.add(&v.scaled(step))).unwrap() - z.value(&h.sub(&v.scaled(step))).unwrap()) / (2.0 * step);
            grad_worst = grad_worst.max(rel_err(fd, z.eval(&h).unwrap().subgrad.dot(&v)));
        }
        let sa = &losses[1];
        let e = sa.eval(&h).unwrap();
        let hsmooth = sa.smoothness_constant(euclid).unwrap();
        self_bound_worst = self_bound_worst.max(euclid.dual_norm(&e.subgrad).unwrap().powi(2) - 4.0 * hsmooth * e.value);
    }
    let pass = grad_worst <= 1e-5 && conj_worst <= 1e-8 && breg_min >= 0.0 && self_bound_worst <= 1e-12;
    verdict(
        12,
        pass,
        &format!(
            "gradient rel err={grad_worst:.2e} (<=1e-5), conjugacy err={conj_worst:.2e} (<=1e-8), \
             min Bregman={breg_min:.2e}, max(||g||^2-4Hl)={self_bound_worst:.2e}"
        ),
    );
    assert!(pass);
}
