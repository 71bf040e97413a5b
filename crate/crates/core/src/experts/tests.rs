use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::complexity::{seq_fat, Caps, FiniteClass};

fn random_class(rng: &mut ChaCha8Rng) -> FiniteClass {
    let nf = rng.random_range(1..=12);
    let nx = rng.random_range(1..=5);
    let rows = (0..nf)
        .map(|_| (0..nx).map(|_| (rng.random_range(-4..=4) as f64) / 4.0).collect())
        .collect();
    FiniteClass::new(rows).unwrap()
}

#[test]
fn soa_mistakes_and_level_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let caps = Caps::default();
    for _ in 0..60 {
        let c = random_class(&mut rng);
        for alpha in [0.5, 1.0] {
            let fat = seq_fat(&c, alpha, &caps).unwrap().value;
            let target = rng.random_range(0..c.n_functions());
            let stream: Vec<(usize, f64)> = (0..25)
                .map(|_| {
                    let x = rng.random_range(0..c.n_instances());
                    (x, c.value(target, x))
                })
                .collect();
            let run = fat_soa_run(&c, alpha, &stream, &caps).unwrap();
            assert!(run.mistakes <= fat);
            assert!(run.updates.iter().all(|u| u.fat_after < u.fat_before));

            // Levels whose restriction keeps the full fat value are at most two and adjacent.
            let mut soa = FatSoa::new(&c, alpha, &caps).unwrap();
            let full = soa.fat(c.full_mask());
            for x in 0..c.n_instances() {
                let r: Vec<usize> = (0..soa.grid().len())
                    .filter(|&r| soa.fat(soa.restrict(c.full_mask(), r, x)) == full)
                    .collect();
                assert!(r.len() <= 1 || (r.len() == 2 && r[1] == r[0] + 1), "{r:?}");
            }
        }
    }
}

#[test]
fn expert_count_matches_enumeration() {
    let caps = Caps::default();
    let single = FiniteClass::new(vec![vec![0.2, 0.4]]).unwrap();
    let e = generate_experts(&single, 0.5, 10, &caps).unwrap();
    assert_eq!(e.len(), 1);
    let pm = FiniteClass::constants(&[1.0, -1.0], 2).unwrap();
    for (alpha, n) in [(1.0, 3), (0.5, 5), (0.25, 4)] {
        let e = generate_experts(&pm, alpha, n, &caps).unwrap();
        assert_eq!(e.fat, 1);
        let levels = alpha_grid(alpha).unwrap().len();
        assert_eq!(e.len() as u128, expert_count(1, n, levels));
        assert_eq!(e.len(), 1 + n * (levels - 1));
        assert!(e.len() as f64 <= (2.0 * n as f64 / alpha).powi(1));
    }
    let small = Caps {
        max_experts: 10,
        ..Caps::default()
    };
    assert!(matches!(
        generate_experts(&pm, 0.25, 64, &small),
        Err(crate::Error::Capacity { cap: "experts", .. })
    ));
}

fn tracks_every_function(c: &FiniteClass, alpha: f64, n: usize) {
    let caps = Caps::default();
    let mut soa = FatSoa::new(c, alpha, &caps).unwrap();
    let set = generate_with(&mut soa, n, &caps).unwrap();
    let nx = c.n_instances();
    for code in 0..nx.pow(n as u32) {
        let xs: Vec<usize> = (0..n).map(|t| code / nx.pow(t as u32) % nx).collect();
        let mut states = set.start(c);
        let mut preds = vec![];
        for (t, &x) in xs.iter().enumerate() {
            preds.push(set.step(&mut soa, &mut states, t, x));
        }
        for h in 0..c.n_functions() {
            let ok = (0..set.len()).any(|e| {
                xs.iter()
                    .enumerate()
                    .all(|(t, &x)| (c.value(h, x) - preds[t][e]).abs() <= alpha + 1e-12)
            });
            assert!(ok, "no expert tracks row {h} on {xs:?}");
        }
    }
}

#[test]
fn some_expert_tracks_each_function() {
    tracks_every_function(&FiniteClass::constants(&[1.0, -1.0], 2).unwrap(), 1.0, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..8 {
        let rows = (0..5)
            .map(|_| (0..2).map(|_| (rng.random_range(-4..=4) as f64) / 4.0).collect())
            .collect();
        let c = FiniteClass::new(rows).unwrap();
        tracks_every_function(&c, 0.5, 3);
    }
}

#[test]
fn agnostic_run_against_sign_labels() {
    let c = FiniteClass::constants(&[1.0, -1.0], 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let stream: Vec<(usize, f64)> = (0..64)
        .map(|_| (rng.random_range(0..2), if rng.random_bool(0.5) { 1.0 } else { -1.0 }))
        .collect();
    let run = agnostic_supervised_run(&c, &stream, 4, &Caps::default()).unwrap();
    let at_half = run.scales.iter().find(|s| s.alpha == 0.5).unwrap().bound;
    assert!(run.trace.regret() <= at_half);
    assert!((run.trace.regret() - run.trace.recompute_regret()).abs() < 1e-12);
    assert!(run.trace.regret() <= run.bound);
}

#[test]
fn agnostic_run_on_realizable_stream() {
    let c = FiniteClass::new(vec![vec![0.5, -0.5], vec![-1.0, 1.0], vec![0.25, 0.75]]).unwrap();
    let stream: Vec<(usize, f64)> = (0..48).map(|t| (t % 2, c.value(2, t % 2))).collect();
    let run = agnostic_supervised_run(&c, &stream, 3, &Caps::default()).unwrap();
    assert_eq!(run.trace.mean_comparator_loss(), 0.0);
    let tail: f64 = run.trace.losses[24..].iter().sum::<f64>() / 24.0;
    assert!(tail <= 0.25, "{tail}");
    for (i, s) in run.scales.iter().enumerate() {
        let p = 6.0 / (std::f64::consts::PI.powi(2) * ((i + 1) * (i + 1)) as f64);
        let prior = p / s.experts as f64;
        assert!(run.trace.losses.iter().sum::<f64>() <= ewa_bound(48, prior) + 48.0 * 0.25);
    }
}
