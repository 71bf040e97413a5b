use super::*;
use crate::complexity::{Caps, FiniteClass, Tree};
use crate::geometry::{Constraint, GeometrySpec};
use crate::md::{optimize_with_oracle, FinalPoint};
use crate::point::Point;
use crate::Error;

#[test]
fn unobserved_frequency_for_sixteen_coordinates() {
    let hits = (0..500u64)
        .filter(|&s| !unobserved_coordinates(&hidden_coordinate_stream(16, 4, false, s).unwrap()).is_empty())
        .count();
    let freq = hits as f64 / 500.0;
    assert!((0.58..=0.75).contains(&freq), "{freq}");
    assert!((unobserved_probability(16, 4) - (1.0 - (15.0f64 / 16.0).powi(16))).abs() < 1e-15);
    assert!(unobserved_probability(256, 8) > 1.0 - (-1.0f64).exp());
}

#[test]
fn single_coordinate_unobserved_probability_is_exact() {
    for n in 1..=10u32 {
        // Enumerate every mask sequence for one coordinate.
        let all_zero = (0..1u32 << n).filter(|&bits| bits == 0).count();
        let p = all_zero as f64 / f64::from(1u32 << n);
        assert_eq!(p, 0.5f64.powi(n as i32));
        assert_eq!(unobserved_probability(1, n as usize), p);
    }
}

#[test]
fn one_coordinate_one_draw_is_a_fair_coin() {
    let ones = (0..4000u64)
        .filter(|&s| {
            let z = hidden_coordinate_stream(1, 1, false, s).unwrap();
            unobserved_coordinates(&z).is_empty()
        })
        .count() as f64
        / 4000.0;
    assert!((ones - 0.5).abs() < 0.03, "{ones}");
}

#[test]
fn unobserved_basis_vector_has_zero_empirical_risk() {
    for seed in 0..50 {
        let z = hidden_coordinate_stream(64, 5, false, seed).unwrap();
        for j in unobserved_coordinates(&z) {
            let e = Point::basis(64, j);
            let emp: f64 = z.iter().map(|l| l.value(&e).unwrap()).sum::<f64>() / z.len() as f64;
            assert_eq!(emp, 0.0);
            // Population risk E ||alpha * e_j|| = P(alpha_j = 1).
            let pop = [0u8, 1].iter().map(|&a| f64::from(a) * 0.5).sum::<f64>();
            assert_eq!(pop, 0.5);
        }
    }
}

#[test]
fn stream_is_reproducible() {
    assert_eq!(
        hidden_coordinate_stream(8, 3, true, 9).unwrap(),
        hidden_coordinate_stream(8, 3, true, 9).unwrap()
    );
    assert!(hidden_coordinate_stream(0, 3, true, 9).is_err());
}

fn full_plan(n: usize) -> BlockAdversaryPlan {
    let c = FiniteClass::full_binary(4).unwrap();
    BlockAdversaryPlan::from_class(&c, 2.0, n, &Caps::default()).unwrap()
}

#[test]
fn block_labels_are_uniform_per_block() {
    let plan = full_plan(64);
    assert_eq!(plan.depth(), 4);
    assert_eq!(plan.k, 16);
    let draws = 10_000u64;
    let mut plus = vec![0u64; 4];
    for s in 0..draws {
        let st = block_sign_stream(&plan, s);
        for j in 0..4 {
            if st.pairs[j * 16].1 > 0.0 {
                plus[j] += 1;
            }
        }
    }
    for p in plus {
        let e = draws as f64 / 2.0;
        let chi2 = 2.0 * (p as f64 - e).powi(2) / e;
        // 99.9% quantile of chi-square with one degree of freedom.
        assert!(chi2 < 10.83, "{chi2}");
    }
}

#[test]
fn block_path_follows_modal_signs() {
    let plan = full_plan(8);
    for s in 0..20 {
        let st = block_sign_stream(&plan, s);
        for (j, b) in st.pairs.chunks(2).enumerate() {
            let sum: f64 = b.iter().map(|p| p.1).sum();
            assert_eq!(st.block_signs[j], if sum >= 0.0 { 1 } else { -1 });
            assert_eq!(b[0].0, *plan.tree.node(&st.block_signs[..j]));
        }
    }
    assert!((plan.lower_bound() - 2.0 * (4.0f64 / 64.0).sqrt()).abs() < 1e-15);
}

#[test]
fn depth_one_plan_is_coin_flips_on_one_point() {
    let c = FiniteClass::constants(&[1.0, -1.0], 1).unwrap();
    let plan = BlockAdversaryPlan::from_class(&c, 2.0, 10, &Caps::default()).unwrap();
    assert_eq!((plan.depth(), plan.k), (1, 10));
    let st = block_sign_stream(&plan, 3);
    assert!(st.pairs.iter().all(|&(x, y)| x == 0 && y.abs() == 1.0));
}

#[test]
fn invalid_plans_are_rejected() {
    let c = FiniteClass::constants(&[1.0, -1.0], 2).unwrap();
    let tree = Tree::new(1, vec![0]).unwrap();
    assert!(BlockAdversaryPlan::new(&c, tree.clone(), Tree::new(1, vec![0.0]).unwrap(), 2.0, 3).is_ok());
    assert!(BlockAdversaryPlan::new(&c, tree.clone(), Tree::new(1, vec![0.5]).unwrap(), 2.0, 3).is_err());
    let deep = Tree::new(2, vec![0, 1, 1]).unwrap();
    let w = Tree::new(2, vec![0.0; 3]).unwrap();
    assert!(BlockAdversaryPlan::new(&c, deep, w, 2.0, 4).is_err());
    assert!(BlockAdversaryPlan::new(&c, tree, Tree::new(1, vec![0.0]).unwrap(), 2.0, 0).is_err());
}

#[test]
fn constant_tree_gives_signed_copies() {
    let v = Point::new(vec![0.6, -0.8]).unwrap();
    let u = Tree::per_level(vec![v.clone(); 5]);
    let st = linear_tree_stream(&u, 4).unwrap();
    let lv = linear_level_stream(&vec![v.clone(); 5], 4).unwrap();
    assert_eq!(st, lv);
    for (z, e) in st.losses.iter().zip(&st.signs) {
        let g = z.eval(&Point::zeros(2)).unwrap().subgrad;
        assert_eq!(g, v.scaled(f64::from(*e)));
    }
}

#[test]
fn orthonormal_tree_value_by_enumeration() {
    for n in 1..=12usize {
        let levels = orthonormal_levels(n);
        let mut total = 0.0;
        for bits in 0..1u32 << n {
            let mut s = Point::zeros(n);
            for (t, u) in levels.iter().enumerate() {
                s.axpy(if bits >> t & 1 == 1 { 1.0 } else { -1.0 }, u);
            }
            total += s.l2_norm() / n as f64;
        }
        let exact = total / f64::from(1u32 << n);
        assert!((exact - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
        let mc: f64 = (0..200u64)
            .map(|seed| {
                let st = linear_level_stream(&levels, seed).unwrap();
                let mut s = Point::zeros(n);
                for z in &st.losses {
                    s.axpy(1.0, &z.eval(&Point::zeros(n)).unwrap().subgrad);
                }
                s.l2_norm() / n as f64
            })
            .sum::<f64>()
            / 200.0;
        assert!((mc - exact).abs() < 1e-12);
    }
}

#[test]
fn one_piece_gap_is_one_at_origin() {
    let mut o = ResistingOracle::new(1, vec![(Point::basis(2, 0), 0.0)]).unwrap();
    let a = o.query(&Point::zeros(2)).unwrap();
    assert_eq!(a.value, 0.0);
    let z = o.finalize().unwrap();
    let best = z.value(&Point::basis(2, 0)).unwrap();
    assert_eq!(best, -1.0);
    assert_eq!(a.value - best, 1.0);
    assert!(matches!(o.query(&Point::zeros(2)), Err(Error::Protocol(_))));
}

#[test]
fn resisting_game_against_md_and_gradient_descent() {
    for m in [4usize, 16, 64] {
        let g = GeometrySpec::euclidean(m, Constraint::L2Ball { radius: 1.0 }).unwrap();
        let eta = 1.0 / (m as f64).sqrt();
        for mode in [FinalPoint::QueriedAverage, FinalPoint::LastIterate] {
            let mut o = ResistingOracle::orthonormal(m).unwrap();
            let run = optimize_with_oracle(&g, eta, m, &mut |h| o.query(h), mode).unwrap();
            let z = o.finalize().unwrap();
            // The committed instance has minimum -1/sqrt(m), attained at h_i = eps_i / sqrt(m).
            let mut hstar = Point::zeros(m);
            for q in o.log() {
                hstar[q.index] = f64::from(q.eps) / (m as f64).sqrt();
            }
            let opt = z.value(&hstar).unwrap();
            assert!((opt + ResistingOracle::orthonormal_value(m)).abs() < 1e-12);
            let gap = z.value(&run.output).unwrap() - opt;
            assert!(gap >= ResistingOracle::orthonormal_value(m) - 1e-9, "{m} {mode:?} {gap}");

            // Replaying every logged query against the final instance reproduces each answer.
            for q in o.log() {
                let e = z.eval(&q.h).unwrap();
                assert_eq!(e.value.to_bits(), q.value.to_bits());
                assert_eq!(e.subgrad, q.subgrad);
            }
            let t = o.transcript(Some(1));
            assert_eq!(t.signs.len(), m);
            assert_eq!(t.queries.len(), m);
        }
    }
}

#[test]
fn no_point_beats_the_minmax_value() {
    let m = 4;
    let eps = [1.0, -1.0, -1.0, 1.0];
    let val = ResistingOracle::orthonormal_value(m);
    let mut state = 17u64;
    for _ in 0..20_000 {
        let mut h: Vec<f64> = (0..m)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect();
        let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 {
            h.iter_mut().for_each(|v| *v /= norm);
        }
        let min = (0..m).map(|i| eps[i] * h[i]).fold(f64::INFINITY, f64::min);
        assert!(min <= val + 1e-12);
    }
}

#[test]
fn budget_is_enforced() {
    let mut o = ResistingOracle::orthonormal(2).unwrap();
    o.query(&Point::zeros(2)).unwrap();
    o.query(&Point::zeros(2)).unwrap();
    assert!(matches!(o.query(&Point::zeros(2)), Err(Error::Protocol(_))));
    assert!(ResistingOracle::new(3, vec![(Point::basis(2, 0), 0.0)]).is_err());
}
