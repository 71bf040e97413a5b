use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mirrorlearn::adversary::{hidden_coordinate_stream, ResistingOracle};
use mirrorlearn::complexity::seq_fat;
use mirrorlearn::experts::ewa_run;
use mirrorlearn::md::{erm_solve, md_step, optimize_with_oracle, run_online_md, FinalPoint};
use mirrorlearn::{Caps, Comparator, Constraint, FiniteClass, GeometrySpec, LossInstance, MdState, Point, StepPolicy};

fn signed_stream(n: usize, d: usize) -> Vec<LossInstance> {
    (0..n)
        .map(|t| {
            let s = if (t * 2654435761) % 7 < 3 { -1.0 } else { 1.0 };
            LossInstance::linear(Point::basis(d, t % d).scaled(s))
        })
        .collect()
}

fn md_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("md_step");
    let d = 64;
    let grad = Point::from((0..d).map(|i| ((i as f64) * 0.37).sin()).collect::<Vec<_>>());
    let geometries = [
        ("euclidean", GeometrySpec::euclidean(d, Constraint::L2Ball { radius: 1.0 }).unwrap()),
        ("entropic", GeometrySpec::entropic(d).unwrap()),
        ("lp_1.5", GeometrySpec::lp_proxy(1.5, d, 1.0, Constraint::LpBall { p: 1.5, radius: 1.0 }).unwrap()),
        ("l1_ball", GeometrySpec::euclidean(d, Constraint::L1Ball { radius: 1.0 }).unwrap()),
    ];
    for (name, g) in &geometries {
        let st = MdState::new(g);
        group.bench_function(*name, |b| b.iter(|| md_step(black_box(&st), g, black_box(&grad), 0.1).unwrap()));
    }
    group.finish();
}

fn online_runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_online_md");
    let g = GeometrySpec::euclidean(8, Constraint::L2Ball { radius: 1.0 }).unwrap();
    for n in [256usize, 4096] {
        let stream = signed_stream(n, 8);
        let policy = StepPolicy::LipschitzRate { sup_psi: 0.5, n, b: 1.0, p: 2.0 };
        group.bench_with_input(BenchmarkId::from_parameter(n), &stream, |b, s| {
            b.iter(|| run_online_md(&g, &policy, s, &Comparator::Analytic).unwrap())
        });
    }
    group.finish();
}

fn offline(c: &mut Criterion) {
    let m = 64;
    let g = GeometrySpec::euclidean(m, Constraint::L2Ball { radius: 1.0 }).unwrap();
    c.bench_function("resisting_oracle_m64", |b| {
        b.iter(|| {
            let mut o = ResistingOracle::orthonormal(m).unwrap();
            optimize_with_oracle(&g, 0.1, m, &mut |h| o.query(h), FinalPoint::QueriedAverage).unwrap()
        })
    });
    let sample = hidden_coordinate_stream(256, 8, true, 3).unwrap();
    let ball = GeometrySpec::euclidean(256, Constraint::L2Ball { radius: 1.0 }).unwrap();
    c.bench_function("erm_hidden_coord_d256", |b| b.iter(|| erm_solve(black_box(&sample), &ball, 500).unwrap()));
}

fn complexity(c: &mut Criterion) {
    let caps = Caps::default();
    let class = FiniteClass::full_binary(4).unwrap();
    c.bench_function("seq_fat_full_binary_4", |b| b.iter(|| seq_fat(black_box(&class), 1.0, &caps).unwrap()));
    let losses: Vec<Vec<f64>> = (0..1024).map(|t| (0..8).map(|i| ((t * 31 + i * 17) % 13) as f64 / 12.0).collect()).collect();
    let priors = vec![1.0 / 8.0; 8];
    c.bench_function("ewa_8x1024", |b| b.iter(|| ewa_run(black_box(&priors), &losses).unwrap()));
}

criterion_group!(benches, md_steps, online_runs, offline, complexity);
criterion_main!(benches);
