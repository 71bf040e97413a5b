use serde::{Deserialize, Serialize};

use super::{rng, run_trials, unit_vector, BoundRecord, ExperimentConfig, ExperimentReport, ResultRow};
use crate::adversary::ResistingOracle;
use crate::error::Result;
use crate::geometry::{Constraint, GeometrySpec};
use crate::losses::LossInstance;
use crate::md::{lipschitz_regret_bound, offline_optimize, optimize_with_oracle, step_size_lipschitz, FinalPoint};
use crate::point::Point;

const EXPERIMENT: &str = "oracle_lb";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleAlgorithm {
    /// Mirror descent at the Lipschitz rate; the average is spent as the last query.
    MirrorDescent,
    /// Projected gradient descent with step `1/sqrt(m)`, reporting the last iterate.
    GradientDescent,
}

/// Suboptimality of `alg` after `m` queries to the orthonormal resisting oracle on the unit ball of `R^m`.
pub fn resisting_gap(alg: OracleAlgorithm, m: usize) -> Result<f64> {
    let g = GeometrySpec::euclidean(m, Constraint::L2Ball { radius: 1.0 })?;
    let (eta, mode) = match alg {
        OracleAlgorithm::MirrorDescent => (step_size_lipschitz(g.sup_psi()?, m, 1.0, 2.0)?, FinalPoint::QueriedAverage),
        OracleAlgorithm::GradientDescent => (1.0 / (m as f64).sqrt(), FinalPoint::LastIterate),
    };
    let mut o = ResistingOracle::orthonormal(m)?;
    let run = optimize_with_oracle(&g, eta, m, &mut |h| o.query(h), mode)?;
    let z = o.finalize()?;
    let mut hstar = Point::zeros(m);
    for q in o.log() {
        hstar[q.index] = f64::from(q.eps) / (m as f64).sqrt();
    }
    Ok(z.value(&run.output)? - z.value(&hstar)?)
}

/// Resisting-oracle and benign suboptimality for every `m` of the grid.
pub fn oracle_complexity_curve(cfg: &ExperimentConfig, alg: OracleAlgorithm) -> Result<ExperimentReport> {
    cfg.validate()?;
    let id = match alg {
        OracleAlgorithm::MirrorDescent => EXPERIMENT.to_string(),
        OracleAlgorithm::GradientDescent => format!("{EXPERIMENT}_pgd"),
    };
    let mut report = ExperimentReport::new(&id, cfg);
    let g = GeometrySpec::euclidean(cfg.d, Constraint::L2Ball { radius: 1.0 })?;
    let sup = g.sup_psi()?;
    for &m in &cfg.m_grid {
        let floor = ResistingOracle::orthonormal_value(m);
        let gap = resisting_gap(alg, m)?;
        report.rows.push(ResultRow::new(&id, m, 0, 0, "resisting_gap", gap, floor));
        report.bounds.push(BoundRecord::new(&id, m, "resisting_floor", &[("m", m as f64)], floor));
        let benign_bound = lipschitz_regret_bound(sup, m, 2.0);
        report.bounds.push(BoundRecord::new(&id, m, "offline_md", &[("sup_psi", sup), ("m", m as f64)], benign_bound));
        let benign = run_trials(cfg.threads, cfg.trials, |i| {
            let seed = cfg.trial_seed(i);
            let x = unit_vector(cfg.d, &mut rng(seed));
            let h = offline_optimize(&LossInstance::linear(x.clone()), &g, m)?;
            Ok((i, seed, h.dot(&x) + x.l2_norm()))
        })?;
        for (i, seed, gap) in benign {
            report.rows.push(ResultRow::new(&id, m, i, seed, "benign_gap", gap, benign_bound));
        }
    }
    Ok(report.finish())
}
