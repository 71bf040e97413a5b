use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Constraint, Family, GeometrySpec};
use crate::losses::{linear_minimizer, LossEval, LossInstance};
use crate::md::solvers::{erm_solve, rerm_solve};
use crate::md::step::{step_size_lipschitz, StepPolicy};
use crate::point::Point;

/// Mirror descent state. `h_sum` accumulates the points at which losses were evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdState {
    pub h: Point,
    pub h_sum: Point,
    pub t: usize,
}

impl MdState {
    /// Starts at the minimizer of the proxy over the feasible set.
    pub fn new(g: &GeometrySpec) -> Self {
        Self::at(g.initial_point())
    }

    pub fn at(h: Point) -> Self {
        let d = h.dim();
        Self {
            h,
            h_sum: Point::zeros(d),
            t: 0,
        }
    }

    /// Mean of the evaluated iterates `h_1..h_t`.
    pub fn average(&self) -> Result<Point> {
        if self.t == 0 {
            return Err(Error::arg("no iterates to average"));
        }
        Ok(self.h_sum.scaled(1.0 / self.t as f64))
    }
}

/// Mean of the iterates at which losses were evaluated.
pub fn averaged_output(state: &MdState) -> Result<Point> {
    state.average()
}

/// One mirror step followed by the Bregman projection.
pub fn md_step(state: &MdState, g: &GeometrySpec, subgrad: &Point, eta: f64) -> Result<MdState> {
    if !(eta > 0.0) {
        return Err(Error::arg(format!("step size must be > 0, got {eta}")));
    }
    Error::check_dim(g.d(), subgrad.dim())?;
    let mut theta = g.grad_psi(&state.h)?;
    theta.axpy(-eta, subgrad);
    let h_new = g.project(&g.grad_psi_star(&theta)?)?;
    Ok(MdState {
        h: h_new,
        h_sum: state.h_sum.add(&state.h),
        t: state.t + 1,
    })
}

/// How the comparator of a regret computation is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparator {
    /// Best of a fixed candidate set.
    Points { points: Vec<Point> },
    /// Closed-form minimizer; linear (optionally ridge-regularized) losses only.
    Analytic,
    /// Numerical minimizer; its certified gap is added to the regret.
    Erm { budget: usize },
}

impl Default for Comparator {
    fn default() -> Self {
        Comparator::Analytic
    }
}

pub(crate) struct Resolved {
    pub point: Point,
    pub slack: f64,
    pub method: String,
}

// (sum of x, sum of lambda) when every loss is linear plus a ridge term.
pub(crate) fn linear_quadratic(z: &LossInstance) -> Option<(Point, f64)> {
    match z {
        LossInstance::Linear { x } => Some((x.clone(), 0.0)),
        LossInstance::Regularized { inner, lambda } => {
            linear_quadratic(inner).map(|(x, l)| (x, l + lambda))
        }
        _ => None,
    }
}

impl Comparator {
    pub(crate) fn resolve(&self, g: &GeometrySpec, stream: &[LossInstance]) -> Result<Resolved> {
        match self {
            Comparator::Points { points } => {
                let mut best: Option<(f64, &Point)> = None;
                for p in points {
                    let mut s = 0.0;
                    for z in stream {
                        s += z.value(p)?;
                    }
                    if best.is_none_or(|(b, _)| s < b) {
                        best = Some((s, p));
                    }
                }
                let (_, p) = best.ok_or_else(|| Error::arg("empty comparator set"))?;
                Ok(Resolved {
                    point: p.clone(),
                    slack: 0.0,
                    method: format!("points({})", points.len()),
                })
            }
            Comparator::Analytic => {
                let mut xs = Point::zeros(g.d());
                let mut lam = 0.0;
                for z in stream {
                    let (x, l) = linear_quadratic(z).ok_or_else(|| {
                        Error::arg(format!("no analytic comparator for {} losses", z.kind()))
                    })?;
                    xs = xs.add(&x);
                    lam += l;
                }
                let point = if lam == 0.0 {
                    linear_minimizer(g, &xs)?
                } else {
                    let euclid = g.family() == Family::Euclidean
                        && matches!(g.constraint(), Constraint::None | Constraint::L2Ball { .. });
                    if !euclid {
                        return Err(Error::arg(
                            "analytic ridge comparator needs a Euclidean ball or no constraint",
                        ));
                    }
                    g.project(&xs.scaled(-1.0 / lam))?
                };
                Ok(Resolved {
                    point,
                    slack: 0.0,
                    method: "analytic".into(),
                })
            }
            Comparator::Erm { budget } => {
                let r = erm_solve(stream, g, *budget)?;
                Ok(Resolved {
                    point: r.point,
                    slack: r.gap,
                    method: format!("erm(budget={budget})"),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub geometry: String,
    pub policy: String,
    pub seed: Option<u64>,
    pub comparator: String,
}

/// Per-round losses of the learner and the comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub losses: Vec<f64>,
    pub comparator_losses: Vec<f64>,
    /// Average regret over the first `t` rounds against the final comparator.
    pub cumulative_regret: Vec<f64>,
    pub comparator: Point,
    /// Certified suboptimality of a numerical comparator, added to the regret.
    pub comparator_slack: f64,
    pub average: Point,
    pub last: Point,
    pub meta: TraceMeta,
}

impl RegretTrace {
    pub(crate) fn build(
        losses: Vec<f64>,
        cmp: Resolved,
        comparator_losses: Vec<f64>,
        state: &MdState,
        geometry: String,
        policy: String,
    ) -> Result<Self> {
        let mut cum = Vec::with_capacity(losses.len());
        let mut s = 0.0;
        for (t, (a, b)) in losses.iter().zip(&comparator_losses).enumerate() {
            s += a - b;
            cum.push(s / (t + 1) as f64);
        }
        Ok(Self {
            losses,
            comparator_losses,
            cumulative_regret: cum,
            comparator: cmp.point,
            comparator_slack: cmp.slack,
            average: state.average()?,
            last: state.h.clone(),
            meta: TraceMeta {
                geometry,
                policy,
                seed: None,
                comparator: cmp.method,
            },
        })
    }

    /// Trace from per-round losses of a learner that is not a point iterate.
    pub fn from_rounds(
        losses: Vec<f64>,
        comparator_losses: Vec<f64>,
        comparator: Point,
        average: Point,
        last: Point,
        meta: TraceMeta,
    ) -> Self {
        let mut cum = Vec::with_capacity(losses.len());
        let mut s = 0.0;
        for (t, (a, b)) in losses.iter().zip(&comparator_losses).enumerate() {
            s += a - b;
            cum.push(s / (t + 1) as f64);
        }
        Self {
            losses,
            comparator_losses,
            cumulative_regret: cum,
            comparator,
            comparator_slack: 0.0,
            average,
            last,
            meta,
        }
    }

    pub fn n(&self) -> usize {
        self.losses.len()
    }

    /// Average regret after all rounds, including comparator slack.
    pub fn regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0) + self.comparator_slack
    }

    /// Regret recomputed from the stored rows.
    pub fn recompute_regret(&self) -> f64 {
        let n = self.n() as f64;
        self.losses.iter().sum::<f64>() / n - self.comparator_losses.iter().sum::<f64>() / n
            + self.comparator_slack
    }

    pub fn mean_loss(&self) -> f64 {
        self.losses.iter().sum::<f64>() / self.n() as f64
    }

    pub fn mean_comparator_loss(&self) -> f64 {
        self.comparator_losses.iter().sum::<f64>() / self.n() as f64
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.meta.seed = Some(seed);
        self
    }
}

/// Online mirror descent from the proxy minimizer, one full-information step per round.
pub fn run_online_md(
    g: &GeometrySpec,
    policy: &StepPolicy,
    stream: &[LossInstance],
    comparator: &Comparator,
) -> Result<RegretTrace> {
    if stream.is_empty() {
        return Err(Error::arg("empty stream"));
    }
    if let Some(n) = policy.horizon() {
        if n != stream.len() {
            return Err(Error::arg(format!(
                "policy tuned for n = {n}, stream has {} rounds",
                stream.len()
            )));
        }
    }
    if matches!(policy, StepPolicy::UniformlyConvex { .. }) {
        return Err(Error::arg(
            "uniformly convex policy runs through run_uniformly_convex_md",
        ));
    }
    let eta = policy.eta()?;
    let mut st = MdState::new(g);
    let mut losses = Vec::with_capacity(stream.len());
    for z in stream {
        let e = z.eval(&st.h)?;
        losses.push(e.value);
        st = md_step(&st, g, &e.subgrad, eta)?;
    }
    let cmp = comparator.resolve(g, stream)?;
    let comp_losses = stream
        .iter()
        .map(|z| z.value(&cmp.point))
        .collect::<Result<Vec<_>>>()?;
    RegretTrace::build(losses, cmp, comp_losses, &st, g.id(), policy.id().into())
}

/// Doubling-trick wrapper for unknown horizons: restarts with a Lipschitz-rate step
/// on epochs of length `1, 2, 4, ...`. Outside the fixed-horizon guarantees.
pub fn run_doubling_md(
    g: &GeometrySpec,
    stream: &[LossInstance],
    comparator: &Comparator,
) -> Result<RegretTrace> {
    if stream.is_empty() {
        return Err(Error::arg("empty stream"));
    }
    let sup = g.sup_psi()?;
    let mut losses = Vec::with_capacity(stream.len());
    let mut sum = Point::zeros(g.d());
    let mut start = 0;
    let mut len = 1;
    let mut st = MdState::new(g);
    while start < stream.len() {
        let end = (start + len).min(stream.len());
        let eta = step_size_lipschitz(sup, len, 1.0, g.p())?;
        st = MdState::new(g);
        for z in &stream[start..end] {
            let e = z.eval(&st.h)?;
            losses.push(e.value);
            st = md_step(&st, g, &e.subgrad, eta)?;
        }
        sum = sum.add(&st.h_sum);
        start = end;
        len *= 2;
    }
    let total = MdState {
        h: st.h,
        h_sum: sum,
        t: stream.len(),
    };
    let cmp = comparator.resolve(g, stream)?;
    let comp_losses = stream
        .iter()
        .map(|z| z.value(&cmp.point))
        .collect::<Result<Vec<_>>>()?;
    RegretTrace::build(losses, cmp, comp_losses, &total, g.id(), "doubling".into())
}

/// Which point an offline run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalPoint {
    /// Average of the `m` queried iterates (never itself queried).
    Average,
    /// `m - 1` mirror steps, then the average is spent as the `m`-th query.
    QueriedAverage,
    /// The `m`-th iterate.
    LastIterate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfflineRun {
    pub output: Point,
    pub queries: Vec<Point>,
}

/// Mirror descent driven by a first-order oracle for `m` queries.
pub fn optimize_with_oracle(
    g: &GeometrySpec,
    eta: f64,
    m: usize,
    oracle: &mut dyn FnMut(&Point) -> Result<LossEval>,
    mode: FinalPoint,
) -> Result<OfflineRun> {
    if m == 0 {
        return Err(Error::arg("need at least one query"));
    }
    let mut st = MdState::new(g);
    let mut queries = Vec::with_capacity(m);
    let steps = match mode {
        FinalPoint::QueriedAverage => m - 1,
        _ => m,
    };
    for t in 0..steps {
        let e = oracle(&st.h)?;
        queries.push(st.h.clone());
        if mode == FinalPoint::LastIterate && t + 1 == m {
            return Ok(OfflineRun {
                output: st.h.clone(),
                queries,
            });
        }
        st = md_step(&st, g, &e.subgrad, eta)?;
    }
    let output = match mode {
        FinalPoint::QueriedAverage => {
            let avg = if st.t == 0 { st.h.clone() } else { st.average()? };
            oracle(&avg)?;
            queries.push(avg.clone());
            avg
        }
        _ => st.average()?,
    };
    Ok(OfflineRun { output, queries })
}

/// Mirror descent fed its own subgradients for `m` rounds; returns the average iterate.
pub fn offline_optimize(z: &LossInstance, g: &GeometrySpec, m: usize) -> Result<Point> {
    if m == 0 {
        return Err(Error::arg("m must be >= 1"));
    }
    let eta = step_size_lipschitz(g.sup_psi()?, m, 1.0, g.p())?;
    let mut oracle = |h: &Point| z.eval(h);
    Ok(optimize_with_oracle(g, eta, m, &mut oracle, FinalPoint::Average)?.output)
}

/// Same as `erm_solve` / `rerm_solve` chosen by `lambda`.
pub fn empirical_minimizer(
    sample: &[LossInstance],
    g: &GeometrySpec,
    lambda: f64,
    budget: usize,
) -> Result<Point> {
    Ok(if lambda > 0.0 {
        rerm_solve(sample, g, lambda, budget)?.point
    } else {
        erm_solve(sample, g, budget)?.point
    })
}
