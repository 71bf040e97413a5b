use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Constraint, Family, GeometrySpec};
use crate::losses::LossInstance;
use crate::md::online::{Comparator, MdState, RegretTrace};
use crate::md::step::{step_size_ucvx, ucvx_regret_bound, UcvxBranch};
use crate::point::Point;

#[derive(Debug, Clone, Serialize)]
pub struct UcvxRun {
    pub trace: RegretTrace,
    pub eta: Option<f64>,
    pub branch: UcvxBranch,
    /// `sup R` over the feasible set.
    pub r_sup: f64,
    pub bound: f64,
}

// psi'(y) per coordinate for the supported strongly/uniformly convex regularizers.
struct SmallPsi {
    coef: f64,
    r: f64,
}

impl SmallPsi {
    fn from_geometry(psi: &GeometrySpec, q_prime: f64) -> Result<Self> {
        match psi.family() {
            Family::Euclidean if q_prime == 2.0 => Ok(SmallPsi { coef: 1.0, r: 2.0 }),
            Family::LpProxy if psi.r() > 2.0 && psi.r() == q_prime => Ok(SmallPsi {
                coef: psi.scale() * 2f64.powf(psi.r()),
                r: psi.r(),
            }),
            _ => Err(Error::arg(format!(
                "unsupported regularizer {} for q' = {q_prime}; use Euclidean (q' = 2) or lp_proxy with r = q' > 2",
                psi.id()
            ))),
        }
    }

    fn grad(&self, y: f64) -> f64 {
        self.coef * y.signum() * y.abs().powf(self.r - 1.0)
    }

    // Solve a*y + s*psi'(y) = theta for y.
    fn solve(&self, a: f64, s: f64, theta: f64) -> f64 {
        if self.r == 2.0 {
            return theta / (a + s * self.coef);
        }
        let t = theta.abs();
        if t == 0.0 {
            return 0.0;
        }
        let mut hi = (t / (s * self.coef)).powf(1.0 / (self.r - 1.0));
        if a > 0.0 {
            hi = hi.min(t / a);
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if a * mid + s * self.grad(mid) > t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        theta.signum() * 0.5 * (lo + hi)
    }
}

/// Mirror descent with the time-varying proxy `Psi/eta + R + sigma t psi`, no projection.
///
/// `g` supplies the Euclidean `Psi` and the comparator set; `ridge` is the
/// coefficient of the known regularizer `R = ridge/2 ||h||^2`, which is added
/// to every loss of the stream.
pub fn run_uniformly_convex_md(
    g: &GeometrySpec,
    sigma: f64,
    q_prime: f64,
    ridge: f64,
    psi: &GeometrySpec,
    stream: &[LossInstance],
    comparator: &Comparator,
) -> Result<UcvxRun> {
    if q_prime < 2.0 {
        return Err(Error::arg(format!("q' must be >= 2, got {q_prime}")));
    }
    if stream.is_empty() {
        return Err(Error::arg("empty stream"));
    }
    if g.family() != Family::Euclidean {
        return Err(Error::arg("uniformly convex runner needs a Euclidean proxy"));
    }
    if !(ridge >= 0.0) || !(sigma > 0.0) {
        return Err(Error::arg("sigma must be > 0 and ridge >= 0"));
    }
    Error::check_dim(g.d(), psi.d())?;
    let small = SmallPsi::from_geometry(psi, q_prime)?;
    let n = stream.len();
    let sup_psi = if q_prime == 2.0 { 0.0 } else { g.sup_psi()? };
    let (eta, branch) = step_size_ucvx(sup_psi, n, sigma, q_prime, g.p())?;
    let r_sup = match g.constraint() {
        _ if ridge == 0.0 => 0.0,
        Constraint::L2Ball { radius } => 0.5 * ridge * radius * radius,
        c => return Err(Error::arg(format!("ridge needs an l2 ball comparator set, got {c:?}"))),
    };
    let full: Vec<LossInstance> = if ridge > 0.0 {
        stream
            .iter()
            .map(|z| LossInstance::regularized(z.clone(), ridge))
            .collect::<Result<_>>()?
    } else {
        stream.to_vec()
    };
    let inv_eta = eta.map_or(0.0, |e| 1.0 / e);
    let a = inv_eta + ridge;
    let mut st = MdState::new(g);
    let mut losses = Vec::with_capacity(n);
    for (t, z) in full.iter().enumerate() {
        let e = z.eval(&st.h)?;
        losses.push(e.value);
        let s = sigma * (t + 1) as f64;
        let h = &st.h;
        let next: Vec<f64> = (0..g.d())
            .map(|i| {
                let theta = a * h[i] + s * small.grad(h[i]) - e.subgrad[i];
                small.solve(a, s, theta)
            })
            .collect();
        st = MdState {
            h: Point::from(next),
            h_sum: st.h_sum.add(&st.h),
            t: st.t + 1,
        };
    }
    let cmp = comparator.resolve(g, &full)?;
    let comp_losses = full
        .iter()
        .map(|z| z.value(&cmp.point))
        .collect::<Result<Vec<_>>>()?;
    let trace = RegretTrace::build(losses, cmp, comp_losses, &st, g.id(), "uniformly_convex".into())?;
    let bound = ucvx_regret_bound(sup_psi, n, sigma, q_prime, g.q(), r_sup);
    Ok(UcvxRun {
        trace,
        eta,
        branch,
        r_sup,
        bound,
    })
}
