//! Norm families, proxy functions and Bregman projections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{lp_norm, Point};
use crate::tolerance::TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Euclidean,
    Entropic,
    LpProxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    None,
    L2Ball { radius: f64 },
    L1Ball { radius: f64 },
    Simplex,
    LpBall { p: f64, radius: f64 },
}

impl Constraint {
    fn radius(&self) -> Option<f64> {
        match *self {
            Constraint::L2Ball { radius }
            | Constraint::L1Ball { radius }
            | Constraint::LpBall { radius, .. } => Some(radius),
            _ => None,
        }
    }

    /// `(p, radius)` when the set is an `l_p` ball.
    pub fn as_lp_ball(&self) -> Option<(f64, f64)> {
        match *self {
            Constraint::L2Ball { radius } => Some((2.0, radius)),
            Constraint::L1Ball { radius } => Some((1.0, radius)),
            Constraint::LpBall { p, radius } => Some((p, radius)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GeometryRepr {
    family: Family,
    #[serde(default)]
    r: Option<f64>,
    d: usize,
    #[serde(default = "one")]
    scale: f64,
    constraint: Constraint,
    #[serde(default)]
    pairing: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// A proxy function together with its norm family and feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryRepr", into = "GeometryRepr")]
pub struct GeometrySpec {
    family: Family,
    r: f64,
    d: usize,
    scale: f64,
    constraint: Constraint,
    pairing: f64,
}

impl TryFrom<GeometryRepr> for GeometrySpec {
    type Error = Error;
    fn try_from(g: GeometryRepr) -> Result<Self> {
        let r = match g.family {
            Family::Euclidean => 2.0,
            Family::Entropic => 1.0,
            Family::LpProxy => g
                .r
                .ok_or_else(|| Error::arg("lp_proxy geometry needs r"))?,
        };
        let pairing = g.pairing.unwrap_or(r);
        GeometrySpec::build(g.family, r, g.d, g.scale, g.constraint, pairing)
    }
}

impl From<GeometrySpec> for GeometryRepr {
    fn from(g: GeometrySpec) -> Self {
        GeometryRepr {
            family: g.family,
            r: matches!(g.family, Family::LpProxy).then_some(g.r),
            d: g.d,
            scale: g.scale,
            constraint: g.constraint,
            pairing: Some(g.pairing),
        }
    }
}

impl GeometrySpec {
    fn build(
        family: Family,
        r: f64,
        d: usize,
        scale: f64,
        constraint: Constraint,
        pairing: f64,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::arg("dimension must be >= 1"));
        }
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(Error::arg(format!("scale must be >= 1, got {scale}")));
        }
        if let Some(rad) = constraint.radius() {
            if !(rad > 0.0 && rad.is_finite()) {
                return Err(Error::arg(format!("radius must be > 0, got {rad}")));
            }
        }
        if let Constraint::LpBall { p, .. } = constraint {
            if !(p >= 1.0) {
                return Err(Error::arg(format!("ball exponent must be >= 1, got {p}")));
            }
        }
        if !(pairing >= 1.0) {
            return Err(Error::arg("pairing exponent must be >= 1"));
        }
        match family {
            Family::Entropic if constraint != Constraint::Simplex => {
                return Err(Error::arg("entropic geometry requires the simplex"));
            }
            Family::Euclidean | Family::LpProxy if constraint == Constraint::Simplex => {
                return Err(Error::arg("simplex constraint requires the entropic geometry"));
            }
            Family::Euclidean if matches!(constraint, Constraint::LpBall { p, .. } if p != 2.0 && p != 1.0) => {
                return Err(Error::arg("euclidean geometry supports l1 and l2 balls only"));
            }
            Family::LpProxy if !(r > 1.0 && r.is_finite()) => {
                return Err(Error::arg(format!("r must lie in (1, inf), got {r}")));
            }
            _ => {}
        }
        Ok(Self {
            family,
            r,
            d,
            scale,
            constraint,
            pairing,
        })
    }

    pub fn euclidean(d: usize, constraint: Constraint) -> Result<Self> {
        Self::build(Family::Euclidean, 2.0, d, 1.0, constraint, 2.0)
    }

    pub fn entropic(d: usize) -> Result<Self> {
        Self::build(Family::Entropic, 1.0, d, 1.0, Constraint::Simplex, 1.0)
    }

    pub fn lp_proxy(r: f64, d: usize, scale: f64, constraint: Constraint) -> Result<Self> {
        Self::build(Family::LpProxy, r, d, scale, constraint, r)
    }

    /// Overrides the exponent of the norm used in the uniform convexity certificate.
    pub fn with_pairing(mut self, pairing: f64) -> Result<Self> {
        if !(pairing >= 1.0) {
            return Err(Error::arg("pairing exponent must be >= 1"));
        }
        self.pairing = pairing;
        Ok(self)
    }

    /// Rescaled `psi_r` for `H` the unit `l_{p1}` ball and data in the unit `l_{p2}` ball.
    pub fn non_dual(p1: f64, p2: f64, d: usize) -> Result<Self> {
        if !(p1 >= 1.0 && p2 >= 1.0) {
            return Err(Error::arg("p1 and p2 must be >= 1"));
        }
        let q2 = conjugate(p2);
        let r = if p2 < 2.0 || p1 > 2.0 {
            2.0
        } else if p2.is_infinite() {
            if d < 3 {
                2.0
            } else {
                1.0 + 1.0 / (d as f64).ln()
            }
        } else if q2 >= p1 {
            q2
        } else {
            p1
        };
        let big_q = r.max(2.0);
        let expo = (1.0 / q2 - 1.0 / r).max(0.0);
        let scale = (d as f64).powf(big_q * expo);
        Self::build(
            Family::LpProxy,
            r,
            d,
            scale,
            Constraint::LpBall { p: p1, radius: 1.0 },
            q2,
        )
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Exponent of the primal norm (`2` Euclidean, `1` entropic).
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    /// Uniform convexity exponent.
    pub fn q(&self) -> f64 {
        match self.family {
            Family::LpProxy => self.r.max(2.0),
            _ => 2.0,
        }
    }

    /// Conjugate of `q`.
    pub fn p(&self) -> f64 {
        conjugate(self.q())
    }

    pub fn pairing(&self) -> f64 {
        self.pairing
    }

    pub fn pairing_norm(&self, v: &Point) -> Result<f64> {
        self.dim(v)?;
        Ok(v.lp_norm(self.pairing))
    }

    fn dim(&self, v: &Point) -> Result<()> {
        Error::check_dim(self.d, v.dim())
    }

    /// Short identifier used in traces.
    pub fn id(&self) -> String {
        match self.family {
            Family::Euclidean => format!("euclidean(d={})", self.d),
            Family::Entropic => format!("entropic(d={})", self.d),
            Family::LpProxy => format!("lp_proxy(r={},d={},scale={})", self.r, self.d, self.scale),
        }
    }

    pub fn norm(&self, h: &Point) -> Result<f64> {
        self.dim(h)?;
        Ok(h.lp_norm(self.r))
    }

    pub fn dual_norm(&self, x: &Point) -> Result<f64> {
        self.dim(x)?;
        Ok(x.lp_norm(conjugate(self.r)))
    }

    fn check_entropic(&self, h: &Point) -> Result<()> {
        if let Some(i) = h.iter().position(|&c| !(c > 0.0)) {
            return Err(Error::Domain(format!(
                "entropic proxy needs positive coordinates, h[{i}] = {}",
                h[i]
            )));
        }
        let s: f64 = h.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!("entropic proxy needs sum 1, got {s}")));
        }
        Ok(())
    }

    fn lp_coef(&self) -> f64 {
        if self.r <= 2.0 {
            self.scale / (self.r - 1.0)
        } else {
            self.scale * 2f64.powf(self.r)
        }
    }

    pub fn psi(&self, h: &Point) -> Result<f64> {
        self.dim(h)?;
        Ok(match self.family {
            Family::Euclidean => 0.5 * h.dot(h),
            Family::Entropic => {
                self.check_entropic(h)?;
                h.iter().map(|&c| c * c.ln()).sum::<f64>() + (self.d as f64).ln()
            }
            Family::LpProxy => self.psi_of_norm(h.lp_norm(self.r)),
        })
    }

    // psi_r depends on h only through ||h||_r.
    fn psi_of_norm(&self, m: f64) -> f64 {
        if self.r <= 2.0 {
            self.scale * m * m / (2.0 * (self.r - 1.0))
        } else {
            self.scale * 2f64.powf(self.r) / self.r * m.powf(self.r)
        }
    }

    pub fn grad_psi(&self, h: &Point) -> Result<Point> {
        self.dim(h)?;
        Ok(match self.family {
            Family::Euclidean => h.clone(),
            Family::Entropic => {
                self.check_entropic(h)?;
                h.map(|c| c.max(TOL.entropic_floor).ln() + 1.0)
            }
            Family::LpProxy => {
                let r = self.r;
                let a = if r <= 2.0 {
                    let nu = h.lp_norm(r);
                    if nu == 0.0 {
                        return Ok(Point::zeros(self.d));
                    }
                    self.lp_coef() * nu.powf(2.0 - r)
                } else {
                    self.lp_coef()
                };
                h.map(|c| a * c.signum() * c.abs().powf(r - 1.0))
            }
        })
    }

    pub fn grad_psi_star(&self, theta: &Point) -> Result<Point> {
        self.dim(theta)?;
        Ok(match self.family {
            Family::Euclidean => theta.clone(),
            Family::Entropic => softmax(theta),
            Family::LpProxy => {
                let r = self.r;
                let a = if r <= 2.0 {
                    let nu = theta.lp_norm(conjugate(r)) / self.lp_coef();
                    if nu == 0.0 {
                        return Ok(Point::zeros(self.d));
                    }
                    self.lp_coef() * nu.powf(2.0 - r)
                } else {
                    self.lp_coef()
                };
                theta.map(|t| t.signum() * (t.abs() / a).powf(1.0 / (r - 1.0)))
            }
        })
    }

    pub fn bregman(&self, h: &Point, h0: &Point) -> Result<BregmanEval> {
        self.dim(h)?;
        self.dim(h0)?;
        let value = match self.family {
            Family::Euclidean => 0.5 * h.sub(h0).dot(&h.sub(h0)),
            Family::Entropic => {
                self.check_entropic(h)?;
                self.check_entropic(h0)?;
                h.iter()
                    .zip(h0.iter())
                    .map(|(&a, &b)| a * (a / b).ln() - a + b)
                    .sum()
            }
            Family::LpProxy => {
                let g0 = self.grad_psi(h0)?;
                self.psi(h)? - self.psi(h0)? - g0.dot(&h.sub(h0))
            }
        };
        Ok(BregmanEval { value })
    }

    /// Minimizer of the proxy over the feasible set; the first iterate of mirror descent.
    pub fn initial_point(&self) -> Point {
        match self.family {
            Family::Entropic => Point::constant(self.d, 1.0 / self.d as f64),
            _ => Point::zeros(self.d),
        }
    }

    pub fn contains(&self, h: &Point, tol: f64) -> bool {
        match self.constraint {
            Constraint::None => true,
            Constraint::Simplex => {
                h.iter().all(|&c| c >= -tol) && (h.iter().sum::<f64>() - 1.0).abs() <= tol
            }
            c => {
                let (p, rad) = c.as_lp_ball().expect("ball");
                h.lp_norm(p) <= rad * (1.0 + tol) + tol
            }
        }
    }

    /// Bregman projection onto the constraint set.
    pub fn project(&self, h: &Point) -> Result<Point> {
        self.dim(h)?;
        match (self.family, self.constraint) {
            (_, Constraint::None) => Ok(h.clone()),
            (Family::Entropic, Constraint::Simplex) => project_simplex_entropic(h),
            (Family::Euclidean, c) if c.as_lp_ball().is_some() => {
                let (p, radius) = c.as_lp_ball().expect("ball");
                if p == 2.0 {
                    Ok(radial(h, h.l2_norm(), radius))
                } else {
                    Ok(project_l1_ball(h, radius))
                }
            }
            (Family::LpProxy, c) => {
                let (p, radius) = c.as_lp_ball().expect("validated at construction");
                if h.lp_norm(p) <= radius {
                    return Ok(h.clone());
                }
                if p == self.r {
                    // psi depends only on ||.||_r, so the projection is radial.
                    return Ok(radial(h, h.lp_norm(p), radius));
                }
                let theta = self.grad_psi(h)?;
                Ok(self.project_lp_kkt(&theta, p, radius))
            }
            (f, c) => Err(Error::arg(format!(
                "no projection for {f:?} geometry onto {c:?}"
            ))),
        }
    }

    /// `argmin { psi(y) - <theta, y> : ||y||_p <= radius }` by bisection on the multiplier.
    fn project_lp_kkt(&self, theta: &Point, p: f64, radius: f64) -> Point {
        let r = self.r;
        // Coordinatewise solve of a|y|^{r-1} + mu * d/dy(penalty) = |theta_i|.
        let solve = |a: f64, mu: f64| -> Vec<f64> {
            theta
                .iter()
                .map(|&t| t.signum() * coord_solve(t.abs(), a, r, mu, p, radius))
                .collect()
        };
        // For r <= 2 the coefficient depends on nu = ||y||_r; find the fixed point.
        let solve_fixed = |mu: f64| -> Vec<f64> {
            if r >= 2.0 {
                return solve(self.lp_coef(), mu);
            }
            let k = self.lp_coef();
            let resid = |nu: f64| lp_norm(&solve(k * nu.powf(2.0 - r), mu), r) - nu;
            let mut hi = radius.max(1.0);
            let mut guard = 0;
            while resid(hi) > 0.0 && guard < 200 {
                hi *= 2.0;
                guard += 1;
            }
            let nu = bisect_decreasing(resid, 0.0, hi);
            solve(k * nu.powf(2.0 - r), mu)
        };
        if p.is_infinite() {
            return Point::from(solve_fixed(0.0));
        }
        let excess = |mu: f64| lp_norm(&solve_fixed(mu), p) - radius;
        let mut hi = 1.0;
        let mut guard = 0;
        while excess(hi) > 0.0 && guard < 200 {
            hi *= 2.0;
            guard += 1;
        }
        let mu = bisect_decreasing(excess, 0.0, hi);
        let y = solve_fixed(mu);
        // Final radial touch-up removes the residual bisection error.
        let n = lp_norm(&y, p);
        Point::from(y).scaled(if n > radius { radius / n } else { 1.0 })
    }

    /// `sup { psi(h) : h feasible }`.
    pub fn sup_psi(&self) -> Result<f64> {
        match (self.family, self.constraint) {
            (_, Constraint::None) => Err(Error::Unbounded(
                "proxy is unbounded without a constraint".into(),
            )),
            (Family::Entropic, _) => Ok((self.d as f64).ln()),
            (Family::Euclidean, c) => {
                let (_, rad) = c.as_lp_ball().expect("ball");
                Ok(rad * rad / 2.0)
            }
            (Family::LpProxy, c) => {
                let (p, rad) = c.as_lp_ball().expect("ball");
                let worst = if p <= self.r {
                    rad
                } else {
                    rad * (self.d as f64).powf(1.0 / self.r - 1.0 / p)
                };
                Ok(self.psi_of_norm(worst))
            }
        }
    }
}

/// Bregman divergence value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BregmanEval {
    pub value: f64,
}

/// Hoelder conjugate exponent.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn radial(h: &Point, n: f64, radius: f64) -> Point {
    if n <= radius {
        h.clone()
    } else {
        h.scaled(radius / n)
    }
}

fn softmax(theta: &Point) -> Point {
    let m = theta.iter().fold(f64::NEG_INFINITY, |m, &t| m.max(t));
    let e: Vec<f64> = theta.iter().map(|&t| (t - m).exp()).collect();
    let z: f64 = e.iter().sum();
    Point::from(
        e.into_iter()
            .map(|v| (v / z).max(TOL.entropic_floor))
            .collect::<Vec<_>>(),
    )
}

fn project_simplex_entropic(h: &Point) -> Result<Point> {
    if h.iter().any(|&c| c < 0.0) {
        return Err(Error::Domain("entropic projection of a negative vector".into()));
    }
    let z: f64 = h.iter().sum();
    if !(z > 0.0) {
        return Err(Error::Domain("entropic projection of a zero-mass vector".into()));
    }
    Ok(h.map(|c| (c / z).max(TOL.entropic_floor)))
}

/// Euclidean projection onto the `l_1` ball of the given radius (sort and threshold).
pub fn project_l1_ball(h: &Point, radius: f64) -> Point {
    if h.lp_norm(1.0) <= radius {
        return h.clone();
    }
    let mut u: Vec<f64> = h.iter().map(|c| c.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - radius) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    h.map(|c| c.signum() * (c.abs() - theta).max(0.0))
}

fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..TOL.max_bisection_iters {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= TOL.projection * hi.max(1.0) * 1e-3 {
            break;
        }
    }
    hi
}

// Magnitude y >= 0 solving the per-coordinate stationarity condition.
fn coord_solve(t: f64, a: f64, r: f64, mu: f64, p: f64, radius: f64) -> f64 {
    let inv = |v: f64| (v / a).powf(1.0 / (r - 1.0));
    if p.is_infinite() {
        return inv(t).min(radius);
    }
    if p == 1.0 {
        return inv((t - mu).max(0.0));
    }
    if mu == 0.0 || t == 0.0 {
        return inv(t);
    }
    let f = |y: f64| a * y.powf(r - 1.0) + mu * p * y.powf(p - 1.0) - t;
    // f is increasing in y; the root lies below the unpenalized solution.
    bisect_decreasing(|y| -f(y), 0.0, inv(t))
}
