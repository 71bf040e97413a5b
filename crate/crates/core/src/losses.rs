//! Loss instances with value and subgradient evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{conjugate, Constraint, Family, GeometrySpec};
use crate::point::Point;

/// One signed affine piece `eps * (<h, -x> + s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub eps: i8,
    pub x: Point,
    pub s: f64,
}

impl Piece {
    pub fn value(&self, h: &Point) -> f64 {
        self.eps as f64 * (self.s - h.dot(&self.x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossInstance {
    Linear {
        x: Point,
    },
    AbsSupervised {
        x: Point,
        y: f64,
    },
    SmoothedAbs {
        x: Point,
        y: f64,
    },
    HiddenCoord {
        x: Point,
        alpha: Vec<u8>,
    },
    HiddenCoordBiased {
        x: Point,
        alpha: Vec<u8>,
        eps_bias: f64,
    },
    Regularized {
        inner: Box<LossInstance>,
        lambda: f64,
    },
    MaxOfSignedLinear {
        pieces: Vec<Piece>,
    },
}

/// Value and one subgradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub subgrad: Point,
}

pub const DEFAULT_EPS_BIAS: f64 = 0.01;

/// `u^2` near zero, `|u| - 1/4` beyond one half.
pub fn smoothed_abs(u: f64) -> f64 {
    if u.abs() <= 0.5 {
        u * u
    } else {
        u.abs() - 0.25
    }
}

fn smoothed_abs_deriv(u: f64) -> f64 {
    if u.abs() <= 0.5 {
        2.0 * u
    } else {
        u.signum()
    }
}

fn sign0(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_mask(alpha: &[u8], d: usize) -> Result<()> {
    Error::check_dim(d, alpha.len())?;
    if alpha.iter().any(|&a| a > 1) {
        return Err(Error::arg("hidden-coordinate mask entries must be 0 or 1"));
    }
    Ok(())
}

impl LossInstance {
    pub fn linear(x: Point) -> Self {
        LossInstance::Linear { x }
    }

    pub fn abs_supervised(x: Point, y: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&y) {
            return Err(Error::arg(format!("label must lie in [-1, 1], got {y}")));
        }
        Ok(LossInstance::AbsSupervised { x, y })
    }

    pub fn smoothed_abs(x: Point, y: f64) -> Self {
        LossInstance::SmoothedAbs { x, y }
    }

    pub fn hidden_coord(x: Point, alpha: Vec<u8>) -> Result<Self> {
        check_mask(&alpha, x.dim())?;
        Ok(LossInstance::HiddenCoord { x, alpha })
    }

    pub fn hidden_coord_biased(x: Point, alpha: Vec<u8>, eps_bias: f64) -> Result<Self> {
        check_mask(&alpha, x.dim())?;
        if !(eps_bias >= 0.0) {
            return Err(Error::arg("bias weight must be >= 0"));
        }
        Ok(LossInstance::HiddenCoordBiased { x, alpha, eps_bias })
    }

    pub fn regularized(inner: LossInstance, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::arg(format!("lambda must be > 0, got {lambda}")));
        }
        Ok(LossInstance::Regularized {
            inner: Box::new(inner),
            lambda,
        })
    }

    pub fn max_of_signed_linear(pieces: Vec<Piece>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::arg("need at least one piece"))?;
        let d = first.x.dim();
        for p in &pieces {
            Error::check_dim(d, p.x.dim())?;
            if p.eps != 1 && p.eps != -1 {
                return Err(Error::arg("piece signs must be +1 or -1"));
            }
        }
        Ok(LossInstance::MaxOfSignedLinear { pieces })
    }

    pub fn dim(&self) -> usize {
        match self {
            LossInstance::Linear { x }
            | LossInstance::AbsSupervised { x, .. }
            | LossInstance::SmoothedAbs { x, .. }
            | LossInstance::HiddenCoord { x, .. }
            | LossInstance::HiddenCoordBiased { x, .. } => x.dim(),
            LossInstance::Regularized { inner, .. } => inner.dim(),
            LossInstance::MaxOfSignedLinear { pieces } => pieces[0].x.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LossInstance::Linear { .. } => "linear",
            LossInstance::AbsSupervised { .. } => "abs_supervised",
            LossInstance::SmoothedAbs { .. } => "smoothed_abs",
            LossInstance::HiddenCoord { .. } => "hidden_coord",
            LossInstance::HiddenCoordBiased { .. } => "hidden_coord_biased",
            LossInstance::Regularized { .. } => "regularized",
            LossInstance::MaxOfSignedLinear { .. } => "max_of_signed_linear",
        }
    }

    pub fn eval(&self, h: &Point) -> Result<LossEval> {
        Error::check_dim(self.dim(), h.dim())?;
        Ok(self.eval_unchecked(h))
    }

    pub fn value(&self, h: &Point) -> Result<f64> {
        Ok(self.eval(h)?.value)
    }

    fn eval_unchecked(&self, h: &Point) -> LossEval {
        match self {
            LossInstance::Linear { x } => LossEval {
                value: h.dot(x),
                subgrad: x.clone(),
            },
            LossInstance::AbsSupervised { x, y } => {
                let u = h.dot(x) - y;
                LossEval {
                    value: u.abs(),
                    subgrad: x.scaled(sign0(u)),
                }
            }
            LossInstance::SmoothedAbs { x, y } => {
                let u = h.dot(x) - y;
                LossEval {
                    value: smoothed_abs(u),
                    subgrad: x.scaled(smoothed_abs_deriv(u)),
                }
            }
            LossInstance::HiddenCoord { x, alpha } => hidden(h, x, alpha),
            LossInstance::HiddenCoordBiased { x, alpha, eps_bias } => {
                let mut e = hidden(h, x, alpha);
                let mut w = 0.5;
                for i in 0..h.dim() {
                    let dev = h[i] - 1.0;
                    e.value += eps_bias * w * dev * dev;
                    e.subgrad[i] += 2.0 * eps_bias * w * dev;
                    w *= 0.5;
                }
                e
            }
            LossInstance::Regularized { inner, lambda } => {
                let mut e = inner.eval_unchecked(h);
                e.value += 0.5 * lambda * h.dot(h);
                e.subgrad.axpy(*lambda, h);
                e
            }
            LossInstance::MaxOfSignedLinear { pieces } => {
                let (i, value) = argmax_piece(pieces, h);
                LossEval {
                    value,
                    subgrad: pieces[i].x.scaled(-(pieces[i].eps as f64)),
                }
            }
        }
    }

    /// Closed-form bound on the dual norm of any subgradient over the feasible set.
    pub fn lipschitz_bound(&self, g: &GeometrySpec) -> Result<f64> {
        Error::check_dim(g.d(), self.dim())?;
        let dual = conjugate(g.r());
        Ok(match self {
            LossInstance::Linear { x }
            | LossInstance::AbsSupervised { x, .. }
            | LossInstance::SmoothedAbs { x, .. } => x.lp_norm(dual),
            LossInstance::HiddenCoord { alpha, .. } => hidden_lip(alpha, dual),
            LossInstance::HiddenCoordBiased { alpha, eps_bias, .. } => {
                let Some(rad) = sup_coord(g) else {
                    return Ok(f64::INFINITY);
                };
                let w: Vec<f64> = (1..=g.d())
                    .map(|i| 2.0 * 0.5f64.powi(i as i32) * (rad + 1.0))
                    .collect();
                hidden_lip(alpha, dual) + eps_bias * Point::from(w).lp_norm(dual)
            }
            LossInstance::Regularized { inner, lambda } => {
                inner.lipschitz_bound(g)? + lambda * sup_norm(g, dual)
            }
            LossInstance::MaxOfSignedLinear { pieces } => pieces
                .iter()
                .map(|p| p.x.lp_norm(dual))
                .fold(0.0, f64::max),
        })
    }

    /// Self-bounding smoothness constant `H` with `||grad||_*^2 <= 4 H loss`.
    pub fn smoothness_constant(&self, g: &GeometrySpec) -> Option<f64> {
        match self {
            LossInstance::SmoothedAbs { x, .. } => Some(x.lp_norm(conjugate(g.r())).powi(2)),
            _ => None,
        }
    }
}

fn hidden(h: &Point, x: &Point, alpha: &[u8]) -> LossEval {
    let v: Vec<f64> = (0..h.dim())
        .map(|i| alpha[i] as f64 * (h[i] - x[i]))
        .collect();
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let subgrad = if n > 0.0 {
        Point::from(v.iter().map(|c| c / n).collect::<Vec<_>>())
    } else {
        Point::zeros(h.dim())
    };
    LossEval { value: n, subgrad }
}

// Subgradients of the hidden-coordinate norm are l2-unit vectors on the mask.
fn hidden_lip(alpha: &[u8], dual: f64) -> f64 {
    let k = alpha.iter().filter(|&&a| a == 1).count();
    if k == 0 {
        0.0
    } else if dual >= 2.0 {
        1.0
    } else {
        (k as f64).powf(1.0 / dual - 0.5)
    }
}

/// Lowest-index argmax of the signed pieces.
pub(crate) fn argmax_piece(pieces: &[Piece], h: &Point) -> (usize, f64) {
    let mut best = (0, pieces[0].value(h));
    for (i, p) in pieces.iter().enumerate().skip(1) {
        let v = p.value(h);
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

// sup |h_i| over the feasible set.
fn sup_coord(g: &GeometrySpec) -> Option<f64> {
    match g.constraint() {
        Constraint::None => None,
        Constraint::Simplex => Some(1.0),
        c => c.as_lp_ball().map(|(_, rad)| rad),
    }
}

// sup ||h||_e over the feasible set.
fn sup_norm(g: &GeometrySpec, e: f64) -> f64 {
    match g.constraint() {
        Constraint::None => f64::INFINITY,
        Constraint::Simplex => 1.0,
        c => {
            let (p, rad) = c.as_lp_ball().expect("ball");
            if e >= p {
                rad
            } else {
                rad * (g.d() as f64).powf(1.0 / e - 1.0 / p)
            }
        }
    }
}

/// Loss of the best fixed point in hindsight for a sum of linear losses on a norm ball.
pub fn linear_comparator(g: &GeometrySpec, xsum: &Point) -> Result<f64> {
    Error::check_dim(g.d(), xsum.dim())?;
    match (g.family(), g.constraint()) {
        (Family::Entropic, _) => Ok(xsum.iter().fold(f64::INFINITY, |m, &c| m.min(c))),
        (_, c) => {
            let (p, rad) = c
                .as_lp_ball()
                .ok_or_else(|| Error::Unbounded("linear comparator needs a ball".into()))?;
            Ok(-rad * xsum.lp_norm(conjugate(p)))
        }
    }
}

/// A minimizer of `<s, h>` over the feasible set (lowest index on ties).
pub fn linear_minimizer(g: &GeometrySpec, s: &Point) -> Result<Point> {
    Error::check_dim(g.d(), s.dim())?;
    if g.family() == Family::Entropic {
        let mut j = 0;
        for i in 1..s.dim() {
            if s[i] < s[j] {
                j = i;
            }
        }
        return Ok(Point::basis(g.d(), j));
    }
    let (p, rad) = g
        .constraint()
        .as_lp_ball()
        .ok_or_else(|| Error::Unbounded("linear minimizer needs a ball".into()))?;
    let q = conjugate(p);
    if s.iter().all(|&c| c == 0.0) {
        return Ok(Point::zeros(g.d()));
    }
    if p == 1.0 {
        let mut j = 0;
        for i in 1..s.dim() {
            if s[i].abs() > s[j].abs() {
                j = i;
            }
        }
        return Ok(Point::basis(g.d(), j).scaled(-rad * s[j].signum()));
    }
    if p.is_infinite() {
        return Ok(s.map(|c| -rad * sign0(c)));
    }
    let nq = s.lp_norm(q);
    Ok(s.map(|c| -rad * c.signum() * (c.abs() / nq).powf(q - 1.0)))
}
