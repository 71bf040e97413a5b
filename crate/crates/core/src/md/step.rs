use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the learning rate of mirror descent is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    LipschitzRate {
        sup_psi: f64,
        n: usize,
        #[serde(default = "unit")]
        b: f64,
        p: f64,
    },
    SmoothRate {
        sup_psi: f64,
        n: usize,
        h: f64,
        l_star: f64,
        p: f64,
    },
    /// `eta = None` is the infinite step (no proxy term).
    UniformlyConvex {
        eta: Option<f64>,
        sigma: f64,
        q_prime: f64,
        r_sup: f64,
    },
    Fixed {
        eta: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl StepPolicy {
    pub fn eta(&self) -> Result<f64> {
        match *self {
            StepPolicy::LipschitzRate { sup_psi, n, b, p } => step_size_lipschitz(sup_psi, n, b, p),
            StepPolicy::SmoothRate {
                sup_psi,
                n,
                h,
                l_star,
                p,
            } => step_size_smooth(sup_psi, n, h, l_star, p),
            StepPolicy::UniformlyConvex { eta, .. } => Ok(eta.unwrap_or(f64::INFINITY)),
            StepPolicy::Fixed { eta } => {
                if eta > 0.0 {
                    Ok(eta)
                } else {
                    Err(Error::arg("fixed step must be > 0"))
                }
            }
        }
    }

    /// Round count the policy was tuned for, if any.
    pub fn horizon(&self) -> Option<usize> {
        match *self {
            StepPolicy::LipschitzRate { n, .. } | StepPolicy::SmoothRate { n, .. } => Some(n),
            _ => None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            StepPolicy::LipschitzRate { .. } => "lipschitz_rate",
            StepPolicy::SmoothRate { .. } => "smooth_rate",
            StepPolicy::UniformlyConvex { .. } => "uniformly_convex",
            StepPolicy::Fixed { .. } => "fixed",
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p <= 2.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("p must lie in (1, 2], got {p}")))
    }
}

fn q_of(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `(sup_psi / (n b))^{1/p}`
pub fn step_size_lipschitz(sup_psi: f64, n: usize, b: f64, p: f64) -> Result<f64> {
    if !(sup_psi > 0.0) || n == 0 || !(b > 0.0) {
        return Err(Error::arg("sup_psi, n and b must be positive"));
    }
    check_p(p)?;
    Ok((sup_psi / (n as f64 * b)).powf(1.0 / p))
}

/// Threshold on the comparator loss separating the two smooth-rate branches.
pub fn smooth_threshold(sup_psi: f64, n: usize, h: f64, p: f64) -> f64 {
    16.0 * h / p.powf(2.0 / p) * (sup_psi / n as f64).powf(2.0 / q_of(p))
}

pub fn step_size_smooth(sup_psi: f64, n: usize, h: f64, l_star: f64, p: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::arg(format!("smoothness H must be > 0, got {h}")));
    }
    if !(sup_psi > 0.0) || n == 0 || !(l_star >= 0.0) {
        return Err(Error::arg("sup_psi and n must be positive, L* non-negative"));
    }
    check_p(p)?;
    let ratio = sup_psi / n as f64;
    if l_star >= smooth_threshold(sup_psi, n, h, p) {
        Ok((p * ratio).powf(1.0 / p) / (4.0 * h * l_star).sqrt())
    } else {
        Ok((p / 2.0).powf(p / 2.0) / (4.0 * h) * ratio.powf((2.0 - p) / p))
    }
}

/// Which branch of the uniformly convex step rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UcvxBranch {
    Finite,
    Infinite,
}

/// Step for the uniformly convex regime, with the branch that fired.
///
/// The threshold is evaluated literally; for `q' = 2` its base is zero and
/// the exponent negative, so the infinite branch always fires.
pub fn step_size_ucvx(
    sup_psi: f64,
    n: usize,
    sigma: f64,
    q_prime: f64,
    p: f64,
) -> Result<(Option<f64>, UcvxBranch)> {
    if q_prime < 2.0 {
        return Err(Error::arg(format!("q' must be >= 2, got {q_prime}")));
    }
    if !(sigma > 0.0) || n == 0 {
        return Err(Error::arg("sigma and n must be positive"));
    }
    check_p(p)?;
    let pp = q_prime / (q_prime - 1.0);
    let threshold = if q_prime == 2.0 {
        f64::INFINITY
    } else {
        let base = (2.0 - pp) * sigma.powf(pp - 1.0) * sup_psi.powf(1.0 / q_of(p));
        base.powf(1.0 / (2.0 - pp - 1.0 / p))
    };
    if (n as f64) >= threshold {
        Ok((Some((sup_psi / n as f64).powf(1.0 / p)), UcvxBranch::Finite))
    } else {
        Ok((None, UcvxBranch::Infinite))
    }
}

/// `2 (sup_psi / n)^{1/q}`
pub fn lipschitz_regret_bound(sup_psi: f64, n: usize, q: f64) -> f64 {
    2.0 * (sup_psi / n as f64).powf(1.0 / q)
}

/// `sqrt(64 H L*) (sup_psi/n)^{1/q} + 40 H (sup_psi/n)^{2/q}`
pub fn smooth_regret_bound(sup_psi: f64, n: usize, h: f64, l_star: f64, q: f64) -> f64 {
    let ratio = sup_psi / n as f64;
    (64.0 * h * l_star).sqrt() * ratio.powf(1.0 / q) + 40.0 * h * ratio.powf(2.0 / q)
}

/// Regret bound of the uniformly convex regime.
pub fn ucvx_regret_bound(sup_psi: f64, n: usize, sigma: f64, q_prime: f64, q: f64, r_sup: f64) -> f64 {
    let nf = n as f64;
    if q_prime == 2.0 {
        return 2.0 * nf.ln() / (sigma * nf) + r_sup / nf;
    }
    let pp = q_prime / (q_prime - 1.0);
    let a = 2.0 * sup_psi.powf(1.0 / q) / nf.powf(1.0 / q);
    let b = 2.0 / ((2.0 - pp) * sigma.powf(pp - 1.0) * nf.powf(pp - 1.0));
    a.min(b) + r_sup / nf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_examples() {
        assert_eq!(step_size_lipschitz(0.5, 2, 1.0, 2.0).unwrap(), 0.5);
        let e = step_size_lipschitz(8f64.ln(), 8, 1.0, 2.0).unwrap();
        assert!((e - 0.5099).abs() < 1e-4);
        let a = step_size_lipschitz(0.7, 10, 1.0, 2.0).unwrap();
        let b = step_size_lipschitz(0.7, 40, 1.0, 2.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
        assert!(step_size_lipschitz(0.0, 1, 1.0, 2.0).is_err());
        assert!(step_size_lipschitz(1.0, 1, 1.0, 2.5).is_err());
    }

    #[test]
    fn smooth_examples() {
        let e = step_size_smooth(0.5, 100, 1.0, 0.5, 2.0).unwrap();
        assert!((e - 0.1 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(step_size_smooth(0.5, 100, 1.0, 0.01, 2.0).unwrap(), 0.25);
        let t = smooth_threshold(0.5, 100, 1.0, 2.0);
        assert!((t - 0.04).abs() < 1e-15);
        let at = step_size_smooth(0.5, 100, 1.0, t, 2.0).unwrap();
        assert!((at - 0.1 / (4.0 * t).sqrt()).abs() < 1e-15);
        assert!(step_size_smooth(0.5, 100, 0.0, 0.1, 2.0).is_err());
    }

    #[test]
    fn ucvx_q2_always_infinite() {
        for n in [1, 64, 1 << 20] {
            let (eta, b) = step_size_ucvx(0.5, n, 1.0, 2.0, 2.0).unwrap();
            assert_eq!((eta, b), (None, UcvxBranch::Infinite));
        }
        assert!(step_size_ucvx(0.5, 4, 1.0, 1.5, 2.0).is_err());
    }

    #[test]
    fn ucvx_finite_branch_for_large_n() {
        // q' = 4: p' = 4/3, exponent 1/(2 - 4/3 - 1/2) = 6 > 0.
        let (eta, b) = step_size_ucvx(0.5, 1000, 1.0, 4.0, 2.0).unwrap();
        assert_eq!(b, UcvxBranch::Finite);
        assert!((eta.unwrap() - (0.5f64 / 1000.0).sqrt()).abs() < 1e-15);
    }
}
