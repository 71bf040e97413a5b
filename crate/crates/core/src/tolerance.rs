/// Numerical tolerances shared by the whole crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Generic equality / inequality slack.
    pub eq: f64,
    /// Relative error allowed by finite-difference gradient checks.
    pub grad_check: f64,
    /// Residual targeted by the bisection-based projections.
    pub projection: f64,
    /// Iteration cap for each bisection.
    pub max_bisection_iters: usize,
    /// Bregman divergences above `-bregman_floor` are accepted as non-negative.
    pub bregman_floor: f64,
    /// Smallest weight an entropic iterate may carry.
    pub entropic_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq: 1e-9,
            grad_check: 1e-5,
            projection: 1e-10,
            max_bisection_iters: 200,
            bregman_floor: 1e-12,
            entropic_floor: 1e-300,
        }
    }
}

pub const TOL: Tolerances = Tolerances {
    eq: 1e-9,
    grad_check: 1e-5,
    projection: 1e-10,
    max_bisection_iters: 200,
    bregman_floor: 1e-12,
    entropic_floor: 1e-300,
};
