use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Constraint, Family, GeometrySpec};
use crate::losses::{linear_comparator, LossInstance};
use crate::md::online::{linear_quadratic, md_step, MdState};
use crate::point::Point;
use crate::tolerance::TOL;

/// Approximate empirical minimizer with a certified suboptimality estimate.
#[derive(Debug, Clone, Serialize)]
pub struct ErmResult {
    pub point: Point,
    pub objective: f64,
    /// Upper bound on `objective - min`, from a linear minimization over the feasible set.
    pub gap: f64,
}

fn objective(sample: &[LossInstance], lambda: f64, h: &Point) -> Result<(f64, Point)> {
    let n = sample.len() as f64;
    let mut value = 0.5 * lambda * h.dot(h);
    let mut grad = h.scaled(lambda);
    for z in sample {
        let e = z.eval(h)?;
        value += e.value / n;
        grad.axpy(1.0 / n, &e.subgrad);
    }
    Ok((value, grad))
}

// argmin_{||y|| <= R} sum a_i (y_i - z_i)^2, bisecting the multiplier on a log scale.
fn project_l2_metric(z: &Point, a: &[f64], radius: f64) -> Point {
    if z.l2_norm() <= radius {
        return z.clone();
    }
    let y_of = |mu: f64| -> Point {
        Point::from(
            (0..z.dim())
                .map(|i| if a[i] > 0.0 { a[i] * z[i] / (a[i] + mu) } else { 0.0 })
                .collect::<Vec<_>>(),
        )
    };
    let amax = a.iter().fold(0.0f64, |m, &v| m.max(v));
    let amin = a.iter().filter(|&&v| v > 0.0).fold(f64::INFINITY, |m, &v| m.min(v));
    let mut lo = (amin * 1e-30).max(f64::MIN_POSITIVE).ln();
    let mut hi = (amax * z.l2_norm() / radius).max(f64::MIN_POSITIVE).ln() + 1.0;
    for _ in 0..TOL.max_bisection_iters {
        if hi - lo < 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if y_of(mid.exp()).l2_norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = y_of(hi.exp());
    let n = y.l2_norm();
    if n > radius {
        y.scaled(radius / n)
    } else {
        y
    }
}

fn fw_gap(g: &GeometrySpec, h: &Point, grad: &Point, lambda: f64) -> Result<f64> {
    if g.constraint() == Constraint::None {
        let gn = grad.l2_norm();
        if gn <= TOL.eq {
            return Ok(0.0);
        }
        return Ok(if lambda > 0.0 {
            gn * gn / (2.0 * lambda)
        } else {
            f64::INFINITY
        });
    }
    Ok((grad.dot(h) - linear_comparator(g, grad)?).max(0.0))
}

/// Diagonal-AdaGrad projected subgradient method returning the average of the
/// second half of the iterates.
///
/// Step scale is the radius of the feasible set; coordinates are preconditioned
/// by accumulated squared gradients, which keeps tiny-curvature coordinates moving.
/// Objective values cannot rank iterates here: on the biased hidden-coordinate
/// problem the gain from an unobserved coordinate sits below double precision.
pub fn regularized_solve(
    sample: &[LossInstance],
    g: &GeometrySpec,
    lambda: f64,
    budget: usize,
) -> Result<ErmResult> {
    if budget == 0 {
        return Err(Error::arg("budget must be >= 1"));
    }
    if sample.is_empty() {
        return Err(Error::arg("empty sample"));
    }
    for z in sample {
        Error::check_dim(g.d(), z.dim())?;
    }
    let c = match g.constraint() {
        Constraint::None => 1.0,
        Constraint::Simplex => 1.0,
        cons => cons.as_lp_ball().expect("ball").1,
    };
    let mut h = g.initial_point();
    let mut acc = vec![0.0; g.d()];
    let (_, mut grad) = objective(sample, lambda, &h)?;
    let tail_start = budget / 2;
    let mut tail = Point::zeros(g.d());
    for k in 0..budget {
        let mut z = h.clone();
        for i in 0..g.d() {
            acc[i] += grad[i] * grad[i];
            if acc[i] > 0.0 {
                z[i] -= c * grad[i] / acc[i].sqrt();
            }
        }
        let a: Vec<f64> = acc.iter().map(|v| v.sqrt()).collect();
        h = match g.constraint() {
            Constraint::L2Ball { radius } if g.family() == Family::Euclidean => {
                project_l2_metric(&z, &a, radius)
            }
            Constraint::None => z,
            _ => g.project(&z)?,
        };
        if k >= tail_start {
            tail = tail.add(&h);
        }
        grad = objective(sample, lambda, &h)?.1;
    }
    let point = tail.scaled(1.0 / (budget - tail_start) as f64);
    let (value, grad) = objective(sample, lambda, &point)?;
    let best = (value, point, grad);
    let gap = fw_gap(g, &best.1, &best.2, lambda)?;
    Ok(ErmResult {
        point: best.1,
        objective: best.0,
        gap,
    })
}

/// Approximate empirical risk minimizer.
pub fn erm_solve(sample: &[LossInstance], g: &GeometrySpec, budget: usize) -> Result<ErmResult> {
    regularized_solve(sample, g, 0.0, budget)
}

/// Approximate minimizer of the empirical risk plus `lambda/2 ||h||^2`.
pub fn rerm_solve(
    sample: &[LossInstance],
    g: &GeometrySpec,
    lambda: f64,
    budget: usize,
) -> Result<ErmResult> {
    if !(lambda > 0.0) {
        return Err(Error::arg("lambda must be > 0"));
    }
    if let Some(exact) = ridge_closed_form(sample, g, lambda)? {
        return Ok(exact);
    }
    regularized_solve(sample, g, lambda, budget)
}

// Linear losses plus a ridge on a Euclidean ball: the minimizer is the projection of -mean(x)/lambda.
fn ridge_closed_form(sample: &[LossInstance], g: &GeometrySpec, lambda: f64) -> Result<Option<ErmResult>> {
    let ball = g.family() == Family::Euclidean
        && matches!(g.constraint(), Constraint::None | Constraint::L2Ball { .. });
    if !ball || sample.is_empty() {
        return Ok(None);
    }
    let n = sample.len() as f64;
    let mut xs = Point::zeros(g.d());
    let mut lam = lambda;
    for z in sample {
        Error::check_dim(g.d(), z.dim())?;
        match linear_quadratic(z) {
            Some((x, l)) => {
                xs.axpy(1.0 / n, &x);
                lam += l / n;
            }
            None => return Ok(None),
        }
    }
    let point = g.project(&xs.scaled(-1.0 / lam))?;
    let (objective, _) = objective(sample, lambda, &point)?;
    Ok(Some(ErmResult {
        point,
        objective,
        gap: 0.0,
    }))
}

/// Projected SGD on the unit Euclidean ball with step `1/sqrt(n)`, returning the average iterate.
pub fn sgd_counterexample(sample: &[LossInstance]) -> Result<Point> {
    let first = sample.first().ok_or_else(|| Error::arg("empty sample"))?;
    let g = GeometrySpec::euclidean(first.dim(), Constraint::L2Ball { radius: 1.0 })?;
    let eta = 1.0 / (sample.len() as f64).sqrt();
    let mut st = MdState::new(&g);
    for z in sample {
        let e = z.eval(&st.h)?;
        st = md_step(&st, &g, &e.subgrad, eta)?;
    }
    st.average()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(d: usize) -> GeometrySpec {
        GeometrySpec::euclidean(d, Constraint::L2Ball { radius: 1.0 }).unwrap()
    }

    #[test]
    fn single_linear_loss() {
        let x = Point::from([0.3, -0.4, 1.2]);
        let r = erm_solve(&[LossInstance::linear(x.clone())], &ball(3), 2000).unwrap();
        let want = x.scaled(-1.0 / x.l2_norm());
        assert!(r.point.max_abs_diff(&want) < 1e-3, "{:?}", r.point);
        assert!(r.gap >= r.objective + x.l2_norm() - 1e-12);
    }

    #[test]
    fn biased_hidden_coordinate_goes_to_the_boundary() {
        // Coordinate 5 is never observed.
        let d = 8;
        let masks: [[u8; 8]; 3] = [
            [1, 0, 1, 1, 0, 0, 1, 1],
            [0, 1, 1, 0, 1, 0, 0, 1],
            [1, 1, 0, 1, 1, 0, 1, 0],
        ];
        let sample: Vec<_> = masks
            .iter()
            .map(|m| LossInstance::hidden_coord_biased(Point::zeros(d), m.to_vec(), 0.01).unwrap())
            .collect();
        let r = erm_solve(&sample, &ball(d), 4000).unwrap();
        assert!((r.point.l2_norm() - 1.0).abs() <= 1e-2, "{}", r.point.l2_norm());
        assert!(r.point[5] > 0.99);
    }

    #[test]
    fn metric_projection_lands_on_sphere() {
        let z = Point::from([3.0, 0.5, -1.0]);
        let a = [1.0, 1e-60, 0.3];
        let y = project_l2_metric(&z, &a, 1.0);
        assert!((y.l2_norm() - 1.0).abs() < 1e-9);
        // equal weights reduce to the radial projection
        let y = project_l2_metric(&z, &[2.0, 2.0, 2.0], 1.0);
        assert!(y.max_abs_diff(&z.scaled(1.0 / z.l2_norm())) < 1e-9);
    }

    #[test]
    fn rerm_matches_closed_form() {
        let x = Point::from([0.2, -0.1]);
        let lambda = 2.0;
        let z = [LossInstance::linear(x.clone())];
        let exact = rerm_solve(&z, &ball(2), lambda, 1).unwrap();
        assert!(exact.point.max_abs_diff(&x.scaled(-1.0 / lambda)) < 1e-15);
        assert_eq!(exact.gap, 0.0);
        // The iterative path agrees with the closed form.
        let r = regularized_solve(&z, &ball(2), lambda, 3000).unwrap();
        assert!(r.point.max_abs_diff(&x.scaled(-1.0 / lambda)) < 1e-4);
        assert!(r.gap < 1e-6);
        // Outside the ball the minimizer is the radial projection.
        let far = rerm_solve(&z, &ball(2), 0.01, 1).unwrap();
        assert!(far.point.max_abs_diff(&x.scaled(-1.0 / x.l2_norm())) < 1e-15);
    }

    #[test]
    fn sgd_single_zero_instance() {
        let z = LossInstance::hidden_coord(Point::zeros(3), vec![0, 0, 0]).unwrap();
        assert_eq!(sgd_counterexample(&[z]).unwrap(), Point::zeros(3));
    }
}
