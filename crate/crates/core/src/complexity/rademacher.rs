use super::class::{cap, Caps, FiniteClass};
use super::fat::check_rad_caps;
use crate::error::{Error, Result};

/// `E_eps sup_f (1/n) sum_i eps_i f(z_i)`, exact over all `2^n` sign vectors.
pub fn stat_rademacher(class: &FiniteClass, sample: &[usize], caps: &Caps) -> Result<f64> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::arg("sample must be non-empty"));
    }
    check_rad_caps(n, caps)?;
    if let Some(&x) = sample.iter().find(|&&x| x >= class.n_instances()) {
        return Err(Error::arg(format!("instance index {x} out of range")));
    }
    // Gray-code walk: one sign flips per step, so each sum updates in O(|F|).
    let mut sums: Vec<f64> = class
        .rows()
        .iter()
        .map(|r| -sample.iter().map(|&x| r[x]).sum::<f64>())
        .collect();
    let mut signs = vec![-1.0f64; n];
    let max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = max(&sums);
    for k in 1u64..1 << n {
        let i = k.trailing_zeros() as usize;
        signs[i] = -signs[i];
        for (s, r) in sums.iter_mut().zip(class.rows()) {
            *s += 2.0 * signs[i] * r[sample[i]];
        }
        total += max(&sums);
    }
    Ok(total / (n as f64 * (1u64 << n) as f64))
}

/// Sequential Rademacher complexity over all depth-`n` trees with nodes in the
/// class's instance set. Each node's instance is chosen after the path so far, so
/// the supremum splits node by node.
pub fn seq_rademacher(class: &FiniteClass, n: usize, caps: &Caps) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("depth must be positive"));
    }
    cap("seq_rademacher_n", caps.max_seq_rademacher_n, n)?;
    cap(
        "seq_rademacher_instances",
        caps.max_seq_rademacher_instances,
        class.n_instances(),
    )?;
    cap("functions", caps.max_functions, class.n_functions())?;
    let sums = vec![0.0; class.n_functions()];
    Ok(seq_value(class, &sums, n) / n as f64)
}

fn seq_value(class: &FiniteClass, sums: &[f64], remaining: usize) -> f64 {
    if remaining == 0 {
        return sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    (0..class.n_instances())
        .map(|x| {
            let branch = |sign: f64| {
                let next: Vec<f64> = sums
                    .iter()
                    .zip(class.rows())
                    .map(|(s, r)| s + sign * r[x])
                    .collect();
                seq_value(class, &next, remaining - 1)
            };
            0.5 * (branch(1.0) + branch(-1.0))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
