use crate::error::{Error, Result};

/// Exponentially weighted average forecaster with `eta = 1/sqrt(n)`, kept in the log domain.
#[derive(Debug, Clone)]
pub struct Ewa {
    log_w: Vec<f64>,
    eta: f64,
}

impl Ewa {
    pub fn new(priors: &[f64], n: usize) -> Result<Self> {
        if priors.is_empty() {
            return Err(Error::arg("expert set must be non-empty"));
        }
        if n == 0 {
            return Err(Error::arg("horizon must be positive"));
        }
        if priors.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::arg("priors must be positive"));
        }
        if priors.iter().sum::<f64>() > 1.0 + 1e-9 {
            return Err(Error::arg("priors must sum to at most 1"));
        }
        let mut ewa = Self {
            log_w: priors.iter().map(|p| p.ln()).collect(),
            eta: 1.0 / (n as f64).sqrt(),
        };
        ewa.normalize();
        Ok(ewa)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.log_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_w.is_empty()
    }

    fn normalize(&mut self) {
        let m = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + self.log_w.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
        for l in &mut self.log_w {
            *l -= lse;
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_w.iter().map(|l| l.exp()).collect()
    }

    /// Expected loss `sum_i w_i f_i` under the current weights.
    pub fn expected(&self, losses: &[f64]) -> f64 {
        self.log_w.iter().zip(losses).map(|(l, f)| l.exp() * f).sum()
    }

    pub fn update(&mut self, losses: &[f64]) -> Result<()> {
        Error::check_dim(self.log_w.len(), losses.len())?;
        if let Some(f) = losses.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::arg(format!("expert loss {f} outside [0, 1]")));
        }
        for (l, f) in self.log_w.iter_mut().zip(losses) {
            *l -= self.eta * f;
        }
        self.normalize();
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EwaRun {
    pub expected_losses: Vec<f64>,
    /// Weights used in each round, before that round's update.
    pub weights: Vec<Vec<f64>>,
}

impl EwaRun {
    pub fn total(&self) -> f64 {
        self.expected_losses.iter().sum()
    }
}

/// Runs EWA over `losses[t][i]`, the loss of expert `i` in round `t`.
pub fn ewa_run(priors: &[f64], losses: &[Vec<f64>]) -> Result<EwaRun> {
    let mut ewa = Ewa::new(priors, losses.len())?;
    let mut out = EwaRun {
        expected_losses: Vec::with_capacity(losses.len()),
        weights: Vec::with_capacity(losses.len()),
    };
    for row in losses {
        Error::check_dim(priors.len(), row.len())?;
        out.expected_losses.push(ewa.expected(row));
        out.weights.push(ewa.weights());
        ewa.update(row)?;
    }
    Ok(out)
}

/// Additive slack over expert `i`'s cumulative loss: `sqrt(n)/8 + sqrt(n) ln(1/p_i)`.
pub fn ewa_bound(n: usize, prior: f64) -> f64 {
    let rn = (n as f64).sqrt();
    rn / 8.0 + rn * (1.0 / prior).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_expert_is_followed() {
        let r = ewa_run(&[1.0], &[vec![0.3], vec![0.9]]).unwrap();
        assert_eq!(r.expected_losses, vec![0.3, 0.9]);
    }

    #[test]
    fn two_round_hand_computation() {
        let r = ewa_run(&[0.5, 0.5], &[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let w = 1.0 / (1.0 + (-1.0 / 2f64.sqrt()).exp());
        assert!((r.weights[1][0] - w).abs() < 1e-15);
        assert!((r.weights[1][0] - 0.670).abs() < 1e-3);
        assert!((r.total() - (0.5 + 1.0 - w)).abs() < 1e-15);
        assert!((r.total() - 0.830).abs() < 1e-3);
        assert!(r.total() <= ewa_bound(2, 0.5));
    }

    #[test]
    fn identical_experts_keep_priors() {
        let losses = vec![vec![0.7, 0.7, 0.7]; 50];
        let r = ewa_run(&[0.2, 0.3, 0.5], &losses).unwrap();
        for w in &r.weights {
            assert!((w[0] - 0.2).abs() < 1e-12 && (w[2] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn long_runs_stay_normalized() {
        let losses: Vec<Vec<f64>> = (0..100_000).map(|t| vec![(t % 2) as f64, 1.0, 0.0]).collect();
        let mut ewa = Ewa::new(&[1e-300, 0.5, 0.25], losses.len()).unwrap();
        for row in &losses {
            ewa.update(row).unwrap();
        }
        let w = ewa.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_bad_losses() {
        assert!(ewa_run(&[1.0], &[vec![1.5]]).is_err());
        assert!(Ewa::new(&[0.7, 0.7], 3).is_err());
    }
}
