use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complexity::{seq_fat, verify_certificate, BinaryTree, Caps, FiniteClass, Tree, WitnessTree};
use crate::error::{Error, Result};
use crate::losses::{LossInstance, DEFAULT_EPS_BIAS};
use crate::point::Point;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sign(rng: &mut ChaCha8Rng) -> i8 {
    if rng.random_bool(0.5) {
        1
    } else {
        -1
    }
}

/// `n` i.i.d. hidden-coordinate losses at `x = 0` with uniform masks on `{0,1}^d`.
pub fn hidden_coordinate_stream(d: usize, n: usize, bias: bool, seed: u64) -> Result<Vec<LossInstance>> {
    if d < 1 || n < 1 {
        return Err(Error::arg("d and n must be at least 1"));
    }
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let alpha: Vec<u8> = (0..d).map(|_| r.random_range(0..=1u8)).collect();
            if bias {
                LossInstance::hidden_coord_biased(Point::zeros(d), alpha, DEFAULT_EPS_BIAS)
            } else {
                LossInstance::hidden_coord(Point::zeros(d), alpha)
            }
        })
        .collect()
}

/// Coordinates whose mask bit is zero in every instance of the sample.
pub fn unobserved_coordinates(sample: &[LossInstance]) -> Vec<usize> {
    let Some(first) = sample.first() else {
        return vec![];
    };
    (0..first.dim())
        .filter(|&j| {
            sample.iter().all(|z| match z {
                LossInstance::HiddenCoord { alpha, .. } | LossInstance::HiddenCoordBiased { alpha, .. } => {
                    alpha[j] == 0
                }
                _ => false,
            })
        })
        .collect()
}

/// Probability that at least one of `d` coordinates stays unobserved after `n` draws.
pub fn unobserved_probability(d: usize, n: usize) -> f64 {
    1.0 - (1.0 - 0.5f64.powi(n as i32)).powi(d as i32)
}

/// Shattered tree and witness driving the block-sign adversary over `n = k d` rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAdversaryPlan {
    pub tree: BinaryTree,
    pub witness: WitnessTree,
    pub alpha: f64,
    pub k: usize,
    pub n: usize,
}

impl BlockAdversaryPlan {
    pub fn new(
        class: &FiniteClass,
        tree: BinaryTree,
        witness: WitnessTree,
        alpha: f64,
        n: usize,
    ) -> Result<Self> {
        let d = tree.depth();
        if d == 0 {
            return Err(Error::arg("plan needs a shattered tree of depth at least 1"));
        }
        if n == 0 || n % d != 0 {
            return Err(Error::arg(format!("n = {n} must be a positive multiple of d = {d}")));
        }
        if tree.nodes().iter().any(|&x| x >= class.n_instances()) {
            return Err(Error::arg("tree node outside the instance set"));
        }
        let cert = crate::complexity::FatCertificate {
            tree: tree.clone(),
            witness: witness.clone(),
        };
        if !verify_certificate(class, class.full_mask(), alpha, &cert) {
            return Err(Error::Domain(format!("tree is not {alpha}-shattered with this witness")));
        }
        Ok(Self {
            tree,
            witness,
            alpha,
            k: n / d,
            n,
        })
    }

    /// Plan built from the exact sequential fat certificate of `class`.
    pub fn from_class(class: &FiniteClass, alpha: f64, n: usize, caps: &Caps) -> Result<Self> {
        let fat = seq_fat(class, alpha, caps)?;
        Self::new(class, fat.certificate.tree, fat.certificate.witness, alpha, n)
    }

    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    /// `alpha sqrt(d / (8 n))`: expected average absolute-loss regret forced on any learner.
    pub fn lower_bound(&self) -> f64 {
        self.alpha * (self.depth() as f64 / (8.0 * self.n as f64)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStream {
    pub pairs: Vec<(usize, f64)>,
    /// Modal sign of each block, with `sign(0) = +1`.
    pub block_signs: Vec<i8>,
}

pub fn block_sign_stream(plan: &BlockAdversaryPlan, seed: u64) -> BlockStream {
    let mut r = rng(seed);
    let d = plan.depth();
    let labels: Vec<i8> = (0..plan.n).map(|_| sign(&mut r)).collect();
    let block_signs: Vec<i8> = labels
        .chunks(plan.k)
        .map(|b| if b.iter().map(|&e| e as i32).sum::<i32>() >= 0 { 1 } else { -1 })
        .collect();
    let pairs = (0..plan.n)
        .map(|t| {
            let j = t / plan.k;
            let x = *plan.tree.node(&block_signs[..j]);
            (x, f64::from(labels[t]))
        })
        .collect();
    debug_assert_eq!(block_signs.len(), d);
    BlockStream { pairs, block_signs }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTreeStream {
    pub losses: Vec<LossInstance>,
    pub signs: Vec<i8>,
}

/// `x_t = eps_t u_t(eps_1..eps_{t-1})` along a uniformly random path of `u`.
pub fn linear_tree_stream(u: &Tree<Point>, seed: u64) -> Result<LinearTreeStream> {
    let n = u.depth();
    let mut r = rng(seed);
    let signs: Vec<i8> = (0..n).map(|_| sign(&mut r)).collect();
    let losses = (0..n)
        .map(|t| LossInstance::linear(u.node(&signs[..t]).scaled(f64::from(signs[t]))))
        .collect();
    Ok(LinearTreeStream { losses, signs })
}

/// Same as [`linear_tree_stream`] for a tree that is constant on each level,
/// given as one vector per level (no `2^n` storage).
pub fn linear_level_stream(levels: &[Point], seed: u64) -> Result<LinearTreeStream> {
    if levels.is_empty() {
        return Err(Error::arg("need at least one level"));
    }
    let mut r = rng(seed);
    let signs: Vec<i8> = levels.iter().map(|_| sign(&mut r)).collect();
    let losses = levels
        .iter()
        .zip(&signs)
        .map(|(u, &e)| LossInstance::linear(u.scaled(f64::from(e))))
        .collect();
    Ok(LinearTreeStream { losses, signs })
}

/// Level `t` holds the basis vector `e_t` of `R^n`.
pub fn orthonormal_levels(n: usize) -> Vec<Point> {
    (0..n).map(|t| Point::basis(n, t)).collect()
}
