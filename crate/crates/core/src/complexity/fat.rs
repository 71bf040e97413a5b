use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::class::{cap, Caps, FiniteClass};
use crate::error::{Error, Result};

const SLACK: f64 = 1e-12;

/// Complete binary tree stored in level order. The child of node `i` along
/// `eps = -1` is `2i + 1`, along `eps = +1` it is `2i + 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    depth: usize,
    nodes: Vec<T>,
}

pub type BinaryTree = Tree<usize>;
pub type WitnessTree = Tree<f64>;

impl<T> Tree<T> {
    pub fn new(depth: usize, nodes: Vec<T>) -> Result<Self> {
        let want = (1usize << depth) - 1;
        if nodes.len() != want {
            return Err(Error::Dimension {
                expected: want,
                got: nodes.len(),
            });
        }
        Ok(Self { depth, nodes })
    }

    /// Tree with the same entry on every node of level `t`.
    pub fn per_level(levels: Vec<T>) -> Self
    where
        T: Clone,
    {
        let depth = levels.len();
        let mut nodes = Vec::with_capacity((1usize << depth) - 1);
        for (t, v) in levels.into_iter().enumerate() {
            nodes.extend(std::iter::repeat_n(v, 1usize << t));
        }
        Self { depth, nodes }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn index(path: &[i8]) -> usize {
        path.iter()
            .fold(0, |i, &e| 2 * i + if e < 0 { 1 } else { 2 })
    }

    /// Node reached after the signs in `path` (so `path.len()` is its level).
    pub fn node(&self, path: &[i8]) -> &T {
        &self.nodes[Self::index(path)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatCertificate {
    pub tree: BinaryTree,
    pub witness: WitnessTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqFat {
    pub value: usize,
    /// True when the search stopped at `max_depth`, so the true value may be larger.
    pub saturated: bool,
    pub certificate: FatCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatFat {
    pub value: usize,
    pub points: Vec<usize>,
    pub witness: Vec<f64>,
}

/// Memoized sequential fat-shattering over subclasses of one class at one scale.
pub struct SeqFatOracle<'a> {
    class: &'a FiniteClass,
    alpha: f64,
    max_depth: usize,
    levels: Vec<Vec<f64>>,
    memo: HashMap<u64, usize>,
}

impl<'a> SeqFatOracle<'a> {
    pub fn new(class: &'a FiniteClass, alpha: f64, caps: &Caps) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::arg("alpha must be positive"));
        }
        class.check_caps(caps)?;
        let levels = (0..class.n_instances())
            .map(|x| {
                let mut v: Vec<f64> = (0..class.n_functions()).map(|f| class.value(f, x)).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        Ok(Self {
            class,
            alpha,
            max_depth: caps.max_depth,
            levels,
            memo: HashMap::new(),
        })
    }

    pub fn class(&self) -> &FiniteClass {
        self.class
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Rows with `f(x) >= a` and rows with `f(x) <= a - alpha`.
    fn split(&self, mask: u64, x: usize, a: f64) -> (u64, u64) {
        let (mut up, mut down) = (0u64, 0u64);
        let mut m = mask;
        while m != 0 {
            let f = m.trailing_zeros() as usize;
            m &= m - 1;
            let v = self.class.value(f, x);
            if v >= a - SLACK {
                up |= 1 << f;
            } else if v <= a - self.alpha + SLACK {
                down |= 1 << f;
            }
        }
        (up, down)
    }

    /// Fat-shattering dimension of the masked subclass, capped at `max_depth`;
    /// `None` for the empty subclass.
    pub fn fat(&mut self, mask: u64) -> Option<usize> {
        if mask == 0 {
            return None;
        }
        Some(self.fat_nonempty(mask))
    }

    fn fat_nonempty(&mut self, mask: u64) -> usize {
        if let Some(&v) = self.memo.get(&mask) {
            return v;
        }
        let ceiling = (63 - mask.count_ones().leading_zeros()) as usize;
        let ceiling = ceiling.min(self.max_depth);
        let mut best = 0;
        'outer: for x in 0..self.class.n_instances() {
            for li in 0..self.levels[x].len() {
                if best >= ceiling {
                    break 'outer;
                }
                let a = self.levels[x][li];
                let (up, down) = self.split(mask, x, a);
                if up == 0 || down == 0 {
                    continue;
                }
                let small = up.count_ones().min(down.count_ones());
                if (63 - small.leading_zeros()) as usize + 1 <= best {
                    continue;
                }
                let v = 1 + self.fat_nonempty(up).min(self.fat_nonempty(down));
                best = best.max(v.min(self.max_depth));
            }
        }
        self.memo.insert(mask, best);
        best
    }

    fn best_split(&mut self, mask: u64, target: usize) -> Option<(usize, f64, u64, u64)> {
        for x in 0..self.class.n_instances() {
            for li in 0..self.levels[x].len() {
                let a = self.levels[x][li];
                let (up, down) = self.split(mask, x, a);
                if up == 0 || down == 0 {
                    continue;
                }
                if self.fat_nonempty(up) + 1 >= target && self.fat_nonempty(down) + 1 >= target {
                    return Some((x, a, up, down));
                }
            }
        }
        None
    }

    /// Shattered tree of depth `fat(mask)` with its witness.
    pub fn certificate(&mut self, mask: u64) -> Result<FatCertificate> {
        let depth = self
            .fat(mask)
            .ok_or_else(|| Error::arg("empty class has no certificate"))?;
        let size = (1usize << depth) - 1;
        let mut tree = vec![0usize; size];
        let mut witness = vec![0.0; size];
        let mut stack = vec![(0usize, mask, depth)];
        while let Some((node, m, remaining)) = stack.pop() {
            if remaining == 0 {
                continue;
            }
            let (x, a, up, down) = self
                .best_split(m, remaining)
                .expect("memoized fat value admits a split");
            tree[node] = x;
            witness[node] = a - self.alpha / 2.0;
            stack.push((2 * node + 1, down, remaining - 1));
            stack.push((2 * node + 2, up, remaining - 1));
        }
        Ok(FatCertificate {
            tree: Tree::new(depth, tree)?,
            witness: Tree::new(depth, witness)?,
        })
    }
}

/// Exact sequential fat-shattering dimension at scale `alpha`, with a certificate.
pub fn seq_fat(class: &FiniteClass, alpha: f64, caps: &Caps) -> Result<SeqFat> {
    let mut oracle = SeqFatOracle::new(class, alpha, caps)?;
    seq_fat_with(&mut oracle, class.full_mask())
}

pub fn seq_fat_with(oracle: &mut SeqFatOracle<'_>, mask: u64) -> Result<SeqFat> {
    let certificate = oracle.certificate(mask)?;
    let value = certificate.tree.depth();
    Ok(SeqFat {
        value,
        saturated: value >= oracle.max_depth,
        certificate,
    })
}

/// Sequential fat dimension of the subclass selected by `mask`.
pub fn seq_fat_of_subclass(class: &FiniteClass, mask: u64, alpha: f64, caps: &Caps) -> Result<usize> {
    let mut oracle = SeqFatOracle::new(class, alpha, caps)?;
    oracle
        .fat(mask & class.full_mask())
        .ok_or_else(|| Error::Protocol("version space is empty".into()))
}

/// Littlestone dimension of a `{-1, +1}`-valued class.
pub fn littlestone_dim(class: &FiniteClass, caps: &Caps) -> Result<usize> {
    if !class.is_binary() {
        return Err(Error::Domain("Littlestone dimension needs a binary class".into()));
    }
    class.check_caps(caps)?;
    let plus: Vec<u64> = (0..class.n_instances())
        .map(|x| {
            (0..class.n_functions())
                .filter(|&f| class.value(f, x) > 0.0)
                .fold(0, |m, f| m | 1 << f)
        })
        .collect();
    let mut memo = HashMap::new();
    Ok(ldim(class.full_mask(), &plus, &mut memo))
}

fn ldim(mask: u64, plus: &[u64], memo: &mut HashMap<u64, usize>) -> usize {
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let mut best = 0;
    for p in plus {
        let (a, b) = (mask & p, mask & !p);
        if a != 0 && b != 0 {
            best = best.max(1 + ldim(a, plus, memo).min(ldim(b, plus, memo)));
        }
    }
    memo.insert(mask, best);
    best
}

/// Exact statistical fat-shattering dimension: the largest set of distinct
/// instances shattered at margin `alpha/2` by a single witness vector.
pub fn stat_fat(class: &FiniteClass, alpha: f64, caps: &Caps) -> Result<StatFat> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::arg("alpha must be positive"));
    }
    class.check_caps(caps)?;
    let nx = class.n_instances();
    let mut levels: Vec<Vec<f64>> = (0..nx)
        .map(|x| {
            let mut v: Vec<f64> = class.rows().iter().map(|r| r[x]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    for l in &mut levels {
        l.reverse();
    }
    let mut best = StatFat {
        value: 0,
        points: vec![],
        witness: vec![],
    };
    for k in 1..=nx {
        if 1usize << k > class.n_functions() {
            break;
        }
        match shattered_subset(class, alpha, &levels, k) {
            Some((points, witness)) => {
                best = StatFat {
                    value: k,
                    points,
                    witness,
                }
            }
            None => break,
        }
    }
    Ok(best)
}

fn shattered_subset(
    class: &FiniteClass,
    alpha: f64,
    levels: &[Vec<f64>],
    k: usize,
) -> Option<(Vec<usize>, Vec<f64>)> {
    let nx = class.n_instances();
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let mut thresholds = Vec::with_capacity(k);
        let patterns = vec![0u64; class.n_functions()];
        let alive = class.full_mask();
        if search_thresholds(class, alpha, levels, &subset, &mut thresholds, patterns, alive) {
            let witness = thresholds.iter().map(|a| a - alpha / 2.0).collect();
            return Some((subset, witness));
        }
        // next k-combination of 0..nx
        let mut i = k;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if subset[i] < nx - k + i {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

fn search_thresholds(
    class: &FiniteClass,
    alpha: f64,
    levels: &[Vec<f64>],
    subset: &[usize],
    thresholds: &mut Vec<f64>,
    patterns: Vec<u64>,
    alive: u64,
) -> bool {
    let depth = thresholds.len();
    let mut seen = vec![false; 1usize << depth];
    let mut count = 0;
    let mut m = alive;
    while m != 0 {
        let f = m.trailing_zeros() as usize;
        m &= m - 1;
        let p = patterns[f] as usize;
        if !seen[p] {
            seen[p] = true;
            count += 1;
        }
    }
    if count < 1usize << depth {
        return false;
    }
    if depth == subset.len() {
        return true;
    }
    let x = subset[depth];
    for &a in &levels[x] {
        let mut next = patterns.clone();
        let mut next_alive = 0u64;
        let mut m = alive;
        while m != 0 {
            let f = m.trailing_zeros() as usize;
            m &= m - 1;
            let v = class.value(f, x);
            if v >= a - SLACK {
                next[f] |= 1 << depth;
                next_alive |= 1 << f;
            } else if v <= a - alpha + SLACK {
                next_alive |= 1 << f;
            }
        }
        thresholds.push(a);
        if search_thresholds(class, alpha, levels, subset, thresholds, next, next_alive) {
            return true;
        }
        thresholds.pop();
    }
    false
}

/// Checks that `cert` is an `alpha`-shattered tree for the masked class.
pub fn verify_certificate(class: &FiniteClass, mask: u64, alpha: f64, cert: &FatCertificate) -> bool {
    let d = cert.tree.depth();
    (0..1u64 << d).all(|bits| {
        let path: Vec<i8> = (0..d).map(|t| if bits >> t & 1 == 1 { 1 } else { -1 }).collect();
        (0..class.n_functions())
            .filter(|&f| mask >> f & 1 == 1)
            .any(|f| {
                (0..d).all(|t| {
                    let x = *cert.tree.node(&path[..t]);
                    let s = *cert.witness.node(&path[..t]);
                    f64::from(path[t]) * (class.value(f, x) - s) >= alpha / 2.0 - SLACK
                })
            })
    })
}

pub(crate) fn check_rad_caps(n: usize, caps: &Caps) -> Result<()> {
    cap("rademacher_n", caps.max_rademacher_n, n)
}
