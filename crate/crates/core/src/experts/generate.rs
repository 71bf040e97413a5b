use serde::{Deserialize, Serialize};

use super::ewa::Ewa;
use super::soa::FatSoa;
use crate::complexity::{cap, Caps, FiniteClass};
use crate::error::{Error, Result};
use crate::md::{RegretTrace, TraceMeta};
use crate::point::Point;

/// One expert: forced rounds `i_1 < ... < i_L` (0-based) and, for each, an index
/// into the grid with the current Fat-SOA level removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertSpec {
    pub rounds: Vec<usize>,
    pub choices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertSet {
    pub alpha: f64,
    pub n: usize,
    pub fat: usize,
    pub specs: Vec<ExpertSpec>,
    pub priors: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpertState {
    pub version: u64,
    pub next: usize,
    /// Set once a forced label empties the version space; later forcings are ignored.
    pub frozen: bool,
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `sum_{L <= fat} C(n, L) (levels - 1)^L`.
pub fn expert_count(fat: usize, n: usize, levels: usize) -> u128 {
    (0..=fat.min(n))
        .map(|l| binomial(n, l).saturating_mul(((levels - 1) as u128).saturating_pow(l as u32)))
        .fold(0u128, u128::saturating_add)
}

fn combinations(n: usize, l: usize, mut visit: impl FnMut(&[usize])) {
    let mut c: Vec<usize> = (0..l).collect();
    loop {
        visit(&c);
        let mut i = l;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] < n - l + i {
                break;
            }
        }
        c[i] += 1;
        for j in i + 1..l {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Enumerates every forced-label expert at scale `alpha` for horizon `n`, with uniform priors.
pub fn generate_experts(class: &FiniteClass, alpha: f64, n: usize, caps: &Caps) -> Result<ExpertSet> {
    let mut soa = FatSoa::new(class, alpha, caps)?;
    generate_with(&mut soa, n, caps)
}

pub fn generate_with(soa: &mut FatSoa<'_>, n: usize, caps: &Caps) -> Result<ExpertSet> {
    let fat = soa.fat(soa.class().full_mask()).unwrap_or(0);
    let levels = soa.grid().len();
    let count = expert_count(fat, n, levels);
    cap("experts", caps.max_experts, usize::try_from(count).unwrap_or(usize::MAX))?;
    let mut specs = Vec::with_capacity(count as usize);
    for l in 0..=fat.min(n) {
        combinations(n, l, |rounds| {
            let mut choices = vec![0usize; l];
            loop {
                specs.push(ExpertSpec {
                    rounds: rounds.to_vec(),
                    choices: choices.clone(),
                });
                let mut i = 0;
                while i < l {
                    choices[i] += 1;
                    if choices[i] < levels - 1 {
                        break;
                    }
                    choices[i] = 0;
                    i += 1;
                }
                if i == l {
                    break;
                }
            }
        });
    }
    let p = 1.0 / specs.len() as f64;
    Ok(ExpertSet {
        alpha: soa.alpha(),
        n,
        fat,
        priors: vec![p; specs.len()],
        specs,
    })
}

impl ExpertSet {
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn start(&self, class: &FiniteClass) -> Vec<ExpertState> {
        vec![
            ExpertState {
                version: class.full_mask(),
                next: 0,
                frozen: false,
            };
            self.len()
        ]
    }

    /// Prediction of expert `e` at instance `x` in round `t`, without advancing it.
    pub fn predict(&self, soa: &mut FatSoa<'_>, e: usize, state: &ExpertState, t: usize, x: usize) -> f64 {
        let spec = &self.specs[e];
        let base = soa.predict(state.version, x);
        if state.frozen || spec.rounds.get(state.next) != Some(&t) {
            return base;
        }
        let skip = soa.level_index(base);
        let mut k = spec.choices[state.next];
        if k >= skip {
            k += 1;
        }
        soa.grid()[k]
    }

    /// Plays round `t` at instance `x`: returns each expert's prediction and advances its state.
    pub fn step(
        &self,
        soa: &mut FatSoa<'_>,
        states: &mut [ExpertState],
        t: usize,
        x: usize,
    ) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for (e, st) in states.iter_mut().enumerate() {
            let p = self.predict(soa, e, st, t, x);
            out.push(p);
            if !st.frozen && self.specs[e].rounds.get(st.next) == Some(&t) {
                st.next += 1;
                let v = soa.restrict(st.version, soa.level_index(p), x);
                if v == 0 {
                    st.frozen = true;
                } else {
                    st.version = v;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub index: usize,
    pub alpha: f64,
    pub fat: usize,
    pub experts: usize,
    pub prior_mass: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgnosticRun {
    /// Losses are `|prediction - y| / 2`; the comparator is the best row of the class.
    pub trace: RegretTrace,
    pub scales: Vec<ScaleSummary>,
    /// Smallest per-scale bound.
    pub bound: f64,
    pub frozen_experts: usize,
}

/// `alpha + sqrt(fat ln(2n/alpha) / n) + (3 + 2 ln ln(1/alpha)) / sqrt(n)`.
pub fn generic_bound(alpha: f64, fat: usize, n: usize) -> f64 {
    let nf = n as f64;
    alpha
        + (fat as f64 * (2.0 * nf / alpha).ln() / nf).sqrt()
        + (3.0 + 2.0 * (1.0 / alpha).ln().ln()) / nf.sqrt()
}

/// EWA over the union of expert sets at scales `2^-i`, `i = 1..=max_scale`,
/// with prior mass `6/(pi^2 i^2)` per scale split evenly inside the scale.
pub fn agnostic_supervised_run(
    class: &FiniteClass,
    stream: &[(usize, f64)],
    max_scale: usize,
    caps: &Caps,
) -> Result<AgnosticRun> {
    let n = stream.len();
    if n == 0 || max_scale == 0 {
        return Err(Error::arg("need at least one round and one scale"));
    }
    for &(x, y) in stream {
        if x >= class.n_instances() || !(-1.0..=1.0).contains(&y) {
            return Err(Error::arg("stream entries must index the class and have labels in [-1, 1]"));
        }
    }
    let alphas: Vec<f64> = (1..=max_scale).map(|i| 0.5f64.powi(i as i32)).collect();
    let mut soas = alphas
        .iter()
        .map(|&a| FatSoa::new(class, a, caps))
        .collect::<Result<Vec<_>>>()?;
    let mut sets = Vec::with_capacity(max_scale);
    let mut total = 0usize;
    for soa in soas.iter_mut() {
        let set = generate_with(soa, n, caps)?;
        total += set.len();
        cap("experts", caps.max_experts, total)?;
        sets.push(set);
    }
    let mut priors = Vec::with_capacity(total);
    let mut scales = Vec::with_capacity(max_scale);
    for (i, set) in sets.iter().enumerate() {
        let mass = 6.0 / (std::f64::consts::PI.powi(2) * ((i + 1) * (i + 1)) as f64);
        priors.extend(std::iter::repeat_n(mass / set.len() as f64, set.len()));
        scales.push(ScaleSummary {
            index: i + 1,
            alpha: set.alpha,
            fat: set.fat,
            experts: set.len(),
            prior_mass: mass,
            bound: generic_bound(set.alpha, set.fat, n),
        });
    }
    let mut ewa = Ewa::new(&priors, n)?;
    let mut states: Vec<Vec<ExpertState>> = sets.iter().map(|s| s.start(class)).collect();
    let nx = class.n_instances();
    let mut losses = Vec::with_capacity(n);
    let mut avg_pred = vec![0.0; nx];
    let mut last_pred = vec![0.0; nx];
    for (t, &(x, y)) in stream.iter().enumerate() {
        let w = ewa.weights();
        // Learner's expected prediction function this round, before playing.
        let mut offset = 0;
        for v in last_pred.iter_mut() {
            *v = 0.0;
        }
        for (s, set) in sets.iter().enumerate() {
            for e in 0..set.len() {
                for (xx, v) in last_pred.iter_mut().enumerate() {
                    *v += w[offset + e] * set.predict(&mut soas[s], e, &states[s][e], t, xx);
                }
            }
            offset += set.len();
        }
        for (a, l) in avg_pred.iter_mut().zip(&last_pred) {
            *a += l / n as f64;
        }
        let mut round_losses = Vec::with_capacity(total);
        for (s, set) in sets.iter().enumerate() {
            let preds = set.step(&mut soas[s], &mut states[s], t, x);
            round_losses.extend(preds.iter().map(|p| (p - y).abs() / 2.0));
        }
        losses.push(ewa.expected(&round_losses));
        ewa.update(&round_losses)?;
    }
    let best = (0..class.n_functions())
        .min_by(|&a, &b| {
            let la: f64 = stream.iter().map(|&(x, y)| (class.value(a, x) - y).abs()).sum();
            let lb: f64 = stream.iter().map(|&(x, y)| (class.value(b, x) - y).abs()).sum();
            la.total_cmp(&lb)
        })
        .expect("class is non-empty");
    let comparator_losses: Vec<f64> = stream
        .iter()
        .map(|&(x, y)| (class.value(best, x) - y).abs() / 2.0)
        .collect();
    let frozen_experts = states.iter().flatten().filter(|s| s.frozen).count();
    let bound = scales.iter().map(|s| s.bound).fold(f64::INFINITY, f64::min);
    let trace = RegretTrace::from_rounds(
        losses,
        comparator_losses,
        Point::new(class.row(best).to_vec())?,
        Point::new(avg_pred)?,
        Point::new(last_pred)?,
        TraceMeta {
            geometry: format!("finite-class(|F|={},|X|={nx})", class.n_functions()),
            policy: format!("ewa-fat-soa(scales=1..{max_scale})"),
            seed: None,
            comparator: "best-row".into(),
        },
    );
    Ok(AgnosticRun {
        trace,
        scales,
        bound,
        frozen_experts,
    })
}
