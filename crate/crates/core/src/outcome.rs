//! Output distributions of a mechanism when some announcements are fixed and
//! the remaining players draw their types from the prior.
//!
//! Exact laws come from enumerating count vectors: block counts for
//! histogram mechanisms, type counts per player symmetry class otherwise.
//! Monte Carlo laws evaluate several fixed-announcement variants on the same
//! draws of the remaining players.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::env::{Environment, TypeSpace, TypeValue};
use crate::error::{AuditError, Result};
use crate::mechanism::{
    alternative_for, type_probability, Histogram, HistogramMechanism, Mechanism, SocialWelfareMechanism, SwChooser,
};
use crate::rng::RandomStream;
use crate::sampling::TypeSampler;

/// Default cap on enumerated states per distribution.
pub const DEFAULT_STATE_BUDGET: u64 = 10_000_000;
/// Samples per independently seeded Monte Carlo chunk.
const CHUNK: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    MonteCarlo { samples: u64, seed: u64, stream: u64 },
}

/// Law of the chosen alternative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub probs: Vec<f64>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
}

impl OutputDistribution {
    pub fn exact(probs: Vec<f64>) -> Self {
        Self {
            probs,
            provenance: Provenance::Exact,
            counts: None,
        }
    }

    pub fn point_mass(alternative: usize, alternatives: usize) -> Self {
        let mut probs = vec![0.0; alternatives];
        probs[alternative] = 1.0;
        Self::exact(probs)
    }

    fn from_counts(counts: Vec<u64>, samples: u64, stream: RandomStream) -> Self {
        Self {
            probs: counts.iter().map(|&c| c as f64 / samples as f64).collect(),
            provenance: Provenance::MonteCarlo {
                samples,
                seed: stream.seed,
                stream: stream.stream_id,
            },
            counts: Some(counts),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.provenance == Provenance::Exact
    }

    pub fn samples(&self) -> Option<u64> {
        match self.provenance {
            Provenance::MonteCarlo { samples, .. } => Some(samples),
            Provenance::Exact => None,
        }
    }

    /// Binomial standard error of cell `s` (0 for exact laws).
    pub fn standard_error(&self, s: usize) -> f64 {
        match self.samples() {
            Some(n) => (self.probs[s] * (1.0 - self.probs[s]) / n as f64).sqrt(),
            None => 0.0,
        }
    }

    /// Wilson score interval of cell `s` at `z` standard deviations; exact
    /// laws return the point value.
    pub fn interval(&self, s: usize, z: f64) -> (f64, f64) {
        let p = self.probs[s];
        match self.samples() {
            None => (p, p),
            Some(n) => {
                let n = n as f64;
                let z2 = z * z;
                let denom = 1.0 + z2 / n;
                let centre = (p + z2 / (2.0 * n)) / denom;
                let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
                let lo = if p == 0.0 { 0.0 } else { (centre - half).max(0.0) };
                let hi = if p == 1.0 { 1.0 } else { (centre + half).min(1.0) };
                (lo, hi)
            }
        }
    }
}

/// `(Σc)! / Πc! · Πp^c`, evaluated in log space.
pub fn multinomial_pmf(counts: &[u32], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut log = ln_factorial(total);
    for (&c, &p) in counts.iter().zip(probs) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return 0.0;
        }
        log += c as f64 * p.ln() - ln_factorial(c as u64);
    }
    log.exp()
}

/// `C(n + k − 1, k − 1)`: count vectors of `k` cells summing to `n`.
pub fn composition_count(n: u64, k: u64) -> u128 {
    if k == 0 {
        return u128::from(n == 0);
    }
    binomial(n + k - 1, k - 1)
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Calls `f` on every vector of `cells` non-negative counts summing to
/// `total`, in reverse lexicographic order.
pub fn for_each_composition<F: FnMut(&[u32])>(total: u32, cells: usize, mut f: F) {
    fn rec<F: FnMut(&[u32])>(rest: u32, pos: usize, buf: &mut Vec<u32>, f: &mut F) {
        if pos + 1 == buf.len() {
            buf[pos] = rest;
            f(buf);
            return;
        }
        for c in (0..=rest).rev() {
            buf[pos] = c;
            rec(rest - c, pos + 1, buf, f);
        }
    }
    if cells == 0 {
        if total == 0 {
            f(&[]);
        }
        return;
    }
    let mut buf = vec![0u32; cells];
    rec(total, 0, &mut buf, &mut f);
}

/// Announcements of some players, by player index.
pub type FixedAnnouncements = [(usize, TypeValue)];

/// Exact law of a single type draw, when one is available.
#[derive(Clone, Debug)]
enum ExactLaw {
    /// Block probabilities of a histogram mechanism.
    Blocks(Vec<f64>),
    /// Support of a finite type law: `(type index, probability)`.
    Types(Vec<(usize, f64)>),
    None,
}

/// A mechanism paired with its environment, prepared for repeated
/// distribution queries.
#[derive(Clone, Debug)]
pub struct OutcomeModel<'a> {
    pub mech: &'a Mechanism,
    pub env: &'a Environment,
    classes: Vec<usize>,
    law: ExactLaw,
    sampler: TypeSampler,
    budget: u64,
}

/// Largest finite type space whose law is tabulated for exact enumeration.
const MAX_TABULATED_TYPES: u128 = 1 << 20;

impl<'a> OutcomeModel<'a> {
    pub fn new(mech: &'a Mechanism, env: &'a Environment, budget: u64) -> Result<Self> {
        let law = match (mech, env.type_space.finite_size()) {
            (Mechanism::Histogram(h), _) => match h.partition.block_probabilities(&env.type_space, &env.distribution) {
                Ok(p) => ExactLaw::Blocks(p),
                Err(_) => ExactLaw::None,
            },
            (_, Some(size)) if size <= MAX_TABULATED_TYPES => {
                let mut support = Vec::new();
                for idx in 0..size as usize {
                    let p = type_probability(&env.type_space, &env.distribution, idx)?;
                    if p > 0.0 {
                        support.push((idx, p));
                    }
                }
                ExactLaw::Types(support)
            }
            _ => ExactLaw::None,
        };
        Ok(Self {
            mech,
            env,
            classes: mech.player_classes(env.players),
            law,
            sampler: TypeSampler::new(&env.type_space, &env.distribution)?,
            budget,
        })
    }

    pub fn alternatives(&self) -> usize {
        self.env.alternatives.len()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn supports_exact(&self) -> bool {
        !matches!(self.law, ExactLaw::None)
    }

    /// Players not fixed, in increasing order.
    fn free_players(&self, fixed: &FixedAnnouncements) -> Result<Vec<usize>> {
        let n = self.env.players;
        let mut taken = vec![false; n];
        for (p, t) in fixed {
            if *p >= n {
                return Err(AuditError::domain(format!("player {p} outside [0, {n})")));
            }
            if taken[*p] {
                return Err(AuditError::domain(format!("player {p} is fixed twice")));
            }
            if !self.env.type_space.contains(t) {
                return Err(AuditError::domain(format!(
                    "announcement {t:?} is outside the type space"
                )));
            }
            taken[*p] = true;
        }
        Ok((0..n).filter(|&p| !taken[p]).collect())
    }

    /// Enumeration states an exact query with these fixed players needs.
    pub fn exact_states(&self, fixed: &FixedAnnouncements) -> Result<u128> {
        let free = self.free_players(fixed)?;
        Ok(match &self.law {
            ExactLaw::Blocks(p) => composition_count(free.len() as u64, p.len() as u64),
            ExactLaw::Types(support) => self
                .class_groups(&free)
                .iter()
                .map(|g| composition_count(g.len() as u64, support.len() as u64))
                .fold(1u128, |a, b| a.saturating_mul(b)),
            ExactLaw::None => u128::MAX,
        })
    }

    fn class_groups(&self, free: &[usize]) -> Vec<Vec<usize>> {
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for &p in free {
            let c = self.classes[p];
            match groups.iter_mut().find(|(k, _)| *k == c) {
                Some((_, g)) => g.push(p),
                None => groups.push((c, vec![p])),
            }
        }
        groups.into_iter().map(|(_, g)| g).collect()
    }

    /// Exact law of `M` with `fixed` announcements and the rest drawn from
    /// the prior.
    pub fn exact(&self, fixed: &FixedAnnouncements) -> Result<OutputDistribution> {
        let free = self.free_players(fixed)?;
        let needed = self.exact_states(fixed)?;
        if matches!(self.law, ExactLaw::None) {
            return Err(AuditError::Budget {
                needed,
                budget: self.budget,
            });
        }
        if needed > self.budget as u128 {
            return Err(AuditError::Budget {
                needed,
                budget: self.budget,
            });
        }
        let mut probs = vec![0.0; self.alternatives()];
        match &self.law {
            ExactLaw::Blocks(block_probs) => {
                let h = match self.mech {
                    Mechanism::Histogram(h) => h,
                    _ => unreachable!(),
                };
                let base = self.fixed_histogram(h, fixed)?;
                let mut hist = base.clone();
                for_each_composition(free.len() as u32, block_probs.len(), |comp| {
                    let w = multinomial_pmf(comp, block_probs);
                    if w == 0.0 {
                        return;
                    }
                    for (slot, (&b, &c)) in hist.0.iter_mut().zip(base.0.iter().zip(comp)) {
                        *slot = b + c;
                    }
                    probs[h.chooser.choose(&hist)] += w;
                });
            }
            ExactLaw::Types(support) => {
                let groups = self.class_groups(&free);
                let mut profile = vec![TypeValue::Label(0); self.env.players];
                for (p, t) in fixed {
                    profile[*p] = t.clone();
                }
                let support_probs: Vec<f64> = support.iter().map(|&(_, p)| p).collect();
                let support_types: Vec<TypeValue> =
                    support.iter().map(|&(i, _)| self.env.type_space.type_at(i)).collect();
                let mut err = None;
                self.enumerate_groups(
                    &groups,
                    0,
                    1.0,
                    &support_probs,
                    &support_types,
                    &mut profile,
                    &mut |w, prof| match self.mech.run(self.env, prof) {
                        Ok(s) => probs[s] += w,
                        Err(e) => {
                            err.get_or_insert(e);
                        }
                    },
                );
                if let Some(e) = err {
                    return Err(e);
                }
            }
            ExactLaw::None => unreachable!(),
        }
        Ok(OutputDistribution::exact(probs))
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_groups(
        &self,
        groups: &[Vec<usize>],
        g: usize,
        weight: f64,
        probs: &[f64],
        types: &[TypeValue],
        profile: &mut Vec<TypeValue>,
        f: &mut dyn FnMut(f64, &[TypeValue]),
    ) {
        if g == groups.len() {
            f(weight, profile);
            return;
        }
        let members = &groups[g];
        for_each_composition(members.len() as u32, types.len(), |comp| {
            let w = multinomial_pmf(comp, probs);
            if w == 0.0 {
                return;
            }
            let mut slot = 0;
            for (t, &c) in types.iter().zip(comp) {
                for _ in 0..c {
                    profile[members[slot]] = t.clone();
                    slot += 1;
                }
            }
            self.enumerate_groups(groups, g + 1, weight * w, probs, types, profile, f);
        });
    }

    fn fixed_histogram(&self, h: &HistogramMechanism, fixed: &FixedAnnouncements) -> Result<Histogram> {
        let mut hist = Histogram::zeros(h.partition.blocks());
        for (_, t) in fixed {
            hist.0[h.partition.block_of(&self.env.type_space, t)?] += 1;
        }
        Ok(hist)
    }

    /// Monte Carlo laws for several variants that fix the same players.
    /// Every variant is evaluated on the same draws of the free players, so
    /// differences between variants carry no independent sampling noise.
    pub fn monte_carlo(
        &self,
        variants: &[Vec<(usize, TypeValue)>],
        samples: u64,
        stream: RandomStream,
    ) -> Result<Vec<OutputDistribution>> {
        if samples == 0 {
            return Err(AuditError::config("mc_samples", "need at least one sample"));
        }
        let Some(first) = variants.first() else {
            return Ok(Vec::new());
        };
        let free = self.free_players(first)?;
        for v in &variants[1..] {
            let mut a: Vec<usize> = first.iter().map(|(p, _)| *p).collect();
            let mut b: Vec<usize> = v.iter().map(|(p, _)| *p).collect();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(AuditError::domain("Monte Carlo variants must fix the same players"));
            }
            self.free_players(v)?;
        }
        let kernel = Kernel::new(self, variants)?;
        self.run_kernel(&kernel, &free, variants.len(), samples, stream)
    }

    fn run_kernel(
        &self,
        kernel: &Kernel,
        free: &[usize],
        variant_count: usize,
        samples: u64,
        stream: RandomStream,
    ) -> Result<Vec<OutputDistribution>> {
        let chunks = samples.div_ceil(CHUNK);
        let m = self.alternatives();
        let per_chunk: Vec<Result<Vec<Vec<u64>>>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(samples - c * CHUNK);
                let mut rng = stream.derive(c).generator();
                let mut counts = vec![vec![0u64; m]; variant_count];
                let mut scratch = kernel.scratch();
                for _ in 0..len {
                    kernel.sample(self, free, &mut rng, &mut scratch, &mut counts)?;
                }
                Ok(counts)
            })
            .collect();
        let mut totals = vec![vec![0u64; m]; variant_count];
        for chunk in per_chunk {
            for (t, c) in totals.iter_mut().zip(chunk?) {
                for (a, b) in t.iter_mut().zip(c) {
                    *a += b;
                }
            }
        }
        Ok(totals
            .into_iter()
            .map(|c| OutputDistribution::from_counts(c, samples, stream))
            .collect())
    }

    /// Exact law when the budget allows, otherwise Monte Carlo.
    pub fn distribution(
        &self,
        fixed: &FixedAnnouncements,
        samples: u64,
        stream: RandomStream,
    ) -> Result<OutputDistribution> {
        match self.exact(fixed) {
            Ok(d) => Ok(d),
            Err(AuditError::Budget { .. }) => Ok(self.monte_carlo(&[fixed.to_vec()], samples, stream)?.remove(0)),
            Err(e) => Err(e),
        }
    }
}

/// Per-sample evaluator specialised by mechanism family.
enum Kernel<'v> {
    Histogram {
        mech: &'v HistogramMechanism,
        bases: Vec<Histogram>,
    },
    TwoAlt {
        mech: &'v crate::mechanism::TwoAltMechanism,
        bases: Vec<i128>,
    },
    /// Integer welfare keys: free players' grid sums are accumulated once
    /// per sample and shared by every variant.
    Welfare {
        mech: &'v SocialWelfareMechanism,
        /// Grid sums and weight counts of each variant's fixed players.
        fixed: Vec<(Vec<i64>, Vec<i64>)>,
        free_weight: Vec<i64>,
        top: i64,
        /// Alternative of each chosen option set.
        alternatives: Vec<(Vec<usize>, usize)>,
    },
    Profile {
        variants: &'v [Vec<(usize, TypeValue)>],
    },
}

struct Scratch {
    hist: Histogram,
    draw_hist: Histogram,
    profile: Vec<TypeValue>,
    coords: Vec<u32>,
    grid_sum: Vec<i64>,
    keys: Vec<i64>,
    weights: Vec<i64>,
}

/// Grid sums and weight counts over `players` announcing `types`.
fn partial_welfare<'t>(
    mech: &SocialWelfareMechanism,
    options: usize,
    entries: impl Iterator<Item = (usize, &'t TypeValue)>,
) -> Result<(Vec<i64>, Vec<i64>)> {
    let mut grid = vec![0i64; options];
    let mut weight = vec![0i64; options];
    for (p, t) in entries {
        let TypeValue::Grid(g) = t else {
            return Err(AuditError::domain(format!("type {t:?} is not a grid valuation")));
        };
        for j in 0..options {
            if mech.weights.rows[p][j] != 0 {
                grid[j] += g[j] as i64;
                weight[j] += 1;
            }
        }
    }
    Ok((grid, weight))
}

impl<'v> Kernel<'v> {
    fn new(model: &OutcomeModel<'v>, variants: &'v [Vec<(usize, TypeValue)>]) -> Result<Self> {
        Ok(match model.mech {
            Mechanism::Histogram(h) => Kernel::Histogram {
                mech: h,
                bases: variants
                    .iter()
                    .map(|v| model.fixed_histogram(h, v))
                    .collect::<Result<_>>()?,
            },
            Mechanism::TwoAlt(t) => Kernel::TwoAlt {
                mech: t,
                bases: variants
                    .iter()
                    .map(|v| v.iter().try_fold(0i128, |acc, (_, ty)| Ok(acc + t.fixed_term(ty)?)))
                    .collect::<Result<_>>()?,
            },
            Mechanism::SocialWelfare(sw) if !matches!(sw.chooser, SwChooser::Constant { .. }) => {
                let TypeSpace::ValuationGrid {
                    options, resolution, ..
                } = model.env.type_space
                else {
                    return Err(AuditError::domain("social welfare needs a valuation-grid type space"));
                };
                let fixed = variants
                    .iter()
                    .map(|v| partial_welfare(sw, options, v.iter().map(|(p, t)| (*p, t))))
                    .collect::<Result<Vec<_>>>()?;
                let fixed_players: Vec<usize> =
                    variants.first().map_or(Vec::new(), |v| v.iter().map(|e| e.0).collect());
                let mut free_weight = vec![0i64; options];
                for (p, row) in sw.weights.rows.iter().enumerate() {
                    if !fixed_players.contains(&p) {
                        for j in 0..options {
                            free_weight[j] += i64::from(row[j] != 0);
                        }
                    }
                }
                let count = match sw.chooser {
                    SwChooser::MaxWelfareK { count } | SwChooser::AverageWelfareK { count } => count,
                    SwChooser::Constant { .. } => unreachable!(),
                };
                let alternatives = crate::mechanism::k_subsets(options, count)
                    .into_iter()
                    .map(|set| Ok((set.clone(), alternative_for(model.env, &set)?)))
                    .collect::<Result<_>>()?;
                Kernel::Welfare {
                    mech: sw,
                    fixed,
                    free_weight,
                    top: resolution as i64 - 1,
                    alternatives,
                }
            }
            Mechanism::SocialWelfare(_) => Kernel::Profile { variants },
        })
    }

    fn scratch(&self) -> Scratch {
        let blocks = match self {
            Kernel::Histogram { mech, .. } => mech.partition.blocks(),
            _ => 0,
        };
        let options = match self {
            Kernel::Welfare { free_weight, .. } => free_weight.len(),
            _ => 0,
        };
        Scratch {
            hist: Histogram::zeros(blocks),
            draw_hist: Histogram::zeros(blocks),
            profile: Vec::new(),
            coords: vec![0; options],
            grid_sum: vec![0; options],
            keys: vec![0; options],
            weights: vec![0; options],
        }
    }

    fn sample(
        &self,
        model: &OutcomeModel,
        free: &[usize],
        rng: &mut crate::rng::StreamRng,
        scratch: &mut Scratch,
        counts: &mut [Vec<u64>],
    ) -> Result<()> {
        let space: &TypeSpace = &model.env.type_space;
        match self {
            Kernel::Histogram { mech, bases } => {
                scratch.draw_hist.0.iter_mut().for_each(|c| *c = 0);
                for _ in free {
                    let b = match model.sampler.draw_real(rng) {
                        Some(x) => mech.partition.block_of(space, &TypeValue::Real(x))?,
                        None => mech.partition.block_of(space, &model.sampler.draw(rng))?,
                    };
                    scratch.draw_hist.0[b] += 1;
                }
                for (base, cnt) in bases.iter().zip(counts.iter_mut()) {
                    for ((slot, &b), &d) in scratch.hist.0.iter_mut().zip(&base.0).zip(&scratch.draw_hist.0) {
                        *slot = b + d;
                    }
                    cnt[mech.chooser.choose(&scratch.hist)] += 1;
                }
            }
            Kernel::TwoAlt { mech, bases } => {
                let mut score = 0i128;
                for _ in free {
                    score += match model.sampler.draw_real(rng) {
                        Some(x) => mech.real_term(x)?,
                        None => mech.fixed_term(&model.sampler.draw(rng))?,
                    };
                }
                for (base, cnt) in bases.iter().zip(counts.iter_mut()) {
                    cnt[mech.decide(base + score)] += 1;
                }
            }
            Kernel::Welfare {
                mech,
                fixed,
                free_weight,
                top,
                alternatives,
            } => {
                scratch.grid_sum.iter_mut().for_each(|g| *g = 0);
                for &p in free {
                    model.sampler.draw_grid_into(rng, &mut scratch.coords);
                    let row = &mech.weights.rows[p];
                    for j in 0..scratch.coords.len() {
                        if row[j] != 0 {
                            scratch.grid_sum[j] += scratch.coords[j] as i64;
                        }
                    }
                }
                for ((grid, weight), cnt) in fixed.iter().zip(counts.iter_mut()) {
                    for j in 0..scratch.keys.len() {
                        scratch.weights[j] = free_weight[j] + weight[j];
                        scratch.keys[j] = 2 * (scratch.grid_sum[j] + grid[j]) - scratch.weights[j] * top;
                    }
                    let set = mech
                        .choose_from_keys(&scratch.keys, &scratch.weights)
                        .expect("non-constant chooser");
                    let s = alternatives
                        .iter()
                        .find(|(options, _)| *options == set)
                        .map(|e| e.1)
                        .expect("every option set has an alternative");
                    cnt[s] += 1;
                }
            }
            Kernel::Profile { variants } => {
                if scratch.profile.len() != model.env.players {
                    scratch.profile = vec![TypeValue::Label(0); model.env.players];
                }
                for &p in free {
                    scratch.profile[p] = model.sampler.draw(rng);
                }
                for (v, cnt) in variants.iter().zip(counts.iter_mut()) {
                    for (p, t) in v {
                        scratch.profile[*p] = t.clone();
                    }
                    cnt[model.mech.run(model.env, &scratch.profile)?] += 1;
                }
            }
        }
        Ok(())
    }
}

/// Exact law for `fixed`; budget overruns surface as [`AuditError::Budget`].
pub fn exact_output_distribution(
    mech: &Mechanism,
    env: &Environment,
    fixed: &FixedAnnouncements,
    budget: u64,
) -> Result<OutputDistribution> {
    OutcomeModel::new(mech, env, budget)?.exact(fixed)
}

/// Empirical law over `samples` draws of the free players.
pub fn mc_output_distribution(
    mech: &Mechanism,
    env: &Environment,
    fixed: &FixedAnnouncements,
    samples: u64,
    stream: RandomStream,
) -> Result<OutputDistribution> {
    Ok(OutcomeModel::new(mech, env, DEFAULT_STATE_BUDGET)?
        .monte_carlo(&[fixed.to_vec()], samples, stream)?
        .remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Alternative, TypeDistribution, UtilitySpec};
    use crate::mechanism::{HistogramMechanism, Partition};

    pub(crate) fn plurality_env(n: usize, p: &[f64]) -> (Mechanism, Environment) {
        let m = p.len();
        let env = Environment {
            players: n,
            type_space: TypeSpace::Finite {
                labels: (0..m).map(|i| format!("c{i}")).collect(),
            },
            distribution: TypeDistribution::Categorical {
                probabilities: p.to_vec(),
            },
            alternatives: (0..m).map(|i| Alternative::named(format!("c{i}"))).collect(),
            utility: UtilitySpec::Table {
                values: (0..m)
                    .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect(),
            },
            utility_bound: 1.0,
        };
        (
            Mechanism::Histogram(HistogramMechanism::plurality(Partition::identity(m))),
            env,
        )
    }

    #[test]
    fn welfare_kernel_matches_profile_kernel() {
        for chooser in [
            SwChooser::MaxWelfareK { count: 2 },
            SwChooser::AverageWelfareK { count: 1 },
        ] {
            let config = crate::builtin::multiple_public_projects(9);
            let mut env = config.environment;
            let Mechanism::SocialWelfare(mut sw) = config.mechanism else {
                unreachable!()
            };
            if let SwChooser::AverageWelfareK { .. } = chooser {
                env.alternatives = (0..4)
                    .map(|j| Alternative::with_options(format!("o{j}"), vec![j]))
                    .collect();
            }
            sw.chooser = chooser;
            let mech = Mechanism::SocialWelfare(sw);
            let model = OutcomeModel::new(&mech, &env, DEFAULT_STATE_BUDGET).unwrap();
            let variants = vec![
                vec![(2, TypeValue::Grid(vec![0, 0, 0, 0]))],
                vec![(2, TypeValue::Grid(vec![4, 4, 4, 4]))],
            ];
            let stream = RandomStream::new(5, 5);
            let fast = model.monte_carlo(&variants, 5000, stream).unwrap();
            let free = model.free_players(&variants[0]).unwrap();
            let slow = model
                .run_kernel(&Kernel::Profile { variants: &variants }, &free, 2, 5000, stream)
                .unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn multinomial_values() {
        assert!((multinomial_pmf(&[1, 1], &[0.5, 0.5]) - 0.5).abs() < 1e-15);
        assert!((multinomial_pmf(&[2, 0], &[0.5, 0.5]) - 0.25).abs() < 1e-15);
        assert!((multinomial_pmf(&[2, 1], &[0.5, 0.5]) - 0.375).abs() < 1e-15);
        assert_eq!(multinomial_pmf(&[0, 0], &[0.5, 0.5]), 1.0);
        assert_eq!(multinomial_pmf(&[1, 0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn compositions_are_complete() {
        let mut seen = Vec::new();
        for_each_composition(3, 3, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len() as u128, composition_count(3, 3));
        assert_eq!(seen.len(), 10);
        assert!(seen.iter().all(|c| c.iter().sum::<u32>() == 3));
        let mut count = 0;
        for_each_composition(0, 4, |c| {
            assert_eq!(c, &[0, 0, 0, 0]);
            count += 1;
        });
        assert_eq!(count, 1);
        assert_eq!(composition_count(31, 2), 32);
    }

    #[test]
    fn three_voter_plurality_exact_laws() {
        let (mech, env) = plurality_env(3, &[0.5, 0.5]);
        let p = exact_output_distribution(&mech, &env, &[(0, TypeValue::Label(0))], DEFAULT_STATE_BUDGET).unwrap();
        assert!((p.probs[0] - 0.75).abs() < 1e-15 && (p.probs[1] - 0.25).abs() < 1e-15);
        let q = exact_output_distribution(&mech, &env, &[(0, TypeValue::Label(1))], DEFAULT_STATE_BUDGET).unwrap();
        assert!((q.probs[0] - 0.25).abs() < 1e-15 && (q.probs[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn histogram_and_type_level_enumeration_agree() {
        let (mech, env) = plurality_env(7, &[0.2, 0.3, 0.5]);
        let model = OutcomeModel::new(&mech, &env, DEFAULT_STATE_BUDGET).unwrap();
        let fixed = [(2, TypeValue::Label(1)), (5, TypeValue::Label(2))];
        let fast = model.exact(&fixed).unwrap();
        // Brute force over all 3^5 profiles of the free players.
        let free: Vec<usize> = vec![0, 1, 3, 4, 6];
        let mut brute = vec![0.0; 3];
        for code in 0..3usize.pow(5) {
            let mut profile = vec![TypeValue::Label(0); 7];
            profile[2] = TypeValue::Label(1);
            profile[5] = TypeValue::Label(2);
            let mut rest = code;
            let mut w = 1.0;
            for &p in &free {
                let t = rest % 3;
                rest /= 3;
                w *= [0.2, 0.3, 0.5][t];
                profile[p] = TypeValue::Label(t);
            }
            brute[mech.run(&env, &profile).unwrap()] += w;
        }
        for s in 0..3 {
            assert!((fast.probs[s] - brute[s]).abs() < 1e-14);
        }
        assert!((fast.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let (mech, env) = plurality_env(30, &[0.25, 0.25, 0.25, 0.25]);
        let err = exact_output_distribution(&mech, &env, &[], 10).unwrap_err();
        assert!(matches!(err, AuditError::Budget { needed, budget: 10 } if needed == composition_count(30, 4)));
    }

    #[test]
    fn constant_mechanism_is_a_point_mass() {
        let (_, env) = plurality_env(4, &[0.5, 0.5]);
        let mech = Mechanism::constant(1, Partition::identity(2));
        let d = exact_output_distribution(&mech, &env, &[(0, TypeValue::Label(0))], 100).unwrap();
        assert_eq!(d.probs[0], 0.0);
        assert!((d.probs[1] - 1.0).abs() < 1e-12);
        let mc = mc_output_distribution(&mech, &env, &[], 1000, RandomStream::new(1, 2)).unwrap();
        assert_eq!(mc.probs, vec![0.0, 1.0]);
    }

    #[test]
    fn monte_carlo_matches_exact_case() {
        let (mech, env) = plurality_env(3, &[0.5, 0.5]);
        let d = mc_output_distribution(
            &mech,
            &env,
            &[(0, TypeValue::Label(0))],
            100_000,
            RandomStream::new(9, 0),
        )
        .unwrap();
        let se = (0.1875f64 / 1e5).sqrt();
        assert!((d.probs[0] - 0.75).abs() < 3.0 * se + 1e-12, "{:?}", d.probs);
        assert_eq!(d.counts.as_ref().unwrap().iter().sum::<u64>(), 100_000);
    }

    #[test]
    fn monte_carlo_is_reproducible_and_chunk_independent() {
        let (mech, env) = plurality_env(5, &[0.3, 0.7]);
        let a = mc_output_distribution(&mech, &env, &[], 10_000, RandomStream::new(4, 4)).unwrap();
        let b = mc_output_distribution(&mech, &env, &[], 10_000, RandomStream::new(4, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let d = OutputDistribution::from_counts(vec![0, 100], 100, RandomStream::new(0, 0));
        let (lo, hi) = d.interval(0, 3.0);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        let (lo, hi) = d.interval(1, 3.0);
        assert!(lo < 1.0 && hi == 1.0);
    }
}
