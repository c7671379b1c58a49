//! Deterministic mechanisms `T^n -> S`: histogram mechanisms, mechanisms for
//! two alternatives, and social-welfare mechanisms.
//!
//! Every chooser breaks ties toward the lowest index, which keeps all three
//! families deterministic.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, TypeDistribution, TypeSpace, TypeValue};
use crate::error::{AuditError, Result};

/// Partition of the type space into blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Partition {
    /// `block_of[type index]` for finite and grid spaces.
    Table { block_of: Vec<usize>, blocks: usize },
    /// Interval split at increasing cut points; a cut opens a new block.
    Cuts { cuts: Vec<f64> },
}

impl Partition {
    pub fn identity(types: usize) -> Self {
        Partition::Table {
            block_of: (0..types).collect(),
            blocks: types,
        }
    }

    pub fn blocks(&self) -> usize {
        match self {
            Partition::Table { blocks, .. } => *blocks,
            Partition::Cuts { cuts } => cuts.len() + 1,
        }
    }

    pub fn validate(&self, space: &TypeSpace) -> Result<()> {
        match self {
            Partition::Table { block_of, blocks } => {
                let size = space.finite_size().ok_or_else(|| {
                    AuditError::config("mechanism.partition", "table partition needs a finite type space")
                })?;
                if block_of.len() as u128 != size {
                    return Err(AuditError::config(
                        "mechanism.partition.block_of",
                        format!("expected {size} entries, got {}", block_of.len()),
                    ));
                }
                if *blocks == 0 || block_of.iter().any(|&b| b >= *blocks) {
                    return Err(AuditError::config(
                        "mechanism.partition.block_of",
                        format!("every block index must be below {blocks}"),
                    ));
                }
            }
            Partition::Cuts { cuts } => {
                if !matches!(space, TypeSpace::Interval { .. }) {
                    return Err(AuditError::config(
                        "mechanism.partition",
                        "cut partition needs an interval type space",
                    ));
                }
                if cuts.windows(2).any(|w| !(w[0] < w[1])) || cuts.iter().any(|c| !c.is_finite()) {
                    return Err(AuditError::config(
                        "mechanism.partition.cuts",
                        "cuts must be finite and increasing",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn block_of(&self, space: &TypeSpace, t: &TypeValue) -> Result<usize> {
        match (self, t) {
            (Partition::Cuts { cuts }, TypeValue::Real(x)) => Ok(cuts.partition_point(|c| c <= x)),
            (Partition::Table { block_of, .. }, _) => space
                .index_of(t)
                .and_then(|i| block_of.get(i).copied())
                .ok_or_else(|| AuditError::domain(format!("type {t:?} is not covered by the partition"))),
            _ => Err(AuditError::domain(format!(
                "type {t:?} is not covered by the partition"
            ))),
        }
    }

    /// `Pr_{t ~ 𝒯}[t ∈ B_j]` for every block.
    pub fn block_probabilities(&self, space: &TypeSpace, dist: &TypeDistribution) -> Result<Vec<f64>> {
        let mut probs = vec![0.0; self.blocks()];
        match self {
            Partition::Table { block_of, .. } => {
                let size = block_of.len();
                for (idx, &b) in block_of.iter().enumerate().take(size) {
                    probs[b] += type_probability(space, dist, idx)?;
                }
            }
            Partition::Cuts { cuts } => {
                let mut prev = 0.0;
                for (j, c) in cuts.iter().enumerate() {
                    let f = dist.scalar_cdf(*c);
                    probs[j] = (f - prev).max(0.0);
                    prev = f;
                }
                probs[cuts.len()] = (1.0 - prev).max(0.0);
            }
        }
        Ok(probs)
    }
}

/// Probability of the `index`-th type of a finite space under `dist`.
pub fn type_probability(space: &TypeSpace, dist: &TypeDistribution, index: usize) -> Result<f64> {
    match (space, dist) {
        (TypeSpace::Finite { .. }, TypeDistribution::Categorical { probabilities }) => probabilities
            .get(index)
            .copied()
            .ok_or_else(|| AuditError::domain(format!("type index {index} out of range"))),
        (TypeSpace::ValuationGrid { .. }, _) => {
            let coords = coordinate_probabilities(space, dist)?;
            match space.type_at(index) {
                TypeValue::Grid(g) => Ok(g.iter().map(|&c| coords[c as usize]).product()),
                _ => unreachable!(),
            }
        }
        _ => Err(AuditError::domain(
            "type probabilities need a finite type space with a matching distribution",
        )),
    }
}

/// Law of a single grid coordinate: categorical weights as given, or the
/// mass a continuous law puts on the snapping cell of each grid point.
pub fn coordinate_probabilities(space: &TypeSpace, dist: &TypeDistribution) -> Result<Vec<f64>> {
    let (bound, resolution) = match space {
        TypeSpace::ValuationGrid { bound, resolution, .. } => (*bound, *resolution),
        _ => return Err(AuditError::domain("coordinate probabilities need a valuation grid")),
    };
    match dist {
        TypeDistribution::Categorical { probabilities } => Ok(probabilities.clone()),
        _ => {
            let last = resolution - 1;
            let half = bound / last as f64;
            let mut out = Vec::with_capacity(resolution as usize);
            let mut prev = 0.0;
            for g in 0..resolution {
                let upper = if g == last {
                    1.0
                } else {
                    dist.scalar_cdf(-bound + (2 * g + 1) as f64 * half)
                };
                out.push((upper - prev).max(0.0));
                prev = upper;
            }
            Ok(out)
        }
    }
}

/// Block counts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Histogram(pub Vec<u32>);

impl Histogram {
    pub fn zeros(blocks: usize) -> Self {
        Histogram(vec![0; blocks])
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }
}

/// Counts how many types of `profile` fall in each block.
pub fn histogram_of(partition: &Partition, space: &TypeSpace, profile: &[TypeValue]) -> Result<Histogram> {
    let mut h = Histogram::zeros(partition.blocks());
    for t in profile {
        h.0[partition.block_of(space, t)?] += 1;
    }
    Ok(h)
}

/// Index of a maximal count, lowest index on ties.
pub fn plurality_winner(hist: &Histogram) -> usize {
    let mut best = 0;
    for (j, &c) in hist.0.iter().enumerate() {
        if c > hist.0[best] {
            best = j;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HistogramChooser {
    /// Winner block `b` selects alternative `winners[b]` (identity if absent).
    Plurality {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        winners: Option<Vec<usize>>,
    },
    /// `at_least` when `counts[block] >= threshold`, else `below`.
    CountThreshold {
        block: usize,
        threshold: u32,
        at_least: usize,
        below: usize,
    },
    /// Picks the placement minimising total city-block distance from block
    /// centroids (weighted by counts) to the nearest facility of the placement.
    /// `placements[s]` lists the site indices used by alternative `s`.
    FacilityLocation {
        centroids: Vec<[f64; 2]>,
        sites: Vec<[f64; 2]>,
        placements: Vec<Vec<usize>>,
    },
    Constant {
        alternative: usize,
    },
}

impl HistogramChooser {
    pub fn choose(&self, hist: &Histogram) -> usize {
        match self {
            HistogramChooser::Plurality { winners } => {
                let b = plurality_winner(hist);
                winners.as_ref().map_or(b, |w| w[b])
            }
            HistogramChooser::CountThreshold {
                block,
                threshold,
                at_least,
                below,
            } => {
                if hist.0[*block] >= *threshold {
                    *at_least
                } else {
                    *below
                }
            }
            HistogramChooser::FacilityLocation {
                centroids,
                sites,
                placements,
            } => {
                let mut best = 0;
                let mut best_cost = f64::INFINITY;
                for (s, placement) in placements.iter().enumerate() {
                    let cost: f64 = hist
                        .0
                        .iter()
                        .zip(centroids)
                        .map(|(&count, c)| {
                            let nearest = placement
                                .iter()
                                .map(|&f| (c[0] - sites[f][0]).abs() + (c[1] - sites[f][1]).abs())
                                .fold(f64::INFINITY, f64::min);
                            count as f64 * nearest
                        })
                        .sum();
                    if cost < best_cost {
                        best_cost = cost;
                        best = s;
                    }
                }
                best
            }
            HistogramChooser::Constant { alternative } => *alternative,
        }
    }

    fn validate(&self, blocks: usize, alternatives: usize) -> Result<()> {
        let path = "mechanism.chooser";
        let check_alt = |a: usize| {
            if a < alternatives {
                Ok(())
            } else {
                Err(AuditError::config(path, format!("alternative {a} does not exist")))
            }
        };
        match self {
            HistogramChooser::Plurality { winners } => match winners {
                Some(w) => {
                    if w.len() != blocks {
                        return Err(AuditError::config(path, format!("winners needs {blocks} entries")));
                    }
                    w.iter().try_for_each(|&a| check_alt(a))
                }
                None if blocks > alternatives => Err(AuditError::config(
                    path,
                    "plurality without a winner map needs one alternative per block",
                )),
                None => Ok(()),
            },
            HistogramChooser::CountThreshold {
                block, at_least, below, ..
            } => {
                if *block >= blocks {
                    return Err(AuditError::config(path, format!("block {block} does not exist")));
                }
                check_alt(*at_least)?;
                check_alt(*below)
            }
            HistogramChooser::FacilityLocation {
                centroids,
                sites,
                placements,
            } => {
                if centroids.len() != blocks {
                    return Err(AuditError::config(path, format!("needs {blocks} centroids")));
                }
                if placements.len() != alternatives {
                    return Err(AuditError::config(path, "needs one placement per alternative"));
                }
                if placements
                    .iter()
                    .any(|p| p.is_empty() || p.iter().any(|&f| f >= sites.len()))
                {
                    return Err(AuditError::config(path, "placements must name existing sites"));
                }
                Ok(())
            }
            HistogramChooser::Constant { alternative } => check_alt(*alternative),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HistogramMechanism {
    pub partition: Partition,
    pub chooser: HistogramChooser,
}

impl HistogramMechanism {
    pub fn plurality(partition: Partition) -> Self {
        Self {
            partition,
            chooser: HistogramChooser::Plurality { winners: None },
        }
    }
}

/// Rule applied to the two-alternative score. Alternative 0 is `A`, 1 is `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TwoAltRule {
    /// `A` iff score > cost.
    Threshold {
        cost: f64,
    },
    Constant {
        alternative: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TwoAltMechanism {
    pub on_a: crate::env::ScalarFn,
    pub on_b: crate::env::ScalarFn,
    pub rule: TwoAltRule,
}

/// Scale of the fixed-point accumulator for two-alternative scores.
const FIXED_SCALE: f64 = (1u64 << 60) as f64;
/// Per-player terms must stay below this magnitude.
const FIXED_LIMIT: f64 = (1u64 << 40) as f64;

/// `round(x · 2^60)` with ties away from zero.
#[inline]
fn to_fixed(x: f64) -> i128 {
    let y = x * FIXED_SCALE;
    if y.abs() < 9.0e18 {
        // Truncate in hardware, then round; `y - t` is exact at this size.
        let t = y as i64;
        let frac = y - t as f64;
        let r = if frac >= 0.5 {
            t + 1
        } else if frac <= -0.5 {
            t - 1
        } else {
            t
        };
        r as i128
    } else {
        y.round() as i128
    }
}

#[inline]
fn checked_fixed(d: f64) -> Result<i128> {
    if !(d.abs() < FIXED_LIMIT) {
        return Err(AuditError::domain(format!("score term {d} out of range")));
    }
    Ok(to_fixed(d))
}

impl TwoAltMechanism {
    fn term(&self, t: &TypeValue) -> Result<i128> {
        if let TypeValue::Real(x) = t {
            return self.real_term(*x);
        }
        checked_fixed(self.on_a.eval(t)? - self.on_b.eval(t)?)
    }

    /// Score term of a real type.
    #[inline]
    pub fn real_term(&self, x: f64) -> Result<i128> {
        match (self.on_a.eval_real(x), self.on_b.eval_real(x)) {
            (Some(a), Some(b)) => checked_fixed(a - b),
            _ => checked_fixed(self.on_a.eval(&TypeValue::Real(x))? - self.on_b.eval(&TypeValue::Real(x))?),
        }
    }

    /// Score as a fixed-point integer; integer addition keeps the sum
    /// independent of player order.
    pub fn fixed_score(&self, profile: &[TypeValue]) -> Result<i128> {
        profile.iter().try_fold(0i128, |acc, t| Ok(acc + self.term(t)?))
    }

    pub fn decide(&self, fixed_score: i128) -> usize {
        match &self.rule {
            TwoAltRule::Threshold { cost } => {
                if fixed_score > to_fixed(*cost) {
                    0
                } else {
                    1
                }
            }
            TwoAltRule::Constant { alternative } => *alternative,
        }
    }

    /// Partial score of fixed players plus per-sample terms, for hot loops.
    pub fn fixed_term(&self, t: &TypeValue) -> Result<i128> {
        self.term(t)
    }
}

/// `Σ u(t_i, A) − Σ u(t_i, B)`.
pub fn two_alt_score(mech: &TwoAltMechanism, profile: &[TypeValue]) -> Result<f64> {
    Ok(mech.fixed_score(profile)? as f64 / FIXED_SCALE)
}

/// Runs a two-alternative mechanism: alternative 0 (`A`) or 1 (`B`).
pub fn run_two_alt(mech: &TwoAltMechanism, profile: &[TypeValue]) -> Result<usize> {
    Ok(mech.decide(mech.fixed_score(profile)?))
}

/// Binary player × option weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct WeightMatrix {
    pub rows: Vec<Vec<u8>>,
    /// Declared `c₁`: every column should sum to at least `c₁ · n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_column_fraction: Option<f64>,
}

impl WeightMatrix {
    pub fn ones(players: usize, options: usize) -> Self {
        Self {
            rows: vec![vec![1; options]; players],
            min_column_fraction: None,
        }
    }

    pub fn options(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.options()];
        for row in &self.rows {
            for (s, &w) in sums.iter_mut().zip(row) {
                *s += w as u64;
            }
        }
        sums
    }

    /// Errors for malformed matrices, warnings for columns below `c₁ · n`.
    pub fn validate(&self, players: usize, options: usize) -> Result<Vec<String>> {
        if self.rows.len() != players || self.rows.iter().any(|r| r.len() != options) {
            return Err(AuditError::config(
                "mechanism.weights.rows",
                format!("expected a {players} x {options} matrix"),
            ));
        }
        if self.rows.iter().flatten().any(|&w| w > 1) {
            return Err(AuditError::config("mechanism.weights.rows", "weights must be 0 or 1"));
        }
        let mut warnings = Vec::new();
        if let Some(c1) = self.min_column_fraction {
            for (j, s) in self.column_sums().iter().enumerate() {
                if (*s as f64) < c1 * players as f64 {
                    warnings.push(format!(
                        "option {j}: weight column sum {s} is below c1 * n = {}",
                        c1 * players as f64
                    ));
                }
            }
        }
        Ok(warnings)
    }
}

/// `sw_j = Σ_i w_ij · t_i(o_j)` for real valuations `valuations[i][j]`.
pub fn social_welfare_vector(weights: &WeightMatrix, valuations: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = weights.options();
    if valuations.len() != weights.rows.len() || valuations.iter().any(|v| v.len() != m) {
        return Err(AuditError::config(
            "valuations",
            format!("expected {} x {m} valuations", weights.rows.len()),
        ));
    }
    let mut sw = vec![0.0; m];
    for (row, vals) in weights.rows.iter().zip(valuations) {
        for j in 0..m {
            if row[j] != 0 {
                sw[j] += vals[j];
            }
        }
    }
    Ok(sw)
}

/// The `cardinality` indices with the largest values, lowest index first on
/// ties, returned in increasing order.
pub fn select_max_welfare<T: PartialOrd + Copy>(values: &[T], cardinality: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps lower indices ahead among equal values.
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut top: Vec<usize> = idx.into_iter().take(cardinality.min(values.len())).collect();
    top.sort_unstable();
    top
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SwChooser {
    /// The `count` options with the largest welfare.
    MaxWelfareK {
        count: usize,
    },
    /// The `count` options with the largest average welfare among players
    /// whose weight is 1. Options nobody weighs are ranked last.
    AverageWelfareK {
        count: usize,
    },
    Constant {
        alternative: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SocialWelfareMechanism {
    pub weights: WeightMatrix,
    pub chooser: SwChooser,
}

/// Exact welfare of a grid profile: `sw_j = key_j · bound / (resolution − 1)`
/// with integer `key_j`, plus the column weight totals.
pub fn grid_welfare_keys(
    weights: &WeightMatrix,
    space: &TypeSpace,
    profile: &[TypeValue],
) -> Result<(Vec<i64>, Vec<i64>)> {
    let (resolution, m) = match space {
        TypeSpace::ValuationGrid {
            resolution, options, ..
        } => (*resolution as i64, *options),
        _ => return Err(AuditError::domain("social welfare needs a valuation-grid type space")),
    };
    if profile.len() != weights.rows.len() {
        return Err(AuditError::config(
            "profile",
            format!("expected {} types, got {}", weights.rows.len(), profile.len()),
        ));
    }
    let mut grid_sum = vec![0i64; m];
    let mut weight_sum = vec![0i64; m];
    for (row, t) in weights.rows.iter().zip(profile) {
        let g = match t {
            TypeValue::Grid(g) if g.len() == m => g,
            _ => return Err(AuditError::domain(format!("type {t:?} is not a grid valuation"))),
        };
        for j in 0..m {
            if row[j] != 0 {
                grid_sum[j] += g[j] as i64;
                weight_sum[j] += 1;
            }
        }
    }
    // value(g) = -α + 2αg/(R-1)  =>  Σ = α/(R-1) · (2Σg − W(R−1)).
    let keys = grid_sum
        .iter()
        .zip(&weight_sum)
        .map(|(&g, &w)| 2 * g - w * (resolution - 1))
        .collect();
    Ok((keys, weight_sum))
}

/// Real welfare vector of a grid profile.
pub fn grid_social_welfare(weights: &WeightMatrix, space: &TypeSpace, profile: &[TypeValue]) -> Result<Vec<f64>> {
    let (keys, _) = grid_welfare_keys(weights, space, profile)?;
    let scale = match space {
        TypeSpace::ValuationGrid { bound, resolution, .. } => bound / (*resolution as f64 - 1.0),
        _ => unreachable!(),
    };
    Ok(keys.iter().map(|&k| k as f64 * scale).collect())
}

/// Exact rational average `key / weight` compared by cross-multiplication.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Ratio {
    num: i64,
    den: i64,
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match (self.den, other.den) {
            (0, 0) => Some(std::cmp::Ordering::Equal),
            (0, _) => Some(std::cmp::Ordering::Less),
            (_, 0) => Some(std::cmp::Ordering::Greater),
            _ => (self.num as i128 * other.den as i128).partial_cmp(&(other.num as i128 * self.den as i128)),
        }
    }
}

impl SocialWelfareMechanism {
    /// Option set chosen for a grid profile.
    pub fn choose_options(&self, space: &TypeSpace, profile: &[TypeValue]) -> Result<Option<Vec<usize>>> {
        let (keys, weight_sum) = grid_welfare_keys(&self.weights, space, profile)?;
        Ok(self.choose_from_keys(&keys, &weight_sum))
    }

    /// Option set chosen from integer welfare keys and column weights.
    pub fn choose_from_keys(&self, keys: &[i64], weight_sum: &[i64]) -> Option<Vec<usize>> {
        match &self.chooser {
            SwChooser::MaxWelfareK { count } => Some(select_max_welfare(&keys, *count)),
            SwChooser::AverageWelfareK { count } => {
                let ratios: Vec<Ratio> = keys
                    .iter()
                    .zip(weight_sum)
                    .map(|(&num, &den)| Ratio { num, den })
                    .collect();
                Some(select_max_welfare(&ratios, *count))
            }
            SwChooser::Constant { .. } => None,
        }
    }
}

/// Alternative whose option set equals `options`.
pub(crate) fn alternative_for(env: &Environment, options: &[usize]) -> Result<usize> {
    env.alternatives
        .iter()
        .enumerate()
        .position(|(s, alt)| {
            if alt.options.is_empty() {
                options.len() == 1 && options[0] == s
            } else {
                alt.options.len() == options.len() && {
                    let mut sorted = alt.options.clone();
                    sorted.sort_unstable();
                    sorted == options
                }
            }
        })
        .ok_or_else(|| AuditError::domain(format!("no alternative has option set {options:?}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mechanism {
    Histogram(HistogramMechanism),
    TwoAlt(TwoAltMechanism),
    SocialWelfare(SocialWelfareMechanism),
}

impl Mechanism {
    /// A mechanism that ignores its input.
    pub fn constant(alternative: usize, blocks: Partition) -> Self {
        Mechanism::Histogram(HistogramMechanism {
            partition: blocks,
            chooser: HistogramChooser::Constant { alternative },
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            Mechanism::Histogram(_) => "histogram",
            Mechanism::TwoAlt(_) => "two_alt",
            Mechanism::SocialWelfare(_) => "social_welfare",
        }
    }

    /// Checks the mechanism against `env`; returns non-fatal warnings.
    pub fn validate(&self, env: &Environment) -> Result<Vec<String>> {
        let alternatives = env.alternatives.len();
        match self {
            Mechanism::Histogram(h) => {
                h.partition.validate(&env.type_space)?;
                h.chooser.validate(h.partition.blocks(), alternatives)?;
                Ok(Vec::new())
            }
            Mechanism::TwoAlt(t) => {
                if alternatives != 2 {
                    return Err(AuditError::config(
                        "environment.alternatives",
                        "two-alternative mechanism needs exactly two alternatives",
                    ));
                }
                t.on_a.validate("mechanism.on_a")?;
                t.on_b.validate("mechanism.on_b")?;
                match &t.rule {
                    TwoAltRule::Threshold { cost } if !cost.is_finite() => {
                        Err(AuditError::config("mechanism.rule.cost", "cost must be finite"))
                    }
                    TwoAltRule::Constant { alternative } if *alternative > 1 => {
                        Err(AuditError::config("mechanism.rule.alternative", "must be 0 or 1"))
                    }
                    _ => Ok(Vec::new()),
                }
            }
            Mechanism::SocialWelfare(sw) => {
                let options = match &env.type_space {
                    TypeSpace::ValuationGrid { options, .. } => *options,
                    _ => {
                        return Err(AuditError::config(
                            "environment.type_space",
                            "social-welfare mechanism needs a valuation grid",
                        ))
                    }
                };
                let warnings = sw.weights.validate(env.players, options)?;
                match &sw.chooser {
                    SwChooser::MaxWelfareK { count } | SwChooser::AverageWelfareK { count } => {
                        if *count == 0 || *count > options {
                            return Err(AuditError::config(
                                "mechanism.chooser.count",
                                format!("must be in 1..={options}"),
                            ));
                        }
                        // Every option set of this size must name an alternative.
                        for set in k_subsets(options, *count) {
                            alternative_for(env, &set).map_err(|_| {
                                AuditError::config(
                                    "environment.alternatives",
                                    format!("option set {set:?} has no alternative"),
                                )
                            })?;
                        }
                    }
                    SwChooser::Constant { alternative } if *alternative >= alternatives => {
                        return Err(AuditError::config("mechanism.chooser.alternative", "does not exist"));
                    }
                    SwChooser::Constant { .. } => {}
                }
                Ok(warnings)
            }
        }
    }

    /// Symmetry class of every player: the output is invariant under
    /// permutations of players within a class.
    pub fn player_classes(&self, players: usize) -> Vec<usize> {
        match self {
            Mechanism::SocialWelfare(sw) => {
                let mut reps: Vec<&Vec<u8>> = Vec::new();
                sw.weights
                    .rows
                    .iter()
                    .map(|row| match reps.iter().position(|r| *r == row) {
                        Some(c) => c,
                        None => {
                            reps.push(row);
                            reps.len() - 1
                        }
                    })
                    .collect()
            }
            _ => vec![0; players],
        }
    }

    pub fn is_anonymous(&self, players: usize) -> bool {
        self.player_classes(players).iter().all(|&c| c == 0)
    }

    /// `M(profile)` as an alternative index.
    pub fn run(&self, env: &Environment, profile: &[TypeValue]) -> Result<usize> {
        if profile.len() != env.players {
            return Err(AuditError::config(
                "profile",
                format!("expected {} types, got {}", env.players, profile.len()),
            ));
        }
        match self {
            Mechanism::Histogram(h) => run_histogram_mechanism(h, &env.type_space, profile),
            Mechanism::TwoAlt(t) => run_two_alt(t, profile),
            Mechanism::SocialWelfare(sw) => match sw.choose_options(&env.type_space, profile)? {
                Some(set) => alternative_for(env, &set),
                None => match sw.chooser {
                    SwChooser::Constant { alternative } => Ok(alternative),
                    _ => unreachable!(),
                },
            },
        }
    }
}

pub fn run_histogram_mechanism(mech: &HistogramMechanism, space: &TypeSpace, profile: &[TypeValue]) -> Result<usize> {
    Ok(mech.chooser.choose(&histogram_of(&mech.partition, space, profile)?))
}

/// Dispatches to the family-specific runner.
pub fn run_mechanism(mech: &Mechanism, env: &Environment, profile: &[TypeValue]) -> Result<usize> {
    mech.run(env, profile)
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}
