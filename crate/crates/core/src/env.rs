//! The mechanism-design environment: players, type space, type
//! distribution, social alternatives and utilities.
//!
//! Types come in three shapes. A finite space holds opaque labels, an
//! interval space holds real numbers, and a valuation grid holds one value
//! per option, each coordinate stored as an integer grid index so that
//! welfare sums are exact integer arithmetic.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::normal::truncated_std_normal_cdf;
use crate::rng::RandomStream;
use crate::sampling::TypeSampler;

/// A single announced or true type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TypeValue {
    /// Index into the labels of a finite space.
    Label(usize),
    /// Point of an interval space.
    Real(f64),
    /// Per-option grid indices of a valuation grid.
    Grid(Vec<u32>),
}

pub type TypeProfile = Vec<TypeValue>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TypeSpace {
    Finite {
        labels: Vec<String>,
    },
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Valuation functions `O -> [-bound, bound]` over `options` options,
    /// each coordinate restricted to `resolution` evenly spaced points.
    ValuationGrid {
        options: usize,
        bound: f64,
        resolution: u32,
    },
}

impl TypeSpace {
    pub fn validate(&self) -> Result<()> {
        match self {
            TypeSpace::Finite { labels } => {
                if labels.is_empty() {
                    return Err(AuditError::config("type_space.labels", "needs at least one label"));
                }
                let mut seen = labels.clone();
                seen.sort();
                seen.dedup();
                if seen.len() != labels.len() {
                    return Err(AuditError::config("type_space.labels", "labels must be distinct"));
                }
            }
            TypeSpace::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(AuditError::config(
                        "type_space",
                        format!("interval needs finite lo < hi, got [{lo}, {hi}]"),
                    ));
                }
            }
            TypeSpace::ValuationGrid {
                options,
                bound,
                resolution,
            } => {
                if *options == 0 {
                    return Err(AuditError::config("type_space.options", "must be at least 1"));
                }
                if !(*bound > 0.0 && bound.is_finite()) {
                    return Err(AuditError::config("type_space.bound", "must be positive"));
                }
                if *resolution < 2 {
                    return Err(AuditError::config("type_space.resolution", "must be at least 2"));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, t: &TypeValue) -> bool {
        match (self, t) {
            (TypeSpace::Finite { labels }, TypeValue::Label(i)) => *i < labels.len(),
            (TypeSpace::Interval { lo, hi }, TypeValue::Real(x)) => *lo <= *x && *x <= *hi,
            (
                TypeSpace::ValuationGrid {
                    options, resolution, ..
                },
                TypeValue::Grid(g),
            ) => g.len() == *options && g.iter().all(|&c| c < *resolution),
            _ => false,
        }
    }

    /// Number of types, or `None` for a continuum.
    pub fn finite_size(&self) -> Option<u128> {
        match self {
            TypeSpace::Finite { labels } => Some(labels.len() as u128),
            TypeSpace::Interval { .. } => None,
            TypeSpace::ValuationGrid {
                options, resolution, ..
            } => (*resolution as u128).checked_pow(*options as u32),
        }
    }

    /// The `index`-th type of a finite space (grid types in mixed radix,
    /// first option most significant).
    pub fn type_at(&self, index: usize) -> TypeValue {
        match self {
            TypeSpace::Finite { .. } => TypeValue::Label(index),
            TypeSpace::ValuationGrid {
                options, resolution, ..
            } => {
                let r = *resolution as usize;
                let mut coords = vec![0u32; *options];
                let mut rest = index;
                for slot in coords.iter_mut().rev() {
                    *slot = (rest % r) as u32;
                    rest /= r;
                }
                TypeValue::Grid(coords)
            }
            TypeSpace::Interval { .. } => panic!("type_at on a continuous type space"),
        }
    }

    pub fn index_of(&self, t: &TypeValue) -> Option<usize> {
        if !self.contains(t) {
            return None;
        }
        match (self, t) {
            (TypeSpace::Finite { .. }, TypeValue::Label(i)) => Some(*i),
            (TypeSpace::ValuationGrid { resolution, .. }, TypeValue::Grid(g)) => Some(
                g.iter()
                    .fold(0usize, |acc, &c| acc * (*resolution as usize) + c as usize),
            ),
            _ => None,
        }
    }

    /// Spacing between adjacent grid values.
    pub fn grid_step(&self) -> Option<f64> {
        match self {
            TypeSpace::ValuationGrid { bound, resolution, .. } => Some(2.0 * bound / (*resolution as f64 - 1.0)),
            _ => None,
        }
    }

    /// Real valuation represented by grid index `g`.
    pub fn grid_value(&self, g: u32) -> f64 {
        match self {
            TypeSpace::ValuationGrid { bound, resolution, .. } => {
                let last = *resolution - 1;
                // Exact endpoints; interior points from the step.
                if g == last {
                    *bound
                } else {
                    -bound + 2.0 * bound * (g as f64) / (last as f64)
                }
            }
            _ => panic!("grid_value on a non-grid type space"),
        }
    }

    /// Nearest grid index for a real valuation.
    pub fn snap_to_grid(&self, x: f64) -> u32 {
        match self {
            TypeSpace::ValuationGrid { bound, resolution, .. } => {
                let last = (*resolution - 1) as f64;
                let pos = ((x + bound) / (2.0 * bound) * last).round();
                pos.clamp(0.0, last) as u32
            }
            _ => panic!("snap_to_grid on a non-grid type space"),
        }
    }

    /// Real coordinates of a type, for interval and grid spaces.
    pub fn valuations(&self, t: &TypeValue) -> Vec<f64> {
        match t {
            TypeValue::Real(x) => vec![*x],
            TypeValue::Grid(g) => g.iter().map(|&c| self.grid_value(c)).collect(),
            TypeValue::Label(_) => Vec::new(),
        }
    }

    /// Extreme types: every label, both interval ends, or the all-min and
    /// all-max valuations plus each single-option maximum.
    pub fn extremes(&self) -> Vec<TypeValue> {
        match self {
            TypeSpace::Finite { labels } => (0..labels.len()).map(TypeValue::Label).collect(),
            TypeSpace::Interval { lo, hi } => vec![TypeValue::Real(*lo), TypeValue::Real(*hi)],
            TypeSpace::ValuationGrid {
                options, resolution, ..
            } => {
                let top = resolution - 1;
                let mut out = vec![TypeValue::Grid(vec![0; *options]), TypeValue::Grid(vec![top; *options])];
                if *options > 1 {
                    for j in 0..*options {
                        let mut g = vec![0; *options];
                        g[j] = top;
                        out.push(TypeValue::Grid(g));
                    }
                }
                out
            }
        }
    }

    /// Human-readable rendering used in reports.
    pub fn describe(&self, t: &TypeValue) -> String {
        match (self, t) {
            (TypeSpace::Finite { labels }, TypeValue::Label(i)) => {
                labels.get(*i).cloned().unwrap_or_else(|| format!("#{i}"))
            }
            (_, TypeValue::Real(x)) => format!("{x}"),
            (_, TypeValue::Grid(g)) => {
                let vals: Vec<String> = g.iter().map(|&c| format!("{}", self.grid_value(c))).collect();
                format!("({})", vals.join(","))
            }
            (_, TypeValue::Label(i)) => format!("#{i}"),
        }
    }
}

/// One knot of a piecewise-linear density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Knot {
    pub x: f64,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TypeDistribution {
    /// Probability per label (finite space) or per grid point of each
    /// coordinate (valuation grid).
    Categorical { probabilities: Vec<f64> },
    /// 𝒩(0,1) conditioned on `[-bound, bound]`.
    TruncatedStdNormal { bound: f64 },
    /// Piecewise-linear pdf through the knots, zero outside them.
    BoundedDensity { knots: Vec<Knot> },
}

impl TypeDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        let d = 1.0 / (hi - lo);
        TypeDistribution::BoundedDensity {
            knots: vec![Knot { x: lo, density: d }, Knot { x: hi, density: d }],
        }
    }

    /// Checks the distribution on its own and against `space`.
    pub fn validate_for(&self, space: &TypeSpace) -> Result<()> {
        match self {
            TypeDistribution::Categorical { probabilities } => {
                if probabilities.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                    return Err(AuditError::config(
                        "distribution.probabilities",
                        "probabilities must be finite and non-negative",
                    ));
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(AuditError::config(
                        "distribution.probabilities",
                        format!("probabilities sum to {total}, expected 1"),
                    ));
                }
                let expected = match space {
                    TypeSpace::Finite { labels } => labels.len(),
                    TypeSpace::ValuationGrid { resolution, .. } => *resolution as usize,
                    TypeSpace::Interval { .. } => {
                        return Err(AuditError::config(
                            "distribution",
                            "categorical distribution needs a finite or grid type space",
                        ))
                    }
                };
                if probabilities.len() != expected {
                    return Err(AuditError::config(
                        "distribution.probabilities",
                        format!("expected {expected} probabilities, got {}", probabilities.len()),
                    ));
                }
            }
            TypeDistribution::TruncatedStdNormal { bound } => {
                if !(*bound > 0.0 && bound.is_finite()) {
                    return Err(AuditError::config("distribution.bound", "must be positive"));
                }
                let (lo, hi) = support_of(space)?;
                if lo != -bound || hi != *bound {
                    return Err(AuditError::config(
                        "distribution.bound",
                        format!("truncation [-{bound}, {bound}] does not match type space [{lo}, {hi}]"),
                    ));
                }
            }
            TypeDistribution::BoundedDensity { knots } => {
                if knots.len() < 2 {
                    return Err(AuditError::config("distribution.knots", "needs at least two knots"));
                }
                if knots.windows(2).any(|w| !(w[0].x < w[1].x)) {
                    return Err(AuditError::config("distribution.knots", "knot positions must increase"));
                }
                if knots.iter().any(|k| !(k.density >= 0.0) || !k.density.is_finite()) {
                    return Err(AuditError::config(
                        "distribution.knots",
                        "densities must be non-negative",
                    ));
                }
                let mass = density_mass(knots);
                if (mass - 1.0).abs() > 1e-9 {
                    return Err(AuditError::config(
                        "distribution.knots",
                        format!("density integrates to {mass}, expected 1"),
                    ));
                }
                let (lo, hi) = support_of(space)?;
                if knots[0].x != lo || knots[knots.len() - 1].x != hi {
                    return Err(AuditError::config(
                        "distribution.knots",
                        format!("knots must span the type space [{lo}, {hi}]"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Cdf of a continuous scalar law (interval types, grid coordinates).
    pub fn scalar_cdf(&self, x: f64) -> f64 {
        match self {
            TypeDistribution::TruncatedStdNormal { bound } => truncated_std_normal_cdf(*bound, x),
            TypeDistribution::BoundedDensity { knots } => {
                if x <= knots[0].x {
                    return 0.0;
                }
                let mut acc = 0.0;
                for w in knots.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if x >= b.x {
                        acc += 0.5 * (a.density + b.density) * (b.x - a.x);
                    } else {
                        let d = x - a.x;
                        let slope = (b.density - a.density) / (b.x - a.x);
                        acc += a.density * d + 0.5 * slope * d * d;
                        return acc.min(1.0);
                    }
                }
                acc.min(1.0)
            }
            TypeDistribution::Categorical { .. } => panic!("scalar_cdf on a categorical law"),
        }
    }
}

fn support_of(space: &TypeSpace) -> Result<(f64, f64)> {
    match space {
        TypeSpace::Interval { lo, hi } => Ok((*lo, *hi)),
        TypeSpace::ValuationGrid { bound, .. } => Ok((-bound, *bound)),
        TypeSpace::Finite { .. } => Err(AuditError::config(
            "distribution",
            "continuous distribution needs an interval or grid type space",
        )),
    }
}

fn density_mass(knots: &[Knot]) -> f64 {
    knots
        .windows(2)
        .map(|w| 0.5 * (w[0].density + w[1].density) * (w[1].x - w[0].x))
        .sum()
}

/// A bounded real function of a type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFn {
    Constant {
        value: f64,
    },
    Linear {
        slope: f64,
        intercept: f64,
    },
    /// Linear interpolation through `(x, y)` points, constant beyond the ends.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
    /// One value per label of a finite space.
    Table {
        values: Vec<f64>,
    },
}

impl ScalarFn {
    pub fn eval(&self, t: &TypeValue) -> Result<f64> {
        match (self, t) {
            (ScalarFn::Constant { value }, _) => Ok(*value),
            (ScalarFn::Table { values }, TypeValue::Label(i)) => values
                .get(*i)
                .copied()
                .ok_or_else(|| AuditError::domain(format!("label {i} outside function table"))),
            (ScalarFn::Linear { slope, intercept }, TypeValue::Real(x)) => Ok(slope * x + intercept),
            (ScalarFn::PiecewiseLinear { points }, TypeValue::Real(x)) => Ok(interpolate(points, *x)),
            _ => Err(AuditError::domain(format!("function {self:?} cannot take type {t:?}"))),
        }
    }

    /// Value at a real type; `None` for label tables.
    #[inline]
    pub fn eval_real(&self, x: f64) -> Option<f64> {
        match self {
            ScalarFn::Constant { value } => Some(*value),
            ScalarFn::Linear { slope, intercept } => Some(slope * x + intercept),
            ScalarFn::PiecewiseLinear { points } => Some(interpolate(points, x)),
            ScalarFn::Table { .. } => None,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        match self {
            ScalarFn::PiecewiseLinear { points } => {
                if points.is_empty() || points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(AuditError::config(path, "points must be non-empty with increasing x"));
                }
            }
            ScalarFn::Table { values } if values.is_empty() => {
                return Err(AuditError::config(path, "table must not be empty"));
            }
            _ => {}
        }
        Ok(())
    }
}

fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    for w in points.windows(2) {
        if x <= w[1].0 {
            let f = (x - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + f * (w[1].1 - w[0].1);
        }
    }
    last.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec {
    /// `values[type index][alternative]` on a finite space.
    Table { values: Vec<Vec<f64>> },
    /// `u(t, s) = sum of t(o)` over the options of `s` (for singleton
    /// alternatives this is `t(s)` itself).
    ValuationIdentity,
    /// `u_i(t, s) = sum over options o_j of s of w[i][j] * t(o_j)`.
    /// Missing weights mean every weight is 1.
    WeightedAdditive {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<Vec<u8>>>,
    },
    /// Two alternatives `[A, B]` with `u(t, A)` and `u(t, B)` given as
    /// functions of the type.
    TwoAltFromFunction { on_a: ScalarFn, on_b: ScalarFn },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Alternative {
    pub name: String,
    /// Options contained in this alternative (social-welfare settings).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<usize>,
}

impl Alternative {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            options: Vec::new(),
        }
    }

    pub fn with_options(name: impl Into<String>, options: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            options,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub players: usize,
    pub type_space: TypeSpace,
    pub distribution: TypeDistribution,
    pub alternatives: Vec<Alternative>,
    pub utility: UtilitySpec,
    /// Bound α with `|u_i(t, s)| <= α` everywhere.
    pub utility_bound: f64,
}

impl Environment {
    /// Structural validation plus a utility-boundedness spot check.
    pub fn validate(&self) -> Result<()> {
        if self.players < 2 {
            return Err(AuditError::config("environment.players", "need at least 2 players"));
        }
        self.type_space.validate()?;
        self.distribution.validate_for(&self.type_space)?;
        if self.alternatives.is_empty() {
            return Err(AuditError::config(
                "environment.alternatives",
                "need at least one alternative",
            ));
        }
        if !(self.utility_bound > 0.0 && self.utility_bound.is_finite()) {
            return Err(AuditError::config("environment.utility_bound", "must be positive"));
        }
        let m = self.alternatives.len();
        match &self.utility {
            UtilitySpec::Table { values } => {
                let size = match &self.type_space {
                    TypeSpace::Finite { labels } => labels.len(),
                    _ => {
                        return Err(AuditError::config(
                            "environment.utility",
                            "table utility needs a finite type space",
                        ))
                    }
                };
                if values.len() != size || values.iter().any(|row| row.len() != m) {
                    return Err(AuditError::config(
                        "environment.utility.values",
                        format!("expected a {size} x {m} table"),
                    ));
                }
            }
            UtilitySpec::ValuationIdentity | UtilitySpec::WeightedAdditive { .. } => {
                let options = match &self.type_space {
                    TypeSpace::ValuationGrid { options, .. } => *options,
                    _ => {
                        return Err(AuditError::config(
                            "environment.utility",
                            "valuation utilities need a valuation-grid type space",
                        ))
                    }
                };
                for (j, alt) in self.alternatives.iter().enumerate() {
                    let bad = if alt.options.is_empty() {
                        j >= options
                    } else {
                        alt.options.iter().any(|&o| o >= options)
                    };
                    if bad {
                        return Err(AuditError::config(
                            format!("environment.alternatives[{j}].options"),
                            "refers to an option outside the valuation grid",
                        ));
                    }
                }
                if let UtilitySpec::WeightedAdditive { weights: Some(w) } = &self.utility {
                    if w.len() != self.players || w.iter().any(|row| row.len() != options) {
                        return Err(AuditError::config(
                            "environment.utility.weights",
                            format!("expected a {} x {options} matrix", self.players),
                        ));
                    }
                }
            }
            UtilitySpec::TwoAltFromFunction { on_a, on_b } => {
                if m != 2 {
                    return Err(AuditError::config(
                        "environment.alternatives",
                        "two-alternative utility needs exactly two alternatives",
                    ));
                }
                on_a.validate("environment.utility.on_a")?;
                on_b.validate("environment.utility.on_b")?;
            }
        }
        self.check_utility_bound()
    }

    /// Exhaustive on small finite spaces, 10^4 seeded random draws otherwise.
    fn check_utility_bound(&self) -> Result<()> {
        let alpha = self.utility_bound * (1.0 + 1e-12);
        let check = |player: usize, t: &TypeValue| -> Result<()> {
            for s in 0..self.alternatives.len() {
                let u = evaluate_utility(self, player, t, s)?;
                if !(u.abs() <= alpha) {
                    return Err(AuditError::config(
                        "environment.utility_bound",
                        format!(
                            "utility {u} of type {} at alternative {s} exceeds bound {}",
                            self.type_space.describe(t),
                            self.utility_bound
                        ),
                    ));
                }
            }
            Ok(())
        };
        match self.type_space.finite_size() {
            Some(size) if size <= 10_000 => {
                for idx in 0..size as usize {
                    let t = self.type_space.type_at(idx);
                    for player in self.distinct_utility_players() {
                        check(player, &t)?;
                    }
                }
            }
            _ => {
                let sampler = TypeSampler::new(&self.type_space, &self.distribution)?;
                let mut rng = RandomStream::new(0, 0x5eed_b0d).generator();
                let mut extremes = self.type_space.extremes();
                for _ in 0..10_000 {
                    extremes.push(sampler.draw(&mut rng));
                }
                let players = self.distinct_utility_players();
                for (n, t) in extremes.iter().enumerate() {
                    check(players[n % players.len()], t)?;
                }
            }
        }
        Ok(())
    }

    /// One representative player per distinct utility function.
    pub fn distinct_utility_players(&self) -> Vec<usize> {
        match &self.utility {
            UtilitySpec::WeightedAdditive { weights: Some(w) } => {
                let mut reps: Vec<usize> = Vec::new();
                for i in 0..w.len() {
                    if !reps.iter().any(|&r| w[r] == w[i]) {
                        reps.push(i);
                    }
                }
                reps
            }
            _ => vec![0],
        }
    }

    pub fn describe_type(&self, t: &TypeValue) -> String {
        self.type_space.describe(t)
    }
}

/// `u_player(t, s)`.
pub fn evaluate_utility(env: &Environment, player: usize, t: &TypeValue, s: usize) -> Result<f64> {
    if !env.type_space.contains(t) {
        return Err(AuditError::domain(format!("type {t:?} is outside the type space")));
    }
    let alt = env
        .alternatives
        .get(s)
        .ok_or_else(|| AuditError::domain(format!("alternative {s} does not exist")))?;
    let options_of = |alt: &Alternative| -> Vec<usize> {
        if alt.options.is_empty() {
            vec![s]
        } else {
            alt.options.clone()
        }
    };
    match &env.utility {
        UtilitySpec::Table { values } => match t {
            TypeValue::Label(i) => Ok(values[*i][s]),
            _ => Err(AuditError::domain("table utility needs a label type")),
        },
        UtilitySpec::ValuationIdentity => match t {
            TypeValue::Grid(g) => Ok(options_of(alt).iter().map(|&o| env.type_space.grid_value(g[o])).sum()),
            _ => Err(AuditError::domain("valuation utility needs a grid type")),
        },
        UtilitySpec::WeightedAdditive { weights } => match t {
            TypeValue::Grid(g) => {
                let row = match weights {
                    Some(w) => Some(
                        w.get(player)
                            .ok_or_else(|| AuditError::domain(format!("player {player} has no weight row")))?,
                    ),
                    None => None,
                };
                Ok(options_of(alt)
                    .iter()
                    .filter(|&&o| row.is_none_or(|r| r[o] != 0))
                    .map(|&o| env.type_space.grid_value(g[o]))
                    .sum())
            }
            _ => Err(AuditError::domain("valuation utility needs a grid type")),
        },
        UtilitySpec::TwoAltFromFunction { on_a, on_b } => {
            if s == 0 {
                on_a.eval(t)
            } else {
                on_b.eval(t)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_env() -> Environment {
        Environment {
            players: 3,
            type_space: TypeSpace::Finite {
                labels: vec!["a".into(), "b".into()],
            },
            distribution: TypeDistribution::Categorical {
                probabilities: vec![0.5, 0.5],
            },
            alternatives: vec![Alternative::named("a"), Alternative::named("b")],
            utility: UtilitySpec::Table {
                values: vec![vec![1.0, 0.0], vec![0.25, 1.0]],
            },
            utility_bound: 1.0,
        }
    }

    fn grid_env() -> Environment {
        Environment {
            players: 2,
            type_space: TypeSpace::ValuationGrid {
                options: 2,
                bound: 1.0,
                resolution: 11,
            },
            distribution: TypeDistribution::TruncatedStdNormal { bound: 1.0 },
            alternatives: vec![
                Alternative::with_options("o1", vec![0]),
                Alternative::with_options("o2", vec![1]),
            ],
            utility: UtilitySpec::ValuationIdentity,
            utility_bound: 1.0,
        }
    }

    #[test]
    fn valuation_identity_reads_coordinate() {
        let env = grid_env();
        env.validate().unwrap();
        // grid index 4 of 11 on [-1, 1] is -0.2; index 6 is 0.2.
        let t = TypeValue::Grid(vec![6, 4]);
        assert!((evaluate_utility(&env, 0, &t, 1).unwrap() - (-0.2)).abs() < 1e-15);
        assert!((evaluate_utility(&env, 0, &t, 0).unwrap() - 0.2).abs() < 1e-15);
        let exact = TypeValue::Grid(vec![10, 0]);
        assert_eq!(evaluate_utility(&env, 0, &exact, 0).unwrap(), 1.0);
        assert_eq!(evaluate_utility(&env, 0, &exact, 1).unwrap(), -1.0);
    }

    #[test]
    fn two_alt_utility_for_not_building_is_zero() {
        let env = Environment {
            players: 3,
            type_space: TypeSpace::Interval { lo: -1.0, hi: 1.0 },
            distribution: TypeDistribution::uniform(-1.0, 1.0),
            alternatives: vec![Alternative::named("build"), Alternative::named("skip")],
            utility: UtilitySpec::TwoAltFromFunction {
                on_a: ScalarFn::Linear {
                    slope: 1.0,
                    intercept: 0.0,
                },
                on_b: ScalarFn::Constant { value: 0.0 },
            },
            utility_bound: 1.0,
        };
        env.validate().unwrap();
        assert_eq!(evaluate_utility(&env, 0, &TypeValue::Real(0.7), 1).unwrap(), 0.0);
        assert_eq!(evaluate_utility(&env, 0, &TypeValue::Real(0.7), 0).unwrap(), 0.7);
    }

    #[test]
    fn table_lookup_is_exact() {
        let env = finite_env();
        env.validate().unwrap();
        assert_eq!(evaluate_utility(&env, 2, &TypeValue::Label(1), 0).unwrap(), 0.25);
    }

    #[test]
    fn out_of_space_type_is_domain_error() {
        let env = finite_env();
        let err = evaluate_utility(&env, 0, &TypeValue::Label(5), 0).unwrap_err();
        assert!(matches!(err, AuditError::Domain(_)));
        let err = evaluate_utility(&env, 0, &TypeValue::Real(0.1), 0).unwrap_err();
        assert!(matches!(err, AuditError::Domain(_)));
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut env = finite_env();
        env.players = 1;
        assert!(env.validate().is_err());

        let mut env = finite_env();
        env.distribution = TypeDistribution::Categorical {
            probabilities: vec![0.5, 0.4],
        };
        assert!(env.validate().is_err());

        let mut env = finite_env();
        env.utility_bound = 0.5;
        assert!(env.validate().is_err(), "utility 1.0 exceeds bound 0.5");

        let space = TypeSpace::Interval { lo: 1.0, hi: 1.0 };
        assert!(space.validate().is_err());
        let grid = TypeSpace::ValuationGrid {
            options: 1,
            bound: 1.0,
            resolution: 1,
        };
        assert!(grid.validate().is_err());

        let dup = TypeSpace::Finite {
            labels: vec!["x".into(), "x".into()],
        };
        assert!(dup.validate().is_err());
    }

    #[test]
    fn bounded_density_must_integrate_to_one() {
        let space = TypeSpace::Interval { lo: 0.0, hi: 1.0 };
        let bad = TypeDistribution::BoundedDensity {
            knots: vec![Knot { x: 0.0, density: 1.0 }, Knot { x: 1.0, density: 1.5 }],
        };
        assert!(bad.validate_for(&space).is_err());
        let good = TypeDistribution::BoundedDensity {
            knots: vec![Knot { x: 0.0, density: 2.0 }, Knot { x: 1.0, density: 0.0 }],
        };
        good.validate_for(&space).unwrap();
        assert!((good.scalar_cdf(0.5) - 0.75).abs() < 1e-15);
        assert_eq!(good.scalar_cdf(1.0), 1.0);
    }

    #[test]
    fn grid_indexing_round_trips() {
        let space = TypeSpace::ValuationGrid {
            options: 3,
            bound: 2.0,
            resolution: 4,
        };
        assert_eq!(space.finite_size(), Some(64));
        for idx in 0..64 {
            let t = space.type_at(idx);
            assert_eq!(space.index_of(&t), Some(idx));
        }
        assert_eq!(space.snap_to_grid(2.0), 3);
        assert_eq!(space.snap_to_grid(-5.0), 0);
        assert_eq!(space.grid_value(0), -2.0);
        assert_eq!(space.grid_value(3), 2.0);
    }
}
