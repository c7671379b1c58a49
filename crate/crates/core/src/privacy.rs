//! Bayesian differential privacy: divergences between output laws, the
//! group transform, asymptotic bound shapes and scenario sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::outcome::{OutcomeModel, OutputDistribution};
use crate::rng::RandomStream;
use crate::scenario::{privacy_scenarios, AdversaryConfig, SearchOptions};

/// `(k, ε, δ)` privacy parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(k: usize, eps: f64, delta: f64) -> Result<Self> {
        if !(eps >= 0.0) || !(0.0..=1.0).contains(&delta) {
            return Err(AuditError::domain(format!(
                "need eps >= 0 and delta in [0, 1], got ({eps}, {delta})"
            )));
        }
        Ok(Self { k, eps, delta })
    }
}

/// Group privacy parameters `(c, k, ε, δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPrivacyParams {
    pub group: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
}

/// Smallest δ with `P[Y] <= e^ε Q[Y] + δ` for every event `Y`:
/// `Σ_s max(0, P(s) − e^ε Q(s))`, clamped to `[0, 1]`.
pub fn delta_at_epsilon(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let scale = eps.exp();
    let d: f64 = p.iter().zip(q).map(|(&a, &b)| (a - scale * b).max(0.0)).sum();
    d.clamp(0.0, 1.0)
}

/// Larger of the two orderings of [`delta_at_epsilon`].
pub fn symmetric_delta(p: &[f64], q: &[f64], eps: f64) -> f64 {
    delta_at_epsilon(p, q, eps).max(delta_at_epsilon(q, p, eps))
}

/// `½ Σ |P(s) − Q(s)|`.
pub fn statistical_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `max_{W: P[W] > δ′} ln((P[W] − δ′) / Q[W])`; `+∞` when a feasible `W`
/// has `Q[W] = 0` and `0` when no event has mass above `δ′`.
///
/// For a fixed ratio level the best event is a prefix of the support sorted
/// by `P/Q`, so scanning prefixes finds the maximum.
pub fn approx_max_divergence(p: &[f64], q: &[f64], delta_prime: f64) -> f64 {
    let free: f64 = p.iter().zip(q).filter(|(_, &b)| b == 0.0).map(|(&a, _)| a).sum();
    if free > delta_prime {
        return f64::INFINITY;
    }
    let mut cells: Vec<(f64, f64)> = p
        .iter()
        .zip(q)
        .filter(|(_, &b)| b > 0.0)
        .map(|(&a, &b)| (a, b))
        .collect();
    cells.sort_by(|x, y| (y.0 / y.1).total_cmp(&(x.0 / x.1)));
    let mut best: Option<f64> = None;
    let (mut pw, mut qw) = (free, 0.0);
    for (a, b) in cells {
        pw += a;
        qw += b;
        if pw > delta_prime {
            let v = ((pw - delta_prime) / qw).ln();
            best = Some(best.map_or(v, |x: f64| x.max(v)));
        }
    }
    best.unwrap_or(0.0)
}

/// Group transform: `(k, ε, δ)` for individuals gives
/// `(c, k − c + 1, cε, (e^{cε} − 1)/(e^ε − 1) · δ)` for groups of `c`.
pub fn group_privacy_transform(c: usize, params: PrivacyParams) -> Result<GroupPrivacyParams> {
    if c == 0 || c > params.k + 1 {
        return Err(AuditError::domain(format!(
            "group size {c} must be in 1..={}",
            params.k + 1
        )));
    }
    let cf = c as f64;
    let multiplier = if params.eps == 0.0 {
        cf
    } else {
        (cf * params.eps).exp_m1() / params.eps.exp_m1()
    };
    Ok(GroupPrivacyParams {
        group: c,
        k: params.k + 1 - c,
        eps: cf * params.eps,
        delta: multiplier * params.delta,
    })
}

/// Label attached to every asymptotic bound the tool reports.
pub const SHAPE_LABEL: &str = "shape, non-certified";

/// An asymptotic bound with explicit constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeBound {
    pub eps_prime: f64,
    pub delta: f64,
    /// False when the inputs violate the hypotheses the shape assumes.
    pub in_range: bool,
    pub label: String,
}

fn shape(eps_prime: f64, delta: f64, in_range: bool) -> ShapeBound {
    ShapeBound {
        eps_prime,
        delta,
        in_range,
        label: SHAPE_LABEL.to_string(),
    }
}

/// Default exponent constant of the histogram bound.
pub const HISTOGRAM_BOUND_CONSTANT: f64 = 1.0 / 12.0;

/// `exp(−C (n − k) p_min ε²)`, flagged outside
/// `4 / (p_min (n − k − 1)) <= ε <= 1`.
pub fn histogram_privacy_bound(p_min: f64, n: usize, k: usize, eps: f64, constant: f64) -> ShapeBound {
    let free = n.saturating_sub(k) as f64;
    let lower = 4.0 / (p_min * (free - 1.0));
    let in_range = n > k + 1 && p_min > 0.0 && eps >= lower && eps <= 1.0;
    shape(eps, (-constant * free * p_min * eps * eps).exp(), in_range)
}

/// `(ε + C₁ √(ln(n−k)/(n−k)), C₂ / (ε √(n−k)))`.
pub fn two_alt_privacy_bound(n: usize, k: usize, eps: f64, c1: f64, c2: f64) -> ShapeBound {
    let free = n.saturating_sub(k) as f64;
    let in_range = eps > 0.0 && eps <= 1.0 && k + 2 <= n;
    shape(eps + c1 * (free.ln() / free).sqrt(), c2 / (eps * free.sqrt()), in_range)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwVariant {
    /// Truncated normal valuations with `α = Θ(n^{1/4})`.
    TruncatedNormal,
    /// Any valuation law with a density and a constant `α`.
    General,
}

/// Welfare-mechanism bound shapes.
///
/// Truncated normal: `(ε, exp(−C₁ ε²/m² √n + ln(m √n)))`.
/// General: `(ε + C₁ m √(ln n)/√n, C₂ m² / (ε √n))`.
pub fn sw_privacy_bound(n: usize, k: usize, m: usize, eps: f64, variant: SwVariant, c1: f64, c2: f64) -> ShapeBound {
    let nf = n as f64;
    let mf = m as f64;
    let in_range = eps > 0.0 && eps <= 1.0 && k < n && m >= 1;
    match variant {
        SwVariant::TruncatedNormal => shape(
            eps,
            (-c1 * eps * eps / (mf * mf) * nf.sqrt() + (mf * nf.sqrt()).ln()).exp(),
            in_range,
        ),
        SwVariant::General => shape(
            eps + c1 * mf * nf.ln().sqrt() / nf.sqrt(),
            c2 * mf * mf / (eps * nf.sqrt()),
            in_range,
        ),
    }
}

/// Settings shared by every sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSettings {
    pub eps_grid: Vec<f64>,
    pub mc_samples: u64,
    pub seed: u64,
    /// Standard deviations used for Monte Carlo confidence bounds.
    pub z: f64,
    pub search: SearchOptions,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            eps_grid: vec![0.1, 0.2, 0.5, 1.0],
            mc_samples: 100_000,
            seed: 0,
            z: 3.0,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// Measured δ curve of one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub id: usize,
    pub config: AdversaryConfig,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    /// `δ(ε)` per grid point, maximised over both orderings.
    pub delta: Vec<f64>,
    /// Upper confidence value of `δ(ε)`; equals `delta` for exact laws.
    pub delta_upper: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Outcome of a privacy sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub group_size: usize,
    pub k: usize,
    pub eps_grid: Vec<f64>,
    pub exhaustive: bool,
    pub method: String,
    /// Pointwise maximum of the scenario curves.
    pub worst_delta: Vec<f64>,
    pub worst_delta_upper: Vec<f64>,
    /// Scenario id attaining each worst-case value.
    pub worst_scenario: Vec<usize>,
    pub scenarios: Vec<ScenarioResult>,
}

/// `δ` upper bound from per-cell confidence intervals: `P` at its upper and
/// `Q` at its lower end, both orderings.
fn delta_upper(p: &OutputDistribution, q: &OutputDistribution, eps: f64, z: f64) -> f64 {
    let one_way = |a: &OutputDistribution, b: &OutputDistribution| {
        let scale = eps.exp();
        let d: f64 = (0..a.probs.len())
            .map(|s| (a.interval(s, z).1 - scale * b.interval(s, z).0).max(0.0))
            .sum();
        d.clamp(0.0, 1.0)
    };
    one_way(p, q).max(one_way(q, p))
}

/// Stream tag for privacy sweeps.
const PRIVACY_STREAM: u64 = 0x5052_4956;

/// Evaluates one scenario, exactly when the budget allows.
pub fn evaluate_scenario(
    model: &OutcomeModel,
    id: usize,
    config: &AdversaryConfig,
    settings: &AuditSettings,
    stream: RandomStream,
) -> Result<ScenarioResult> {
    let a = config.fixed(false);
    let b = config.fixed(true);
    let (p, q, note) = match (model.exact(&a), model.exact(&b)) {
        (Ok(p), Ok(q)) => (p, q, None),
        (Err(AuditError::Budget { needed, budget }), _) | (_, Err(AuditError::Budget { needed, budget })) => {
            let mut mc = model.monte_carlo(&[a, b], settings.mc_samples, stream)?;
            let q = mc.pop().expect("two variants");
            let p = mc.pop().expect("two variants");
            let note = model
                .supports_exact()
                .then(|| format!("exact enumeration needs {needed} states, budget {budget}; used Monte Carlo"));
            (p, q, note)
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let delta = settings
        .eps_grid
        .iter()
        .map(|&e| symmetric_delta(&p.probs, &q.probs, e))
        .collect();
    let upper = settings
        .eps_grid
        .iter()
        .map(|&e| delta_upper(&p, &q, e, settings.z))
        .collect();
    Ok(ScenarioResult {
        id,
        config: config.clone(),
        method: if p.is_exact() {
            Method::Exact
        } else {
            Method::MonteCarlo
        },
        samples: p.samples(),
        first: p.probs,
        second: q.probs,
        delta,
        delta_upper: upper,
        note,
    })
}

/// Sweeps explicit scenarios and merges them by pointwise maximum.
pub fn audit_scenarios(
    model: &OutcomeModel,
    group_size: usize,
    k: usize,
    scenarios: &[AdversaryConfig],
    exhaustive_plan: bool,
    settings: &AuditSettings,
) -> Result<PrivacyReport> {
    for s in scenarios {
        s.validate(model.env, k)?;
    }
    let base = RandomStream::new(settings.seed, PRIVACY_STREAM)
        .derive(group_size as u64)
        .derive(k as u64);
    let results: Vec<ScenarioResult> = scenarios
        .par_iter()
        .enumerate()
        .map(|(id, cfg)| evaluate_scenario(model, id, cfg, settings, base.derive(id as u64)))
        .collect::<Result<_>>()?;
    let g = settings.eps_grid.len();
    let mut worst = vec![0.0; g];
    let mut worst_upper = vec![0.0; g];
    let mut worst_id = vec![0; g];
    for r in &results {
        for j in 0..g {
            if r.delta[j] > worst[j] {
                worst[j] = r.delta[j];
                worst_id[j] = r.id;
            }
            worst_upper[j] = f64::max(worst_upper[j], r.delta_upper[j]);
        }
    }
    let all_exact = results.iter().all(|r| r.method == Method::Exact);
    let any_exact = results.iter().any(|r| r.method == Method::Exact);
    Ok(PrivacyReport {
        group_size,
        k,
        eps_grid: settings.eps_grid.clone(),
        exhaustive: exhaustive_plan && all_exact,
        method: match (all_exact, any_exact) {
            (true, _) => "exact",
            (false, true) => "mixed",
            (false, false) => "monte_carlo",
        }
        .to_string(),
        worst_delta: worst,
        worst_delta_upper: worst_upper,
        worst_scenario: worst_id,
        scenarios: results,
    })
}

/// Measures `(k, ε, δ)` privacy over the generated scenarios.
pub fn audit_bdp(model: &OutcomeModel, k: usize, settings: &AuditSettings) -> Result<PrivacyReport> {
    audit_group_bdp(model, 1, k, settings)
}

/// Measures group privacy for groups of `group` players with up to `k`
/// adversaries.
pub fn audit_group_bdp(
    model: &OutcomeModel,
    group: usize,
    k: usize,
    settings: &AuditSettings,
) -> Result<PrivacyReport> {
    let stream = RandomStream::new(settings.seed, PRIVACY_STREAM).derive(0xC0FF_EE00 + group as u64);
    let plan = privacy_scenarios(model.mech, model.env, group, k, &settings.search, stream)?;
    audit_scenarios(model, group, k, &plan.scenarios, plan.exhaustive, settings)
}
