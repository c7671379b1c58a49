//! Deviation gains under the truthful strategy profile, persistent
//! truthfulness checks and the privacy-to-truthfulness inequality.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{evaluate_utility, Environment, TypeValue};
use crate::error::{AuditError, Result};
use crate::mechanism::Mechanism;
use crate::outcome::{OutcomeModel, OutputDistribution};
use crate::privacy::{audit_bdp, AuditSettings, Method, PrivacyParams, PrivacyReport};
use crate::rng::{hash_words, RandomStream};
use crate::scenario::{adversary_announcements, candidate_sets, first_players_outside, multisets, tuples};

/// Stream tag for truthfulness sweeps.
const TRUTH_STREAM: u64 = 0x5452_5554;

/// Mean utility with its Monte Carlo standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub method: Method,
}

/// `Σ_s P(s) u(t, s)` and the variance of `u(t, M)` under `P`.
fn utility_moments(env: &Environment, player: usize, t: &TypeValue, law: &OutputDistribution) -> Result<(f64, f64)> {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (s, &p) in law.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let u = evaluate_utility(env, player, t, s)?;
        mean += p * u;
        second += p * u * u;
    }
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// `E_{t_J}[u_player(true_type, M(fixed, t_J))]`, exact when the budget
/// allows.
pub fn expected_utility(
    model: &OutcomeModel,
    player: usize,
    true_type: &TypeValue,
    fixed: &[(usize, TypeValue)],
    settings: &AuditSettings,
    stream: RandomStream,
) -> Result<UtilityEstimate> {
    let law = model.distribution(fixed, settings.mc_samples, stream)?;
    let (mean, var) = utility_moments(model.env, player, true_type, &law)?;
    Ok(UtilityEstimate {
        mean,
        standard_error: law.samples().map_or(0.0, |n| (var / n as f64).sqrt()),
        method: if law.is_exact() {
            Method::Exact
        } else {
            Method::MonteCarlo
        },
    })
}

/// A coalition deviation: `coalition` with true types `true_types`
/// announces `announced` while `adversaries` announce
/// `adversary_announcements`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalitionScenario {
    pub coalition: Vec<usize>,
    pub true_types: Vec<TypeValue>,
    pub announced: Vec<TypeValue>,
    pub adversaries: Vec<usize>,
    pub adversary_announcements: Vec<TypeValue>,
    /// Stream of the Monte Carlo draws, when sampled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream: Option<RandomStream>,
}

impl CoalitionScenario {
    fn fixed(&self, announced: &[TypeValue]) -> Vec<(usize, TypeValue)> {
        self.coalition
            .iter()
            .cloned()
            .zip(announced.iter().cloned())
            .chain(
                self.adversaries
                    .iter()
                    .cloned()
                    .zip(self.adversary_announcements.iter().cloned()),
            )
            .collect()
    }

    /// Number of coalition members announcing something other than their type.
    pub fn liars(&self) -> usize {
        self.true_types
            .iter()
            .zip(&self.announced)
            .filter(|(t, a)| t != a)
            .count()
    }
}

/// Largest gain found and the deviation that attains it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub scenario: CoalitionScenario,
    /// Position in the coalition of the member who gains.
    pub focal: usize,
    pub gain: f64,
}

/// Per-member gains of every deviation of one context.
#[derive(Clone, Debug, PartialEq)]
struct ContextOutcome {
    /// `gains[d][j]`: gain of member `j` under deviation `d`.
    gains: Vec<Vec<f64>>,
    /// Confidence radii matching `gains`.
    radii: Vec<Vec<f64>>,
    method: Method,
    stream: Option<RandomStream>,
}

/// Truthful context of a coalition sweep.
#[derive(Clone, Debug, PartialEq)]
struct Context {
    coalition: Vec<usize>,
    true_types: Vec<TypeValue>,
    adversaries: Vec<usize>,
    announcements: Vec<TypeValue>,
}

/// Memoised exact output laws keyed by the announcements that matter.
struct LawCache<'m> {
    model: &'m OutcomeModel<'m>,
    anonymous: bool,
    map: Mutex<HashMap<Vec<u64>, Arc<OutputDistribution>>>,
}

impl<'m> LawCache<'m> {
    fn new(model: &'m OutcomeModel<'m>) -> Self {
        Self {
            model,
            anonymous: model.mech.is_anonymous(model.env.players),
            map: Mutex::new(HashMap::new()),
        }
    }

    fn announcement_key(&self, t: &TypeValue) -> Result<u64> {
        if let Mechanism::Histogram(h) = self.model.mech {
            return Ok(h.partition.block_of(&self.model.env.type_space, t)? as u64);
        }
        Ok(match t {
            TypeValue::Label(i) => *i as u64,
            TypeValue::Real(x) => x.to_bits(),
            TypeValue::Grid(g) => hash_words(&g.iter().map(|&c| c as u64).collect::<Vec<_>>()),
        })
    }

    fn key(&self, fixed: &[(usize, TypeValue)]) -> Result<Vec<u64>> {
        let mut entries = fixed
            .iter()
            .map(|(p, t)| Ok((*p as u64, self.announcement_key(t)?)))
            .collect::<Result<Vec<_>>>()?;
        if self.anonymous {
            let mut keys: Vec<u64> = entries.iter().map(|e| e.1).collect();
            keys.sort_unstable();
            Ok(keys)
        } else {
            entries.sort_unstable();
            Ok(entries.into_iter().flat_map(|(p, k)| [p, k]).collect())
        }
    }

    fn exact(&self, fixed: &[(usize, TypeValue)]) -> Result<Arc<OutputDistribution>> {
        let key = self.key(fixed)?;
        if let Some(hit) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let law = Arc::new(self.model.exact(fixed)?);
        self.map
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| law.clone());
        Ok(law)
    }
}

fn evaluate_context(
    cache: &LawCache,
    ctx: &Context,
    deviations: &[Vec<TypeValue>],
    settings: &AuditSettings,
    stream: RandomStream,
) -> Result<ContextOutcome> {
    let model = cache.model;
    let env = model.env;
    let scenario = CoalitionScenario {
        coalition: ctx.coalition.clone(),
        true_types: ctx.true_types.clone(),
        announced: ctx.true_types.clone(),
        adversaries: ctx.adversaries.clone(),
        adversary_announcements: ctx.announcements.clone(),
        stream: None,
    };
    let truth_fixed = scenario.fixed(&ctx.true_types);
    let members = ctx.coalition.len();
    match cache.exact(&truth_fixed) {
        Ok(truth_law) => {
            let base = (0..members)
                .map(|j| Ok(utility_moments(env, ctx.coalition[j], &ctx.true_types[j], &truth_law)?.0))
                .collect::<Result<Vec<f64>>>()?;
            let mut gains = Vec::with_capacity(deviations.len());
            for dev in deviations {
                let law = cache.exact(&scenario.fixed(dev))?;
                gains.push(
                    (0..members)
                        .map(|j| Ok(utility_moments(env, ctx.coalition[j], &ctx.true_types[j], &law)?.0 - base[j]))
                        .collect::<Result<Vec<f64>>>()?,
                );
            }
            let radii = vec![vec![0.0; members]; deviations.len()];
            Ok(ContextOutcome {
                gains,
                radii,
                method: Method::Exact,
                stream: None,
            })
        }
        Err(AuditError::Budget { .. }) => {
            let mut variants = vec![truth_fixed];
            variants.extend(deviations.iter().map(|d| scenario.fixed(d)));
            let laws = model.monte_carlo(&variants, settings.mc_samples, stream)?;
            let n = settings.mc_samples as f64;
            let base = (0..members)
                .map(|j| utility_moments(env, ctx.coalition[j], &ctx.true_types[j], &laws[0]))
                .collect::<Result<Vec<_>>>()?;
            let mut gains = Vec::with_capacity(deviations.len());
            let mut radii = Vec::with_capacity(deviations.len());
            for law in &laws[1..] {
                let mut g = Vec::with_capacity(members);
                let mut r = Vec::with_capacity(members);
                for j in 0..members {
                    let (mean, var) = utility_moments(env, ctx.coalition[j], &ctx.true_types[j], law)?;
                    g.push(mean - base[j].0);
                    r.push(settings.z * ((var + base[j].1) / n).sqrt());
                }
                gains.push(g);
                radii.push(r);
            }
            Ok(ContextOutcome {
                gains,
                radii,
                method: Method::MonteCarlo,
                stream: Some(stream),
            })
        }
        Err(e) => Err(e),
    }
}

/// Every deviation context of a `(k, r)` cell together with its gains.
#[derive(Clone, Debug)]
pub struct CoalitionSweep {
    pub k: usize,
    pub r: usize,
    contexts: Vec<Context>,
    deviations: Vec<Vec<TypeValue>>,
    outcomes: Vec<ContextOutcome>,
    /// Every context and deviation was covered exactly.
    pub exhaustive: bool,
    /// Candidate grids did not cover the type space, so gains are lower bounds.
    pub lower_bound: bool,
}

impl CoalitionSweep {
    fn scenario(&self, c: usize, d: usize) -> CoalitionScenario {
        let ctx = &self.contexts[c];
        CoalitionScenario {
            coalition: ctx.coalition.clone(),
            true_types: ctx.true_types.clone(),
            announced: self.deviations[d].clone(),
            adversaries: ctx.adversaries.clone(),
            adversary_announcements: ctx.announcements.clone(),
            stream: self.outcomes[c].stream,
        }
    }

    pub fn method(&self) -> String {
        let exact = self.outcomes.iter().filter(|o| o.method == Method::Exact).count();
        match exact {
            e if e == self.outcomes.len() => "exact",
            0 => "monte_carlo",
            _ => "mixed",
        }
        .to_string()
    }

    /// Largest single-member gain, first witness on ties.
    pub fn max_member_gain(&self) -> (f64, f64, Option<Witness>) {
        let mut best = 0.0;
        let mut radius = 0.0;
        let mut witness = None;
        for (c, out) in self.outcomes.iter().enumerate() {
            for (d, gains) in out.gains.iter().enumerate() {
                for (j, &g) in gains.iter().enumerate() {
                    if witness.is_none() || g > best {
                        best = g;
                        radius = out.radii[d][j];
                        witness = Some(Witness {
                            scenario: self.scenario(c, d),
                            focal: j,
                            gain: g,
                        });
                    }
                }
            }
        }
        (best, radius, witness)
    }

    /// Largest coalition-sum gain after each liar pays `fine` in
    /// expectation; first witness on ties.
    pub fn max_coalition_sum(&self, fine: f64) -> (f64, f64, Option<Witness>) {
        let mut best = 0.0;
        let mut radius = 0.0;
        let mut witness = None;
        for (c, out) in self.outcomes.iter().enumerate() {
            for (d, gains) in out.gains.iter().enumerate() {
                let scenario = self.scenario(c, d);
                let liars = scenario.liars();
                let total: f64 = gains.iter().sum();
                let paid = if liars == 0 { 0.0 } else { liars as f64 * fine };
                let value = total - paid;
                if witness.is_none() || value > best {
                    best = value;
                    radius = out.radii[d].iter().sum();
                    witness = Some(Witness {
                        scenario,
                        focal: 0,
                        gain: value,
                    });
                }
            }
        }
        (best, radius, witness)
    }
}

/// Enumerates coalitions of `r` members facing `k` deviators.
pub fn coalition_sweep(model: &OutcomeModel, k: usize, r: usize, settings: &AuditSettings) -> Result<CoalitionSweep> {
    let env = model.env;
    let mech = model.mech;
    let n = env.players;
    if r == 0 {
        return Err(AuditError::domain("coalitions need at least one member"));
    }
    let size = r.min(n);
    let adversary_count = k.min(n - size);
    let base = RandomStream::new(settings.seed, TRUTH_STREAM)
        .derive(k as u64)
        .derive(r as u64);
    let cands = candidate_sets(mech, env, &settings.search, base.derive(1))?;
    let (anns, anns_complete) =
        adversary_announcements(mech, env, &cands, adversary_count, &settings.search, base.derive(2))?;

    let utility_reps = env.distinct_utility_players();
    let symmetric = mech.is_anonymous(n) && utility_reps.len() == 1;

    let coalitions: Vec<Vec<usize>> = if symmetric {
        vec![(0..size).collect()]
    } else {
        let mut reps = utility_reps.clone();
        let classes = mech.player_classes(n);
        for p in 0..n {
            if !reps.iter().any(|&q| classes[q] == classes[p]) {
                reps.push(p);
            }
        }
        reps.sort_unstable();
        reps.into_iter()
            .map(|p| {
                let mut c = vec![p];
                c.extend(first_players_outside(n, &[p], size - 1));
                c
            })
            .collect()
    };

    let truth_sets: Vec<Vec<TypeValue>> = if symmetric && cands.truth_complete {
        multisets(cands.truth.len(), size)
            .into_iter()
            .map(|m| m.into_iter().map(|i| cands.truth[i].clone()).collect())
            .collect()
    } else {
        let others = if cands.truth_complete {
            cands.truth.clone()
        } else {
            env.type_space.extremes()
        };
        let mut out = Vec::new();
        for focal in &cands.truth {
            for rest in tuples(others.len(), size - 1) {
                let mut v = vec![focal.clone()];
                v.extend(rest.into_iter().map(|i| others[i].clone()));
                out.push(v);
            }
        }
        out
    };

    let deviations: Vec<Vec<TypeValue>> = tuples(cands.announce.len(), size)
        .into_iter()
        .map(|t| t.into_iter().map(|i| cands.announce[i].clone()).collect())
        .collect();

    let mut contexts = Vec::new();
    for coalition in &coalitions {
        let adversaries = first_players_outside(n, coalition, adversary_count);
        for ann in &anns {
            for truth in &truth_sets {
                contexts.push(Context {
                    coalition: coalition.clone(),
                    true_types: truth.clone(),
                    adversaries: adversaries.clone(),
                    announcements: ann.clone(),
                });
            }
        }
    }

    let cache = LawCache::new(model);
    let outcomes: Vec<ContextOutcome> = contexts
        .par_iter()
        .enumerate()
        .map(|(c, ctx)| evaluate_context(&cache, ctx, &deviations, settings, base.derive(1000 + c as u64)))
        .collect::<Result<_>>()?;
    let all_exact = outcomes.iter().all(|o| o.method == Method::Exact);
    Ok(CoalitionSweep {
        k: adversary_count,
        r: size,
        contexts,
        deviations,
        outcomes,
        exhaustive: symmetric && cands.truth_complete && cands.announce_complete && anns_complete && all_exact,
        lower_bound: !(cands.truth_complete && cands.announce_complete),
    })
}

/// Best gain of one scenario family, with its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainResult {
    pub gain: f64,
    pub ci_radius: f64,
    pub witness: Witness,
    pub method: Method,
    pub lower_bound: bool,
}

/// `max_{t′_C, i ∈ C} EU_i(t′_C) − EU_i(t_C)` over the announcement
/// candidates, with `adversaries` announcing `announcements`.
pub fn best_coalition_deviation_gain(
    model: &OutcomeModel,
    coalition: &[usize],
    true_types: &[TypeValue],
    adversaries: &[usize],
    announcements: &[TypeValue],
    settings: &AuditSettings,
) -> Result<GainResult> {
    if coalition.is_empty() || coalition.len() != true_types.len() || adversaries.len() != announcements.len() {
        return Err(AuditError::domain("coalition and announcement lists do not match"));
    }
    if coalition.iter().any(|p| adversaries.contains(p)) {
        return Err(AuditError::domain("coalition members must not be deviators"));
    }
    let stream = RandomStream::new(settings.seed, TRUTH_STREAM).derive(0xB357);
    let cands = candidate_sets(model.mech, model.env, &settings.search, stream)?;
    let deviations: Vec<Vec<TypeValue>> = tuples(cands.announce.len(), coalition.len())
        .into_iter()
        .map(|t| t.into_iter().map(|i| cands.announce[i].clone()).collect())
        .collect();
    let ctx = Context {
        coalition: coalition.to_vec(),
        true_types: true_types.to_vec(),
        adversaries: adversaries.to_vec(),
        announcements: announcements.to_vec(),
    };
    let cache = LawCache::new(model);
    let out = evaluate_context(&cache, &ctx, &deviations, settings, stream.derive(1))?;
    let sweep = CoalitionSweep {
        k: adversaries.len(),
        r: coalition.len(),
        contexts: vec![ctx],
        deviations,
        outcomes: vec![out],
        exhaustive: false,
        lower_bound: !cands.announce_complete,
    };
    let (gain, ci_radius, witness) = sweep.max_member_gain();
    Ok(GainResult {
        gain,
        ci_radius,
        witness: witness.expect("at least one deviation"),
        method: sweep.outcomes[0].method,
        lower_bound: sweep.lower_bound,
    })
}

/// Single-player special case of [`best_coalition_deviation_gain`].
pub fn best_individual_deviation_gain(
    model: &OutcomeModel,
    player: usize,
    true_type: &TypeValue,
    adversaries: &[usize],
    announcements: &[TypeValue],
    settings: &AuditSettings,
) -> Result<GainResult> {
    best_coalition_deviation_gain(
        model,
        &[player],
        std::slice::from_ref(true_type),
        adversaries,
        announcements,
        settings,
    )
}

/// Recomputes the gain of a witness from scratch.
pub fn reevaluate_witness(model: &OutcomeModel, witness: &Witness, settings: &AuditSettings) -> Result<f64> {
    let s = &witness.scenario;
    let j = witness.focal;
    let truth = s.fixed(&s.true_types);
    let dev = s.fixed(&s.announced);
    let (a, b) = match s.stream {
        None => (model.exact(&truth)?, model.exact(&dev)?),
        Some(stream) => {
            let mut laws = model.monte_carlo(&[truth, dev], settings.mc_samples, stream)?;
            let b = laws.pop().expect("two variants");
            (laws.pop().expect("two variants"), b)
        }
    };
    let player = s.coalition[j];
    let t = &s.true_types[j];
    Ok(utility_moments(model.env, player, t, &b)?.0 - utility_moments(model.env, player, t, &a)?.0)
}

/// Result of checking one `(k, r)` cell against `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthfulnessCell {
    pub k: usize,
    pub r: usize,
    pub eps: f64,
    pub max_gain: f64,
    pub gain_ci_radius: f64,
    pub witness: Option<Witness>,
    pub method: String,
    pub exhaustive: bool,
    /// Gains come from a candidate grid and bound the true maximum from below.
    pub lower_bound: bool,
    pub pass: bool,
}

/// Checks that truth-telling is a `(k, r)`-persistent `ε` equilibrium over
/// the generated scenarios.
pub fn check_truthfulness(
    model: &OutcomeModel,
    k: usize,
    r: usize,
    eps: f64,
    settings: &AuditSettings,
) -> Result<TruthfulnessCell> {
    let sweep = coalition_sweep(model, k, r, settings)?;
    Ok(cell_from_sweep(&sweep, eps))
}

pub fn cell_from_sweep(sweep: &CoalitionSweep, eps: f64) -> TruthfulnessCell {
    let (max_gain, gain_ci_radius, witness) = sweep.max_member_gain();
    TruthfulnessCell {
        k: sweep.k,
        r: sweep.r,
        eps,
        max_gain,
        gain_ci_radius,
        witness,
        method: sweep.method(),
        exhaustive: sweep.exhaustive,
        lower_bound: sweep.lower_bound,
        pass: max_gain <= eps,
    }
}

/// `(rε + 2rδ) · 2α`.
pub fn truthfulness_bound_from_privacy(r: usize, params: PrivacyParams, alpha: f64) -> f64 {
    let r = r as f64;
    (r * params.eps + 2.0 * r * params.delta) * (2.0 * alpha)
}

/// Measured gain of the `(k − r + 1, r)` cell against the bound implied by
/// the measured `(k, ε, δ(ε))` curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyTruthfulnessCheck {
    pub k: usize,
    pub r: usize,
    pub measured_gain: f64,
    pub eps_grid: Vec<f64>,
    pub delta: Vec<f64>,
    pub bound: Vec<f64>,
    /// Gain is at most the bound at every grid point.
    pub holds: bool,
    /// One side was not measured exhaustively and exactly.
    pub advisory: bool,
}

/// Compares an existing privacy report and truthfulness cell.
pub fn compare_privacy_and_truthfulness(
    privacy: &PrivacyReport,
    cell: &TruthfulnessCell,
    alpha: f64,
) -> Result<PrivacyTruthfulnessCheck> {
    if cell.r == 0 || cell.r > privacy.k + 1 {
        return Err(AuditError::domain(format!(
            "coalition size {} needs 1 <= r <= k + 1 = {}",
            cell.r,
            privacy.k + 1
        )));
    }
    let exact = privacy.exhaustive && privacy.method == "exact";
    let delta = if exact {
        privacy.worst_delta.clone()
    } else {
        privacy.worst_delta_upper.clone()
    };
    let bound: Vec<f64> = privacy
        .eps_grid
        .iter()
        .zip(&delta)
        .map(|(&eps, &d)| {
            truthfulness_bound_from_privacy(
                cell.r,
                PrivacyParams {
                    k: privacy.k,
                    eps,
                    delta: d,
                },
                alpha,
            )
        })
        .collect();
    Ok(PrivacyTruthfulnessCheck {
        k: privacy.k,
        r: cell.r,
        measured_gain: cell.max_gain,
        eps_grid: privacy.eps_grid.clone(),
        holds: bound.iter().all(|&b| cell.max_gain <= b),
        delta,
        bound,
        advisory: !(exact && cell.exhaustive),
    })
}

/// Audits `(k, ε, δ)` privacy and the `(k − r + 1, r)` cell, then checks
/// that every measured gain respects the implied bound.
pub fn verify_privacy_bound(
    model: &OutcomeModel,
    k: usize,
    r: usize,
    settings: &AuditSettings,
) -> Result<PrivacyTruthfulnessCheck> {
    if r == 0 || r > k + 1 {
        return Err(AuditError::domain(format!(
            "need 1 <= r <= k + 1, got r = {r}, k = {k}"
        )));
    }
    let privacy = audit_bdp(model, k, settings)?;
    let cell = check_truthfulness(model, k + 1 - r, r, f64::INFINITY, settings)?;
    compare_privacy_and_truthfulness(&privacy, &cell, model.env.utility_bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Alternative, TypeDistribution, TypeSpace, UtilitySpec};
    use crate::mechanism::{HistogramMechanism, Partition};
    use crate::outcome::DEFAULT_STATE_BUDGET;

    fn plurality(n: usize) -> (Mechanism, Environment) {
        let env = Environment {
            players: n,
            type_space: TypeSpace::Finite {
                labels: vec!["a".into(), "b".into()],
            },
            distribution: TypeDistribution::Categorical {
                probabilities: vec![0.5, 0.5],
            },
            alternatives: vec![Alternative::named("a"), Alternative::named("b")],
            utility: UtilitySpec::Table {
                values: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            utility_bound: 1.0,
        };
        (
            Mechanism::Histogram(HistogramMechanism::plurality(Partition::identity(2))),
            env,
        )
    }

    #[test]
    fn three_voter_expected_utility() {
        let (mech, env) = plurality(3);
        let model = OutcomeModel::new(&mech, &env, DEFAULT_STATE_BUDGET).unwrap();
        let eu = expected_utility(
            &model,
            0,
            &TypeValue::Label(0),
            &[(0, TypeValue::Label(0))],
            &AuditSettings::default(),
            RandomStream::new(0, 0),
        )
        .unwrap();
        assert!((eu.mean - 0.75).abs() < 1e-15);
        assert_eq!(eu.method, Method::Exact);
    }

    #[test]
    fn no_free_players_is_deterministic() {
        let (mech, env) = plurality(3);
        let model = OutcomeModel::new(&mech, &env, DEFAULT_STATE_BUDGET).unwrap();
        let fixed = [
            (0, TypeValue::Label(1)),
            (1, TypeValue::Label(1)),
            (2, TypeValue::Label(0)),
        ];
        let eu = expected_utility(
            &model,
            2,
            &TypeValue::Label(0),
            &fixed,
            &AuditSettings::default(),
            RandomStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(eu.mean, 0.0);
    }

    #[test]
    fn truthful_plurality_has_zero_individual_gain() {
        let (mech, env) = plurality(3);
        let model = OutcomeModel::new(&mech, &env, DEFAULT_STATE_BUDGET).unwrap();
        for t in 0..2 {
            let g =
                best_individual_deviation_gain(&model, 0, &TypeValue::Label(t), &[], &[], &AuditSettings::default())
                    .unwrap();
            assert_eq!(g.gain, 0.0);
        }
        let cell = check_truthfulness(&model, 0, 1, 0.0, &AuditSettings::default()).unwrap();
        assert!(cell.pass && cell.exhaustive);
        assert_eq!(cell.max_gain, 0.0);
    }

    #[test]
    fn bound_arithmetic() {
        let p = PrivacyParams::new(1, 0.1, 0.01).unwrap();
        assert!((truthfulness_bound_from_privacy(1, p, 1.0) - 0.24).abs() < 1e-15);
        assert!((truthfulness_bound_from_privacy(2, p, 1.0) - 0.48).abs() < 1e-15);
        assert_eq!(
            truthfulness_bound_from_privacy(3, PrivacyParams::new(1, 0.0, 0.0).unwrap(), 1.0),
            0.0
        );
    }

    #[test]
    fn constant_mechanism_never_rewards_lies() {
        let (_, env) = plurality(4);
        let mech = Mechanism::constant(1, Partition::identity(2));
        let model = OutcomeModel::new(&mech, &env, DEFAULT_STATE_BUDGET).unwrap();
        let cell = check_truthfulness(&model, 1, 2, 0.0, &AuditSettings::default()).unwrap();
        assert_eq!(cell.max_gain, 0.0);
        assert!(cell.pass);
        let check = verify_privacy_bound(&model, 1, 2, &AuditSettings::default()).unwrap();
        assert!(check.holds && !check.advisory);
    }

    #[test]
    fn witness_reproduces_gain() {
        let (mech, env) = plurality(4);
        let model = OutcomeModel::new(&mech, &env, DEFAULT_STATE_BUDGET).unwrap();
        let cell = check_truthfulness(&model, 1, 2, 0.0, &AuditSettings::default()).unwrap();
        let w = cell.witness.unwrap();
        assert_eq!(
            reevaluate_witness(&model, &w, &AuditSettings::default()).unwrap(),
            w.gain
        );
    }
}
