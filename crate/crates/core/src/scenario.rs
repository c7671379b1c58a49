//! Candidate announcements and adversary scenarios shared by the privacy,
//! truthfulness and deterrent audits.
//!
//! Finite type spaces with an anonymous mechanism are swept exhaustively.
//! Everything else falls back to extremal, random and user-supplied
//! announcements, and the sweep is marked non-exhaustive.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, TypeSpace, TypeValue};
use crate::error::{AuditError, Result};
use crate::mechanism::{Mechanism, Partition};
use crate::rng::RandomStream;
use crate::sampling::TypeSampler;

/// Knobs for scenario generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    /// Grid points used for continuous type candidates, endpoints included.
    pub search_points: usize,
    /// Random announcements added to heuristic sweeps.
    pub random_points: usize,
    /// Extra adversary announcement vectors to try.
    pub user_announcements: Vec<Vec<TypeValue>>,
    /// Finite spaces larger than this are not enumerated.
    pub max_enumerated_types: usize,
    /// Exhaustive sweeps with more scenarios than this fall back to heuristics.
    pub max_scenarios: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            search_points: 33,
            random_points: 4,
            user_announcements: Vec::new(),
            max_enumerated_types: 64,
            max_scenarios: 200_000,
        }
    }
}

/// Announcement and true-type candidates for one mechanism.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSets {
    /// Announcements that cover every distinct effect on the outcome when
    /// `announce_complete` holds.
    pub announce: Vec<TypeValue>,
    pub announce_complete: bool,
    /// True types; the whole type space when `truth_complete` holds.
    pub truth: Vec<TypeValue>,
    pub truth_complete: bool,
    /// Stress announcements: one per block, or the type-space extremes.
    pub extremal: Vec<TypeValue>,
}

fn push_unique(list: &mut Vec<TypeValue>, t: TypeValue) {
    if !list.contains(&t) {
        list.push(t);
    }
}

fn interval_grid(lo: f64, hi: f64, points: usize) -> Vec<TypeValue> {
    match points {
        0 => Vec::new(),
        1 => vec![TypeValue::Real(0.5 * (lo + hi))],
        _ => (0..points)
            .map(|j| {
                if j + 1 == points {
                    TypeValue::Real(hi)
                } else {
                    TypeValue::Real(lo + (hi - lo) * j as f64 / (points - 1) as f64)
                }
            })
            .collect(),
    }
}

/// Builds candidate sets for `mech` on `env`.
pub fn candidate_sets(
    mech: &Mechanism,
    env: &Environment,
    opts: &SearchOptions,
    stream: RandomStream,
) -> Result<CandidateSets> {
    let space = &env.type_space;
    let sampler = TypeSampler::new(space, &env.distribution)?;
    let mut rng = stream.generator();
    let finite = space
        .finite_size()
        .filter(|&s| s <= opts.max_enumerated_types as u128)
        .map(|s| s as usize);

    let (mut truth, truth_complete) = match (finite, space) {
        (Some(size), _) => ((0..size).map(|i| space.type_at(i)).collect::<Vec<_>>(), true),
        (None, TypeSpace::Interval { lo, hi }) => (interval_grid(*lo, *hi, opts.search_points), false),
        (None, _) => {
            let mut v = space.extremes();
            for _ in 0..opts.random_points {
                push_unique(&mut v, sampler.draw(&mut rng));
            }
            (v, false)
        }
    };
    for t in space.extremes() {
        push_unique(&mut truth, t);
    }

    // Block representatives cover every announcement of a histogram mechanism.
    let block_reps = match mech {
        Mechanism::Histogram(h) => match &h.partition {
            Partition::Table { block_of, blocks } => {
                let mut reps = vec![None; *blocks];
                for (idx, &b) in block_of.iter().enumerate() {
                    reps[b].get_or_insert(idx);
                }
                Some(reps.into_iter().flatten().map(|i| space.type_at(i)).collect::<Vec<_>>())
            }
            Partition::Cuts { cuts } => match space {
                TypeSpace::Interval { lo, hi } => {
                    let mut edges = vec![*lo];
                    edges.extend(cuts.iter().copied().filter(|c| c > lo && c <= hi));
                    Some(edges.into_iter().map(TypeValue::Real).collect())
                }
                _ => None,
            },
        },
        _ => None,
    };

    let (announce, announce_complete) = match &block_reps {
        Some(reps) => (reps.clone(), true),
        None => (truth.clone(), truth_complete),
    };
    let extremal = match &block_reps {
        Some(reps) => reps.clone(),
        None => space.extremes(),
    };
    Ok(CandidateSets {
        announce,
        announce_complete,
        truth,
        truth_complete,
        extremal,
    })
}

/// Non-decreasing index tuples of length `size` over `0..items`.
pub fn multisets(items: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, items: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items {
            cur.push(i);
            rec(i, items, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size == 0 || items > 0 {
        rec(0, items, size, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

/// All index tuples of length `size` over `0..items`, lexicographic.
pub fn tuples(items: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..size {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..items).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

fn pick(list: &[TypeValue], idx: &[usize]) -> Vec<TypeValue> {
    idx.iter().map(|&i| list[i].clone()).collect()
}

/// Adversary announcement vectors of length `size`, with a flag telling
/// whether they cover every announcement up to reordering.
pub fn adversary_announcements(
    mech: &Mechanism,
    env: &Environment,
    cands: &CandidateSets,
    size: usize,
    opts: &SearchOptions,
    stream: RandomStream,
) -> Result<(Vec<Vec<TypeValue>>, bool)> {
    if size == 0 {
        return Ok((vec![Vec::new()], true));
    }
    for (j, user) in opts.user_announcements.iter().enumerate() {
        if user.len() != size {
            return Err(AuditError::config(
                format!("audit.search.user_announcements[{j}]"),
                format!("expected {size} announcements, got {}", user.len()),
            ));
        }
        if let Some(bad) = user.iter().find(|t| !env.type_space.contains(t)) {
            return Err(AuditError::config(
                format!("audit.search.user_announcements[{j}]"),
                format!("{bad:?} is outside the type space"),
            ));
        }
    }
    if cands.announce_complete && mech.is_anonymous(env.players) {
        let sets = multisets(cands.announce.len(), size);
        if sets.len() <= opts.max_scenarios {
            return Ok((sets.iter().map(|s| pick(&cands.announce, s)).collect(), true));
        }
    }
    let mut out: Vec<Vec<TypeValue>> = Vec::new();
    let mut add = |v: Vec<TypeValue>| {
        if !out.contains(&v) {
            out.push(v);
        }
    };
    for e in &cands.extremal {
        add(vec![e.clone(); size]);
    }
    let sampler = TypeSampler::new(&env.type_space, &env.distribution)?;
    let mut rng = stream.generator();
    for _ in 0..opts.random_points {
        add((0..size).map(|_| sampler.draw(&mut rng)).collect());
    }
    for user in &opts.user_announcements {
        add(user.clone());
    }
    Ok((out, false))
}

/// One privacy scenario: audited players `audited` switch between `first`
/// and `second` while `adversaries` announce `announcements`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub audited: Vec<usize>,
    pub adversaries: Vec<usize>,
    pub announcements: Vec<TypeValue>,
    pub first: Vec<TypeValue>,
    pub second: Vec<TypeValue>,
}

impl AdversaryConfig {
    /// Fixed announcements with the audited players set to `first` (or
    /// `second`).
    pub fn fixed(&self, second: bool) -> Vec<(usize, TypeValue)> {
        let own = if second { &self.second } else { &self.first };
        self.audited
            .iter()
            .cloned()
            .zip(own.iter().cloned())
            .chain(self.adversaries.iter().cloned().zip(self.announcements.iter().cloned()))
            .collect()
    }

    /// Checks disjointness, arity and type membership.
    pub fn validate(&self, env: &Environment, max_adversaries: usize) -> Result<()> {
        if self.adversaries.len() > max_adversaries {
            return Err(AuditError::domain(format!(
                "{} adversaries exceed the bound {max_adversaries}",
                self.adversaries.len()
            )));
        }
        if self.audited.iter().any(|i| self.adversaries.contains(i)) {
            return Err(AuditError::domain("audited players must not be adversaries"));
        }
        if self.first.len() != self.audited.len()
            || self.second.len() != self.audited.len()
            || self.announcements.len() != self.adversaries.len()
        {
            return Err(AuditError::domain("announcement lists do not match their player sets"));
        }
        let all = self.first.iter().chain(&self.second).chain(&self.announcements);
        if let Some(bad) = all.into_iter().find(|t| !env.type_space.contains(t)) {
            return Err(AuditError::domain(format!("{bad:?} is outside the type space")));
        }
        Ok(())
    }
}

/// Scenarios for a privacy sweep plus whether they cover every case.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioPlan {
    pub scenarios: Vec<AdversaryConfig>,
    pub exhaustive: bool,
}

/// First `count` players outside `exclude`.
pub fn first_players_outside(players: usize, exclude: &[usize], count: usize) -> Vec<usize> {
    (0..players).filter(|p| !exclude.contains(p)).take(count).collect()
}

/// Scenarios for auditing groups of `group` players against up to `k`
/// adversaries.
pub fn privacy_scenarios(
    mech: &Mechanism,
    env: &Environment,
    group: usize,
    k: usize,
    opts: &SearchOptions,
    stream: RandomStream,
) -> Result<ScenarioPlan> {
    let n = env.players;
    if group == 0 || group > n {
        return Err(AuditError::domain(format!("group size {group} must be in 1..={n}")));
    }
    let cands = candidate_sets(mech, env, opts, stream.derive(1))?;
    let anonymous = mech.is_anonymous(n);
    let adversary_count = k.min(n - group);

    // Audited groups: anonymous mechanisms only need one.
    let audited_sets: Vec<Vec<usize>> = if anonymous || group > 1 {
        vec![(0..group).collect()]
    } else {
        let classes = mech.player_classes(n);
        let mut reps: Vec<usize> = Vec::new();
        let mut seen = Vec::new();
        for (p, &c) in classes.iter().enumerate() {
            if !seen.contains(&c) {
                seen.push(c);
                reps.push(p);
            }
        }
        reps.into_iter().map(|p| vec![p]).collect()
    };

    let (anns, anns_complete) = adversary_announcements(mech, env, &cands, adversary_count, opts, stream.derive(2))?;

    // Neighbouring announcement pairs for the audited group.
    let mut pairs: Vec<(Vec<TypeValue>, Vec<TypeValue>)> = Vec::new();
    let mut pairs_complete = false;
    if cands.announce_complete {
        let groups = if anonymous {
            multisets(cands.announce.len(), group)
        } else {
            tuples(cands.announce.len(), group)
        };
        if groups.len() * groups.len() <= opts.max_scenarios {
            for a in &groups {
                for b in &groups {
                    if a != b {
                        pairs.push((pick(&cands.announce, a), pick(&cands.announce, b)));
                    }
                }
            }
            pairs_complete = true;
        }
    }
    if !pairs_complete {
        for a in &cands.extremal {
            for b in &cands.extremal {
                if a != b {
                    pairs.push((vec![a.clone(); group], vec![b.clone(); group]));
                }
            }
        }
        let sampler = TypeSampler::new(&env.type_space, &env.distribution)?;
        let mut rng = stream.derive(3).generator();
        for _ in 0..opts.random_points {
            let a: Vec<TypeValue> = (0..group).map(|_| sampler.draw(&mut rng)).collect();
            let b: Vec<TypeValue> = (0..group).map(|_| sampler.draw(&mut rng)).collect();
            if a != b && !pairs.contains(&(a.clone(), b.clone())) {
                pairs.push((a.clone(), b.clone()));
                pairs.push((b, a));
            }
        }
    }

    let mut scenarios = Vec::new();
    for audited in &audited_sets {
        let adversaries = first_players_outside(n, audited, adversary_count);
        for ann in &anns {
            for (a, b) in &pairs {
                scenarios.push(AdversaryConfig {
                    audited: audited.clone(),
                    adversaries: adversaries.clone(),
                    announcements: ann.clone(),
                    first: a.clone(),
                    second: b.clone(),
                });
            }
        }
    }
    let exhaustive = anonymous && anns_complete && pairs_complete && scenarios.len() <= opts.max_scenarios;
    Ok(ScenarioPlan { scenarios, exhaustive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Alternative, TypeDistribution, UtilitySpec};
    use crate::mechanism::HistogramMechanism;

    fn plurality(n: usize, m: usize) -> (Mechanism, Environment) {
        let env = Environment {
            players: n,
            type_space: TypeSpace::Finite {
                labels: (0..m).map(|i| format!("c{i}")).collect(),
            },
            distribution: TypeDistribution::Categorical {
                probabilities: vec![1.0 / m as f64; m],
            },
            alternatives: (0..m).map(|i| Alternative::named(format!("c{i}"))).collect(),
            utility: UtilitySpec::Table {
                values: (0..m)
                    .map(|i| (0..m).map(|j| f64::from(u8::from(i == j))).collect())
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
    fn multiset_and_tuple_counts() {
        assert_eq!(multisets(3, 2).len(), 6);
        assert_eq!(multisets(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(multisets(0, 2).len(), 0);
        assert_eq!(tuples(3, 2).len(), 9);
        assert_eq!(tuples(2, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn finite_plurality_sweep_is_exhaustive() {
        let (mech, env) = plurality(5, 3);
        let plan = privacy_scenarios(&mech, &env, 1, 2, &SearchOptions::default(), RandomStream::new(0, 0)).unwrap();
        assert!(plan.exhaustive);
        // 6 adversary multisets x 6 ordered pairs.
        assert_eq!(plan.scenarios.len(), 36);
        for s in &plan.scenarios {
            s.validate(&env, 2).unwrap();
        }
    }

    #[test]
    fn adversaries_are_capped_by_player_count() {
        let (mech, env) = plurality(3, 2);
        let plan = privacy_scenarios(&mech, &env, 1, 5, &SearchOptions::default(), RandomStream::new(0, 0)).unwrap();
        assert!(plan.scenarios.iter().all(|s| s.adversaries.len() == 2));
    }

    #[test]
    fn interval_sweep_is_heuristic() {
        let env = Environment {
            players: 10,
            type_space: TypeSpace::Interval { lo: -1.0, hi: 1.0 },
            distribution: TypeDistribution::uniform(-1.0, 1.0),
            alternatives: vec![Alternative::named("A"), Alternative::named("B")],
            utility: UtilitySpec::TwoAltFromFunction {
                on_a: crate::env::ScalarFn::Linear {
                    slope: 1.0,
                    intercept: 0.0,
                },
                on_b: crate::env::ScalarFn::Constant { value: 0.0 },
            },
            utility_bound: 1.0,
        };
        let mech = Mechanism::TwoAlt(crate::mechanism::TwoAltMechanism {
            on_a: crate::env::ScalarFn::Linear {
                slope: 1.0,
                intercept: 0.0,
            },
            on_b: crate::env::ScalarFn::Constant { value: 0.0 },
            rule: crate::mechanism::TwoAltRule::Threshold { cost: 0.0 },
        });
        let opts = SearchOptions::default();
        let cands = candidate_sets(&mech, &env, &opts, RandomStream::new(0, 0)).unwrap();
        assert_eq!(cands.truth.len(), 33);
        assert!(!cands.truth_complete);
        let plan = privacy_scenarios(&mech, &env, 1, 1, &opts, RandomStream::new(0, 0)).unwrap();
        assert!(!plan.exhaustive);
        assert!(plan
            .scenarios
            .iter()
            .any(|s| s.first == vec![TypeValue::Real(-1.0)] && s.second == vec![TypeValue::Real(1.0)]));
    }

    #[test]
    fn user_announcements_must_match_arity() {
        let (mech, env) = plurality(4, 2);
        let opts = SearchOptions {
            user_announcements: vec![vec![TypeValue::Label(0)]],
            ..SearchOptions::default()
        };
        let cands = candidate_sets(&mech, &env, &opts, RandomStream::new(0, 0)).unwrap();
        assert!(adversary_announcements(&mech, &env, &cands, 2, &opts, RandomStream::new(0, 0)).is_err());
    }
}
