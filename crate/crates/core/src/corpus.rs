//! Small finite instances whose output laws can be enumerated exactly.

use crate::env::{Alternative, Environment, ScalarFn, TypeDistribution, TypeSpace, UtilitySpec};
use crate::mechanism::{HistogramChooser, HistogramMechanism, Mechanism, Partition, TwoAltMechanism, TwoAltRule};

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusInstance {
    pub name: String,
    pub env: Environment,
    pub mech: Mechanism,
}

/// Labels `"0"`, `"1"`, ...
fn labels(count: usize) -> Vec<String> {
    (0..count).map(|i| i.to_string()).collect()
}

/// Unit utility for the alternative matching the player's own label.
fn own_label_utility(types: usize, alternatives: usize) -> UtilitySpec {
    UtilitySpec::Table {
        values: (0..types)
            .map(|t| (0..alternatives).map(|s| if s == t { 1.0 } else { 0.0 }).collect())
            .collect(),
    }
}

/// Plurality where every type is its own block and candidate.
pub fn plurality(players: usize, probabilities: &[f64]) -> CorpusInstance {
    let m = probabilities.len();
    let name = format!(
        "plurality n={players} p={}",
        probabilities
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("/")
    );
    CorpusInstance {
        name,
        env: Environment {
            players,
            type_space: TypeSpace::Finite { labels: labels(m) },
            distribution: TypeDistribution::Categorical {
                probabilities: probabilities.to_vec(),
            },
            alternatives: (0..m).map(|s| Alternative::named(s.to_string())).collect(),
            utility: own_label_utility(m, m),
            utility_bound: 1.0,
        },
        mech: Mechanism::Histogram(HistogramMechanism::plurality(Partition::identity(m))),
    }
}

/// Three types, two alternatives: alternative 1 once at least `threshold`
/// players announce type 2.
pub fn count_threshold(players: usize, threshold: u32) -> CorpusInstance {
    CorpusInstance {
        name: format!("count-threshold n={players} t={threshold}"),
        env: Environment {
            players,
            type_space: TypeSpace::Finite { labels: labels(3) },
            distribution: TypeDistribution::Categorical {
                probabilities: vec![0.25, 0.35, 0.4],
            },
            alternatives: vec![Alternative::named("keep"), Alternative::named("change")],
            utility: UtilitySpec::Table {
                values: vec![vec![1.0, 0.0], vec![0.5, 0.25], vec![0.0, 1.0]],
            },
            utility_bound: 1.0,
        },
        mech: Mechanism::Histogram(HistogramMechanism {
            partition: Partition::identity(3),
            chooser: HistogramChooser::CountThreshold {
                block: 2,
                threshold,
                at_least: 1,
                below: 0,
            },
        }),
    }
}

/// Two types `{against, for}` worth `-1` and `+1` for `A`, `0` for `B`;
/// `A` iff the announced sum exceeds `cost`.
pub fn two_type_two_alt(players: usize, cost: f64) -> CorpusInstance {
    let on_a = ScalarFn::Table {
        values: vec![-1.0, 1.0],
    };
    let on_b = ScalarFn::Constant { value: 0.0 };
    CorpusInstance {
        name: format!("two-alt n={players} c={cost}"),
        env: Environment {
            players,
            type_space: TypeSpace::Finite {
                labels: vec!["against".into(), "for".into()],
            },
            distribution: TypeDistribution::Categorical {
                probabilities: vec![0.4, 0.6],
            },
            alternatives: vec![Alternative::named("A"), Alternative::named("B")],
            utility: UtilitySpec::TwoAltFromFunction {
                on_a: on_a.clone(),
                on_b: on_b.clone(),
            },
            utility_bound: 1.0,
        },
        mech: Mechanism::TwoAlt(TwoAltMechanism {
            on_a,
            on_b,
            rule: TwoAltRule::Threshold { cost },
        }),
    }
}

/// Plurality over 2 and 3 blocks plus the two-type two-alternative rule
/// for every `n` in `players`.
pub fn output_corpus(players: impl IntoIterator<Item = usize>) -> Vec<CorpusInstance> {
    let mut out = Vec::new();
    for n in players {
        out.push(plurality(n, &[0.5, 0.5]));
        out.push(plurality(n, &[0.3, 0.7]));
        out.push(plurality(n, &[0.2, 0.3, 0.5]));
        out.push(two_type_two_alt(n, 0.5));
    }
    out
}

/// Instances with at most 3 types and 3 alternatives for `n` in `players`,
/// including a threshold rule.
pub fn audit_corpus(players: impl IntoIterator<Item = usize>) -> Vec<CorpusInstance> {
    let mut out = Vec::new();
    for n in players {
        out.push(plurality(n, &[0.5, 0.5]));
        out.push(plurality(n, &[0.3, 0.7]));
        out.push(plurality(n, &[0.2, 0.3, 0.5]));
        out.push(count_threshold(n, (n as u32).div_ceil(2)));
        out.push(two_type_two_alt(n, 0.5));
    }
    out
}
