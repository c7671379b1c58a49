//! Ready-made scenarios: voting, facility location, public projects, a
//! golf-versus-pool club decision, several public projects with eligibility
//! weights, and a group auction.

use crate::config::{AuditSpec, Budgets, CellSpec, PrivacySpec, ScenarioConfig, TruthfulnessSpec};
use crate::deterrent::DeterrentScheme;
use crate::env::{Alternative, Environment, Knot, ScalarFn, TypeDistribution, TypeSpace, UtilitySpec};
use crate::error::{AuditError, Result};
use crate::mechanism::{
    k_subsets, HistogramChooser, HistogramMechanism, Mechanism, Partition, SocialWelfareMechanism, SwChooser,
    TwoAltMechanism, TwoAltRule, WeightMatrix,
};
use crate::scenario::SearchOptions;

pub const BUILTIN_NAMES: [&str; 6] = [
    "voting",
    "facility_location",
    "public_project",
    "golf_vs_pool",
    "multiple_public_projects",
    "group_auction",
];

/// Size overrides for a builtin. Unset fields keep the builtin's default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuiltinOptions {
    pub players: Option<usize>,
    /// Candidate count of `voting` (2 to 5).
    pub candidates: Option<usize>,
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioConfig> {
    builtin_scenario_with(name, &BuiltinOptions::default())
}

pub fn builtin_scenario_with(name: &str, opts: &BuiltinOptions) -> Result<ScenarioConfig> {
    let config = match name {
        "voting" => voting(opts.players.unwrap_or(9), opts.candidates.unwrap_or(3))?,
        "facility_location" => facility_location(opts.players.unwrap_or(8)),
        "public_project" => public_project(opts.players.unwrap_or(100), 0.0),
        "golf_vs_pool" => golf_vs_pool(opts.players.unwrap_or(60)),
        "multiple_public_projects" => multiple_public_projects(opts.players.unwrap_or(24)),
        "group_auction" => group_auction(opts.players.unwrap_or(12)),
        _ => {
            return Err(AuditError::config(
                "example",
                format!("unknown builtin `{name}`; valid names: {}", BUILTIN_NAMES.join(", ")),
            ))
        }
    };
    if opts.candidates.is_some() && name != "voting" {
        return Err(AuditError::config(
            "candidates",
            "only the voting builtin takes a candidate count",
        ));
    }
    config.validate()?;
    Ok(config)
}

fn base(name: &str, environment: Environment, mechanism: Mechanism, audit: AuditSpec) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        environment,
        mechanism,
        audit,
        budgets: Budgets::default(),
        seed: 0,
        workers: None,
    }
}

fn cells(pairs: &[(usize, usize)]) -> Vec<CellSpec> {
    pairs.iter().map(|&(k, r)| CellSpec { k, r }).collect()
}

fn permutations(items: usize) -> Vec<Vec<usize>> {
    if items == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..items {
        for rest in permutations(items - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|x| if x >= first { x + 1 } else { x }));
            out.push(p);
        }
    }
    out
}

/// Plurality over `candidates`; types are preference orders grouped by
/// top choice, utility is the normalised Borda score of the winner.
pub fn voting(players: usize, candidates: usize) -> Result<ScenarioConfig> {
    if !(2..=5).contains(&candidates) {
        return Err(AuditError::config("candidates", "voting supports 2 to 5 candidates"));
    }
    let names: Vec<String> = (0..candidates)
        .map(|c| ((b'a' + c as u8) as char).to_string())
        .collect();
    let orders = permutations(candidates);
    let labels = orders
        .iter()
        .map(|o| o.iter().map(|&c| names[c].as_str()).collect::<Vec<_>>().join(">"))
        .collect();
    let top = (candidates - 1) as f64;
    let values = orders
        .iter()
        .map(|o| {
            (0..candidates)
                .map(|s| (top - o.iter().position(|&c| c == s).unwrap() as f64) / top)
                .collect()
        })
        .collect();
    let environment = Environment {
        players,
        type_space: TypeSpace::Finite { labels },
        distribution: TypeDistribution::Categorical {
            probabilities: vec![1.0 / orders.len() as f64; orders.len()],
        },
        alternatives: names.iter().map(Alternative::named).collect(),
        utility: UtilitySpec::Table { values },
        utility_bound: 1.0,
    };
    let partition = Partition::Table {
        block_of: orders.iter().map(|o| o[0]).collect(),
        blocks: candidates,
    };
    let audit = AuditSpec {
        privacy: PrivacySpec {
            adversaries: vec![0, 1],
            group_sizes: vec![2],
            ..PrivacySpec::default()
        },
        truthfulness: TruthfulnessSpec {
            cells: cells(&[(0, 1), (1, 1), (0, 2)]),
            eps: None,
        },
        ..AuditSpec::default()
    };
    Ok(base(
        "voting",
        environment,
        Mechanism::Histogram(HistogramMechanism::plurality(partition)),
        audit,
    ))
}

/// Two facilities on four candidate sites of a 3×3 grid of city blocks;
/// residents lose their city-block distance to the nearest facility.
pub fn facility_location(players: usize) -> ScenarioConfig {
    let cells_xy: Vec<[f64; 2]> = (0..9).map(|i| [(i / 3) as f64, (i % 3) as f64]).collect();
    let sites = vec![[0.0, 0.0], [0.0, 2.0], [2.0, 0.0], [1.0, 1.0]];
    let placements = k_subsets(sites.len(), 2);
    let distance = |c: &[f64; 2], s: &[f64; 2]| (c[0] - s[0]).abs() + (c[1] - s[1]).abs();
    let values = cells_xy
        .iter()
        .map(|c| {
            placements
                .iter()
                .map(|p| {
                    let d = p.iter().map(|&f| distance(c, &sites[f])).fold(f64::INFINITY, f64::min);
                    -d / 4.0
                })
                .collect()
        })
        .collect();
    let environment = Environment {
        players,
        type_space: TypeSpace::Finite {
            labels: cells_xy.iter().map(|c| format!("block {},{}", c[0], c[1])).collect(),
        },
        distribution: TypeDistribution::Categorical {
            probabilities: vec![0.05, 0.1, 0.15, 0.1, 0.2, 0.1, 0.15, 0.1, 0.05],
        },
        alternatives: placements
            .iter()
            .map(|p| Alternative::named(format!("sites {} and {}", p[0], p[1])))
            .collect(),
        utility: UtilitySpec::Table { values },
        utility_bound: 1.0,
    };
    let mechanism = Mechanism::Histogram(HistogramMechanism {
        partition: Partition::identity(9),
        chooser: HistogramChooser::FacilityLocation {
            centroids: cells_xy,
            sites,
            placements,
        },
    });
    let audit = AuditSpec {
        privacy: PrivacySpec {
            adversaries: vec![0, 1],
            ..PrivacySpec::default()
        },
        truthfulness: TruthfulnessSpec {
            cells: cells(&[(0, 1), (1, 1)]),
            eps: None,
        },
        deterrent: Some(DeterrentScheme {
            verifications: 2,
            fine: 4.0 * players as f64 / 8.0,
        }),
        ..AuditSpec::default()
    };
    base("facility_location", environment, mechanism, audit)
}

/// True-type grid for the interval builtins.
fn continuous_search() -> SearchOptions {
    SearchOptions {
        search_points: 9,
        ..SearchOptions::default()
    }
}

/// Build (`A`) iff the announced values sum above `cost`; types are the
/// values themselves, uniform on `[-1, 1]`.
pub fn public_project(players: usize, cost: f64) -> ScenarioConfig {
    let identity = ScalarFn::Linear {
        slope: 1.0,
        intercept: 0.0,
    };
    let zero = ScalarFn::Constant { value: 0.0 };
    let environment = Environment {
        players,
        type_space: TypeSpace::Interval { lo: -1.0, hi: 1.0 },
        distribution: TypeDistribution::uniform(-1.0, 1.0),
        alternatives: vec![Alternative::named("build"), Alternative::named("do not build")],
        utility: UtilitySpec::TwoAltFromFunction {
            on_a: identity.clone(),
            on_b: zero.clone(),
        },
        utility_bound: 1.0,
    };
    let mechanism = Mechanism::TwoAlt(TwoAltMechanism {
        on_a: identity,
        on_b: zero,
        rule: TwoAltRule::Threshold { cost },
    });
    let audit = AuditSpec {
        search: continuous_search(),
        ..AuditSpec::default()
    };
    base("public_project", environment, mechanism, audit)
}

/// Members report income on `[0, 1]` (skewed low); golf use rises with
/// income and pool use falls. Golf wins iff its summed use exceeds the
/// pool's.
pub fn golf_vs_pool(players: usize) -> ScenarioConfig {
    let golf = ScalarFn::PiecewiseLinear {
        points: vec![(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)],
    };
    let pool = ScalarFn::Linear {
        slope: -0.8,
        intercept: 0.9,
    };
    let environment = Environment {
        players,
        type_space: TypeSpace::Interval { lo: 0.0, hi: 1.0 },
        distribution: TypeDistribution::BoundedDensity {
            knots: vec![Knot { x: 0.0, density: 1.5 }, Knot { x: 1.0, density: 0.5 }],
        },
        alternatives: vec![Alternative::named("golf course"), Alternative::named("swimming pool")],
        utility: UtilitySpec::TwoAltFromFunction {
            on_a: golf.clone(),
            on_b: pool.clone(),
        },
        utility_bound: 1.0,
    };
    let mechanism = Mechanism::TwoAlt(TwoAltMechanism {
        on_a: golf,
        on_b: pool,
        rule: TwoAltRule::Threshold { cost: 0.0 },
    });
    let audit = AuditSpec {
        deterrent: Some(DeterrentScheme {
            verifications: (players / 10).max(1),
            fine: 10.0,
        }),
        search: continuous_search(),
        ..AuditSpec::default()
    };
    base("golf_vs_pool", environment, mechanism, audit)
}

/// Search settings for the welfare builtins, whose type spaces are too
/// large for exact sweeps.
fn welfare_budgets() -> (Budgets, SearchOptions) {
    (
        Budgets {
            mc_samples: 20_000,
            ..Budgets::default()
        },
        SearchOptions {
            random_points: 1,
            ..SearchOptions::default()
        },
    )
}

/// Four options (senior home, casino, subsidised housing, library), two are
/// built. Senior-home weight needs age over 65, casino over 19, housing a
/// low income; the library weight is always 1.
pub fn multiple_public_projects(players: usize) -> ScenarioConfig {
    let options = ["senior home", "casino", "subsidized housing", "library"];
    let ages = [17u32, 34, 71];
    let rows: Vec<Vec<u8>> = (0..players)
        .map(|i| {
            let age = ages[i % 3];
            let low_income = i % 4 == 0;
            vec![u8::from(age > 65), u8::from(age > 19), u8::from(low_income), 1]
        })
        .collect();
    let pairs = k_subsets(options.len(), 2);
    let environment = Environment {
        players,
        type_space: TypeSpace::ValuationGrid {
            options: options.len(),
            bound: 1.0,
            resolution: 5,
        },
        distribution: TypeDistribution::TruncatedStdNormal { bound: 1.0 },
        alternatives: pairs
            .iter()
            .map(|p| Alternative::with_options(format!("{} + {}", options[p[0]], options[p[1]]), p.clone()))
            .collect(),
        utility: UtilitySpec::WeightedAdditive {
            weights: Some(rows.clone()),
        },
        utility_bound: 2.0,
    };
    let mechanism = Mechanism::SocialWelfare(SocialWelfareMechanism {
        weights: WeightMatrix {
            rows,
            min_column_fraction: None,
        },
        chooser: SwChooser::MaxWelfareK { count: 2 },
    });
    let (budgets, search) = welfare_budgets();
    let audit = AuditSpec {
        search,
        ..AuditSpec::default()
    };
    ScenarioConfig {
        budgets,
        ..base("multiple_public_projects", environment, mechanism, audit)
    }
}

/// Three organisations bid to host an event; employees value only their
/// own organisation winning, and the highest average valuation wins.
pub fn group_auction(players: usize) -> ScenarioConfig {
    let organisations = 3;
    // Uneven head counts: half, a third and a sixth of the players.
    let org_of = |i: usize| match i % 6 {
        0..=2 => 0,
        3 | 4 => 1,
        _ => 2,
    };
    let rows: Vec<Vec<u8>> = (0..players)
        .map(|i| (0..organisations).map(|j| u8::from(org_of(i) == j)).collect())
        .collect();
    let environment = Environment {
        players,
        type_space: TypeSpace::ValuationGrid {
            options: organisations,
            bound: 1.0,
            resolution: 5,
        },
        distribution: TypeDistribution::uniform(-1.0, 1.0),
        alternatives: (0..organisations)
            .map(|j| Alternative::with_options(format!("organisation {j}"), vec![j]))
            .collect(),
        utility: UtilitySpec::WeightedAdditive {
            weights: Some(rows.clone()),
        },
        utility_bound: 1.0,
    };
    let mechanism = Mechanism::SocialWelfare(SocialWelfareMechanism {
        weights: WeightMatrix {
            rows,
            min_column_fraction: None,
        },
        chooser: SwChooser::AverageWelfareK { count: 1 },
    });
    let (budgets, search) = welfare_budgets();
    let audit = AuditSpec {
        search,
        ..AuditSpec::default()
    };
    ScenarioConfig {
        budgets,
        ..base("group_auction", environment, mechanism, audit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for name in BUILTIN_NAMES {
            let c = builtin_scenario(name).unwrap();
            assert_eq!(c.name, name);
        }
    }

    #[test]
    fn unknown_name_lists_valid_names() {
        let msg = builtin_scenario("chess").unwrap_err().to_string();
        for name in BUILTIN_NAMES {
            assert!(msg.contains(name), "{msg}");
        }
    }

    #[test]
    fn voting_is_configurable() {
        let c = builtin_scenario_with(
            "voting",
            &BuiltinOptions {
                players: Some(11),
                candidates: Some(4),
            },
        )
        .unwrap();
        assert_eq!(c.environment.players, 11);
        assert_eq!(c.environment.alternatives.len(), 4);
        assert_eq!(c.environment.type_space.finite_size(), Some(24));
        assert!(matches!(
            c.mechanism,
            Mechanism::Histogram(HistogramMechanism {
                chooser: HistogramChooser::Plurality { .. },
                ..
            })
        ));
        assert!(voting(9, 6).is_err());
    }

    #[test]
    fn public_project_structure() {
        let c = builtin_scenario("public_project").unwrap();
        let Mechanism::TwoAlt(m) = &c.mechanism else {
            panic!("expected a two-alternative mechanism")
        };
        assert_eq!(m.on_b, ScalarFn::Constant { value: 0.0 });
        assert_eq!(m.rule, TwoAltRule::Threshold { cost: 0.0 });
        assert_eq!(c.environment.players, 100);
    }

    #[test]
    fn project_weights_follow_eligibility() {
        let c = builtin_scenario("multiple_public_projects").unwrap();
        let Mechanism::SocialWelfare(sw) = &c.mechanism else {
            panic!("expected a welfare mechanism")
        };
        assert_eq!(sw.weights.options(), 4);
        assert!(sw.weights.rows.iter().all(|r| r[3] == 1));
        assert_eq!(sw.chooser, SwChooser::MaxWelfareK { count: 2 });
        assert_eq!(c.environment.alternatives.len(), 6);
    }

    #[test]
    fn auction_weights_are_one_hot() {
        let c = builtin_scenario("group_auction").unwrap();
        let Mechanism::SocialWelfare(sw) = &c.mechanism else {
            panic!("expected a welfare mechanism")
        };
        assert!(sw
            .weights
            .rows
            .iter()
            .all(|r| r.iter().map(|&w| w as u32).sum::<u32>() == 1));
        assert_eq!(sw.weights.column_sums(), vec![6, 4, 2]);
    }
}
