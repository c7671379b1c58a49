//! Runs every audit a configuration requests and collects the results in a
//! report document.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::deterrent::{deterrent_from_sweep, DeterrentReport};
use crate::env::TypeDistribution;
use crate::error::{AuditError, Result};
use crate::mechanism::Mechanism;
use crate::outcome::OutcomeModel;
use crate::privacy::{
    audit_bdp, audit_group_bdp, group_privacy_transform, histogram_privacy_bound, sw_privacy_bound,
    two_alt_privacy_bound, AuditSettings, PrivacyParams, PrivacyReport, ShapeBound, SwVariant,
};
use crate::rng::RandomStream;
use crate::sampling::sample_profile;
use crate::truthfulness::{
    cell_from_sweep, coalition_sweep, compare_privacy_and_truthfulness, PrivacyTruthfulnessCheck, TruthfulnessCell,
};

pub const TOOL_NAME: &str = "mechaudit";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stream tag for sanity checks.
const SANITY_STREAM: u64 = 0x5341_4e49;

/// Group audit at `(c, k − c + 1, cε)` against the transform of the
/// individual `(k, ε, δ)` curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPrivacyCheck {
    pub group_size: usize,
    /// Adversary budget of the individual audit.
    pub k: usize,
    pub eps_grid: Vec<f64>,
    pub group_eps: Vec<f64>,
    pub group_delta: Vec<f64>,
    pub transformed_delta: Vec<f64>,
    pub holds: bool,
    /// One side was not measured exhaustively and exactly.
    pub advisory: bool,
    pub report: PrivacyReport,
}

/// Asymptotic bound shapes evaluated at the audited parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeRow {
    pub k: usize,
    pub eps: f64,
    pub bound: ShapeBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthfulnessRow {
    pub cell: TruthfulnessCell,
    /// Measured gain against the bound implied by privacy at `k + r − 1`.
    pub privacy_bound: PrivacyTruthfulnessCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deterrent: Option<DeterrentReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanityCheck {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub config: ScenarioConfig,
    pub warnings: Vec<String>,
    pub privacy: Vec<PrivacyReport>,
    pub group_privacy: Vec<GroupPrivacyCheck>,
    pub shape_bounds: Vec<ShapeRow>,
    pub truthfulness: Vec<TruthfulnessRow>,
    pub sanity: Vec<SanityCheck>,
    /// Present only on request; everything else is reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ReportDocument {
    /// Every hard verdict in the document: sanity checks and, where both
    /// sides were measured exactly and exhaustively, the inequalities.
    pub fn all_checks_pass(&self) -> bool {
        self.sanity.iter().all(|s| s.pass)
            && self.group_privacy.iter().all(|g| g.advisory || g.holds)
            && self
                .truthfulness
                .iter()
                .all(|t| t.privacy_bound.advisory || t.privacy_bound.holds)
    }
}

/// Worker threads used when the configuration leaves them unset.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs `config` on its own pool of `config.workers` threads.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ReportDocument> {
    let workers = config.workers.unwrap_or_else(default_workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| AuditError::config("workers", e.to_string()))?;
    pool.install(|| run_in_current_pool(config))
}

fn run_in_current_pool(config: &ScenarioConfig) -> Result<ReportDocument> {
    let warnings = config.validate()?;
    let env = &config.environment;
    let n = env.players;
    let model = OutcomeModel::new(&config.mechanism, env, config.budgets.enumeration_states)?;
    let settings = config.settings();
    let audit = &config.audit;

    let mut levels: BTreeSet<usize> = audit.privacy.adversaries.iter().copied().collect();
    for cell in &audit.truthfulness.cells {
        levels.insert(cell.k + cell.r - 1);
    }
    for &c in &audit.privacy.group_sizes {
        if !levels.iter().any(|&k| k + 1 >= c) {
            levels.insert(c - 1);
        }
    }
    let levels: Vec<usize> = levels.into_iter().filter(|&k| k < n).collect();
    let privacy: Vec<PrivacyReport> = levels
        .iter()
        .map(|&k| audit_bdp(&model, k, &settings))
        .collect::<Result<_>>()?;
    let at_level = |k: usize| privacy.iter().find(|p| p.k == k).expect("level audited");

    let mut group_privacy = Vec::new();
    for &c in &audit.privacy.group_sizes {
        for report in privacy.iter().filter(|p| p.k + 1 >= c) {
            group_privacy.push(check_group_privacy(&model, &settings, c, report)?);
        }
    }

    let shape_bounds = shape_rows(config, &levels)?;

    let mut truthfulness = Vec::new();
    for cell in &audit.truthfulness.cells {
        let sweep = coalition_sweep(&model, cell.k, cell.r, &settings)?;
        let level = at_level(cell.k + cell.r - 1);
        let mut row = cell_from_sweep(&sweep, f64::INFINITY);
        let check = compare_privacy_and_truthfulness(level, &row, env.utility_bound)?;
        row.eps = audit
            .truthfulness
            .eps
            .unwrap_or_else(|| check.bound.iter().copied().fold(f64::INFINITY, f64::min));
        row.pass = row.max_gain <= row.eps;
        let deterrent = match &audit.deterrent {
            Some(scheme) => Some(deterrent_from_sweep(&sweep, scheme, n)?),
            None => None,
        };
        truthfulness.push(TruthfulnessRow {
            cell: row,
            privacy_bound: check,
            deterrent,
        });
    }

    let mut sanity = mechanism_sanity(config, &model)?;
    sanity.push(delta_monotone(&privacy));

    Ok(ReportDocument {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        config: config.clone(),
        warnings,
        privacy,
        group_privacy,
        shape_bounds,
        truthfulness,
        sanity,
        timing: None,
    })
}

/// Audits groups of `c` players against the transform of `individual`.
pub fn check_group_privacy(
    model: &OutcomeModel,
    settings: &AuditSettings,
    c: usize,
    individual: &PrivacyReport,
) -> Result<GroupPrivacyCheck> {
    let k = individual.k;
    let group_eps: Vec<f64> = individual.eps_grid.iter().map(|e| c as f64 * e).collect();
    let group_settings = AuditSettings {
        eps_grid: group_eps.clone(),
        ..settings.clone()
    };
    let report = audit_group_bdp(model, c, k + 1 - c, &group_settings)?;
    let exact = |r: &PrivacyReport| r.exhaustive && r.method == "exact";
    let advisory = !(exact(individual) && exact(&report));
    // Exact sides compare point values; otherwise the individual side uses
    // its upper confidence value.
    let base = if exact(individual) {
        &individual.worst_delta
    } else {
        &individual.worst_delta_upper
    };
    let transformed_delta: Vec<f64> = individual
        .eps_grid
        .iter()
        .zip(base)
        .map(|(&eps, &delta)| group_privacy_transform(c, PrivacyParams { k, eps, delta }).map(|g| g.delta.min(1.0)))
        .collect::<Result<_>>()?;
    let group_delta = report.worst_delta.clone();
    let holds = group_delta.iter().zip(&transformed_delta).all(|(g, t)| g <= t);
    Ok(GroupPrivacyCheck {
        group_size: c,
        k,
        eps_grid: individual.eps_grid.clone(),
        group_eps,
        group_delta,
        transformed_delta,
        holds,
        advisory,
        report,
    })
}

fn shape_rows(config: &ScenarioConfig, levels: &[usize]) -> Result<Vec<ShapeRow>> {
    let env = &config.environment;
    let n = env.players;
    let b = &config.audit.bounds;
    let mut rows = Vec::new();
    for &k in levels {
        for &eps in &config.audit.privacy.eps_grid {
            let bound = match &config.mechanism {
                Mechanism::Histogram(h) => {
                    let p_min = h
                        .partition
                        .block_probabilities(&env.type_space, &env.distribution)?
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    histogram_privacy_bound(p_min, n, k, eps, b.histogram)
                }
                Mechanism::TwoAlt(_) => two_alt_privacy_bound(n, k, eps, b.c1, b.c2),
                Mechanism::SocialWelfare(sw) => {
                    let variant = match env.distribution {
                        TypeDistribution::TruncatedStdNormal { .. } => SwVariant::TruncatedNormal,
                        _ => SwVariant::General,
                    };
                    sw_privacy_bound(n, k, sw.weights.options(), eps, variant, b.c1, b.c2)
                }
            };
            rows.push(ShapeRow { k, eps, bound });
        }
    }
    Ok(rows)
}

/// Profiles checked by the permutation sanity test.
const SANITY_PROFILES: u64 = 32;

/// Output in range and invariance under permutations within symmetry
/// classes, on random profiles; exact laws sum to one.
fn mechanism_sanity(config: &ScenarioConfig, model: &OutcomeModel) -> Result<Vec<SanityCheck>> {
    let env = &config.environment;
    let mech = &config.mechanism;
    let n = env.players;
    let classes = mech.player_classes(n);
    let everyone: Vec<usize> = (0..n).collect();
    let stream = RandomStream::new(config.seed, SANITY_STREAM);
    let mut symmetric = true;
    let mut in_range = true;
    for trial in 0..SANITY_PROFILES {
        let mut rng = stream.derive(trial).generator();
        let profile = sample_profile(env, &everyone, &mut rng)?;
        let out = mech.run(env, &profile)?;
        in_range &= out < env.alternatives.len();
        // Reverse the order of players inside each class.
        let mut permuted = profile.clone();
        for class in classes.iter().copied().collect::<BTreeSet<_>>() {
            let members: Vec<usize> = (0..n).filter(|&p| classes[p] == class).collect();
            for (dst, src) in members.iter().zip(members.iter().rev()) {
                permuted[*dst] = profile[*src].clone();
            }
        }
        symmetric &= mech.run(env, &permuted)? == out;
    }
    let mut checks = vec![
        SanityCheck {
            name: "output_in_range".into(),
            pass: in_range,
            detail: None,
        },
        SanityCheck {
            name: if mech.is_anonymous(n) {
                "anonymity".into()
            } else {
                "class_symmetry".into()
            },
            pass: symmetric,
            detail: None,
        },
    ];
    if model.supports_exact() {
        if let Ok(law) = model.exact(&[]) {
            let total: f64 = law.probs.iter().sum();
            checks.push(SanityCheck {
                name: "exact_law_normalised".into(),
                pass: (total - 1.0).abs() <= 1e-9,
                detail: Some(format!("total = {total}")),
            });
        }
    }
    Ok(checks)
}

/// Worst-case `δ(ε)` never increases with `ε`.
fn delta_monotone(privacy: &[PrivacyReport]) -> SanityCheck {
    let mut pass = true;
    for report in privacy {
        let mut pairs: Vec<(f64, f64)> = report
            .eps_grid
            .iter()
            .copied()
            .zip(report.worst_delta.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pass &= pairs.windows(2).all(|w| w[1].1 <= w[0].1);
    }
    SanityCheck {
        name: "delta_monotone_in_eps".into(),
        pass,
        detail: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin_scenario;
    use crate::outcome::DEFAULT_STATE_BUDGET;

    #[test]
    fn voting_report_matches_direct_audit() {
        let config = builtin_scenario("voting").unwrap();
        let doc = run_scenario(&config).unwrap();
        let model = OutcomeModel::new(&config.mechanism, &config.environment, DEFAULT_STATE_BUDGET).unwrap();
        let direct = audit_bdp(&model, 0, &config.settings()).unwrap();
        let reported = doc.privacy.iter().find(|p| p.k == 0).unwrap();
        assert_eq!(reported.worst_delta, direct.worst_delta);
        assert!(reported.exhaustive);
        assert!(doc.all_checks_pass(), "{:?}", doc.sanity);
        assert!(!doc.group_privacy.is_empty());
    }

    #[test]
    fn deterrent_verdicts_present() {
        let doc = run_scenario(&builtin_scenario("facility_location").unwrap()).unwrap();
        assert!(doc.truthfulness.iter().all(|t| t.deterrent.is_some()));
        let plain = run_scenario(&builtin_scenario("voting").unwrap()).unwrap();
        assert!(plain.truthfulness.iter().all(|t| t.deterrent.is_none()));
    }
}
