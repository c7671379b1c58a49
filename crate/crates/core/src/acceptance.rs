//! Acceptance suite: exact-oracle agreement, divergence identities, the
//! privacy-to-truthfulness and group inequalities, decay trends, deterrent
//! sufficiency and reproducibility.

use std::time::Instant;

use crate::builtin::{builtin_scenario, builtin_scenario_with, BuiltinOptions, BUILTIN_NAMES};
use crate::corpus::{audit_corpus, output_corpus, plurality};
use crate::deterrent::{
    deterrent_from_sweep, deterrent_sufficiency, deterrent_sufficiency_rate, fine_for, DeterrentScheme,
};
use crate::env::TypeValue;
use crate::error::Result;
use crate::outcome::{OutcomeModel, DEFAULT_STATE_BUDGET};
use crate::privacy::{audit_bdp, delta_at_epsilon, statistical_distance, AuditSettings};
use crate::report::canonical_json;
use crate::rng::RandomStream;
use crate::runner::{check_group_privacy, run_scenario};
use crate::truthfulness::{check_truthfulness, coalition_sweep, compare_privacy_and_truthfulness};

/// Result of one acceptance criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {} [{}] {}: {} ({:.1}s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.seconds
        )
    }
}

pub const CRITERIA: [(usize, &str); 8] = [
    (1, "Monte Carlo agrees with exact laws"),
    (2, "delta at eps = 0 equals statistical distance"),
    (3, "privacy bounds truthfulness gain"),
    (4, "group transform bounds group privacy"),
    (5, "plurality delta decays with n"),
    (6, "public project delta decays like 1/sqrt(n)"),
    (7, "deterrent fines remove coalition gains"),
    (8, "reports independent of worker count"),
];

/// Runs criterion `id` (1 to 8).
pub fn run_criterion(id: usize) -> CriterionOutcome {
    let title = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    let start = Instant::now();
    let result = match id {
        1 => mc_matches_exact(),
        2 => zero_eps_is_statistical_distance(),
        3 => privacy_bounds_gain(),
        4 => group_transform_holds(),
        5 => plurality_trend(),
        6 => public_project_trend(),
        7 => deterrent_sufficient(),
        8 => worker_independence(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (pass, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        title,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|c| run_criterion(c.0)).collect()
}

type Verdict = Result<(bool, String)>;

const ORACLE_SAMPLES: u64 = 100_000;

/// Every cell of every Monte Carlo law within 4 binomial standard errors of
/// the exact law, for at least 99% of cells.
fn mc_matches_exact() -> Verdict {
    let stream = RandomStream::new(0, 0xACCE_0001);
    let mut cells = 0usize;
    let mut inside = 0usize;
    for (idx, inst) in output_corpus(3..=12).iter().enumerate() {
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET)?;
        let unfixed = vec![Vec::new()];
        let pinned = vec![vec![(0, TypeValue::Label(0))], vec![(0, TypeValue::Label(1))]];
        let mut mc = model.monte_carlo(&unfixed, ORACLE_SAMPLES, stream.derive(2 * idx as u64))?;
        mc.extend(model.monte_carlo(&pinned, ORACLE_SAMPLES, stream.derive(2 * idx as u64 + 1))?);
        for (fixed, est) in unfixed.iter().chain(&pinned).zip(&mc) {
            let exact = model.exact(fixed)?;
            for (&p, &q) in exact.probs.iter().zip(&est.probs) {
                let se = (p * (1.0 - p) / ORACLE_SAMPLES as f64).sqrt();
                cells += 1;
                if (q - p).abs() <= 4.0 * se {
                    inside += 1;
                }
            }
        }
    }
    let frac = inside as f64 / cells as f64;
    Ok((
        frac >= 0.99,
        format!("{inside}/{cells} cells within 4 SE ({:.2}%)", 100.0 * frac),
    ))
}

const IDENTITY_TOL: f64 = 1e-12;

fn zero_eps_is_statistical_distance() -> Verdict {
    let settings = AuditSettings {
        eps_grid: vec![0.0],
        ..AuditSettings::default()
    };
    let mut pairs = 0usize;
    let mut worst = 0.0f64;
    for inst in audit_corpus(3..=8) {
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET)?;
        for k in 0..=1 {
            let report = audit_bdp(&model, k, &settings)?;
            for s in &report.scenarios {
                let sd = statistical_distance(&s.first, &s.second);
                for d in [
                    delta_at_epsilon(&s.first, &s.second, 0.0),
                    delta_at_epsilon(&s.second, &s.first, 0.0),
                ] {
                    worst = worst.max((d - sd).abs());
                }
                pairs += 1;
            }
        }
    }
    let hand = plurality(3, &[0.5, 0.5]);
    let model = OutcomeModel::new(&hand.mech, &hand.env, DEFAULT_STATE_BUDGET)?;
    let p = model.exact(&[(0, TypeValue::Label(0))])?.probs;
    let q = model.exact(&[(0, TypeValue::Label(1))])?.probs;
    let at_zero = delta_at_epsilon(&p, &q, 0.0);
    let at_ln3 = delta_at_epsilon(&p, &q, 3f64.ln());
    let hand_ok = (at_zero - 0.5).abs() <= IDENTITY_TOL && at_ln3.abs() <= IDENTITY_TOL;
    Ok((
        worst <= IDENTITY_TOL && hand_ok && pairs > 0,
        format!("{pairs} pairs, max |delta(0) - SD| = {worst:e}; n=3 plurality delta(0) = {at_zero}, delta(ln 3) = {at_ln3}"),
    ))
}

fn exact_settings() -> AuditSettings {
    AuditSettings::default()
}

/// Measured gain of every `(k − r + 1, r)` cell at most
/// `(rε + 2rδ(ε))·2α` at every grid `ε`, both sides exact and exhaustive.
fn privacy_bounds_gain() -> Verdict {
    let settings = exact_settings();
    let mut checks = 0usize;
    let mut failures = Vec::new();
    let mut positive_gain = 0usize;
    for inst in audit_corpus(3..=8) {
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET)?;
        let n = inst.env.players;
        for k in (0..=2).filter(|&k| k < n) {
            let privacy = audit_bdp(&model, k, &settings)?;
            for r in (1..=2).filter(|&r| r <= k + 1) {
                let cell = check_truthfulness(&model, k + 1 - r, r, f64::INFINITY, &settings)?;
                let check = compare_privacy_and_truthfulness(&privacy, &cell, inst.env.utility_bound)?;
                checks += 1;
                if cell.max_gain > 0.0 {
                    positive_gain += 1;
                }
                if !check.holds || check.advisory {
                    failures.push(format!("{} k={k} r={r} advisory={}", inst.name, check.advisory));
                }
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "{checks} exact checks, {positive_gain} with positive gain, failures: {}",
            if failures.is_empty() {
                "none".to_string()
            } else {
                failures.join("; ")
            }
        ),
    ))
}

fn group_transform_holds() -> Verdict {
    let settings = exact_settings();
    let mut checks = 0usize;
    let mut failures = Vec::new();
    for inst in audit_corpus(3..=8) {
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET)?;
        for k in (1..=2).filter(|&k| k < inst.env.players) {
            let individual = audit_bdp(&model, k, &settings)?;
            let g = check_group_privacy(&model, &settings, 2, &individual)?;
            checks += 1;
            if !g.holds || g.advisory {
                failures.push(format!("{} k={k} advisory={}", inst.name, g.advisory));
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "{checks} exact checks at c = 2, failures: {}",
            if failures.is_empty() {
                "none".to_string()
            } else {
                failures.join("; ")
            }
        ),
    ))
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn plurality_trend() -> Verdict {
    let settings = AuditSettings {
        eps_grid: vec![0.2],
        ..AuditSettings::default()
    };
    let ns = [5usize, 9, 17, 33];
    let mut deltas = Vec::new();
    let mut exact = true;
    for &n in &ns {
        let inst = plurality(n, &[0.5, 0.5]);
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET)?;
        let report = audit_bdp(&model, 0, &settings)?;
        exact &= report.exhaustive && report.method == "exact";
        deltas.push(report.worst_delta[0]);
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let logs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let slope = ls_slope(&x, &logs);
    Ok((
        exact && strictly_decreasing(&deltas) && slope < 0.0,
        format!("delta(0.2) at n = 5, 9, 17, 33: {deltas:?}; log slope {slope:.5}; exhaustive exact: {exact}"),
    ))
}

fn public_project_trend() -> Verdict {
    let ns = [100usize, 400, 1600];
    let mut upper = Vec::new();
    for &n in &ns {
        let config = builtin_scenario_with(
            "public_project",
            &BuiltinOptions {
                players: Some(n),
                candidates: None,
            },
        )?;
        let model = OutcomeModel::new(
            &config.mechanism,
            &config.environment,
            config.budgets.enumeration_states,
        )?;
        // Two alternatives: the worst pair of announcements is the pair of
        // interval endpoints, so the grid is reduced to them.
        let mut settings = AuditSettings {
            eps_grid: vec![0.5],
            mc_samples: 1_000_000,
            ..config.settings()
        };
        settings.search.search_points = 2;
        settings.search.random_points = 0;
        upper.push(audit_bdp(&model, 0, &settings)?.worst_delta_upper[0]);
    }
    let ratio = upper[0] / upper[2];
    let pass = strictly_decreasing(&upper) && (2.0..=8.0).contains(&ratio);
    Ok((
        pass,
        format!("upper delta(0.5) at n = 100, 400, 1600: {upper:?}; ratio 100/1600 = {ratio}"),
    ))
}

fn deterrent_sufficient() -> Verdict {
    let settings = exact_settings();
    let mut checks = 0usize;
    let mut failures = Vec::new();
    for inst in audit_corpus(3..=8) {
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET)?;
        let n = inst.env.players;
        for k in 0..=1 {
            for r in (1..=2).filter(|&r| k + r <= n) {
                let sweep = coalition_sweep(&model, k, r, &settings)?;
                if !(sweep.exhaustive && sweep.method() == "exact") {
                    failures.push(format!("{} k={k} r={r} not exhaustive", inst.name));
                    continue;
                }
                let eps = sweep.max_member_gain().0.max(0.0);
                for m in [1, n.div_ceil(2), n] {
                    let fine = fine_for(m, n, r as f64 * eps);
                    let scheme = DeterrentScheme { verifications: m, fine };
                    let suff = deterrent_sufficiency(m, n, fine, r, eps)?;
                    let report = deterrent_from_sweep(&sweep, &scheme, n)?;
                    checks += 1;
                    if !suff.weakly_persistent || report.coalition_sum_gain > 0.0 {
                        failures.push(format!(
                            "{} k={k} r={r} m={m}: sum gain {}",
                            inst.name, report.coalition_sum_gain
                        ));
                    }
                }
            }
        }
    }
    let arithmetic = [1e-3, 0.01, 0.1, 0.5, 1.0]
        .iter()
        .all(|&eps| deterrent_sufficiency_rate(0.001, 1e4 * eps, 10, eps).weakly_persistent);
    Ok((
        failures.is_empty() && arithmetic,
        format!(
            "{checks} schemes audited, facility arithmetic sufficient: {arithmetic}, failures: {}",
            if failures.is_empty() {
                "none".to_string()
            } else {
                failures.join("; ")
            }
        ),
    ))
}

fn worker_independence() -> Verdict {
    let mut differing = Vec::new();
    for name in BUILTIN_NAMES {
        let mut config = builtin_scenario(name)?;
        config.workers = Some(1);
        let one = canonical_json(&run_scenario(&config)?)?;
        config.workers = Some(8);
        let eight = canonical_json(&run_scenario(&config)?)?;
        if one != eight {
            differing.push(name);
        }
    }
    Ok((
        differing.is_empty(),
        format!(
            "{} builtins compared, differing: {}",
            BUILTIN_NAMES.len(),
            if differing.is_empty() {
                "none".to_string()
            } else {
                differing.join(", ")
            }
        ),
    ))
}
