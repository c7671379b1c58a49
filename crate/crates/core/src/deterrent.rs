//! Deterrent payments: verify `m` random players after the outcome and fine
//! every caught liar `d`.

use rand::seq::index::sample;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::env::TypeValue;
use crate::error::{AuditError, Result};
use crate::outcome::OutcomeModel;
use crate::privacy::AuditSettings;
use crate::rng::StreamRng;
use crate::truthfulness::{coalition_sweep, CoalitionSweep, Witness};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DeterrentScheme {
    /// Players verified per run, `m`.
    pub verifications: usize,
    /// Fine per caught liar, `d`.
    pub fine: f64,
}

impl DeterrentScheme {
    pub fn validate(&self, players: usize) -> Result<()> {
        if self.verifications > players {
            return Err(AuditError::config(
                "audit.deterrent.verifications",
                format!("{} verifications exceed {players} players", self.verifications),
            ));
        }
        if !(self.fine >= 0.0) || !self.fine.is_finite() {
            return Err(AuditError::config(
                "audit.deterrent.fine",
                "fine must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// `(player, caught lying)` pairs of one verification round.
pub type VerificationVector = Vec<(usize, bool)>;

/// Verifies `m` distinct players chosen uniformly without replacement.
pub fn sample_verifications(
    m: usize,
    true_types: &[TypeValue],
    announced: &[TypeValue],
    rng: &mut StreamRng,
) -> Result<VerificationVector> {
    let n = true_types.len();
    if announced.len() != n {
        return Err(AuditError::config("announced", format!("expected {n} announcements")));
    }
    if m > n {
        return Err(AuditError::config(
            "verifications",
            format!("{m} verifications exceed {n} players"),
        ));
    }
    Ok(sample(rng, n, m)
        .into_iter()
        .map(|p| (p, true_types[p] != announced[p]))
        .collect())
}

/// `p_i = d` when `(i, caught)` is in the verification, else 0.
pub fn payments(scheme: &DeterrentScheme, players: usize, verification: &VerificationVector) -> Vec<f64> {
    let mut p = vec![0.0; players];
    for &(i, caught) in verification {
        if caught {
            p[i] = scheme.fine;
        }
    }
    p
}

/// `(m/n) · d` for a liar, 0 for a truthful player.
pub fn expected_fine(scheme: &DeterrentScheme, players: usize, lying: bool) -> f64 {
    if lying {
        scheme.verifications as f64 / players as f64 * scheme.fine
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sufficiency {
    /// `(m/n) d >= r ε`.
    pub weakly_persistent: bool,
    /// `(m/n) d >= ε`.
    pub k_tolerant: bool,
}

/// Relative slack absorbing decimal rounding in boundary comparisons.
const BOUNDARY_SLACK: f64 = 4.0 * f64::EPSILON;

fn at_least(lhs: f64, rhs: f64) -> bool {
    lhs >= rhs || lhs >= rhs * (1.0 - BOUNDARY_SLACK)
}

/// Sufficient conditions for truthfulness under the scheme.
pub fn deterrent_sufficiency(m: usize, n: usize, d: f64, r: usize, eps: f64) -> Result<Sufficiency> {
    if m > n || n == 0 {
        return Err(AuditError::domain(format!(
            "need m <= n and n > 0, got m = {m}, n = {n}"
        )));
    }
    if !(d >= 0.0) || !(eps >= 0.0) {
        return Err(AuditError::domain("fine and eps must be non-negative"));
    }
    let fine = m as f64 / n as f64 * d;
    Ok(Sufficiency {
        weakly_persistent: at_least(fine, r as f64 * eps),
        k_tolerant: at_least(fine, eps),
    })
}

/// Same test with the verification rate given as a fraction `m/n`.
pub fn deterrent_sufficiency_rate(rate: f64, d: f64, r: usize, eps: f64) -> Sufficiency {
    let fine = rate * d;
    Sufficiency {
        weakly_persistent: at_least(fine, r as f64 * eps),
        k_tolerant: at_least(fine, eps),
    }
}

/// Coalition-sum audit under a deterrent scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterrentReport {
    pub k: usize,
    pub r: usize,
    pub scheme: DeterrentScheme,
    pub expected_fine: f64,
    /// Largest `Σ_{i∈C} gain_i − liars · (m/n) d`.
    pub coalition_sum_gain: f64,
    pub gain_ci_radius: f64,
    /// Largest single-member gain before fines.
    pub max_member_gain: f64,
    pub witness: Option<Witness>,
    pub exhaustive: bool,
    pub lower_bound: bool,
    /// Sufficiency of the scheme for `ε` = the measured member gain.
    pub sufficiency: Sufficiency,
    pub pass: bool,
}

/// Applies the expected fines to an existing coalition sweep.
pub fn deterrent_from_sweep(
    sweep: &CoalitionSweep,
    scheme: &DeterrentScheme,
    players: usize,
) -> Result<DeterrentReport> {
    scheme.validate(players)?;
    let fine = expected_fine(scheme, players, true);
    let (coalition_sum_gain, gain_ci_radius, witness) = sweep.max_coalition_sum(fine);
    let (max_member_gain, _, _) = sweep.max_member_gain();
    Ok(DeterrentReport {
        k: sweep.k,
        r: sweep.r,
        scheme: *scheme,
        expected_fine: fine,
        coalition_sum_gain,
        gain_ci_radius,
        max_member_gain,
        witness,
        exhaustive: sweep.exhaustive,
        lower_bound: sweep.lower_bound,
        sufficiency: deterrent_sufficiency(
            scheme.verifications,
            players,
            scheme.fine,
            sweep.r,
            max_member_gain.max(0.0),
        )?,
        pass: coalition_sum_gain <= 0.0,
    })
}

/// Maximum coalition-sum gain including expected fines over the `(k, r)`
/// scenarios.
pub fn audit_with_deterrent(
    model: &OutcomeModel,
    scheme: &DeterrentScheme,
    k: usize,
    r: usize,
    settings: &AuditSettings,
) -> Result<DeterrentReport> {
    scheme.validate(model.env.players)?;
    let sweep = coalition_sweep(model, k, r, settings)?;
    deterrent_from_sweep(&sweep, scheme, model.env.players)
}

/// Smallest fine with `(m/n) · d >= target` in floating point.
pub fn fine_for(m: usize, n: usize, target: f64) -> f64 {
    if target <= 0.0 || m == 0 {
        return 0.0;
    }
    let mut d = target * n as f64 / m as f64;
    while expected_fine(
        &DeterrentScheme {
            verifications: m,
            fine: d,
        },
        n,
        true,
    ) < target
    {
        d = d.next_up();
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn labels(v: &[usize]) -> Vec<TypeValue> {
        v.iter().map(|&i| TypeValue::Label(i)).collect()
    }

    #[test]
    fn full_verification_covers_everyone_once() {
        let mut rng = RandomStream::new(0, 0).generator();
        let t = labels(&[0, 1, 0, 1]);
        let v = sample_verifications(4, &t, &t, &mut rng).unwrap();
        let mut players: Vec<usize> = v.iter().map(|e| e.0).collect();
        players.sort_unstable();
        assert_eq!(players, vec![0, 1, 2, 3]);
        assert!(v.iter().all(|e| !e.1));
        assert!(sample_verifications(5, &t, &t, &mut rng).is_err());
    }

    #[test]
    fn selection_is_uniform() {
        let mut rng = RandomStream::new(1, 0).generator();
        let t = labels(&[0, 0]);
        let trials = 100_000;
        let first = (0..trials)
            .filter(|_| sample_verifications(1, &t, &t, &mut rng).unwrap()[0].0 == 0)
            .count();
        let freq = first as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.005, "freq = {freq}");
    }

    #[test]
    fn payment_vectors() {
        let scheme = DeterrentScheme {
            verifications: 2,
            fine: 5.0,
        };
        assert_eq!(payments(&scheme, 4, &vec![(0, false), (1, false)]), vec![0.0; 4]);
        assert_eq!(
            payments(&scheme, 4, &vec![(2, true), (1, false)]),
            vec![0.0, 0.0, 5.0, 0.0]
        );
        assert_eq!(
            payments(&scheme, 4, &vec![(2, true), (3, true)]),
            vec![0.0, 0.0, 5.0, 5.0]
        );
    }

    #[test]
    fn expected_fine_values() {
        let scheme = DeterrentScheme {
            verifications: 10,
            fine: 5.0,
        };
        assert_eq!(expected_fine(&scheme, 100, false), 0.0);
        assert_eq!(expected_fine(&scheme, 100, true), 0.5);
        let all = DeterrentScheme {
            verifications: 7,
            fine: 3.25,
        };
        assert_eq!(expected_fine(&all, 7, true), 3.25);
    }

    #[test]
    fn sufficiency_boundaries() {
        let s = deterrent_sufficiency(10, 100, 5.0, 5, 0.1).unwrap();
        assert!(s.weakly_persistent && s.k_tolerant);
        let none = deterrent_sufficiency(10, 100, 0.0, 1, 0.1).unwrap();
        assert!(!none.weakly_persistent && !none.k_tolerant);
        for eps in [1e-3, 0.01, 0.05, 0.3, 1.0] {
            let s = deterrent_sufficiency(1000, 1_000_000, 1e4 * eps, 10, eps).unwrap();
            assert!(s.weakly_persistent, "eps = {eps}");
            assert!(deterrent_sufficiency_rate(0.001, 1e4 * eps, 10, eps).weakly_persistent);
        }
        assert!(deterrent_sufficiency(3, 2, 1.0, 1, 0.1).is_err());
    }

    #[test]
    fn fine_search_meets_target() {
        for (m, n, target) in [(1, 3, 0.1), (7, 9, 0.3), (2, 8, 1.0 / 3.0)] {
            let d = fine_for(m, n, target);
            let scheme = DeterrentScheme {
                verifications: m,
                fine: d,
            };
            assert!(expected_fine(&scheme, n, true) >= target);
        }
    }

    #[test]
    fn liar_fine_matches_closed_form() {
        let scheme = DeterrentScheme {
            verifications: 3,
            fine: 2.0,
        };
        let truth = labels(&[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        let mut lie = truth.clone();
        lie[4] = TypeValue::Label(1);
        let mut rng = RandomStream::new(8, 1).generator();
        let trials = 100_000;
        let mut total = 0.0;
        let mut total_sq = 0.0;
        for _ in 0..trials {
            let v = sample_verifications(3, &truth, &lie, &mut rng).unwrap();
            let p = payments(&scheme, 10, &v);
            assert!(p.iter().enumerate().all(|(i, &x)| i == 4 || x == 0.0));
            total += p[4];
            total_sq += p[4] * p[4];
        }
        let mean = total / trials as f64;
        let sd = (total_sq / trials as f64 - mean * mean).sqrt();
        let want = expected_fine(&scheme, 10, true);
        assert!((mean - want).abs() < 4.0 * sd / (trials as f64).sqrt());
    }
}
