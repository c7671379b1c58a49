//! Verification sampling and fine arithmetic.

use mechaudit::corpus::plurality;
use mechaudit::deterrent::{
    deterrent_from_sweep, deterrent_sufficiency, expected_fine, fine_for, payments, sample_verifications,
    DeterrentScheme,
};
use mechaudit::outcome::{OutcomeModel, DEFAULT_STATE_BUDGET};
use mechaudit::privacy::AuditSettings;
use mechaudit::truthfulness::coalition_sweep;
use mechaudit::{RandomStream, TypeValue};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn truthful_players_never_pay(
        truth in prop::collection::vec(0usize..3, 1..20),
        lies in prop::collection::vec(any::<bool>(), 20),
        m in any::<usize>(),
        fine in 0.0f64..100.0,
        seed in any::<u64>(),
    ) {
        let n = truth.len();
        let m = m % (n + 1);
        let true_types: Vec<TypeValue> = truth.iter().map(|&t| TypeValue::Label(t)).collect();
        let announced: Vec<TypeValue> = truth
            .iter()
            .zip(&lies)
            .map(|(&t, &lie)| TypeValue::Label(if lie { t + 1 } else { t }))
            .collect();
        let mut rng = RandomStream::new(seed, 3).generator();
        let v = sample_verifications(m, &true_types, &announced, &mut rng).unwrap();
        let mut seen: Vec<usize> = v.iter().map(|x| x.0).collect();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), m);
        let p = payments(&DeterrentScheme { verifications: m, fine }, n, &v);
        for i in 0..n {
            if true_types[i] == announced[i] {
                prop_assert_eq!(p[i], 0.0);
            }
        }
    }

    /// Raising `m` or `d` never turns a sufficient scheme insufficient.
    #[test]
    fn sufficiency_is_monotone(
        n in 1usize..200,
        m in any::<usize>(),
        extra_m in any::<usize>(),
        d in 0.0f64..1e4,
        extra_d in 0.0f64..1e4,
        r in 1usize..5,
        eps in 0.0f64..2.0,
    ) {
        let m = m % (n + 1);
        let m2 = m + extra_m % (n + 1 - m);
        let base = deterrent_sufficiency(m, n, d, r, eps).unwrap();
        for more in [
            deterrent_sufficiency(m2, n, d, r, eps).unwrap(),
            deterrent_sufficiency(m, n, d + extra_d, r, eps).unwrap(),
        ] {
            prop_assert!(!base.weakly_persistent || more.weakly_persistent);
            prop_assert!(!base.k_tolerant || more.k_tolerant);
        }
    }

    #[test]
    fn fine_search_is_sufficient(n in 1usize..500, m in any::<usize>(), r in 1usize..5, eps in 1e-6f64..2.0) {
        let m = 1 + m % n;
        let d = fine_for(m, n, r as f64 * eps);
        prop_assert!(deterrent_sufficiency(m, n, d, r, eps).unwrap().weakly_persistent);
        let scheme = DeterrentScheme { verifications: m, fine: d };
        prop_assert!(expected_fine(&scheme, n, true) >= r as f64 * eps * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A fine with `(m/n)d >= rε` leaves no coalition with a positive
    /// summed gain.
    #[test]
    fn sufficient_fines_remove_coalition_gain(players in 3usize..=7, p in 0.1f64..0.9, m in any::<usize>(), k in 0usize..=1, r in 1usize..=2) {
        prop_assume!(k + r <= players);
        let inst = plurality(players, &[p, 1.0 - p]);
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET).unwrap();
        let sweep = coalition_sweep(&model, k, r, &AuditSettings::default()).unwrap();
        prop_assert!(sweep.exhaustive);
        let eps = sweep.max_member_gain().0.max(0.0);
        let m = 1 + m % players;
        let scheme = DeterrentScheme { verifications: m, fine: fine_for(m, players, r as f64 * eps) };
        let report = deterrent_from_sweep(&sweep, &scheme, players).unwrap();
        prop_assert!(report.coalition_sum_gain <= 0.0, "{}", report.coalition_sum_gain);
    }
}
