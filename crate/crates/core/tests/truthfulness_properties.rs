//! Deviation gains on small exhaustive instances.

use mechaudit::corpus::{count_threshold, plurality, two_type_two_alt, CorpusInstance};
use mechaudit::outcome::{OutcomeModel, DEFAULT_STATE_BUDGET};
use mechaudit::privacy::{audit_bdp, AuditSettings};
use mechaudit::truthfulness::{
    best_coalition_deviation_gain, best_individual_deviation_gain, check_truthfulness, compare_privacy_and_truthfulness,
};
use mechaudit::TypeValue;
use proptest::prelude::*;

fn instance(kind: usize, players: usize, p: f64) -> CorpusInstance {
    match kind {
        0 => plurality(players, &[p, 1.0 - p]),
        1 => plurality(players, &[p / 2.0, p / 2.0, 1.0 - p]),
        2 => count_threshold(players, (players as u32).div_ceil(2)),
        _ => two_type_two_alt(players, 0.5),
    }
}

fn instance_strategy() -> impl Strategy<Value = CorpusInstance> {
    (0usize..4, 3usize..=6, 0.1f64..0.9).prop_map(|(k, n, p)| instance(k, n, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gains_are_non_negative(inst in instance_strategy(), seed in any::<u64>()) {
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET).unwrap();
        let size = inst.env.type_space.finite_size().unwrap() as usize;
        let t = TypeValue::Label(seed as usize % size);
        let adv = TypeValue::Label((seed >> 8) as usize % size);
        let settings = AuditSettings::default();
        let solo = best_individual_deviation_gain(&model, 0, &t, &[1], std::slice::from_ref(&adv), &settings).unwrap();
        prop_assert!(solo.gain >= 0.0);
        let pair = best_coalition_deviation_gain(
            &model, &[0, 2], &[t.clone(), adv.clone()], &[1], std::slice::from_ref(&adv), &settings,
        ).unwrap();
        prop_assert!(pair.gain >= 0.0);
    }

    #[test]
    fn singleton_coalition_reduces_to_individual(inst in instance_strategy(), seed in any::<u64>()) {
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET).unwrap();
        let size = inst.env.type_space.finite_size().unwrap() as usize;
        let t = TypeValue::Label(seed as usize % size);
        let settings = AuditSettings::default();
        let a = best_individual_deviation_gain(&model, 1, &t, &[], &[], &settings).unwrap();
        let b = best_coalition_deviation_gain(&model, &[1], std::slice::from_ref(&t), &[], &[], &settings).unwrap();
        prop_assert!((a.gain - b.gain).abs() <= 1e-12);
    }

    /// At fixed `k`, the `(k − r + 1, r)` maximum gain does not shrink as
    /// `r` grows.
    #[test]
    fn gain_is_monotone_in_coalition_size(inst in instance_strategy(), k in 1usize..=2) {
        prop_assume!(k + 1 < inst.env.players);
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET).unwrap();
        let settings = AuditSettings::default();
        let gains: Vec<f64> = (1..=k + 1)
            .map(|r| check_truthfulness(&model, k + 1 - r, r, f64::INFINITY, &settings).unwrap().max_gain)
            .collect();
        for w in gains.windows(2) {
            prop_assert!(w[1] + 1e-12 >= w[0], "{:?}", gains);
        }
    }

    /// Exact and exhaustive: gain at most `(rε + 2rδ(ε))·2α` on the grid.
    #[test]
    fn privacy_bounds_gain(inst in instance_strategy(), k in 0usize..=2, r in 1usize..=3) {
        prop_assume!(r <= k + 1 && k < inst.env.players);
        let model = OutcomeModel::new(&inst.mech, &inst.env, DEFAULT_STATE_BUDGET).unwrap();
        let settings = AuditSettings::default();
        let privacy = audit_bdp(&model, k, &settings).unwrap();
        let cell = check_truthfulness(&model, k + 1 - r, r, f64::INFINITY, &settings).unwrap();
        let check = compare_privacy_and_truthfulness(&privacy, &cell, inst.env.utility_bound).unwrap();
        prop_assert!(!check.advisory);
        prop_assert!(check.holds, "{:?}", check);
    }
}
