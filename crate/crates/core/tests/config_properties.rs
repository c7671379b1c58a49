//! Configuration round trips.

use mechaudit::builtin::{builtin_scenario_with, BuiltinOptions, BUILTIN_NAMES};
use mechaudit::parse_config;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emitted_configs_parse_back(
        which in 0..BUILTIN_NAMES.len(),
        players in 3usize..40,
        seed in any::<u64>(),
        samples in 1u64..1_000_000,
    ) {
        let mut config = builtin_scenario_with(
            BUILTIN_NAMES[which],
            &BuiltinOptions { players: Some(players), candidates: None },
        ).unwrap();
        config.seed = seed;
        config.budgets.mc_samples = samples;
        let text = config.to_json().unwrap();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &config);
        prop_assert_eq!(back.to_json().unwrap(), text);
    }
}
