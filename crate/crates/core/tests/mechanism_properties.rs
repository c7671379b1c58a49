//! Anonymity, sufficiency, plurality monotonicity and welfare linearity.

use mechaudit::builtin::{builtin_scenario_with, BuiltinOptions};
use mechaudit::mechanism::{histogram_of, plurality_winner, social_welfare_vector, Histogram, WeightMatrix};
use mechaudit::sampling::sample_profile;
use mechaudit::{Mechanism, RandomStream, ScenarioConfig, TypeValue};
use proptest::prelude::*;

fn small(name: &str, players: usize) -> ScenarioConfig {
    builtin_scenario_with(
        name,
        &BuiltinOptions {
            players: Some(players),
            candidates: None,
        },
    )
    .unwrap()
}

fn random_profile(config: &ScenarioConfig, seed: u64) -> Vec<TypeValue> {
    let env = &config.environment;
    let all: Vec<usize> = (0..env.players).collect();
    sample_profile(env, &all, &mut RandomStream::new(seed, 7).generator()).unwrap()
}

const FAMILIES: [&str; 5] = [
    "voting",
    "facility_location",
    "public_project",
    "multiple_public_projects",
    "group_auction",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Output is unchanged when players of the same class swap types.
    #[test]
    fn output_is_anonymous_within_classes(
        family in 0..FAMILIES.len(),
        players in 3usize..10,
        seed in any::<u64>(),
        swaps in prop::collection::vec((0usize..10, 0usize..10), 1..20),
    ) {
        let config = small(FAMILIES[family], players);
        let env = &config.environment;
        let classes = config.mechanism.player_classes(players);
        let profile = random_profile(&config, seed);
        let mut permuted = profile.clone();
        for (a, b) in swaps {
            let (a, b) = (a % players, b % players);
            if classes[a] == classes[b] {
                permuted.swap(a, b);
            }
        }
        prop_assert_eq!(
            config.mechanism.run(env, &profile).unwrap(),
            config.mechanism.run(env, &permuted).unwrap()
        );
    }

    /// Histogram and two-alternative mechanisms accept any permutation.
    #[test]
    fn count_and_sum_mechanisms_are_fully_anonymous(
        family in 0usize..3,
        players in 3usize..10,
        seed in any::<u64>(),
        perm_seed in any::<u64>(),
    ) {
        let config = small(FAMILIES[family], players);
        let env = &config.environment;
        let profile = random_profile(&config, seed);
        let mut order: Vec<usize> = (0..players).collect();
        let mut x = perm_seed;
        for i in (1..players).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (x >> 33) as usize % (i + 1));
        }
        let permuted: Vec<TypeValue> = order.iter().map(|&i| profile[i].clone()).collect();
        prop_assert_eq!(
            config.mechanism.run(env, &profile).unwrap(),
            config.mechanism.run(env, &permuted).unwrap()
        );
    }

    /// Replacing types by others in the same block leaves the output alone.
    #[test]
    fn histogram_is_sufficient(
        players in 2usize..12,
        candidates in 2usize..5,
        seed in any::<u64>(),
        picks in prop::collection::vec(any::<usize>(), 12),
    ) {
        let config = builtin_scenario_with(
            "voting",
            &BuiltinOptions { players: Some(players), candidates: Some(candidates) },
        ).unwrap();
        let env = &config.environment;
        let Mechanism::Histogram(h) = &config.mechanism else { panic!("voting is a histogram mechanism") };
        let size = env.type_space.finite_size().unwrap() as usize;
        let profile = random_profile(&config, seed);
        let block = |t: &TypeValue| h.partition.block_of(&env.type_space, t).unwrap();
        let other: Vec<TypeValue> = profile
            .iter()
            .zip(&picks)
            .map(|(t, &pick)| {
                let same: Vec<usize> = (0..size)
                    .filter(|&i| block(&env.type_space.type_at(i)) == block(t))
                    .collect();
                env.type_space.type_at(same[pick % same.len()])
            })
            .collect();
        prop_assert_eq!(
            histogram_of(&h.partition, &env.type_space, &profile).unwrap(),
            histogram_of(&h.partition, &env.type_space, &other).unwrap()
        );
        prop_assert_eq!(config.mechanism.run(env, &profile).unwrap(), config.mechanism.run(env, &other).unwrap());
    }

    /// Moving value between two announcements on a dyadic grid keeps the
    /// score and hence the output.
    #[test]
    fn two_alt_score_is_sufficient(
        players in 2usize..10,
        eighths in prop::collection::vec(-8i32..=8, 10),
        shift in -16i32..=16,
        pair in (0usize..10, 0usize..10),
    ) {
        let config = small("public_project", players);
        let env = &config.environment;
        let mut values: Vec<i32> = eighths[..players].to_vec();
        let (a, b) = (pair.0 % players, pair.1 % players);
        prop_assume!(a != b);
        let shift = shift.clamp(-8 - values[a], 8 - values[a]).clamp(values[b] - 8, values[b] + 8);
        let before: Vec<TypeValue> = values.iter().map(|&v| TypeValue::Real(v as f64 / 8.0)).collect();
        values[a] += shift;
        values[b] -= shift;
        let after: Vec<TypeValue> = values.iter().map(|&v| TypeValue::Real(v as f64 / 8.0)).collect();
        prop_assert_eq!(config.mechanism.run(env, &before).unwrap(), config.mechanism.run(env, &after).unwrap());
    }

    /// Changing a valuation on an option the player does not weigh keeps
    /// every welfare value and the output.
    #[test]
    fn welfare_vector_is_sufficient(
        players in 6usize..12,
        seed in any::<u64>(),
        player in any::<usize>(),
        level in 0u32..5,
    ) {
        let config = small("group_auction", players);
        let env = &config.environment;
        let Mechanism::SocialWelfare(sw) = &config.mechanism else { panic!("group auction is a welfare mechanism") };
        let player = player % players;
        let Some(option) = sw.weights.rows[player].iter().position(|&w| w == 0) else { return Ok(()) };
        let profile = random_profile(&config, seed);
        let mut other = profile.clone();
        let TypeValue::Grid(g) = &mut other[player] else { panic!("grid types") };
        g[option] = level;
        prop_assert_eq!(config.mechanism.run(env, &profile).unwrap(), config.mechanism.run(env, &other).unwrap());
    }

    #[test]
    fn plurality_winner_survives_an_extra_vote(counts in prop::collection::vec(0u32..50, 1..8)) {
        let hist = Histogram(counts);
        let j = plurality_winner(&hist);
        let mut more = hist.clone();
        more.0[j] += 1;
        prop_assert_eq!(plurality_winner(&more), j);
    }

    #[test]
    fn welfare_is_linear(
        rows in prop::collection::vec(prop::collection::vec(0u8..=1, 3), 1..8),
        vals in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 8),
        other in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 8),
        lambda in -3.0f64..3.0,
    ) {
        let n = rows.len();
        let weights = WeightMatrix { rows, min_column_fraction: None };
        let a = &vals[..n];
        let b = &other[..n];
        let combined: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| lambda * u + v).collect())
            .collect();
        let lhs = social_welfare_vector(&weights, &combined).unwrap();
        let sa = social_welfare_vector(&weights, a).unwrap();
        let sb = social_welfare_vector(&weights, b).unwrap();
        for j in 0..3 {
            prop_assert!((lhs[j] - (lambda * sa[j] + sb[j])).abs() <= 1e-12 * (1.0 + lhs[j].abs()) * 8.0);
        }
    }
}
