//! Sampling determinism, support, frequencies and utility bounds.

use mechaudit::builtin::{builtin_scenario, BUILTIN_NAMES};
use mechaudit::env::evaluate_utility;
use mechaudit::sampling::{sample_profile, TypeSampler};
use mechaudit::{RandomStream, TypeDistribution, TypeSpace, TypeValue};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn categorical_frequencies_pass_chi_square() {
    let probabilities = vec![0.05, 0.1, 0.15, 0.1, 0.2, 0.1, 0.15, 0.1, 0.05];
    let space = TypeSpace::Finite {
        labels: (0..9).map(|i| i.to_string()).collect(),
    };
    let dist = TypeDistribution::Categorical {
        probabilities: probabilities.clone(),
    };
    let sampler = TypeSampler::new(&space, &dist).unwrap();
    let mut rng = RandomStream::new(11, 1).generator();
    let draws = 100_000;
    let mut counts = [0u64; 9];
    for _ in 0..draws {
        let TypeValue::Label(i) = sampler.draw(&mut rng) else {
            panic!("finite draw")
        };
        counts[i] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&probabilities)
        .map(|(&c, &p)| {
            let e = p * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new(8.0).unwrap().inverse_cdf(0.999);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

#[test]
fn same_stream_same_profiles() {
    for name in BUILTIN_NAMES {
        let config = builtin_scenario(name).unwrap();
        let env = &config.environment;
        let all: Vec<usize> = (0..env.players).collect();
        let a = sample_profile(env, &all, &mut RandomStream::new(5, 9).generator()).unwrap();
        let b = sample_profile(env, &all, &mut RandomStream::new(5, 9).generator()).unwrap();
        assert_eq!(a, b, "{name}");
        let c = sample_profile(env, &all, &mut RandomStream::new(6, 9).generator()).unwrap();
        assert_ne!(a, c, "{name}");
    }
}

/// `|u(t, s)| <= α` for draws of every builtin.
#[test]
fn utilities_are_bounded() {
    for name in BUILTIN_NAMES {
        let config = builtin_scenario(name).unwrap();
        let env = &config.environment;
        let sampler = TypeSampler::new(&env.type_space, &env.distribution).unwrap();
        let mut rng = RandomStream::new(3, 4).generator();
        for _ in 0..10_000 {
            let t = sampler.draw(&mut rng);
            assert!(env.type_space.contains(&t), "{name}: {t:?}");
            let player = rng.random_range(0..env.players);
            let s = rng.random_range(0..env.alternatives.len());
            let u = evaluate_utility(env, player, &t, s).unwrap();
            assert!(u.abs() <= env.utility_bound, "{name}: u = {u}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn draws_stay_in_support(seed in any::<u64>(), lo in -5.0f64..5.0, width in 0.01f64..10.0, bound in 0.1f64..3.0) {
        let interval = TypeSpace::Interval { lo, hi: lo + width };
        let uniform = TypeSampler::new(&interval, &TypeDistribution::uniform(lo, lo + width)).unwrap();
        let sym = TypeSpace::Interval { lo: -bound, hi: bound };
        let normal = TypeSampler::new(&sym, &TypeDistribution::TruncatedStdNormal { bound }).unwrap();
        let mut rng = RandomStream::new(seed, 0).generator();
        for _ in 0..200 {
            let t = uniform.draw(&mut rng);
            prop_assert!(interval.contains(&t), "{:?}", t);
            let t = normal.draw(&mut rng);
            prop_assert!(sym.contains(&t), "{:?}", t);
        }
    }
}
