mod common;

use std::sync::Arc;

use interurn::model::{normalize_raw, validate_spec, RawSpec};
use interurn::simulator::{rng_for, Simulation};
use interurn::{InteractionSpec, SquareMatrix, SystemState};
use proptest::prelude::*;

fn total_probability(state: &SystemState, h: usize) -> f64 {
    state.birth_probability(h)
        + (0..state.n_colors())
            .map(|c| state.old_color_probability(h, c).unwrap())
            .sum::<f64>()
}

#[test]
fn probabilities_sum_to_one_along_runs() {
    let mut rng = rng_for(2024);
    for (k, n) in [1, 2, 3, 5, 2, 3].into_iter().enumerate() {
        let spec = common::random_spec(&mut rng, n);
        let mut sim = Simulation::new(Arc::new(spec), k as u64);
        for t in 0..400 {
            if t % 37 == 0 {
                for h in 0..n {
                    let p = total_probability(sim.state(), h);
                    assert!((p - 1.0).abs() < 1e-12, "n={n} t={t} h={h}: {p}");
                    let b = sim.state().birth_probability(h);
                    assert!(b > 0.0 && b <= 1.0);
                }
            }
            sim.step().unwrap();
        }
    }
}

/// Direct Poisson–Dirichlet probabilities from the adoption counts alone.
fn pd_probabilities(theta: f64, gamma: f64, counts: &[u32], t: u64) -> (f64, Vec<f64>) {
    let d = counts.len() as f64;
    let denom = theta + t as f64;
    let birth = (theta + gamma * d) / denom;
    let old = counts.iter().map(|&k| (k as f64 - gamma) / denom).collect();
    (birth, old)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_agent_is_poisson_dirichlet(theta in 0.1f64..20.0, gamma in 0.0f64..0.99, seed in any::<u64>(), steps in 1usize..300) {
        let spec = InteractionSpec::new(
            vec![theta],
            SquareMatrix::diagonal(&[gamma]),
            SquareMatrix::identity(1),
        ).unwrap();
        let mut sim = Simulation::new(Arc::new(spec), seed);
        for _ in 0..steps {
            sim.step().unwrap();
        }
        let state = sim.state();
        let counts: Vec<u32> = (0..state.n_colors()).map(|c| state.counts(c).unwrap()[0]).collect();
        let (birth, old) = pd_probabilities(theta, gamma, &counts, state.t());
        prop_assert!((state.birth_probability(0) - birth).abs() < 1e-14);
        for (c, p) in old.iter().enumerate() {
            prop_assert!((state.old_color_probability(0, c).unwrap() - p).abs() < 1e-14);
        }
    }

    #[test]
    fn valid_raw_specs_normalize(
        n in 1usize..4,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = rng_for(seed);
        let n0: Vec<u64> = (0..n).map(|_| rng.gen_range(1..20)).collect();
        let mut rho = vec![vec![0u64; n]; n];
        let mut nu = vec![vec![0u64; n]; n];
        for j in 0..n {
            for h in 0..n {
                rho[j][h] = if j == h { rng.gen_range(1..10) } else { rng.gen_range(0..10) };
                let hat_min = u64::from(j == h);
                nu[j][h] = rng.gen_range(0..=rho[j][h] - hat_min);
            }
        }
        let spec = normalize_raw(&RawSpec { n0, rho, nu }).unwrap();
        prop_assert!(validate_spec(&spec).is_empty());
    }
}

#[test]
fn reachable_states_respect_count_bounds() {
    let mut rng = rng_for(77);
    let spec = common::random_spec(&mut rng, 3);
    let mut sim = Simulation::new(Arc::new(spec), 5);
    for _ in 0..2_000 {
        sim.step().unwrap();
    }
    let s = sim.state();
    assert_eq!(s.d_star_total() as usize, s.n_colors());
    for h in 0..3 {
        assert!(s.d_star()[h] <= s.d()[h] && s.d()[h] <= s.d_star_total());
        let drawn: u64 = s.colors().map(|c| c.counts[h] as u64).sum();
        assert_eq!(drawn, s.t());
    }
    for c in s.colors() {
        assert!(c.counts[c.producer] >= 1);
    }
}
