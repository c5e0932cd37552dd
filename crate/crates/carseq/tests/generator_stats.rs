//! Statistical properties of the instance generator: per-family structural
//! constraints over many seeds, the direction of the bias mechanisms, and
//! the population-variance effect of random compositions.
//!
//! Generation is the expensive part, so all checks run over one shared
//! 100-seed sample per family.

use carseq::core::Instance;
use carseq::generator::{check_family_constraints, generate, Family, GeneratorSpec};
use rayon::prelude::*;

const SEEDS: u64 = 100;

fn demand_weighted_mean_options(inst: &Instance) -> f64 {
    let total: usize = (0..inst.num_classes())
        .map(|i| inst.demand()[i] * inst.options_of_class(i))
        .sum();
    total as f64 / inst.num_cars() as f64
}

fn population_variance(inst: &Instance) -> f64 {
    let k = inst.num_classes() as f64;
    let mean = inst.num_cars() as f64 / k;
    inst.demand().iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / k
}

/// Upper tail P(X >= wins) for X ~ Binomial(n, 1/2).
fn binomial_upper_tail(n: u64, wins: u64) -> f64 {
    let mut log_coeff = 0.0f64; // log C(n, 0)
    let mut tail = 0.0f64;
    let log_half = (0.5f64).ln();
    for k in 0..=n {
        if k >= wins {
            tail += (log_coeff + n as f64 * log_half).exp();
        }
        log_coeff += ((n - k) as f64).ln() - ((k + 1) as f64).ln();
    }
    tail.min(1.0)
}

#[test]
fn family_constraints_and_bias_directions_over_100_seeds() {
    let samples: Vec<(Family, Vec<Instance>)> = Family::ALL
        .into_par_iter()
        .map(|family| {
            let instances: Vec<Instance> = (0..SEEDS)
                .into_par_iter()
                .map(|seed| {
                    generate(&GeneratorSpec::new(family, 100, seed))
                        .unwrap_or_else(|e| panic!("{family} seed {seed}: {e}"))
                })
                .collect();
            (family, instances)
        })
        .collect();
    let of = |family: Family| -> &Vec<Instance> {
        &samples.iter().find(|(f, _)| *f == family).unwrap().1
    };

    // Structural post-conditions hold for every seed of every family.
    for (family, instances) in &samples {
        for (seed, inst) in instances.iter().enumerate() {
            check_family_constraints(inst, *family)
                .unwrap_or_else(|e| panic!("{family} seed {seed}: {e}"));
            assert_eq!(inst.num_cars(), 100);
        }
    }

    // Negative bias shifts demand toward classes with fewer options:
    // one-sided sign test against the unbiased family at level 0.01.
    let wins = of(Family::Negbhiu)
        .iter()
        .zip(of(Family::Nobhiu))
        .filter(|(a, b)| demand_weighted_mean_options(a) < demand_weighted_mean_options(b))
        .count() as u64;
    let p = binomial_upper_tail(SEEDS, wins);
    assert!(p < 0.01, "sign test not significant: {wins}/{SEEDS} wins, p = {p:.4}");

    // Random compositions spread class populations more than per-car
    // uniform assignment.
    let mean_randn = of(Family::RandN).iter().map(population_variance).sum::<f64>() / SEEDS as f64;
    let mean_nob = of(Family::Nobhiu).iter().map(population_variance).sum::<f64>() / SEEDS as f64;
    assert!(
        mean_randn > mean_nob,
        "composition variance {mean_randn:.3} not above per-car-uniform variance {mean_nob:.3}"
    );
}

#[test]
fn binomial_tail_sanity() {
    assert!((binomial_upper_tail(4, 0) - 1.0).abs() < 1e-12);
    assert!((binomial_upper_tail(4, 4) - 0.0625).abs() < 1e-12);
    assert!((binomial_upper_tail(100, 50) - 0.5397946).abs() < 1e-4);
}
