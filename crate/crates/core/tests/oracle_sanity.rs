//! The reference implementations must catch a deliberately broken value,
//! and agree with known closed cases.

use std::sync::Arc;

use group_explain::mic::{mic_e, MicConfig};
use group_explain::oracles::{crosscheck_with, mic_brute_force, shapley_by_permutations};
use group_explain::values::shapley_weights;
use group_explain::{
    CoalitionalKind, CoalitionalValueSpec, CustomSpec, Game, GameValue, Intermediate, Partition, Shapley,
    WeightedValueSpec,
};

#[test]
fn corrupted_inner_weight_is_caught() {
    let corrupted = WeightedValueSpec::by_cardinality("shapley-corrupted", |s, n| {
        let w = shapley_weights(n)[s];
        if n == 3 && s == 1 { w + 0.01 } else { w }
    });
    let spec = CustomSpec::new("broken-owen", Arc::new(Shapley), Arc::new(corrupted), Intermediate::ModifiedQuotient)
        .expect("linear inner value is accepted")
        .with_reference(CoalitionalKind::Owen);
    let report = crosscheck_with(&CoalitionalValueSpec::Custom(spec), 20, 4, 6).unwrap();
    assert!(report.max_abs_deviation > 1e-3, "{report:?}");
    let witness = report.witness.expect("a witness is reported");
    assert!(witness.deviation > 1e-3);
    assert!(witness.partition.iter().any(|b| b.len() >= 3), "inner value with three players must be involved");
}

#[test]
fn faithful_custom_spec_agrees_with_owen() {
    let spec = CustomSpec::new(
        "owen-by-weights",
        Arc::new(WeightedValueSpec::shapley()),
        Arc::new(WeightedValueSpec::shapley()),
        Intermediate::ModifiedQuotient,
    )
    .unwrap()
    .with_reference(CoalitionalKind::Owen);
    let report = crosscheck_with(&CoalitionalValueSpec::Custom(spec), 10, 9, 6).unwrap();
    assert!(report.max_abs_deviation < 1e-10, "{report:?}");
}

#[test]
fn two_step_shapley_on_singletons_is_shapley() {
    let spec = CoalitionalValueSpec::two_step_shapley();
    let mut rng = rand_state(21);
    for n in 2..=7 {
        let v = Game::from_fn(n, |s| if s == 0 { 0.0 } else { next(&mut rng) }).unwrap();
        let got = spec.evaluate(&v, &Partition::singletons(n)).unwrap();
        let want = shapley_by_permutations(&v).unwrap();
        for i in 0..n {
            assert!((got[i] - want[i]).abs() <= 1e-12, "n={n} i={i}");
        }
        let direct = Shapley.value(&v);
        assert!((direct[0] - want[0]).abs() <= 1e-12);
    }
}

#[test]
fn mic_of_a_product_grid_is_zero_and_of_a_stripe_pattern_is_one() {
    // Every (i, j) pair once: counts factor on every grid, so MI vanishes.
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for i in 0..5 {
        for j in 0..5 {
            x.push(i as f64);
            y.push(j as f64);
        }
    }
    let cfg = MicConfig::default();
    assert!(mic_e(&x, &y, &cfg).unwrap().abs() < 1e-12);
    assert!(mic_brute_force(&x, &y, 4, 4).unwrap().abs() < 1e-12);

    // Four equal alternating stripes: y is a balanced noiseless function of
    // x, resolved by a 4x2 grid once the budget for 24 samples allows it.
    let wide = MicConfig { b_exponent: 0.7, ..MicConfig::default() };
    assert!(wide.budget(24) > 8);
    let x: Vec<f64> = (0..24).map(|i| i as f64).collect();
    let y: Vec<f64> = (0..24).map(|i| ((i / 6) % 2) as f64).collect();
    assert!((mic_e(&x, &y, &wide).unwrap() - 1.0).abs() < 1e-12);
    assert!(mic_e(&x, &y, &cfg).unwrap() < 1.0 - 1e-3);
    assert!((mic_brute_force(&x, &y, 4, 4).unwrap() - 1.0).abs() < 1e-12);
}

fn rand_state(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1
}

/// xorshift draws in [-1, 1).
fn next(state: &mut u64) -> f64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    (*state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}
