//! Shapley and Banzhaf values of a small weighted majority game, plus a
//! value defined by cardinal weights.

use group_explain::values::{shapley_weights, weighted_value};
use group_explain::{Banzhaf, Game, GameValue, Shapley, WeightedValueSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Weighted majority [quota 5; 4, 2, 2, 1].
    let weights = [4.0, 2.0, 2.0, 1.0];
    let v = Game::from_fn(4, |s| {
        let w: f64 = (0..4).filter(|i| s >> i & 1 == 1).map(|i| weights[i]).sum();
        if w >= 5.0 { 1.0 } else { 0.0 }
    })?;

    let phi = Shapley.value(&v);
    let beta = Banzhaf.value(&v);
    println!("player  weight  shapley  banzhaf");
    for i in 0..4 {
        println!("{i:>6}  {:>6}  {:>7.4}  {:>7.4}", weights[i], phi[i], beta[i]);
    }
    println!("shapley total {:.4} (= v(N)); banzhaf total {:.4}", phi.iter().sum::<f64>(), beta.iter().sum::<f64>());

    let spec = WeightedValueSpec::by_cardinality("shapley-by-weights", |s, n| shapley_weights(n)[s]);
    let again = weighted_value(&spec, &v);
    println!("weighted form reproduces shapley: {:?}", again.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>());
    Ok(())
}
