//! The four coalitional values on one game and partition: per-player
//! values, block sums, and whether the block sums equal the quotient game's
//! values.

use group_explain::coalition::quotient_property_check;
use group_explain::{CoalitionalKind, CoalitionalValueSpec, Game, Partition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // v(S) = (Σ_{i∈S} i+1)³ / 100 plus a bonus when players 0, 2 and 3 all join.
    let v = Game::from_fn(5, |s| {
        let w: f64 = (0..5).filter(|i| s >> i & 1 == 1).map(|i| (i + 1) as f64).sum();
        w.powi(3) / 100.0 + if s & 0b1101 == 0b1101 { 2.0 } else { 0.0 }
    })?;
    let p = Partition::new(5, vec![vec![0, 1], vec![2, 3, 4]])?;

    for kind in CoalitionalKind::ALL {
        let spec = CoalitionalValueSpec::from(kind);
        let r = spec.explain(&v, &p)?;
        let qp = quotient_property_check(&spec, &v, &p)?;
        println!("{}", spec.name());
        println!("  per player   {:?}", r.per_player.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>());
        println!("  block sums   {:?}", r.per_block.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>());
        println!("  quotient     {:?}", r.quotient.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>());
        println!("  sums match quotient: {} (max gap {:.2e})", qp.passed, qp.max_deviation);
    }
    Ok(())
}
