//! Explains a model served by an external process that reads comma-separated
//! rows, one per line, and answers one number per line after each blank line.

use group_explain::data::{explain, Dataset, ExplainConfig, GameSource, ModelOracle, Structure, ValueChoice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A shell scoring server for f(x) = 2 x1 + x2 x3.
    let server = r#"cmd:while IFS=, read a b c; do if [ -z "$a" ]; then continue; fi; echo "$a $b $c" | awk '{ printf "%.17g\n", 2 * $1 + $2 * $3 }'; done"#;
    let model = ModelOracle::parse(server, 3)?;
    let background = Dataset::with_default_names(vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]])?;
    let data = Dataset::with_default_names(vec![vec![1.0, 2.0, 3.0]])?;
    let cfg = ExplainConfig::new(ValueChoice::parse("shapley")?, Structure::Features, GameSource::Marginal);
    let e = explain(&data, Some(&background), &model, &cfg)?;
    println!("prediction {:.4}, baseline {:.4}", e.predictions[0], e.baselines[0]);
    for (u, x) in e.units.iter().zip(&e.values[0]) {
        println!("  {:<8} {x:.4}", u.label);
    }
    Ok(())
}
