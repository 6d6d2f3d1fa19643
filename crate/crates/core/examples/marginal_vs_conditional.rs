//! Marginal and conditional Shapley explanations of a model that uses only
//! one of two strongly correlated features (plus an independent third).

use group_explain::data::{explain, ExplainConfig, GameSource, ModelOracle, Structure, SyntheticFamily, UnitKind, ValueChoice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = SyntheticFamily::parse("rho-pair:0.9,0.1")?;
    let sample = family.generate(400, 1)?.data;
    let data = sample.head(5);
    let model = ModelOracle::parse("poly:x1 + x3", 3)?;
    let value = ValueChoice::parse("shapley")?;

    let marginal = explain(&data, Some(&sample), &model, &ExplainConfig::new(value.clone(), Structure::Features, GameSource::Marginal))?;
    let conditional = explain(&data, None, &model, &ExplainConfig::new(value, Structure::Features, GameSource::Conditional(family)))?;

    println!("row   x1       x2       x3      | ME: x1     x2      x3      | CE: x1     x2      x3");
    let (me, ce) = (marginal.kind_values(UnitKind::Feature), conditional.kind_values(UnitKind::Feature));
    for r in 0..data.n_samples() {
        let x = data.row(r);
        println!(
            "{r:>3}  {:>7.3}  {:>7.3}  {:>7.3} | {:>8.3} {:>8.3} {:>8.3} | {:>8.3} {:>8.3} {:>8.3}",
            x[0], x[1], x[2], me[r][0], me[r][1], me[r][2], ce[r][0], ce[r][1], ce[r][2]
        );
    }
    println!("the marginal game gives x2 nothing; the conditional game shares credit through the correlation");
    Ok(())
}
