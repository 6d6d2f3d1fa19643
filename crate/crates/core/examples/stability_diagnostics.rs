//! Compares conditional explanations of two models that differ only
//! slightly, per feature and per group, on strongly dependent data.

use group_explain::data::{explain, stability_report, ExplainConfig, GameSource, ModelOracle, Structure, SyntheticFamily, ValueChoice};
use group_explain::Partition;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = SyntheticFamily::parse("shared-latent:0.05")?;
    let data = family.generate(500, 3)?.data;
    let a = ModelOracle::parse("poly:x1 + x3", 3)?;
    let b = ModelOracle::parse("poly:x2 + x3", 3)?;
    let p = Partition::new(3, vec![vec![0, 1], vec![2]])?;
    let cfg = ExplainConfig::new(ValueChoice::parse("owen")?, Structure::Partition(p), GameSource::Conditional(family));

    let ea = explain(&data, None, &a, &cfg)?;
    let eb = explain(&data, None, &b, &cfg)?;
    let report = stability_report(&ea, &eb, &data)?;
    println!("model difference norm {:.4}", report.model_difference_norm);
    for u in &report.units {
        println!("  {:<18} {:<6} difference {:.4}  ratio {:.2}", u.kind.tag(), u.label, u.difference_norm, u.ratio.unwrap_or(f64::NAN));
    }
    Ok(())
}
