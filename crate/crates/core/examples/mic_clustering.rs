//! Groups the seven MicTest predictors by MIC dissimilarity and cuts the
//! average-linkage dendrogram at 0.7.
//!
//! Run with `cargo run --release --example mic_clustering [samples] [seed]`.

use std::time::Instant;

use group_explain::cluster::{average_linkage_cluster, dissimilarity_matrix};
use group_explain::data::SyntheticFamily;
use group_explain::mic::MicConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);

    let generated = SyntheticFamily::MicTest.generate(n, seed)?;
    let data = generated.data;
    let start = Instant::now();
    let d = dissimilarity_matrix(&data.columns(), data.names(), &MicConfig::default())?;
    let tree = average_linkage_cluster(&d)?;
    let elapsed = start.elapsed();

    println!("dissimilarities (1 - MIC):");
    print!("{}", d.to_csv());
    println!("\ndendrogram: {}", tree.to_newick(Some(data.names())));
    let p = tree.cut(0.7)?;
    println!("partition at 0.7: {:?}", p.to_lists());
    println!("clustered {n} samples in {:.2?}", elapsed);
    Ok(())
}
