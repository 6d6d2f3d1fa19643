//! Command-line front end for group explanations.

mod config;

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use group_explain::axioms::{axiom_suite, Axiom, AxiomReport};
use group_explain::cluster::{average_linkage_cluster, dissimilarity_matrix};
use group_explain::coalition::{quotient_property_check, OnSingletons};
use group_explain::data::{
    explain, stability_report, Dataset, ExplainConfig, ExplanationMatrix, GameSource, ModelOracle, Structure,
    SyntheticFamily, ValueChoice,
};
use group_explain::mic::MicConfig;
use group_explain::oracles::{crosscheck, random_game, OracleReport};
use group_explain::values::WeightedValueSpec;
use group_explain::{CoalitionalKind, CoalitionalValueSpec, Error, GameValue, Partition, PartitionTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad input: missing files, parse errors, inconsistent flags.
    Input(String),
    /// The scoring subprocess misbehaved.
    Oracle(String),
    /// A property that must hold did not.
    Invariant(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Oracle(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Oracle(m) | CliError::Invariant(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Oracle(_) | Error::OracleProtocol { .. } => CliError::Oracle(message),
            Error::NotInBlock { .. } | Error::EmptyCoalition | Error::NotACarrier { .. } | Error::NotLinear { .. } => {
                CliError::Invariant(message)
            }
            _ => CliError::Input(message),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "group-explain", version, about = "Game-theoretic group explanations of models")]
struct Cli {
    /// Worker threads for explanation jobs.
    #[arg(long, global = true, env = "GROUP_EXPLAIN_WORKERS")]
    workers: Option<usize>,
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group predictors by MIC dissimilarity and average linkage.
    Cluster(ClusterArgs),
    /// Explain a model on every row of a dataset.
    Explain(ExplainArgs),
    /// Compare the explanations of two models.
    Diagnose(DiagnoseArgs),
    /// Check game-value axioms and the coalitional implementations.
    Gamecheck(GamecheckArgs),
    /// Sample a synthetic dataset.
    Generate(GenerateArgs),
    /// Score rows from stdin with an analytic model (scoring-server protocol).
    #[command(hide = true)]
    Serve(ServeArgs),
}

#[derive(Args, Default)]
struct DataArgs {
    /// Data CSV (header row, comma separated).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Response column to drop from data files [default: y].
    #[arg(long)]
    response: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    common: DataArgs,
    /// Dissimilarity at which the dendrogram is cut [default: 0.7].
    #[arg(long)]
    threshold: Option<f64>,
    /// Grid budget exponent of MIC_e [default: 0.6].
    #[arg(long)]
    mic_b_exponent: Option<f64>,
}

#[derive(Args)]
struct ModelArgs {
    /// Background CSV for marginal games.
    #[arg(long)]
    background: Option<PathBuf>,
    /// `shapley`, `banzhaf`, `owen`, `banzhaf-owen`, `two-step-shapley` or `symmetric-banzhaf`.
    #[arg(long)]
    value: Option<String>,
    /// `me`, `me-pop:FAMILY`, `ce:FAMILY` or `ce-mc:DRAWS:FAMILY`.
    #[arg(long)]
    game: Option<String>,
    /// Partition JSON, e.g. [[0,1],[2]].
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Partition tree JSON (explained recursively, cut at --alpha).
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Cut heights of the tree; one explanation per value.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Group by MIC clustering of the background (or data) at this height.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    mic_b_exponent: Option<f64>,
    /// Attach standard errors to quotient explanations.
    #[arg(long)]
    std_errors: bool,
    /// Rows per request to a scoring subprocess.
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: DataArgs,
    #[command(flatten)]
    model_args: ModelArgs,
    /// `poly:EXPR`, `linear:c1,c2,..`, `rect:a,b,c,d` or `cmd:SHELL COMMAND`.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: DataArgs,
    #[command(flatten)]
    model_args: ModelArgs,
    /// The two models to compare (give the flag twice).
    #[arg(long, num_args = 1)]
    model: Vec<String>,
    /// Precomputed explanation JSON files (give the flag twice) instead of models.
    #[arg(long, num_args = 1)]
    explanations: Vec<PathBuf>,
}

#[derive(Args)]
struct GamecheckArgs {
    /// Value to check.
    #[arg(long)]
    value: Option<String>,
    /// JSON file with cardinal weights `{"name": .., "weights": {"n": [w_0, .., w_{n-1}]}}`.
    #[arg(long, conflicts_with = "value")]
    weights: Option<PathBuf>,
    /// Randomized trials per axiom; the oracle cross-check uses at most 200.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// `mictest`, `pedagogical:DELTA`, `rho-pair:RHO,NOISE`, `shared-latent:DELTA`,
    /// `blocks:SIZES;NOISE`, `rectangle:P` or `rademacher:N`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    arity: usize,
}

impl DataArgs {
    fn overrides(&self) -> RunConfig {
        RunConfig {
            data: self.data.clone(),
            response: self.response.clone(),
            seed: self.seed,
            out: self.out.clone(),
            ..Default::default()
        }
    }
}

impl ModelArgs {
    fn overrides(&self) -> RunConfig {
        RunConfig {
            background: self.background.clone(),
            value: self.value.clone(),
            game: self.game.clone(),
            partition: self.partition.clone(),
            tree: self.tree.clone(),
            alpha: self.alpha.clone(),
            threshold: self.threshold,
            mic_b_exponent: self.mic_b_exponent,
            std_errors: self.std_errors.then_some(true),
            batch_size: self.batch_size,
            ..Default::default()
        }
    }
}

/// Written next to every set of outputs.
#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: String,
    seed: u64,
    config: &'a RunConfig,
    outputs: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: PathBuf) -> CliResult<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        Ok(Outputs { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, command: &str, cfg: &RunConfig) -> CliResult<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            seed: cfg.seed(),
            config: cfg,
            outputs: std::mem::take(&mut self.files),
        };
        self.write("manifest.json", &to_json(&manifest)?)
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(format!("cannot serialize output: {e}")))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_data(path: &Path, cfg: &RunConfig) -> CliResult<Dataset> {
    let response = cfg.response.as_deref().unwrap_or("y");
    Ok(Dataset::load(path, Some(response))?.data)
}

fn mic_config(cfg: &RunConfig) -> CliResult<MicConfig> {
    let mut mic = MicConfig::default();
    if let Some(b) = cfg.mic_b_exponent {
        mic.b_exponent = b;
    }
    mic.validate()?;
    Ok(mic)
}

fn cluster_tree(data: &Dataset, cfg: &RunConfig) -> CliResult<(group_explain::cluster::DissimilarityMatrix, PartitionTree)> {
    let d = dissimilarity_matrix(&data.columns(), data.names(), &mic_config(cfg)?)?;
    let tree = average_linkage_cluster(&d)?;
    Ok((d, tree))
}

fn cmd_cluster(cfg: &RunConfig) -> CliResult<()> {
    let data = load_data(RunConfig::require(&cfg.data, "data")?, cfg)?;
    let threshold = cfg.threshold.unwrap_or(0.7);
    let (d, tree) = cluster_tree(&data, cfg)?;
    let partition = tree.cut(threshold)?;
    let mut out = Outputs::new(cfg.out_dir())?;
    out.write("dissimilarity.csv", &d.to_csv())?;
    out.write("tree.json", &to_json(&tree.to_json())?)?;
    out.write("tree.nwk", &(tree.to_newick(Some(data.names())) + "\n"))?;
    out.write("tree.dot", &tree.to_dot(Some(data.names())))?;
    out.write("partition.json", &serde_json::to_string(&partition.to_lists()).expect("lists serialize"))?;
    out.finish("cluster", cfg)?;
    let named: Vec<Vec<&str>> =
        partition.to_lists().iter().map(|b| b.iter().map(|&i| data.names()[i].as_str()).collect()).collect();
    println!("partition at {threshold}: {named:?}");
    Ok(())
}

fn parse_game(spec: &str) -> CliResult<GameSource> {
    let lower = spec.to_ascii_lowercase();
    let family = |s: &str| SyntheticFamily::parse(s).map_err(CliError::from);
    if lower == "me" {
        return Ok(GameSource::Marginal);
    }
    if let Some(rest) = lower.strip_prefix("me-pop:") {
        return Ok(GameSource::PopulationMarginal(family(rest)?));
    }
    if let Some(rest) = lower.strip_prefix("ce-mc:") {
        let (draws, fam) =
            rest.split_once(':').ok_or_else(|| CliError::Input(format!("game {spec:?}: expected ce-mc:DRAWS:FAMILY")))?;
        let draws = draws.parse().map_err(|_| CliError::Input(format!("game {spec:?}: bad draw count {draws:?}")))?;
        return Ok(GameSource::ConditionalMonteCarlo { family: family(fam)?, draws });
    }
    if let Some(rest) = lower.strip_prefix("ce:") {
        return Ok(GameSource::Conditional(family(rest)?));
    }
    Err(CliError::Input(format!("unknown game {spec:?}; use me, me-pop:FAMILY, ce:FAMILY or ce-mc:DRAWS:FAMILY")))
}

fn parse_model(spec: &str, arity: usize, cfg: &RunConfig) -> CliResult<ModelOracle> {
    if let (Some(cmd), Some(batch)) = (spec.strip_prefix("cmd:"), cfg.batch_size) {
        let model = group_explain::data::SubprocessModel::spawn(cmd, arity, batch)?;
        return Ok(ModelOracle::Subprocess(Arc::new(model)));
    }
    Ok(ModelOracle::parse(spec, arity)?)
}

/// Data, background and one structure per requested cut.
struct ExplainSetup {
    data: Dataset,
    background: Option<Dataset>,
    configs: Vec<(Option<f64>, ExplainConfig)>,
}

fn explain_setup(cfg: &RunConfig) -> CliResult<ExplainSetup> {
    let data = load_data(RunConfig::require(&cfg.data, "data")?, cfg)?;
    let background = cfg.background.as_deref().map(|p| load_data(p, cfg)).transpose()?;
    if cfg.partition_sources() > 1 {
        return Err(CliError::Input("give at most one of --partition, --tree and --threshold".into()));
    }
    let game = parse_game(cfg.game.as_deref().unwrap_or("me"))?;
    if matches!(game, GameSource::Marginal) && background.is_none() {
        return Err(CliError::Input("marginal games need --background".into()));
    }
    let value = ValueChoice::parse(cfg.value.as_deref().unwrap_or("shapley"))?;
    let n = data.n_features();
    let mut structures = Vec::new();
    if let Some(path) = &cfg.partition {
        let blocks: Vec<Vec<usize>> = read_json(path)?;
        structures.push((None, Structure::Partition(Partition::new(n, blocks)?)));
    } else if let Some(path) = &cfg.tree {
        let json: serde_json::Value = read_json(path)?;
        let tree = PartitionTree::from_json(&json)?;
        let alphas = cfg.alpha.clone().unwrap_or_else(|| vec![tree.node(tree.root()).height]);
        for a in alphas {
            structures.push((Some(a), Structure::Tree { tree: tree.clone(), alpha: a }));
        }
    } else if let Some(threshold) = cfg.threshold {
        let (_, tree) = cluster_tree(background.as_ref().unwrap_or(&data), cfg)?;
        structures.push((None, Structure::Partition(tree.cut(threshold)?)));
    } else {
        structures.push((None, Structure::Features));
    }
    let configs = structures
        .into_iter()
        .map(|(alpha, structure)| {
            let mut c = ExplainConfig::new(value.clone(), structure, game.clone());
            c.seed = cfg.seed();
            c.std_errors = cfg.std_errors.unwrap_or(false);
            (alpha, c)
        })
        .collect();
    Ok(ExplainSetup { data, background, configs })
}

fn write_explanation(out: &mut Outputs, stem: &str, e: &ExplanationMatrix) -> CliResult<()> {
    #[derive(Serialize)]
    struct Sidecar<'a> {
        meta: &'a group_explain::data::explain::ExplanationMeta,
        units: &'a [group_explain::data::Unit],
    }
    out.write(&format!("{stem}.csv"), &e.to_csv())?;
    out.write(&format!("{stem}.meta.json"), &to_json(&Sidecar { meta: &e.meta, units: &e.units })?)?;
    out.write(&format!("{stem}.json"), &e.to_json()?)?;
    Ok(())
}

fn cmd_explain(cfg: &RunConfig) -> CliResult<()> {
    let setup = explain_setup(cfg)?;
    let model = parse_model(RunConfig::require(&cfg.model, "model")?, setup.data.n_features(), cfg)?;
    let mut out = Outputs::new(cfg.out_dir())?;
    for (alpha, c) in &setup.configs {
        let e = explain(&setup.data, setup.background.as_ref(), &model, c)?;
        let stem = match alpha {
            Some(a) if setup.configs.len() > 1 => format!("explanations-alpha-{a}"),
            _ => "explanations".to_string(),
        };
        write_explanation(&mut out, &stem, &e)?;
        println!(
            "{stem}: {} rows x {} units, value {}, game {}, max efficiency residual {:.3e}",
            e.n_rows(),
            e.units.len(),
            e.meta.value,
            e.meta.game,
            e.meta.max_efficiency_residual
        );
    }
    out.finish("explain", cfg)
}

fn cmd_diagnose(cfg: &RunConfig, precomputed: &[PathBuf]) -> CliResult<()> {
    let data = load_data(RunConfig::require(&cfg.data, "data")?, cfg)?;
    let (a, b) = if !precomputed.is_empty() {
        if precomputed.len() != 2 {
            return Err(CliError::Input("--explanations must be given exactly twice".into()));
        }
        let read = |p: &Path| -> CliResult<ExplanationMatrix> {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            Ok(ExplanationMatrix::from_json(&text)?)
        };
        (read(&precomputed[0])?, read(&precomputed[1])?)
    } else {
        let setup = explain_setup(cfg)?;
        if setup.configs.len() != 1 {
            return Err(CliError::Input("diagnose compares one structure; give a single --alpha".into()));
        }
        let c = &setup.configs[0].1;
        let n = setup.data.n_features();
        let fa = parse_model(RunConfig::require(&cfg.model, "model")?, n, cfg)?;
        let fb = parse_model(RunConfig::require(&cfg.model_b, "model (second)")?, n, cfg)?;
        (explain(&setup.data, setup.background.as_ref(), &fa, c)?, explain(&setup.data, setup.background.as_ref(), &fb, c)?)
    };
    let report = stability_report(&a, &b, &data)?;
    let mut out = Outputs::new(cfg.out_dir())?;
    out.write("stability.json", &to_json(&report)?)?;
    out.finish("diagnose", cfg)?;
    println!("model difference norm {:.6}", report.model_difference_norm);
    for u in &report.units {
        println!("  {:<18} {:<24} {:.6}", u.kind.tag(), u.label, u.difference_norm);
    }
    Ok(())
}

#[derive(Deserialize)]
struct WeightsFile {
    name: String,
    /// `w[s]` for coalitions of size `s`, keyed by the number of players.
    weights: std::collections::BTreeMap<usize, Vec<f64>>,
}

fn custom_value(path: &Path) -> CliResult<WeightedValueSpec> {
    let file: WeightsFile = read_json(path)?;
    for n in 1..=8 {
        match file.weights.get(&n) {
            Some(w) if w.len() == n && w.iter().all(|x| x.is_finite()) => {}
            _ => {
                return Err(CliError::Input(format!("{}: need {n} finite weights for n = {n}", path.display())));
            }
        }
    }
    let weights = file.weights;
    Ok(WeightedValueSpec::by_cardinality(file.name, move |s, n| weights.get(&n).map_or(0.0, |w| w[s])))
}

#[derive(Serialize)]
struct PropertyRow {
    property: String,
    expected: Option<bool>,
    observed: bool,
    max_deviation: f64,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct GamecheckReport {
    value: String,
    rows: Vec<PropertyRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    crosscheck: Option<OracleReport>,
}

/// Expected axiom outcomes of an efficient (Shapley-like) or Banzhaf-like value.
fn expectations(efficient: bool, axiom: Axiom) -> bool {
    match axiom {
        Axiom::Ep => efficient,
        Axiom::Tpp => !efficient,
        _ => true,
    }
}

fn axiom_rows(reports: Vec<AxiomReport>, expect: impl Fn(Axiom) -> Option<bool>) -> Vec<PropertyRow> {
    reports
        .into_iter()
        .map(|r| {
            let expected = expect(r.axiom);
            PropertyRow {
                property: r.axiom.label().to_string(),
                expected,
                observed: r.passed(),
                max_deviation: r.max_deviation,
                ok: expected.is_none_or(|e| e == r.passed()),
                witness: r.witness.map(|w| serde_json::to_value(w).expect("witness serializes")),
            }
        })
        .collect()
}

fn quotient_row(spec: &CoalitionalValueSpec, trials: usize, seed: u64) -> CliResult<PropertyRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51);
    let (mut worst, mut witness) = (0.0f64, None);
    for _ in 0..trials {
        let n = rng.random_range(2..=8usize);
        let v = random_game(n, &mut rng);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let blocks: Vec<Vec<usize>> =
            (0..n).map(|j| (0..n).filter(|&i| labels[i] == j).collect::<Vec<_>>()).filter(|b| !b.is_empty()).collect();
        let p = Partition::new(n, blocks)?;
        let r = quotient_property_check(spec, &v, &p)?;
        if r.max_deviation > worst {
            worst = r.max_deviation;
            if !r.passed && witness.is_none() {
                witness = Some(serde_json::json!({
                    "game": v.to_json()?,
                    "partition": p.to_lists(),
                    "block_sums": r.block_sums,
                    "quotient_values": r.quotient_values,
                }));
            }
        }
    }
    let observed = witness.is_none();
    let expected = match spec.reference_kind() {
        Some(CoalitionalKind::BanzhafOwen) => Some(false),
        Some(_) => Some(true),
        None => None,
    };
    Ok(PropertyRow {
        property: "QP".into(),
        expected,
        observed,
        max_deviation: worst,
        ok: expected.is_none_or(|e| e == observed),
        witness,
    })
}

fn cmd_gamecheck(cfg: &RunConfig, weights: Option<&Path>) -> CliResult<bool> {
    let trials = cfg.trials.unwrap_or(1000);
    let seed = cfg.seed();
    let mut crosscheck_report = None;
    let (name, mut rows) = if let Some(path) = weights {
        let h = custom_value(path)?;
        let reports = axiom_suite(&h, &Axiom::ALL, trials, seed);
        let expect = |a: Axiom| matches!(a, Axiom::Lp | Axiom::Sp | Axiom::Npp).then_some(true);
        (h.name(), axiom_rows(reports, expect))
    } else {
        match ValueChoice::parse(RunConfig::require(&cfg.value, "value")?)? {
            ValueChoice::Single(h) => {
                let efficient = h.name() == "shapley";
                let reports = axiom_suite(h.as_ref(), &Axiom::ALL, trials, seed);
                (h.name(), axiom_rows(reports, |a| Some(expectations(efficient, a))))
            }
            ValueChoice::Coalitional(spec) => {
                let efficient = spec.is_efficient();
                let reports = axiom_suite(&OnSingletons(spec.clone()), &Axiom::ALL, trials, seed);
                let mut rows = axiom_rows(reports, |a| Some(expectations(efficient, a)));
                rows.push(quotient_row(&spec, trials, seed)?);
                let r = crosscheck(&spec, trials.min(200), seed)?;
                rows.push(PropertyRow {
                    property: "oracle".into(),
                    expected: Some(true),
                    observed: r.max_abs_deviation <= 1e-10,
                    max_deviation: r.max_abs_deviation,
                    ok: r.max_abs_deviation <= 1e-10,
                    witness: r.witness.as_ref().map(|w| serde_json::to_value(w).expect("witness serializes")),
                });
                crosscheck_report = Some(r);
                (spec.name(), rows)
            }
        }
    };
    rows.sort_by_key(|r| Axiom::ALL.iter().position(|a| a.label() == r.property).unwrap_or(usize::MAX));
    let mut table = format!("value: {name} ({trials} trials, seed {seed})\n");
    let _ = writeln!(table, "{:<8} {:<9} {:<9} {:>14}  status", "property", "expected", "observed", "max deviation");
    let label = |b: bool| if b { "pass" } else { "fail" };
    for r in &rows {
        let _ = writeln!(
            table,
            "{:<8} {:<9} {:<9} {:>14.3e}  {}",
            r.property,
            r.expected.map_or("-", label),
            label(r.observed),
            r.max_deviation,
            if r.ok { "ok" } else { "UNEXPECTED" }
        );
    }
    print!("{table}");
    for r in rows.iter().filter(|r| !r.observed) {
        if let Some(w) = &r.witness {
            println!("{} witness: {}", r.property, serde_json::to_string(w).expect("witness serializes"));
        }
    }
    let all_ok = rows.iter().all(|r| r.ok);
    if cfg.out.is_some() {
        let mut out = Outputs::new(cfg.out_dir())?;
        out.write("gamecheck.json", &to_json(&GamecheckReport { value: name, rows, crosscheck: crosscheck_report })?)?;
        out.finish("gamecheck", cfg)?;
    }
    Ok(all_ok)
}

fn cmd_generate(cfg: &RunConfig) -> CliResult<()> {
    let family = SyntheticFamily::parse(RunConfig::require(&cfg.family, "family")?)?;
    let n = cfg.samples.unwrap_or(1000);
    let generated = family.generate(n, cfg.seed())?;
    let response = generated.response.as_deref().map(|y| ("y", y));
    let mut out = Outputs::new(cfg.out_dir())?;
    out.write("data.csv", &generated.data.to_csv(response))?;
    out.finish("generate", cfg)?;
    println!("wrote {n} samples of {}", family.describe());
    Ok(())
}

/// Reads batches of comma-separated rows ended by a blank line and answers
/// one prediction per row.
fn cmd_serve(args: &ServeArgs) -> CliResult<()> {
    let model = ModelOracle::parse(&args.model, args.arity)?;
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout().lock();
    let mut batch: Vec<f64> = Vec::new();
    let flush = |batch: &mut Vec<f64>, stdout: &mut std::io::StdoutLock| -> CliResult<()> {
        if batch.is_empty() {
            return Ok(());
        }
        let mut text = String::new();
        for y in model.predict(batch)? {
            let _ = writeln!(text, "{y:.16e}");
        }
        batch.clear();
        stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| CliError::Oracle(e.to_string()))
    };
    for (k, line) in stdin.lock().lines().enumerate() {
        let line = line.map_err(|e| CliError::Input(format!("stdin: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            flush(&mut batch, &mut stdout)?;
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match row {
            Ok(r) if r.len() == args.arity => batch.extend(r),
            _ => return Err(CliError::Input(format!("stdin line {}: expected {} numbers", k + 1, args.arity))),
        }
    }
    flush(&mut batch, &mut stdout)
}

fn run(cli: Cli) -> CliResult<bool> {
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let global = RunConfig { workers: cli.workers, ..Default::default() };
    let (name, flags) = match &cli.command {
        Command::Cluster(a) => (
            "cluster",
            a.common.overrides().overlay(RunConfig {
                threshold: a.threshold,
                mic_b_exponent: a.mic_b_exponent,
                ..Default::default()
            }),
        ),
        Command::Explain(a) => (
            "explain",
            a.common.overrides().overlay(a.model_args.overrides()).overlay(RunConfig {
                model: a.model.clone(),
                ..Default::default()
            }),
        ),
        Command::Diagnose(a) => {
            if a.model.len() > 2 {
                return Err(CliError::Input("--model may be given at most twice".into()));
            }
            (
                "diagnose",
                a.common.overrides().overlay(a.model_args.overrides()).overlay(RunConfig {
                    model: a.model.first().cloned(),
                    model_b: a.model.get(1).cloned(),
                    ..Default::default()
                }),
            )
        }
        Command::Gamecheck(a) => (
            "gamecheck",
            RunConfig { value: a.value.clone(), trials: a.trials, seed: a.seed, out: a.out.clone(), ..Default::default() },
        ),
        Command::Generate(a) => (
            "generate",
            RunConfig { family: a.family.clone(), samples: a.samples, seed: a.seed, out: a.out.clone(), ..Default::default() },
        ),
        Command::Serve(a) => return cmd_serve(a).map(|_| true),
    };
    let cfg = base.overlay(global).overlay(flags);
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(CliError::Input("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Invariant(format!("cannot start worker pool: {e}")))?;
    }
    log::debug!("{name} with config hash {}", cfg.hash());
    match &cli.command {
        Command::Cluster(_) => cmd_cluster(&cfg).map(|_| true),
        Command::Explain(_) => cmd_explain(&cfg).map(|_| true),
        Command::Diagnose(a) => cmd_diagnose(&cfg, &a.explanations).map(|_| true),
        Command::Gamecheck(a) => cmd_gamecheck(&cfg, a.weights.as_deref()),
        Command::Generate(_) => cmd_generate(&cfg).map(|_| true),
        Command::Serve(_) => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some properties did not hold as expected");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
