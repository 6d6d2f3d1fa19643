//! Per-sample explanations: individual values, trivial group sums,
//! quotient values, coalitional and tree-based values.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::family::SyntheticFamily;
use super::games::{empirical_marginal_game, marginal_replicates, monte_carlo_conditional_game, GaussianGames};
use super::model::ModelOracle;
use crate::coalition::{block_sums, CoalitionalValueSpec};
use crate::error::{Error, Result};
use crate::game::{full_mask, quotient_game, Game, Partition};
use crate::tree::{group_from_values, recursive_values, PartitionTree};
use crate::values::{value_by_name, GameValue};

/// Tolerance for the per-row efficiency check of empirical explanations.
pub const EFFICIENCY_TOLERANCE: f64 = 1e-8;

/// Which game is explained for each sample.
#[derive(Debug, Clone)]
pub enum GameSource {
    /// Empirical marginal game over the background set.
    Marginal,
    /// Marginal game under the family's population law (closed form).
    PopulationMarginal(SyntheticFamily),
    /// Conditional game in closed form.
    Conditional(SyntheticFamily),
    /// Conditional game from exact conditional sampling.
    ConditionalMonteCarlo { family: SyntheticFamily, draws: usize },
}

impl GameSource {
    pub fn label(&self) -> String {
        match self {
            GameSource::Marginal => "ME".into(),
            GameSource::PopulationMarginal(f) => format!("ME-population:{}", f.describe()),
            GameSource::Conditional(f) => format!("CE:{}", f.describe()),
            GameSource::ConditionalMonteCarlo { family, draws } => format!("CE-mc:{}:{draws}", family.describe()),
        }
    }
}

/// A single game value or a coalitional value.
#[derive(Clone)]
pub enum ValueChoice {
    Single(Arc<dyn GameValue>),
    Coalitional(CoalitionalValueSpec),
}

impl fmt::Debug for ValueChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ValueChoice({})", self.name())
    }
}

impl ValueChoice {
    /// `shapley`, `banzhaf`, or a coalitional value name such as `owen`.
    pub fn parse(name: &str) -> Result<Self> {
        value_by_name(name)
            .map(ValueChoice::Single)
            .or_else(|_| CoalitionalValueSpec::parse(name).map(ValueChoice::Coalitional))
    }

    pub fn name(&self) -> String {
        match self {
            ValueChoice::Single(h) => h.name(),
            ValueChoice::Coalitional(c) => c.name(),
        }
    }

    /// Value used for per-feature units.
    fn single(&self) -> Arc<dyn GameValue> {
        match self {
            ValueChoice::Single(h) => h.clone(),
            ValueChoice::Coalitional(c) => c.components().0,
        }
    }

    fn single_is_efficient(&self) -> bool {
        let name = self.single().name().to_ascii_lowercase();
        name == "shapley"
    }

    fn quotient_value(&self, q: &Game) -> Result<Vec<f64>> {
        match self {
            ValueChoice::Single(h) => Ok(h.value(&q.centered())),
            ValueChoice::Coalitional(c) => c.evaluate(q, &Partition::singletons(q.n())),
        }
    }
}

/// Grouping applied to the features.
#[derive(Debug, Clone)]
pub enum Structure {
    Features,
    Partition(Partition),
    Tree { tree: PartitionTree, alpha: f64 },
}

#[derive(Debug, Clone)]
pub struct ExplainConfig {
    pub value: ValueChoice,
    pub structure: Structure,
    pub game: GameSource,
    /// Seed for sampled games.
    pub seed: u64,
    /// Attach standard errors to quotient units where the game is sampled.
    pub std_errors: bool,
}

impl ExplainConfig {
    pub fn new(value: ValueChoice, structure: Structure, game: GameSource) -> Self {
        ExplainConfig { value, structure, game, seed: 0, std_errors: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitKind {
    /// Single value of each feature.
    Feature,
    /// Sum of single values over a block.
    Group,
    /// Value of a block in the quotient game.
    Quotient,
    /// Coalitional (or recursive tree) value of each feature.
    Coalitional,
    /// Coalitional values summed over a block (tree node values for trees).
    CoalitionalGroup,
}

impl UnitKind {
    pub fn tag(&self) -> &'static str {
        match self {
            UnitKind::Feature => "feature",
            UnitKind::Group => "group",
            UnitKind::Quotient => "quotient",
            UnitKind::Coalitional => "coalitional",
            UnitKind::CoalitionalGroup => "coalitional-group",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub kind: UnitKind,
    pub label: String,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMeta {
    pub game: String,
    pub value: String,
    pub model: String,
    pub feature_names: Vec<String>,
    pub partition: Option<Vec<Vec<usize>>>,
    pub alpha: Option<f64>,
    /// Content hash of the background set, for marginal games.
    pub background: Option<String>,
    pub data: String,
    pub efficient: bool,
    pub max_efficiency_residual: f64,
    pub seed: u64,
}

/// One row per sample, one column per unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMatrix {
    pub units: Vec<Unit>,
    pub values: Vec<Vec<f64>>,
    pub predictions: Vec<f64>,
    /// `v(∅)` of each sample's game.
    pub baselines: Vec<f64>,
    /// Per-unit standard errors by row, where the unit was estimated by sampling.
    pub std_errors: Vec<Option<Vec<f64>>>,
    pub meta: ExplanationMeta,
}

impl ExplanationMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    /// Column indices of the units of one kind.
    pub fn columns_of(&self, kind: UnitKind) -> Vec<usize> {
        self.units.iter().enumerate().filter(|(_, u)| u.kind == kind).map(|(c, _)| c).collect()
    }

    /// Values of one column.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[c]).collect()
    }

    /// Rows restricted to the units of one kind.
    pub fn kind_values(&self, kind: UnitKind) -> Vec<Vec<f64>> {
        let cols = self.columns_of(kind);
        self.values.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec!["prediction".to_string(), "baseline".to_string()];
        header.extend(self.units.iter().map(|u| format!("{}:{}", u.kind.tag(), u.label)));
        let mut out = header.join(",");
        out.push('\n');
        for (r, row) in self.values.iter().enumerate() {
            let mut cells = vec![format!("{:e}", self.predictions[r]), format!("{:e}", self.baselines[r])];
            cells.extend(row.iter().map(|x| format!("{x:e}")));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn block_label(members: &[usize], names: &[String]) -> String {
    members.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join("+")
}

enum Prepared {
    Empirical(Dataset),
    Gaussian(GaussianGames),
    MonteCarlo(super::family::LatentLinear, usize),
}

struct Layout {
    units: Vec<Unit>,
    partition: Option<Partition>,
    quotient_coeffs: Option<Vec<Vec<f64>>>,
}

fn layout(cfg: &ExplainConfig, names: &[String]) -> Result<Layout> {
    let n = names.len();
    let partition = match &cfg.structure {
        Structure::Features => None,
        Structure::Partition(p) => Some(p.clone()),
        Structure::Tree { tree, alpha } => {
            if !matches!(cfg.value, ValueChoice::Coalitional(_)) {
                return Err(Error::InvalidArgument("tree explanations need a coalitional value such as owen".into()));
            }
            if tree.n_players() != n {
                return Err(Error::InvalidArgument(format!("tree has {} leaves, data has {n} features", tree.n_players())));
            }
            Some(tree.cut(*alpha)?)
        }
    };
    if let Some(p) = &partition {
        if p.n() != n {
            return Err(Error::InvalidPartition(format!("partition covers {} features, data has {n}", p.n())));
        }
    }
    let mut units: Vec<Unit> =
        (0..n).map(|i| Unit { kind: UnitKind::Feature, label: names[i].clone(), members: vec![i] }).collect();
    let blocks: Vec<Vec<usize>> = match &partition {
        Some(p) => p.blocks().to_vec(),
        None => (0..n).map(|i| vec![i]).collect(),
    };
    let block_units = |kind: UnitKind| {
        blocks.iter().map(move |b| Unit { kind, label: block_label(b, names), members: b.clone() })
    };
    if partition.is_some() {
        units.extend(block_units(UnitKind::Group));
        units.extend(block_units(UnitKind::Quotient));
    }
    if let ValueChoice::Coalitional(_) = cfg.value {
        units.extend((0..n).map(|i| Unit { kind: UnitKind::Coalitional, label: names[i].clone(), members: vec![i] }));
        units.extend(block_units(UnitKind::CoalitionalGroup));
    }
    // coefficients of each quotient unit on the indicator games of the quotient
    let quotient_coeffs = match (&partition, cfg.std_errors) {
        (Some(p), true) if p.m() <= 12 => {
            let m = p.m();
            let mut coeffs = vec![vec![0.0; 1 << m]; m];
            for t in 0..=full_mask(m) {
                let basis = Game::from_fn(m, |s| if s == t { 1.0 } else { 0.0 })?;
                for (j, c) in cfg.value.quotient_value(&basis)?.into_iter().enumerate() {
                    coeffs[j][t as usize] = c;
                }
            }
            Some(coeffs)
        }
        _ => None,
    };
    Ok(Layout { units, partition, quotient_coeffs })
}

struct Row {
    values: Vec<f64>,
    prediction: f64,
    baseline: f64,
    quotient_se: Option<Vec<f64>>,
}

fn explain_row(
    x: &[f64],
    model: &ModelOracle,
    prepared: &Prepared,
    cfg: &ExplainConfig,
    lay: &Layout,
    row_seed: u64,
) -> Result<Row> {
    let n = x.len();
    let mut subset_se = None;
    let game = match prepared {
        Prepared::Empirical(bg) => empirical_marginal_game(x, model, bg)?,
        Prepared::Gaussian(g) => {
            let poly = model.as_polynomial().ok_or_else(|| {
                Error::Unsupported(format!("{} has no closed-form expectations; use the Monte Carlo game", model.describe()))
            })?;
            g.game(x, poly)?
        }
        Prepared::MonteCarlo(family, draws) => {
            let (g, se) = monte_carlo_conditional_game(x, family, model, *draws, row_seed)?;
            subset_se = Some(se);
            g
        }
    };
    let prediction = model.eval(x)?;
    let baseline = game.empty_value();
    let single = cfg.value.single();
    let features = single.value(&game.centered());
    let mut values = features.clone();
    let mut quotient_se = None;
    if let Some(p) = &lay.partition {
        values.extend(block_sums(&features, p));
        let q = quotient_game(&game, p)?;
        values.extend(cfg.value.quotient_value(&q)?);
        if let Some(coeffs) = &lay.quotient_coeffs {
            let unions = p.union_table()?;
            quotient_se = match prepared {
                Prepared::Empirical(bg) => {
                    let reps = marginal_replicates(x, model, bg, &unions)?;
                    let w = bg.probabilities();
                    let r = w.len();
                    let correction = if r > 1 { r as f64 / (r as f64 - 1.0) } else { 0.0 };
                    Some(
                        coeffs
                            .iter()
                            .map(|c| {
                                let h: Vec<f64> = (0..r).map(|k| c.iter().zip(&reps).map(|(a, rep)| a * rep[k]).sum()).collect();
                                let mean: f64 = h.iter().zip(&w).map(|(a, b)| a * b).sum();
                                let var: f64 = h.iter().zip(&w).map(|(a, b)| b * b * (a - mean) * (a - mean)).sum();
                                (var * correction).sqrt()
                            })
                            .collect(),
                    )
                }
                Prepared::MonteCarlo(..) => {
                    let se = subset_se.as_ref().expect("sampled game has errors");
                    Some(
                        coeffs
                            .iter()
                            .map(|c| c.iter().zip(&unions).map(|(a, &u)| (a * se[u as usize]).powi(2)).sum::<f64>().sqrt())
                            .collect(),
                    )
                }
                Prepared::Gaussian(_) => None,
            };
        }
    }
    if let ValueChoice::Coalitional(spec) = &cfg.value {
        match &cfg.structure {
            Structure::Tree { tree, alpha } => {
                let rv = recursive_values(tree, &game, spec)?;
                let groups = group_from_values(tree, &rv, *alpha)?;
                values.extend(&rv.per_player);
                values.extend(groups.node_values);
            }
            _ => {
                let p = lay.partition.clone().unwrap_or_else(|| Partition::singletons(n));
                let res = spec.explain(&game, &p)?;
                values.extend(res.per_player);
                values.extend(res.per_block);
            }
        }
    }
    Ok(Row { values, prediction, baseline, quotient_se })
}

/// Explains every row of `data`. Marginal games need a background set;
/// conditional and population games need a synthetic family.
pub fn explain(
    data: &Dataset,
    background: Option<&Dataset>,
    model: &ModelOracle,
    cfg: &ExplainConfig,
) -> Result<ExplanationMatrix> {
    let n = data.n_features();
    if model.arity() != n {
        return Err(Error::InvalidArgument(format!("model expects {} features, data has {n}", model.arity())));
    }
    let prepared = match &cfg.game {
        GameSource::Marginal => {
            let bg = background.ok_or_else(|| Error::InvalidArgument("marginal games need a background set".into()))?;
            if bg.n_features() != n {
                return Err(Error::InvalidArgument(format!("background has {} features, data has {n}", bg.n_features())));
            }
            Prepared::Empirical(bg.clone())
        }
        GameSource::PopulationMarginal(f) | GameSource::Conditional(f) => {
            let l = f.as_latent_linear().ok_or_else(|| {
                Error::Unsupported(format!("no closed-form games for {}; use the Monte Carlo conditional game", f.describe()))
            })?;
            if l.n_features() != n {
                return Err(Error::InvalidArgument("family and data sizes differ".into()));
            }
            if model.as_polynomial().is_none() {
                return Err(Error::Unsupported(format!(
                    "{} has no closed-form expectations; use the Monte Carlo conditional game",
                    model.describe()
                )));
            }
            match &cfg.game {
                GameSource::Conditional(_) => Prepared::Gaussian(GaussianGames::conditional(l)?),
                _ => Prepared::Gaussian(GaussianGames::marginal(l)?),
            }
        }
        GameSource::ConditionalMonteCarlo { family, draws } => {
            let l = family.as_latent_linear().ok_or_else(|| {
                Error::Unsupported(format!("conditional sampling is only available for latent-linear families, not {}", family.describe()))
            })?;
            Prepared::MonteCarlo(l.clone(), *draws)
        }
    };
    let lay = layout(cfg, data.names())?;
    let rows: Vec<Result<Row>> = data
        .rows()
        .par_iter()
        .enumerate()
        .map(|(r, x)| explain_row(x, model, &prepared, cfg, &lay, cfg.seed.wrapping_add((r as u64).wrapping_mul(0x2545_f491_4f6c_dd1d))))
        .collect();
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_>>()?;

    let efficient = match &cfg.value {
        ValueChoice::Single(_) => cfg.value.single_is_efficient(),
        ValueChoice::Coalitional(c) => c.is_efficient(),
    };
    let check_kind = match cfg.value {
        ValueChoice::Single(_) => UnitKind::Feature,
        ValueChoice::Coalitional(_) => UnitKind::Coalitional,
    };
    let check_cols: Vec<usize> =
        lay.units.iter().enumerate().filter(|(_, u)| u.kind == check_kind).map(|(c, _)| c).collect();
    let mut max_residual = 0.0f64;
    if efficient {
        for (r, row) in rows.iter().enumerate() {
            let total: f64 = check_cols.iter().map(|&c| row.values[c]).sum();
            let residual = (total - (row.prediction - row.baseline)).abs();
            if residual > EFFICIENCY_TOLERANCE * (1.0 + row.prediction.abs()) {
                log::warn!("row {r}: explanations miss f(x) - v(empty) by {residual:e}");
            }
            max_residual = max_residual.max(residual);
        }
    }
    let mut std_errors = vec![None; lay.units.len()];
    if rows.iter().all(|r| r.quotient_se.is_some()) && !rows.is_empty() {
        for (k, c) in lay.units.iter().enumerate().filter(|(_, u)| u.kind == UnitKind::Quotient).map(|(c, _)| c).enumerate() {
            std_errors[c] = Some(rows.iter().map(|r| r.quotient_se.as_ref().unwrap()[k]).collect());
        }
    }
    let meta = ExplanationMeta {
        game: cfg.game.label(),
        value: cfg.value.name(),
        model: model.describe(),
        feature_names: data.names().to_vec(),
        partition: lay.partition.as_ref().map(Partition::to_lists),
        alpha: match &cfg.structure {
            Structure::Tree { alpha, .. } => Some(*alpha),
            _ => None,
        },
        background: match (&cfg.game, background) {
            (GameSource::Marginal, Some(bg)) => Some(bg.content_hash()),
            _ => None,
        },
        data: data.content_hash(),
        efficient,
        max_efficiency_residual: max_residual,
        seed: cfg.seed,
    };
    let mut values = Vec::with_capacity(rows.len());
    let mut predictions = Vec::with_capacity(rows.len());
    let mut baselines = Vec::with_capacity(rows.len());
    for r in rows {
        values.push(r.values);
        predictions.push(r.prediction);
        baselines.push(r.baseline);
    }
    Ok(ExplanationMatrix { units: lay.units, values, predictions, baselines, std_errors, meta })
}
