//! Coalitional values: Owen, Banzhaf-Owen, two-step Shapley and symmetric
//! Banzhaf, by their direct formulas and through the generic two-step
//! evaluator (outer value on intermediate quotient games, inner value within
//! the block).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::axioms::{axiom_check, Axiom};
use crate::error::{Error, Result};
use crate::game::{
    full_mask, modified_quotient_from_unions, quotient_game, submasks, tsh_intermediate_from_unions, Game,
    Partition, DENSE_CAP,
};
use crate::values::{banzhaf_weight, shapley_weights, Banzhaf, GameValue, Shapley, ValueVector};

/// Family of intermediate games `v̂_T` used by a two-step formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Intermediate {
    /// `v^{P|T}`: block `j` is represented by `T`.
    ModifiedQuotient,
    /// `(|T|/|S_j|)·v^P(A) + |A|·(v(T) − (|T|/|S_j|)·v^P({j}))`.
    TshIntermediate,
}

/// The four built-in coalitional values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoalitionalKind {
    Owen,
    BanzhafOwen,
    TwoStepShapley,
    SymmetricBanzhaf,
}

impl CoalitionalKind {
    pub const ALL: [CoalitionalKind; 4] = [
        CoalitionalKind::Owen,
        CoalitionalKind::BanzhafOwen,
        CoalitionalKind::TwoStepShapley,
        CoalitionalKind::SymmetricBanzhaf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CoalitionalKind::Owen => "owen",
            CoalitionalKind::BanzhafOwen => "banzhaf-owen",
            CoalitionalKind::TwoStepShapley => "two-step-shapley",
            CoalitionalKind::SymmetricBanzhaf => "symmetric-banzhaf",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "owen" => Some(CoalitionalKind::Owen),
            "banzhaf-owen" | "bzow" => Some(CoalitionalKind::BanzhafOwen),
            "two-step-shapley" | "tsh" => Some(CoalitionalKind::TwoStepShapley),
            "symmetric-banzhaf" | "bzsym" => Some(CoalitionalKind::SymmetricBanzhaf),
            _ => None,
        }
    }

    /// Direct (double-sum) evaluation on the centered game.
    pub fn direct(&self, v: &Game, p: &Partition) -> Result<ValueVector> {
        match self {
            CoalitionalKind::Owen => owen(v, p),
            CoalitionalKind::BanzhafOwen => banzhaf_owen(v, p),
            CoalitionalKind::TwoStepShapley => two_step_shapley(v, p),
            CoalitionalKind::SymmetricBanzhaf => symmetric_banzhaf(v, p),
        }
    }
}

/// A coalitional value given by its two-step formulation.
#[derive(Clone)]
pub enum CoalitionalValueSpec {
    Named(CoalitionalKind),
    Custom(CustomSpec),
}

/// User-assembled two-step value. Construct with [`CustomSpec::new`], which
/// validates the hypotheses the recursive and quotient machinery rely on.
#[derive(Clone)]
pub struct CustomSpec {
    name: String,
    h1: Arc<dyn GameValue>,
    h2: Arc<dyn GameValue>,
    intermediate: Intermediate,
    efficient: bool,
    /// Built-in value this spec is meant to reproduce; used by cross-checks.
    pub reference: Option<CoalitionalKind>,
}

const VALIDATION_TRIALS: usize = 25;

impl CustomSpec {
    pub fn new(
        name: impl Into<String>,
        h1: Arc<dyn GameValue>,
        h2: Arc<dyn GameValue>,
        intermediate: Intermediate,
    ) -> Result<Self> {
        let name = name.into();
        let seed = 0x5eed;
        for (label, h, axioms) in [
            ("outer", &h1, &[Axiom::Lp, Axiom::Sp, Axiom::Sep][..]),
            ("inner", &h2, &[Axiom::Lp, Axiom::Sep][..]),
        ] {
            for &axiom in axioms {
                let report = axiom_check(h.as_ref(), axiom, VALIDATION_TRIALS, seed);
                if !report.passed() {
                    return Err(Error::InvalidSpec(format!(
                        "{name}: {label} value '{}' fails {axiom} (max deviation {:e})",
                        h.name(),
                        report.max_deviation
                    )));
                }
            }
        }
        let unit = Game::dense(1, vec![0.0, 1.0])?;
        let product = h1.value(&unit)[0] * h2.value(&unit)[0];
        if product == 0.0 {
            return Err(Error::InvalidSpec(format!(
                "{name}: product of outer and inner values on the one-player unit game is zero"
            )));
        }
        let efficient = [h1.as_ref(), h2.as_ref()]
            .into_iter()
            .all(|h| axiom_check(h, Axiom::Ep, VALIDATION_TRIALS, seed).passed());
        Ok(CustomSpec { name, h1, h2, intermediate, efficient, reference: None })
    }

    pub fn with_reference(mut self, kind: CoalitionalKind) -> Self {
        self.reference = Some(kind);
        self
    }
}

impl fmt::Debug for CoalitionalValueSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl From<CoalitionalKind> for CoalitionalValueSpec {
    fn from(kind: CoalitionalKind) -> Self {
        CoalitionalValueSpec::Named(kind)
    }
}

impl CoalitionalValueSpec {
    pub fn owen() -> Self {
        CoalitionalKind::Owen.into()
    }
    pub fn banzhaf_owen() -> Self {
        CoalitionalKind::BanzhafOwen.into()
    }
    pub fn two_step_shapley() -> Self {
        CoalitionalKind::TwoStepShapley.into()
    }
    pub fn symmetric_banzhaf() -> Self {
        CoalitionalKind::SymmetricBanzhaf.into()
    }

    pub fn parse(name: &str) -> Result<Self> {
        CoalitionalKind::parse(name)
            .map(CoalitionalValueSpec::Named)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown coalitional value '{name}'")))
    }

    pub fn name(&self) -> String {
        match self {
            CoalitionalValueSpec::Named(k) => k.name().to_string(),
            CoalitionalValueSpec::Custom(c) => c.name.clone(),
        }
    }

    /// Outer value, inner value and intermediate family.
    pub fn components(&self) -> (Arc<dyn GameValue>, Arc<dyn GameValue>, Intermediate) {
        let shapley: Arc<dyn GameValue> = Arc::new(Shapley);
        let banzhaf: Arc<dyn GameValue> = Arc::new(Banzhaf);
        match self {
            CoalitionalValueSpec::Named(CoalitionalKind::Owen) => {
                (shapley.clone(), shapley, Intermediate::ModifiedQuotient)
            }
            CoalitionalValueSpec::Named(CoalitionalKind::BanzhafOwen) => {
                (banzhaf.clone(), banzhaf, Intermediate::ModifiedQuotient)
            }
            CoalitionalValueSpec::Named(CoalitionalKind::TwoStepShapley) => {
                (shapley.clone(), shapley, Intermediate::TshIntermediate)
            }
            CoalitionalValueSpec::Named(CoalitionalKind::SymmetricBanzhaf) => {
                (banzhaf, shapley, Intermediate::ModifiedQuotient)
            }
            CoalitionalValueSpec::Custom(c) => (c.h1.clone(), c.h2.clone(), c.intermediate),
        }
    }

    /// Whether block sums total `v(N) − v(∅)` for every game and partition.
    pub fn is_efficient(&self) -> bool {
        match self {
            CoalitionalValueSpec::Named(k) => {
                matches!(k, CoalitionalKind::Owen | CoalitionalKind::TwoStepShapley)
            }
            CoalitionalValueSpec::Custom(c) => c.efficient,
        }
    }

    /// Built-in value with a direct formula, if any.
    pub fn reference_kind(&self) -> Option<CoalitionalKind> {
        match self {
            CoalitionalValueSpec::Named(k) => Some(*k),
            CoalitionalValueSpec::Custom(c) => c.reference,
        }
    }

    /// Per-player values: direct formula for built-ins, two-step otherwise.
    pub fn evaluate(&self, v: &Game, p: &Partition) -> Result<ValueVector> {
        match self {
            CoalitionalValueSpec::Named(k) => k.direct(v, p),
            CoalitionalValueSpec::Custom(_) => two_step_evaluate(self, v, p),
        }
    }

    /// Value of the quotient game with singleton blocks, `g[M, v^P, singletons]`.
    pub fn quotient_value(&self, v: &Game, p: &Partition) -> Result<ValueVector> {
        let q = quotient_game(v, p)?;
        self.evaluate(&q, &Partition::singletons(q.n()))
    }

    /// Per-player, per-block and quotient values together.
    pub fn explain(&self, v: &Game, p: &Partition) -> Result<CoalitionalResult> {
        let per_player = self.evaluate(v, p)?;
        let per_block = block_sums(&per_player, p);
        let quotient = self.quotient_value(v, p)?;
        Ok(CoalitionalResult { per_player, per_block, quotient, spec_name: self.name(), partition: p.clone() })
    }
}

/// Output of a coalitional explanation of a single game.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoalitionalResult {
    pub per_player: ValueVector,
    pub per_block: Vec<f64>,
    pub quotient: ValueVector,
    pub spec_name: String,
    pub partition: Partition,
}

pub fn block_sums(per_player: &[f64], p: &Partition) -> Vec<f64> {
    (0..p.m()).map(|j| p.members(j).iter().map(|&i| per_player[i]).sum()).collect()
}

fn check_sizes(v: &Game, p: &Partition) -> Result<Vec<u64>> {
    if v.n() != p.n() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} players, game has {}",
            p.n(),
            v.n()
        )));
    }
    let widest = (0..p.m()).map(|j| p.members(j).len()).max().unwrap_or(0);
    if widest + p.m() > DENSE_CAP + 1 {
        return Err(Error::TooManyPlayers { n: widest + p.m(), cap: DENSE_CAP + 1 });
    }
    p.union_table()
}

/// `Σ_{R⊆M\{j}} Σ_{T⊆S_j\{i}} outer[|R|]·inner[|T|]·[v(Q_R∪T∪i) − v(Q_R∪T)]`.
fn double_sum(v: &Game, p: &Partition, unions: &[u64], i: usize, outer: &[f64], inner: &[f64]) -> f64 {
    let j = p.block_of(i);
    let others = full_mask(p.m()) & !(1u64 << j);
    let rest = p.block_mask(j) & !(1u64 << i);
    let mut total = 0.0;
    for r in submasks(others) {
        let q = unions[r as usize];
        let mut partial = 0.0;
        for t in submasks(rest) {
            let s = q | t;
            partial += inner[t.count_ones() as usize] * (v.eval(s | 1 << i) - v.eval(s));
        }
        total += outer[r.count_ones() as usize] * partial;
    }
    total
}

fn double_sum_value(
    v: &Game,
    p: &Partition,
    outer: impl Fn(usize) -> Vec<f64>,
    inner: impl Fn(usize) -> Vec<f64>,
) -> Result<ValueVector> {
    let unions = check_sizes(v, p)?;
    let outer_w = outer(p.m());
    Ok((0..v.n())
        .map(|i| {
            let s = p.members(p.block_of(i)).len();
            double_sum(v, p, &unions, i, &outer_w, &inner(s))
        })
        .collect())
}

/// Owen value (applied to the centered game).
pub fn owen(v: &Game, p: &Partition) -> Result<ValueVector> {
    double_sum_value(v, p, shapley_weights, shapley_weights)
}

/// Banzhaf-Owen value: weights `2^{1−m}·2^{1−|S_j|}`.
pub fn banzhaf_owen(v: &Game, p: &Partition) -> Result<ValueVector> {
    double_sum_value(v, p, |m| vec![banzhaf_weight(m); m], |s| vec![banzhaf_weight(s); s])
}

/// Symmetric Banzhaf value: `2^{1−m}` across blocks, Shapley weights within.
pub fn symmetric_banzhaf(v: &Game, p: &Partition) -> Result<ValueVector> {
    double_sum_value(v, p, |m| vec![banzhaf_weight(m); m], shapley_weights)
}

/// Two-step Shapley: `φ_i[S_j, v|S_j] + (φ_j[M, v^P] − v(S_j)) / |S_j|` on the centered game.
pub fn two_step_shapley(v: &Game, p: &Partition) -> Result<ValueVector> {
    check_sizes(v, p)?;
    let c = v.centered();
    let quotient = Shapley.value(&quotient_game(&c, p)?);
    let mut out = vec![0.0; v.n()];
    for j in 0..p.m() {
        let block = p.members(j);
        let inner = Shapley.value(&c.subgame(block)?);
        let correction = (quotient[j] - c.eval(p.block_mask(j))) / block.len() as f64;
        for (k, &i) in block.iter().enumerate() {
            out[i] = inner[k] + correction;
        }
    }
    Ok(out)
}

/// Owen value of a single player by the direct double sum. Performs exactly
/// `2^{|S_j|+m−1}` game evaluations.
pub fn owen_single(v: &Game, p: &Partition, i: usize) -> Result<f64> {
    let unions = check_sizes(v, p)?;
    let s = p.members(p.block_of(i)).len();
    Ok(double_sum(v, p, &unions, i, &shapley_weights(p.m()), &shapley_weights(s)))
}

pub(crate) fn intermediate_game(
    kind: Intermediate,
    v: impl Fn(u64) -> f64,
    unions: &[u64],
    block: u64,
    j: usize,
    t: u64,
) -> Game {
    match kind {
        Intermediate::ModifiedQuotient => modified_quotient_from_unions(v, unions, block, j, t),
        Intermediate::TshIntermediate => tsh_intermediate_from_unions(v, unions, block, j, t),
    }
}

/// Block game `v^{(j)}(T) = h1_j[M, v̂_T]` for every `T ⊆ S_j`, as a game on
/// the block's members (ascending order).
pub(crate) fn block_game(
    h1: &dyn GameValue,
    kind: Intermediate,
    v: &Game,
    unions: &[u64],
    block: u64,
    j: usize,
) -> Result<Game> {
    let members = crate::game::members(block);
    Game::from_fn(members.len(), |local| {
        let t = crate::game::scatter(local, &members);
        if t == 0 && kind == Intermediate::TshIntermediate {
            return 0.0;
        }
        h1.value_of(&intermediate_game(kind, |s| v.eval(s), unions, block, j, t), j)
    })
}

/// Generic two-step evaluation on the centered game: for each block `j`,
/// `g_i = h2_i[S_j, v^{(j)}]` with `v^{(j)}(T) = h1_j[M, v̂_T]`.
pub fn two_step_evaluate(spec: &CoalitionalValueSpec, v: &Game, p: &Partition) -> Result<ValueVector> {
    let unions = check_sizes(v, p)?;
    let (h1, h2, kind) = spec.components();
    let c = v.centered();
    let mut out = vec![0.0; v.n()];
    for j in 0..p.m() {
        let game = block_game(h1.as_ref(), kind, &c, &unions, p.block_mask(j), j)?;
        let inner = h2.value(&game);
        for (k, &i) in p.members(j).iter().enumerate() {
            out[i] = inner[k];
        }
    }
    Ok(out)
}

/// Comparison of block sums with the value of the quotient game.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientReport {
    pub spec: String,
    pub block_sums: Vec<f64>,
    pub quotient_values: Vec<f64>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Tolerance of the quotient-game property check.
pub const QP_TOLERANCE: f64 = 1e-10;

/// Checks `Σ_{i∈S_j} g_i[N,v,P] = g_j[M, v^P, singletons]` for every block.
pub fn quotient_property_check(spec: &CoalitionalValueSpec, v: &Game, p: &Partition) -> Result<QuotientReport> {
    let result = spec.explain(v, p)?;
    let max_deviation = result
        .per_block
        .iter()
        .zip(&result.quotient)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(QuotientReport {
        spec: spec.name(),
        block_sums: result.per_block,
        quotient_values: result.quotient,
        max_deviation,
        passed: max_deviation <= QP_TOLERANCE,
    })
}

/// Adapter exposing `g[·, ·, singletons]` as a single game value.
#[derive(Clone)]
pub struct OnSingletons(pub CoalitionalValueSpec);

impl GameValue for OnSingletons {
    fn name(&self) -> String {
        format!("{} (singletons)", self.0.name())
    }

    fn value(&self, v: &Game) -> ValueVector {
        self.0
            .evaluate(v, &Partition::singletons(v.n()))
            .expect("singleton partition matches the game")
    }
}
