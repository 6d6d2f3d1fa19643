//! Single game values in weighted form `h_i = Σ_{S ⊆ N\{i}} w(S,n)[v(S∪i) − v(S)]`
//! (Shapley, Banzhaf, user-supplied weights), their centered extension to
//! games with `v(∅) ≠ 0`, and the canonical coefficient table of a linear value.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{full_mask, submasks, Game, DENSE_CAP};

/// Per-player attributions, indexed by player.
pub type ValueVector = Vec<f64>;

/// A game value: a map from games on `n` players to `ℝ^n`.
///
/// Implementations must accept non-cooperative games; weighted-form values
/// do so by applying their formula with the game's `v(∅)`, which is the
/// centered extension.
pub trait GameValue: Send + Sync {
    fn name(&self) -> String;

    fn value(&self, v: &Game) -> ValueVector;

    /// Value of a single player. The default evaluates the whole vector.
    fn value_of(&self, v: &Game, i: usize) -> f64 {
        self.value(v)[i]
    }
}

impl fmt::Debug for dyn GameValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GameValue({})", self.name())
    }
}

/// `s!(n−s−1)!/n!` for `s = 0..n`.
pub fn shapley_weights(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    // w(0) = 1/n, w(s+1) = w(s)·(s+1)/(n−s−1)
    let mut w = vec![0.0; n];
    w[0] = 1.0 / n as f64;
    for s in 0..n - 1 {
        w[s + 1] = w[s] * (s + 1) as f64 / (n - s - 1) as f64;
    }
    w
}

fn tabulate(v: &Game) -> std::borrow::Cow<'_, [f64]> {
    match v.dense_values() {
        Some(d) => std::borrow::Cow::Borrowed(d),
        None => {
            assert!(v.n() <= DENSE_CAP, "value computation over {} players", v.n());
            std::borrow::Cow::Owned((0..1u64 << v.n()).map(|s| v.eval(s)).collect())
        }
    }
}

/// Full weighted-form value for weights depending on `|S|` only.
fn cardinal_value(v: &Game, w: &[f64]) -> ValueVector {
    let n = v.n();
    let table = tabulate(v);
    let mut out = vec![0.0; n];
    for s in 0..table.len() {
        let mut free = !(s as u64) & full_mask(n);
        if free == 0 {
            continue;
        }
        let ws = w[(s as u64).count_ones() as usize];
        let base = table[s];
        while free != 0 {
            let i = free.trailing_zeros() as usize;
            out[i] += ws * (table[s | 1 << i] - base);
            free &= free - 1;
        }
    }
    out
}

fn cardinal_value_of(v: &Game, w: &[f64], i: usize) -> f64 {
    let others = full_mask(v.n()) & !(1u64 << i);
    submasks(others)
        .map(|s| w[s.count_ones() as usize] * (v.eval(s | 1 << i) - v.eval(s)))
        .sum()
}

/// The Shapley value.
#[derive(Debug, Clone, Copy, Default)]
pub struct Shapley;

impl GameValue for Shapley {
    fn name(&self) -> String {
        "shapley".into()
    }

    fn value(&self, v: &Game) -> ValueVector {
        cardinal_value(v, &shapley_weights(v.n()))
    }

    fn value_of(&self, v: &Game, i: usize) -> f64 {
        cardinal_value_of(v, &shapley_weights(v.n()), i)
    }
}

/// The Banzhaf value, weights `2^{1−n}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Banzhaf;

impl GameValue for Banzhaf {
    fn name(&self) -> String {
        "banzhaf".into()
    }

    fn value(&self, v: &Game) -> ValueVector {
        cardinal_value(v, &vec![banzhaf_weight(v.n()); v.n()])
    }

    fn value_of(&self, v: &Game, i: usize) -> f64 {
        cardinal_value_of(v, &vec![banzhaf_weight(v.n()); v.n()], i)
    }
}

#[inline]
pub(crate) fn banzhaf_weight(n: usize) -> f64 {
    (0.5f64).powi(n as i32 - 1)
}

pub fn shapley(v: &Game) -> ValueVector {
    Shapley.value(v)
}

pub fn banzhaf(v: &Game) -> ValueVector {
    Banzhaf.value(v)
}

type WeightFn = dyn Fn(u64, usize) -> f64 + Send + Sync;

/// A value in weighted form with an arbitrary weight `w(S, n)`.
#[derive(Clone)]
pub struct WeightedValueSpec {
    name: String,
    weight: Arc<WeightFn>,
}

impl fmt::Debug for WeightedValueSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightedValueSpec").field("name", &self.name).finish()
    }
}

impl WeightedValueSpec {
    pub fn new(name: impl Into<String>, weight: impl Fn(u64, usize) -> f64 + Send + Sync + 'static) -> Self {
        WeightedValueSpec { name: name.into(), weight: Arc::new(weight) }
    }

    /// Weights that depend on `|S|` only, given as `w[s]` for each `n`.
    pub fn by_cardinality(
        name: impl Into<String>,
        weight: impl Fn(usize, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        WeightedValueSpec::new(name, move |s, n| weight(s.count_ones() as usize, n))
    }

    pub fn shapley() -> Self {
        WeightedValueSpec::by_cardinality("shapley", |s, n| shapley_weights(n)[s])
    }

    pub fn banzhaf() -> Self {
        WeightedValueSpec::by_cardinality("banzhaf", |_, n| banzhaf_weight(n))
    }

    pub fn weight(&self, s: u64, n: usize) -> f64 {
        (self.weight)(s, n)
    }
}

impl GameValue for WeightedValueSpec {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn value(&self, v: &Game) -> ValueVector {
        (0..v.n()).map(|i| self.value_of(v, i)).collect()
    }

    fn value_of(&self, v: &Game, i: usize) -> f64 {
        let n = v.n();
        let others = full_mask(n) & !(1u64 << i);
        submasks(others)
            .map(|s| (self.weight)(s, n) * (v.eval(s | 1 << i) - v.eval(s)))
            .sum()
    }
}

/// `h_i = Σ_{S⊆N\{i}} w(S,n)[v(S∪{i}) − v(S)]`, with `v(∅)` taken from the game.
pub fn weighted_value(spec: &WeightedValueSpec, v: &Game) -> ValueVector {
    spec.value(v)
}

/// A value given by an arbitrary closure on (possibly non-cooperative) games.
#[derive(Clone)]
pub struct FnValue {
    name: String,
    f: Arc<dyn Fn(&Game) -> ValueVector + Send + Sync>,
}

impl FnValue {
    pub fn new(name: impl Into<String>, f: impl Fn(&Game) -> ValueVector + Send + Sync + 'static) -> Self {
        FnValue { name: name.into(), f: Arc::new(f) }
    }

    /// The value that is identically zero.
    pub fn zero() -> Self {
        FnValue::new("zero", |v| vec![0.0; v.n()])
    }
}

impl GameValue for FnValue {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn value(&self, v: &Game) -> ValueVector {
        (self.f)(v)
    }
}

/// Centered extension: `h` applied to `S ↦ v(S) − v(∅)`.
pub fn extend_centered(h: &dyn GameValue, v: &Game) -> ValueVector {
    h.value(&v.centered())
}

/// Coefficients `γ(i,S) = h_i[u_S]` of a linear value on the indicator
/// basis `u_S(A) = 1{A = S}`; `h_i[v] = Σ_S γ(i,S) v(S)`.
#[derive(Debug, Clone)]
pub struct CanonicalCoeffs {
    pub n: usize,
    /// `gamma[i][S]`, with `S` a bitmask.
    pub gamma: Vec<Vec<f64>>,
}

impl CanonicalCoeffs {
    pub fn get(&self, i: usize, s: u64) -> f64 {
        self.gamma[i][s as usize]
    }

    pub fn reconstruct(&self, v: &Game) -> ValueVector {
        let table = tabulate(v);
        self.gamma
            .iter()
            .map(|g| g.iter().zip(table.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Largest player count for [`canonical_coeffs`].
pub const CANONICAL_CAP: usize = 12;

/// Builds the coefficient table of `h` on `n` players and verifies
/// linearity by reconstructing `h` on random games.
pub fn canonical_coeffs(h: &dyn GameValue, n: usize) -> Result<CanonicalCoeffs> {
    if n == 0 || n > CANONICAL_CAP {
        return Err(Error::TooManyPlayers { n, cap: CANONICAL_CAP });
    }
    let size = 1usize << n;
    let mut gamma = vec![vec![0.0; size]; n];
    for s in 0..size {
        let basis = Game::from_fn(n, |a| if a as usize == s { 1.0 } else { 0.0 })?;
        let hv = h.value(&basis);
        for (i, x) in hv.into_iter().enumerate() {
            gamma[i][s] = x;
        }
    }
    let coeffs = CanonicalCoeffs { n, gamma };

    let mut rng = ChaCha8Rng::seed_from_u64(0x6a09e667 ^ n as u64);
    for _ in 0..8 {
        let v = Game::from_fn(n, |_| rng.random_range(-1.0..1.0))?;
        let direct = h.value(&v);
        let rebuilt = coeffs.reconstruct(&v);
        let scale = 1.0 + direct.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in direct.iter().zip(&rebuilt) {
            let deviation = (a - b).abs();
            if deviation > 1e-9 * scale {
                return Err(Error::NotLinear { deviation, basis: full_mask(n) });
            }
        }
    }
    Ok(coeffs)
}

/// Looks up a single value by its command-line name.
pub fn value_by_name(name: &str) -> Result<Arc<dyn GameValue>> {
    match name.to_ascii_lowercase().as_str() {
        "shapley" => Ok(Arc::new(Shapley)),
        "banzhaf" => Ok(Arc::new(Banzhaf)),
        other => Err(Error::InvalidArgument(format!("unknown game value '{other}'"))),
    }
}
