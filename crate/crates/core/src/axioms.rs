//! Randomized checks of the classical game-value axioms.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::game::{full_mask, members, scatter, submasks, Game, GameJson};
use crate::values::GameValue;

/// Absolute tolerance used by every randomized axiom check.
pub const AXIOM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Axiom {
    /// linearity
    Lp,
    /// efficiency
    Ep,
    /// symmetry
    Sp,
    /// total power
    Tpp,
    /// null player
    Npp,
    /// carrier dependence
    Cdp,
    /// singleton efficiency
    Sep,
}

impl Axiom {
    pub const ALL: [Axiom; 7] = [Axiom::Lp, Axiom::Ep, Axiom::Sp, Axiom::Tpp, Axiom::Npp, Axiom::Cdp, Axiom::Sep];

    pub fn label(&self) -> &'static str {
        match self {
            Axiom::Lp => "LP",
            Axiom::Ep => "EP",
            Axiom::Sp => "SP",
            Axiom::Tpp => "TPP",
            Axiom::Npp => "NPP",
            Axiom::Cdp => "CDP",
            Axiom::Sep => "SEP",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Axiom::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown axiom '{s}'")))
    }
}

/// A game on which an axiom failed, with the size of the violation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomWitness {
    pub game: GameJson,
    pub deviation: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub value: String,
    pub trials: usize,
    pub failures: usize,
    pub max_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<AxiomWitness>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Random cooperative game with payoffs uniform in `[-1, 1]`.
pub fn random_cooperative_game(n: usize, rng: &mut impl Rng) -> Game {
    Game::from_fn(n, |s| if s == 0 { 0.0 } else { rng.random_range(-1.0..=1.0) })
        .expect("random game within the dense cap")
}

/// Random permutation game `πv(S) = v(π⁻¹S)`, returned with `π`.
pub fn permuted_game(v: &Game, perm: &[usize]) -> Game {
    let mut inverse = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inverse[p] = i;
    }
    Game::from_fn(v.n(), |s| v.eval(scatter(s, &inverse))).expect("same size as input game")
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Runs `trials` randomized checks of `axiom` for `h` on games with
/// `n ∈ 2..=8` players. Failures are counted and the first is kept as a
/// witness; nothing is raised.
pub fn axiom_check(h: &dyn GameValue, axiom: Axiom, trials: usize, seed: u64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (axiom as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut failures = 0;
    let mut max_deviation = 0.0f64;
    let mut witness = None;
    for _ in 0..trials.max(1) {
        let n = rng.random_range(2..=8usize);
        let (game, deviation, detail) = one_trial(h, axiom, n, &mut rng);
        max_deviation = max_deviation.max(deviation);
        if !(deviation <= AXIOM_TOLERANCE) {
            failures += 1;
            if witness.is_none() {
                witness = Some(AxiomWitness { game: game.to_json().expect("dense witness"), deviation, detail });
            }
        }
    }
    AxiomReport { axiom, value: h.name(), trials: trials.max(1), failures, max_deviation, witness }
}

fn one_trial(h: &dyn GameValue, axiom: Axiom, n: usize, rng: &mut ChaCha8Rng) -> (Game, f64, String) {
    match axiom {
        Axiom::Lp => {
            let v = random_cooperative_game(n, rng);
            let w = random_cooperative_game(n, rng);
            let a: f64 = rng.random_range(-2.0..2.0);
            let combo = v.linear_combination(a, &w).expect("same size");
            let lhs = h.value(&combo);
            let rhs: Vec<f64> = h.value(&v).iter().zip(h.value(&w)).map(|(x, y)| a * x + y).collect();
            (combo, max_abs_diff(&lhs, &rhs), format!("a = {a}"))
        }
        Axiom::Ep => {
            let v = random_cooperative_game(n, rng);
            let total: f64 = h.value(&v).iter().sum();
            let dev = (total - v.grand_value()).abs();
            let detail = format!("sum of values {total} vs v(N) {}", v.grand_value());
            (v, dev, detail)
        }
        Axiom::Sp => {
            let v = random_cooperative_game(n, rng);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            let pv = permuted_game(&v, &perm);
            let base = h.value(&v);
            let moved = h.value(&pv);
            let dev = (0..n).fold(0.0f64, |m, i| m.max((moved[perm[i]] - base[i]).abs()));
            (v, dev, format!("permutation {perm:?}"))
        }
        Axiom::Tpp => {
            let v = random_cooperative_game(n, rng);
            let total: f64 = h.value(&v).iter().sum();
            let power = total_power(&v);
            (v, (total - power).abs(), format!("sum of values {total} vs total power {power}"))
        }
        Axiom::Npp => {
            let null = rng.random_range(0..n);
            let inner = random_cooperative_game(n, rng);
            let mask = !(1u64 << null);
            let v = Game::from_fn(n, |s| inner.eval(s & mask)).expect("dense");
            let dev = h.value(&v)[null].abs();
            (v, dev, format!("null player {null}"))
        }
        Axiom::Cdp => {
            let full = full_mask(n);
            let carrier = rng.random_range(1..=full);
            let players = members(carrier);
            let inner = random_cooperative_game(players.len(), rng);
            // v(S) = inner(S ∩ T), relabelled
            let v = Game::from_fn(n, |s| {
                let local = players
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| s >> p & 1 == 1)
                    .fold(0u64, |acc, (k, _)| acc | 1 << k);
                inner.eval(local)
            })
            .expect("dense");
            let on_n = h.value(&v);
            let on_t = h.value(&inner);
            let dev = players.iter().enumerate().fold(0.0f64, |m, (k, &p)| m.max((on_n[p] - on_t[k]).abs()));
            (v, dev, format!("carrier {players:?}"))
        }
        Axiom::Sep => {
            let x: f64 = rng.random_range(-1.0..=1.0);
            let v = Game::dense(1, vec![0.0, x]).expect("one player");
            let dev = (h.value(&v)[0] - x).abs();
            (v, dev, format!("v({{1}}) = {x}"))
        }
    }
}

/// `2^{1−n} Σ_i Σ_{S ⊆ N\{i}} [v(S∪i) − v(S)]`.
pub fn total_power(v: &Game) -> f64 {
    let n = v.n();
    let full = full_mask(n);
    let mut sum = 0.0;
    for i in 0..n {
        for s in submasks(full & !(1 << i)) {
            sum += v.eval(s | 1 << i) - v.eval(s);
        }
    }
    sum * (0.5f64).powi(n as i32 - 1)
}

/// Runs every axiom in `axioms`.
pub fn axiom_suite(h: &dyn GameValue, axioms: &[Axiom], trials: usize, seed: u64) -> Vec<AxiomReport> {
    axioms.iter().map(|&a| axiom_check(h, a, trials, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::majority3;
    use crate::values::{Banzhaf, FnValue, Shapley};

    #[test]
    fn shapley_passes_its_axioms() {
        for axiom in [Axiom::Lp, Axiom::Ep, Axiom::Sp, Axiom::Npp, Axiom::Cdp, Axiom::Sep] {
            let r = axiom_check(&Shapley, axiom, 200, 1);
            assert!(r.passed(), "{axiom}: {r:?}");
        }
    }

    #[test]
    fn banzhaf_total_power_not_efficiency() {
        assert!(axiom_check(&Banzhaf, Axiom::Tpp, 200, 2).passed());
        let ep = axiom_check(&Banzhaf, Axiom::Ep, 200, 2);
        assert!(!ep.passed());
        assert!(ep.witness.is_some());
        let sum: f64 = Banzhaf.value(&majority3()).iter().sum();
        assert!((sum - 1.5).abs() < 1e-15);
        assert!((total_power(&majority3()) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn zero_value_fails_efficiency() {
        let r = axiom_check(&FnValue::zero(), Axiom::Ep, 10, 3);
        assert_eq!(r.failures, 10);
        let w = r.witness.unwrap();
        assert_ne!(*w.game.values.last().unwrap(), 0.0);
    }

    #[test]
    fn report_json_shape() {
        let r = axiom_check(&Shapley, Axiom::Ep, 5, 4);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["axiom"], "EP");
        assert_eq!(json["trials"], 5);
        assert!(json.get("witness").is_none());
        assert_eq!("tpp".parse::<Axiom>().unwrap(), Axiom::Tpp);
    }
}
