//! Brute-force reference implementations used to check the fast code
//! paths. Only the `Game` type is shared with the rest of the crate; every
//! formula here is written out from its textbook definition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::{two_step_evaluate, CoalitionalKind, CoalitionalValueSpec};
use crate::error::{Error, Result};
use crate::game::{Game, Partition};

/// Largest game handled by the permutation oracles.
pub const MAX_ORACLE_PLAYERS: usize = 8;
/// Largest sample handled by the exhaustive MIC search.
pub const MAX_MIC_SAMPLES: usize = 30;

fn check_n(v: &Game) -> Result<usize> {
    let n = v.n();
    if n == 0 || n > MAX_ORACLE_PLAYERS {
        return Err(Error::TooManyPlayers { n, cap: MAX_ORACLE_PLAYERS });
    }
    Ok(n)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// All orderings of `items` (Heap's algorithm).
fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let mut a = items.to_vec();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; a.len()];
    let mut i = 1;
    while i < a.len() {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn bits(players: &[usize]) -> u64 {
    players.iter().fold(0, |m, &i| m | 1u64 << i)
}

/// Average marginal contribution over all `n!` orders.
pub fn shapley_by_permutations(v: &Game) -> Result<Vec<f64>> {
    let n = check_n(v)?;
    let players: Vec<usize> = (0..n).collect();
    let orders = permutations(&players);
    let mut phi = vec![0.0; n];
    for order in &orders {
        let mut s = 0u64;
        for &i in order {
            phi[i] += v.eval(s | 1 << i) - v.eval(s);
            s |= 1 << i;
        }
    }
    let count = orders.len() as f64;
    Ok(phi.into_iter().map(|x| x / count).collect())
}

/// `2^{1−n} Σ_{S ∌ i} [v(S ∪ i) − v(S)]` by plain enumeration.
pub fn banzhaf_by_enumeration(v: &Game) -> Result<Vec<f64>> {
    let n = check_n(v)?;
    let scale = 0.5f64.powi(n as i32 - 1);
    Ok((0..n)
        .map(|i| {
            (0u64..1 << n).filter(|s| s >> i & 1 == 0).map(|s| v.eval(s | 1 << i) - v.eval(s)).sum::<f64>() * scale
        })
        .collect())
}

/// Owen value as the average over orders in which every block stays
/// contiguous.
pub fn owen_by_permutations(v: &Game, blocks: &[Vec<usize>]) -> Result<Vec<f64>> {
    let n = check_n(v)?;
    let block_ids: Vec<usize> = (0..blocks.len()).collect();
    let mut phi = vec![0.0; n];
    let mut count = 0.0;
    let inner: Vec<Vec<Vec<usize>>> = blocks.iter().map(|b| permutations(b)).collect();
    for outer in permutations(&block_ids) {
        // every combination of within-block orders
        let mut idx = vec![0usize; blocks.len()];
        loop {
            let mut s = 0u64;
            for &b in &outer {
                for &i in &inner[b][idx[b]] {
                    phi[i] += v.eval(s | 1 << i) - v.eval(s);
                    s |= 1 << i;
                }
            }
            count += 1.0;
            let mut k = 0;
            while k < blocks.len() {
                idx[k] += 1;
                if idx[k] < inner[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == blocks.len() {
                break;
            }
        }
    }
    Ok(phi.into_iter().map(|x| x / count).collect())
}

/// Double sum over unions of other blocks (`R`) and coalitions inside the
/// player's block (`T`) with separate outer and inner weights.
fn double_sum(
    v: &Game,
    blocks: &[Vec<usize>],
    outer: impl Fn(usize, usize) -> f64,
    inner: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let n = v.n();
    let m = blocks.len();
    let mut phi = vec![0.0; n];
    for (j, block) in blocks.iter().enumerate() {
        let others: Vec<usize> = (0..m).filter(|&k| k != j).collect();
        let s = block.len();
        for &i in block {
            let mates: Vec<usize> = block.iter().copied().filter(|&p| p != i).collect();
            let mut total = 0.0;
            for rmask in 0u64..1 << others.len() {
                let chosen: Vec<usize> = (0..others.len()).filter(|k| rmask >> k & 1 == 1).map(|k| others[k]).collect();
                let q: u64 = chosen.iter().map(|&k| bits(&blocks[k])).fold(0, |a, b| a | b);
                let wr = outer(chosen.len(), m);
                for tmask in 0u64..1 << mates.len() {
                    let t: Vec<usize> = (0..mates.len()).filter(|k| tmask >> k & 1 == 1).map(|k| mates[k]).collect();
                    let base = q | bits(&t);
                    total += wr * inner(t.len(), s) * (v.eval(base | 1 << i) - v.eval(base));
                }
            }
            phi[i] = total;
        }
    }
    phi
}

fn shapley_weight(k: usize, n: usize) -> f64 {
    factorial(k) * factorial(n - k - 1) / factorial(n)
}

fn banzhaf_weight(_k: usize, n: usize) -> f64 {
    0.5f64.powi(n as i32 - 1)
}

/// Owen value by its explicit double-sum formula.
pub fn owen_by_double_sum(v: &Game, blocks: &[Vec<usize>]) -> Result<Vec<f64>> {
    check_n(v)?;
    Ok(double_sum(v, blocks, shapley_weight, shapley_weight))
}

/// Banzhaf-Owen value by its explicit double-sum formula.
pub fn banzhaf_owen_by_double_sum(v: &Game, blocks: &[Vec<usize>]) -> Result<Vec<f64>> {
    check_n(v)?;
    Ok(double_sum(v, blocks, banzhaf_weight, banzhaf_weight))
}

/// Symmetric coalitional Banzhaf value: Banzhaf across blocks, Shapley
/// within.
pub fn symmetric_banzhaf_by_double_sum(v: &Game, blocks: &[Vec<usize>]) -> Result<Vec<f64>> {
    check_n(v)?;
    Ok(double_sum(v, blocks, banzhaf_weight, shapley_weight))
}

/// Two-step Shapley value: Shapley within the block's subgame plus an equal
/// share of the block's surplus in the quotient game.
pub fn two_step_shapley_by_definition(v: &Game, blocks: &[Vec<usize>]) -> Result<Vec<f64>> {
    let n = check_n(v)?;
    let empty = v.eval(0);
    let m = blocks.len();
    let masks: Vec<u64> = blocks.iter().map(|b| bits(b)).collect();
    let quotient = Game::from_fn(m, |r| {
        (0..m).filter(|k| r >> k & 1 == 1).fold(0u64, |a, k| a | masks[k]).pipe(|u| v.eval(u) - empty)
    })?;
    let q_shapley = shapley_by_permutations(&quotient)?;
    let mut phi = vec![0.0; n];
    for (j, block) in blocks.iter().enumerate() {
        let local = Game::from_fn(block.len(), |t| {
            let players: Vec<usize> = (0..block.len()).filter(|k| t >> k & 1 == 1).map(|k| block[k]).collect();
            v.eval(bits(&players)) - empty
        })?;
        let inner = shapley_by_permutations(&local)?;
        let surplus = (q_shapley[j] - (v.eval(masks[j]) - empty)) / block.len() as f64;
        for (k, &i) in block.iter().enumerate() {
            phi[i] = inner[k] + surplus;
        }
    }
    Ok(phi)
}

trait Pipe: Sized {
    fn pipe<T>(self, f: impl FnOnce(Self) -> T) -> T {
        f(self)
    }
}
impl Pipe for u64 {}

/// Reference evaluation of a built-in coalitional value.
pub fn coalitional_reference(kind: CoalitionalKind, v: &Game, blocks: &[Vec<usize>]) -> Result<Vec<f64>> {
    match kind {
        CoalitionalKind::Owen => owen_by_double_sum(v, blocks),
        CoalitionalKind::BanzhafOwen => banzhaf_owen_by_double_sum(v, blocks),
        CoalitionalKind::TwoStepShapley => two_step_shapley_by_definition(v, blocks),
        CoalitionalKind::SymmetricBanzhaf => symmetric_banzhaf_by_double_sum(v, blocks),
    }
}

/// All set partitions of `0..n` into at most `max_blocks` blocks, blocks
/// ordered by smallest member.
pub fn set_partitions(n: usize, max_blocks: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(i: usize, used: usize, n: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            let mut blocks = vec![Vec::new(); used];
            for (p, &l) in labels.iter().enumerate() {
                blocks[l].push(p);
            }
            out.push(blocks);
            return;
        }
        for l in 0..=used.min(max - 1) {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), n, max, labels, out);
        }
    }
    if n > 0 && max_blocks > 0 {
        rec(0, 0, n, max_blocks, &mut labels, &mut out);
    }
    out
}

/// Random game with uniform payoffs in `[−1, 1]` (and `v(∅) = 0`).
pub fn random_game(n: usize, rng: &mut impl Rng) -> Game {
    Game::from_fn(n, |s| if s == 0 { 0.0 } else { rng.random_range(-1.0..=1.0) }).expect("small game")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleWitness {
    pub game: Vec<f64>,
    pub partition: Vec<Vec<usize>>,
    pub player: usize,
    pub what: String,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub spec: String,
    pub trials: usize,
    pub comparisons: usize,
    /// Largest disagreement between the implementations under test and
    /// the references.
    pub max_abs_deviation: f64,
    pub witness: Option<OracleWitness>,
    /// Largest violation of the quotient game property seen.
    pub quotient_max_deviation: f64,
    pub quotient_witness: Option<OracleWitness>,
}

fn consider(slot: &mut Option<OracleWitness>, max: &mut f64, cand: OracleWitness) {
    if cand.deviation > *max || (slot.is_none() && cand.deviation > 0.0 && cand.deviation >= *max) {
        *max = cand.deviation;
        *slot = Some(cand);
    }
}

/// Compares the direct formula, the two-step evaluator and the reference
/// double sums on random games (`n = 2..=max_players`) over every
/// partition into at most four blocks.
pub fn crosscheck_with(spec: &CoalitionalValueSpec, trials: usize, seed: u64, max_players: usize) -> Result<OracleReport> {
    if !(2..=MAX_ORACLE_PLAYERS).contains(&max_players) {
        return Err(Error::InvalidArgument(format!("max_players must be in 2..={MAX_ORACLE_PLAYERS}")));
    }
    let kind = spec.reference_kind();
    let per_trial: Vec<Result<OracleReport>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(t as u64));
            let n = rng.random_range(2..=max_players);
            let v = random_game(n, &mut rng);
            let mut report = OracleReport {
                spec: spec.name(),
                trials: 1,
                comparisons: 0,
                max_abs_deviation: 0.0,
                witness: None,
                quotient_max_deviation: 0.0,
                quotient_witness: None,
            };
            for blocks in set_partitions(n, 4) {
                let p = Partition::new(n, blocks.clone())?;
                let two_step = two_step_evaluate(spec, &v, &p)?;
                let evaluated = spec.evaluate(&v, &p)?;
                let mut candidates = vec![("evaluate", evaluated)];
                if let Some(k) = kind {
                    candidates.push(("direct", k.direct(&v, &p)?));
                    candidates.push(("reference", coalitional_reference(k, &v, &blocks)?));
                }
                for (what, other) in candidates {
                    report.comparisons += 1;
                    for i in 0..n {
                        let deviation = (two_step[i] - other[i]).abs();
                        let cand = OracleWitness {
                            game: v.to_dense()?.dense_values().expect("dense").to_vec(),
                            partition: blocks.clone(),
                            player: i,
                            what: format!("two-step vs {what}"),
                            deviation,
                        };
                        if deviation > report.max_abs_deviation {
                            consider(&mut report.witness, &mut report.max_abs_deviation, cand);
                        }
                    }
                }
                // quotient game property: block sums vs value of the quotient game
                let masks: Vec<u64> = blocks.iter().map(|b| bits(b)).collect();
                let m = blocks.len();
                let q = Game::from_fn(m, |r| v.eval((0..m).filter(|k| r >> k & 1 == 1).fold(0, |a, k| a | masks[k])))?;
                let qv = spec.evaluate(&q, &Partition::singletons(m))?;
                for (j, block) in blocks.iter().enumerate() {
                    let sum: f64 = block.iter().map(|&i| two_step[i]).sum();
                    let deviation = (sum - qv[j]).abs();
                    if deviation > report.quotient_max_deviation {
                        let cand = OracleWitness {
                            game: v.to_dense()?.dense_values().expect("dense").to_vec(),
                            partition: blocks.clone(),
                            player: block[0],
                            what: format!("block {j} sum vs quotient value"),
                            deviation,
                        };
                        consider(&mut report.quotient_witness, &mut report.quotient_max_deviation, cand);
                    }
                }
            }
            Ok(report)
        })
        .collect();
    let mut total = OracleReport {
        spec: spec.name(),
        trials,
        comparisons: 0,
        max_abs_deviation: 0.0,
        witness: None,
        quotient_max_deviation: 0.0,
        quotient_witness: None,
    };
    for r in per_trial {
        let r = r?;
        total.comparisons += r.comparisons;
        if r.max_abs_deviation > total.max_abs_deviation {
            total.max_abs_deviation = r.max_abs_deviation;
            total.witness = r.witness;
        }
        if r.quotient_max_deviation > total.quotient_max_deviation {
            total.quotient_max_deviation = r.quotient_max_deviation;
            total.quotient_witness = r.quotient_witness;
        }
    }
    Ok(total)
}

/// [`crosscheck_with`] on games of up to eight players.
pub fn crosscheck(spec: &CoalitionalValueSpec, trials: usize, seed: u64) -> Result<OracleReport> {
    crosscheck_with(spec, trials, seed, MAX_ORACLE_PLAYERS)
}

// ---------------------------------------------------------------------------
// MIC

/// Ranks with ties kept together: returns sample indices sorted by value
/// (ties by index) and the tie-group id of each sorted position.
fn sorted_with_ties(v: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite").then(a.cmp(&b)));
    let mut group = vec![0usize; v.len()];
    for k in 1..idx.len() {
        group[k] = group[k - 1] + usize::from(v[idx[k]] != v[idx[k - 1]]);
    }
    (idx, group)
}

/// Row of every sample when `v` is split into `rows` groups of (nearly)
/// equal mass; a run of equal values joins the row of its first member.
fn equal_mass_rows(v: &[f64], rows: usize) -> Vec<usize> {
    let n = v.len();
    let (idx, group) = sorted_with_ties(v);
    let mut out = vec![0usize; n];
    let mut first_of_group = 0;
    for k in 0..n {
        if k == 0 || group[k] != group[k - 1] {
            first_of_group = k;
        }
        out[idx[k]] = (first_of_group * rows / n).min(rows - 1);
    }
    out
}

fn mutual_information_nats(cols: &[usize], rows: &[usize], ncols: usize, nrows: usize) -> f64 {
    let n = cols.len() as f64;
    let mut joint = vec![0.0; ncols * nrows];
    let mut pc = vec![0.0; ncols];
    let mut pr = vec![0.0; nrows];
    for (&c, &r) in cols.iter().zip(rows) {
        joint[c * nrows + r] += 1.0;
        pc[c] += 1.0;
        pr[r] += 1.0;
    }
    let mut mi = 0.0;
    for c in 0..ncols {
        for r in 0..nrows {
            let j = joint[c * nrows + r];
            if j > 0.0 {
                mi += j / n * (j * n / (pc[c] * pr[r])).ln();
            }
        }
    }
    mi
}

/// Best normalized information with `rows_of` fixed and the other axis cut
/// into at most `k` contiguous pieces, trying every set of cut points.
fn best_columns(other: &[f64], rows_of: &[usize], nrows: usize, k: usize) -> f64 {
    let n = other.len();
    let (idx, group) = sorted_with_ties(other);
    // admissible cut positions: between sorted positions with distinct values
    let cuts: Vec<usize> = (1..n).filter(|&p| group[p] != group[p - 1]).collect();
    let mut best = 0.0f64;
    let rows_sorted: Vec<usize> = idx.iter().map(|&s| rows_of[s]).collect();
    let mut chosen: Vec<usize> = Vec::new();
    fn rec(
        start: usize,
        left: usize,
        cuts: &[usize],
        chosen: &mut Vec<usize>,
        rows_sorted: &[usize],
        nrows: usize,
        best: &mut f64,
    ) {
        let n = rows_sorted.len();
        let mut col = vec![0usize; n];
        let mut c = 0;
        for p in 0..n {
            if chosen.contains(&p) {
                c += 1;
            }
            col[p] = c;
        }
        let mi = mutual_information_nats(&col, rows_sorted, chosen.len() + 1, nrows);
        if mi > *best {
            *best = mi;
        }
        if left == 0 {
            return;
        }
        for q in start..cuts.len() {
            chosen.push(cuts[q]);
            rec(q + 1, left - 1, cuts, chosen, rows_sorted, nrows, best);
            chosen.pop();
        }
    }
    rec(0, k - 1, &cuts, &mut chosen, &rows_sorted, nrows, &mut best);
    best
}

fn check_mic_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidArgument("samples must be nonempty and of equal length".into()));
    }
    if x.len() > MAX_MIC_SAMPLES {
        return Err(Error::InvalidArgument(format!("exhaustive MIC handles at most {MAX_MIC_SAMPLES} samples")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("inputs must be finite".into()));
    }
    Ok(())
}

fn brute_force_grids(x: &[f64], y: &[f64], grids: &[(usize, usize)]) -> f64 {
    let mut best = 0.0f64;
    for &(a, b) in grids {
        // y split into b equal-mass rows, x cut freely into ≤ a columns, and mirrored
        for (fixed, free) in [(y, x), (x, y)] {
            let rows = equal_mass_rows(fixed, b);
            let mi = best_columns(free, &rows, b, a);
            let score = (mi / (a as f64).ln()).clamp(0.0, 1.0);
            best = best.max(if score < 1e-12 { 0.0 } else { score });
        }
    }
    best
}

/// Exhaustive characteristic-matrix maximum over grids `a × b` with
/// `2 ≤ a ≤ b`, `a ≤ max_k`, `b ≤ max_l`.
pub fn mic_brute_force(x: &[f64], y: &[f64], max_k: usize, max_l: usize) -> Result<f64> {
    check_mic_inputs(x, y)?;
    if max_k * max_l > 16 || max_k < 2 || max_l < 2 {
        return Err(Error::InvalidArgument("need 2 ≤ max_k, max_l and max_k·max_l ≤ 16".into()));
    }
    let grids: Vec<(usize, usize)> =
        (2..=max_l).flat_map(|b| (2..=max_k.min(b)).map(move |a| (a, b))).collect();
    Ok(brute_force_grids(x, y, &grids))
}

/// Exhaustive maximum over the grids `2 ≤ a ≤ b`, `a·b < budget`.
pub fn mic_brute_force_budget(x: &[f64], y: &[f64], budget: usize) -> Result<f64> {
    check_mic_inputs(x, y)?;
    if budget > 17 {
        return Err(Error::InvalidArgument("exhaustive MIC handles budgets up to 17".into()));
    }
    let grids: Vec<(usize, usize)> =
        (2..budget).flat_map(|b| (2..=b).filter(move |a| a * b < budget).map(move |a| (a, b))).collect();
    Ok(brute_force_grids(x, y, &grids))
}
