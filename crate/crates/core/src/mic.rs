//! Grid-based mutual information and the MIC_e estimator.
//!
//! For every grid size `a × b` with `2 ≤ a ≤ b` and `a·b < B(n)`, one axis
//! is equipartitioned into `b` rows and the other axis is split into at most
//! `a` contiguous columns chosen by dynamic programming over clumps; the
//! mutual information is normalized by `ln a`. Both orientations are
//! evaluated, which keeps the estimator symmetric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum grid budget used for small samples.
pub const MIN_GRID_BUDGET: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MicConfig {
    /// `B(n) = ⌈n^b_exponent⌉`.
    pub b_exponent: f64,
    /// Candidate column boundaries are capped at `max_clumps_factor · a`.
    pub max_clumps_factor: usize,
}

impl Default for MicConfig {
    fn default() -> Self {
        MicConfig { b_exponent: 0.6, max_clumps_factor: 15 }
    }
}

impl MicConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b_exponent > 0.0 && self.b_exponent < 1.0) {
            return Err(Error::InvalidArgument(format!("MIC exponent {} outside (0,1)", self.b_exponent)));
        }
        if self.max_clumps_factor == 0 {
            return Err(Error::InvalidArgument("max_clumps_factor must be at least 1".into()));
        }
        Ok(())
    }

    /// Grid budget `B(n)`, at least 4.
    pub fn budget(&self, n: usize) -> usize {
        ((n as f64).powf(self.b_exponent).ceil() as usize).max(MIN_GRID_BUDGET)
    }
}

/// Mutual information of a contingency table, in bits. Empty cells
/// contribute nothing.
pub fn discrete_mutual_information(counts: &[Vec<f64>]) -> Result<f64> {
    let cols = counts.first().map_or(0, Vec::len);
    if counts.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidArgument("contingency table is ragged".into()));
    }
    if counts.iter().flatten().any(|&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(Error::InvalidArgument("contingency counts must be finite and nonnegative".into()));
    }
    let total: f64 = counts.iter().flatten().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("contingency table is empty".into()));
    }
    let rows: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();
    let colsum: Vec<f64> = (0..cols).map(|c| counts.iter().map(|r| r[c]).sum()).collect();
    let mut mi = 0.0;
    for (a, row) in counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if c > 0.0 {
                mi += c / total * (c * total / (rows[a] * colsum[b])).ln();
            }
        }
    }
    Ok((mi / std::f64::consts::LN_2).max(0.0))
}

/// Sample order along one axis, with boundaries of equal-value groups.
#[derive(Debug, Clone)]
pub struct AxisOrder {
    order: Vec<u32>,
    /// Start offsets (into `order`) of each run of equal values, plus `n`.
    groups: Vec<usize>,
}

impl AxisOrder {
    pub fn new(values: &[f64]) -> Self {
        let mut order: Vec<u32> = (0..values.len() as u32).collect();
        order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]).then(a.cmp(&b)));
        let mut groups = Vec::new();
        for k in 0..order.len() {
            if k == 0 || values[order[k] as usize] != values[order[k - 1] as usize] {
                groups.push(k);
            }
        }
        groups.push(order.len());
        AxisOrder { order, groups }
    }

    fn len(&self) -> usize {
        self.order.len()
    }

    /// Row label per sample for an equipartition into `bins` rows. A run of
    /// equal values goes to the bin of its first element.
    fn equipartition(&self, bins: usize) -> (Vec<u32>, Vec<usize>) {
        let n = self.len();
        let mut labels = vec![0u32; n];
        let mut sizes = vec![0usize; bins];
        for g in 0..self.groups.len() - 1 {
            let (start, end) = (self.groups[g], self.groups[g + 1]);
            let bin = (start * bins / n).min(bins - 1);
            for &s in &self.order[start..end] {
                labels[s as usize] = bin as u32;
            }
            sizes[bin] += end - start;
        }
        (labels, sizes)
    }
}

fn xlogx(c: f64) -> f64 {
    if c > 0.0 {
        c * c.ln()
    } else {
        0.0
    }
}

/// Calls `emit` with the row counts of each clump of `axis`: a run of
/// equal values that cannot be split, merged with its neighbours while they
/// all stay in a single row.
fn for_each_clump(axis: &AxisOrder, rows: &[u32], mut emit: impl FnMut(&[(u32, usize)])) {
    let mut current: Vec<(u32, usize)> = Vec::new();
    let mut last_pure: Option<u32> = None;
    for g in 0..axis.groups.len() - 1 {
        let members = &axis.order[axis.groups[g]..axis.groups[g + 1]];
        let first = rows[members[0] as usize];
        let pure = members.iter().all(|&s| rows[s as usize] == first);
        if pure && last_pure == Some(first) {
            current[0].1 += members.len();
            continue;
        }
        if !current.is_empty() {
            emit(&current);
            current.clear();
        }
        if pure {
            current.push((first, members.len()));
            last_pure = Some(first);
        } else {
            for &s in members {
                let r = rows[s as usize];
                match current.iter_mut().find(|(row, _)| *row == r) {
                    Some(entry) => entry.1 += 1,
                    None => current.push((r, 1)),
                }
            }
            last_pure = None;
        }
    }
    if !current.is_empty() {
        emit(&current);
    }
}

/// Clumps of `axis`, merged into about `limit` superclumps of equal mass
/// when there are more than `limit`.
fn clumps_of(axis: &AxisOrder, rows: &[u32], nrows: usize, limit: usize) -> Vec<Vec<(u32, usize)>> {
    let n = axis.len();
    let mut count = 0usize;
    for_each_clump(axis, rows, |_| count += 1);
    let mut out: Vec<Vec<(u32, usize)>> = Vec::new();
    if count <= limit {
        for_each_clump(axis, rows, |c| out.push(c.to_vec()));
        return out;
    }
    let mut counts = vec![0usize; nrows];
    let mut touched: Vec<u32> = Vec::new();
    let mut cum = 0usize;
    let mut next_cut = 1usize;
    let flush = |counts: &mut [usize], touched: &mut Vec<u32>| -> Vec<(u32, usize)> {
        let clump = touched.iter().map(|&r| (r, std::mem::take(&mut counts[r as usize]))).collect();
        touched.clear();
        clump
    };
    for_each_clump(axis, rows, |clump| {
        for &(r, k) in clump {
            if counts[r as usize] == 0 {
                touched.push(r);
            }
            counts[r as usize] += k;
            cum += k;
        }
        if cum * limit >= next_cut * n {
            out.push(flush(&mut counts, &mut touched));
            while cum * limit >= next_cut * n {
                next_cut += 1;
            }
        }
    });
    if !touched.is_empty() {
        out.push(flush(&mut counts, &mut touched));
    }
    out
}

/// Best mutual information (nats) between the row labelling and a split of
/// `axis` into at most `k` contiguous columns, for every `k = 1..=kmax`.
fn optimize_columns(
    axis: &AxisOrder,
    rows: &[u32],
    row_sizes: &[usize],
    kmax: usize,
    factor: usize,
    table: &[f64],
) -> Vec<f64> {
    let n = axis.len();
    let nrows = row_sizes.len();
    let clumps = clumps_of(axis, rows, nrows, factor * kmax);

    let c = clumps.len();
    // column score F(s,t) = Σ_r xlogx(n_r) − xlogx(n) over clumps s..t
    let mut score = vec![0.0f64; (c + 1) * (c + 1)];
    let mut counts = vec![0usize; nrows];
    for s in 0..c {
        counts.iter_mut().for_each(|x| *x = 0);
        let mut sum_xlogx = 0.0;
        let mut total = 0usize;
        for t in s + 1..=c {
            for &(r, k) in &clumps[t - 1] {
                let r = r as usize;
                sum_xlogx -= table[counts[r]];
                counts[r] += k;
                sum_xlogx += table[counts[r]];
                total += k;
            }
            score[s * (c + 1) + t] = sum_xlogx - table[total];
        }
    }

    let nf = n as f64;
    let h_rows: f64 = -row_sizes.iter().map(|&s| xlogx(s as f64 / nf)).sum::<f64>();
    let mut out = Vec::with_capacity(kmax);
    let mut prev: Vec<f64> = (0..=c).map(|t| if t == 0 { 0.0 } else { score[t] }).collect();
    let mut best = f64::NEG_INFINITY;
    for k in 1..=kmax {
        if k > 1 && k <= c {
            let mut cur = vec![f64::NEG_INFINITY; c + 1];
            for t in k..=c {
                let mut m = f64::NEG_INFINITY;
                for s in k - 1..t {
                    let cand = prev[s] + score[s * (c + 1) + t];
                    if cand > m {
                        m = cand;
                    }
                }
                cur[t] = m;
            }
            prev = cur;
        }
        best = best.max(prev[c]);
        let mi = h_rows + best / nf;
        // rounding noise on degenerate tables
        out.push(if mi < 1e-12 { 0.0 } else { mi });
    }
    out
}

/// Normalized scores of every grid `a × b` (`2 ≤ a ≤ b`, `a·b < B`) in
/// both orientations: `(a, b, rows_axis, value)` where `rows_axis` is 0 if
/// `y` was equipartitioned and 1 if `x` was.
pub fn characteristic_entries(x: &[f64], y: &[f64], cfg: &MicConfig) -> Result<Vec<(usize, usize, u8, f64)>> {
    let (ox, oy) = prepare(x, y, cfg)?;
    Ok(entries(&ox, &oy, cfg))
}

fn prepare(x: &[f64], y: &[f64], cfg: &MicConfig) -> Result<(AxisOrder, AxisOrder)> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("sample lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 8 {
        return Err(Error::InvalidArgument(format!("MIC needs at least 8 samples, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("MIC inputs must be finite".into()));
    }
    Ok((AxisOrder::new(x), AxisOrder::new(y)))
}

fn entries(ox: &AxisOrder, oy: &AxisOrder, cfg: &MicConfig) -> Vec<(usize, usize, u8, f64)> {
    let n = ox.len();
    let budget = cfg.budget(n);
    // c·ln c for every count that can occur
    let table: Vec<f64> = (0..=n).map(|c| xlogx(c as f64)).collect();
    let mut out = Vec::new();
    for b in 2.. {
        if 2 * b >= budget {
            break;
        }
        let amax = ((budget - 1) / b).min(b);
        if amax < 2 {
            continue;
        }
        for (tag, rows_axis, cols_axis) in [(0u8, oy, ox), (1u8, ox, oy)] {
            let (labels, sizes) = rows_axis.equipartition(b);
            let scores = optimize_columns(cols_axis, &labels, &sizes, amax, cfg.max_clumps_factor, &table);
            for a in 2..=amax {
                let v = (scores[a - 1] / (a as f64).ln()).clamp(0.0, 1.0);
                out.push((a, b, tag, v));
            }
        }
    }
    out
}

/// Pre-sorted sample, reused across many MIC evaluations.
pub fn axis_order(values: &[f64]) -> AxisOrder {
    AxisOrder::new(values)
}

/// MIC_e of two samples; `0` when either input is constant.
pub fn mic_e(x: &[f64], y: &[f64], cfg: &MicConfig) -> Result<f64> {
    let (ox, oy) = prepare(x, y, cfg)?;
    Ok(mic_from_orders(&ox, &oy, cfg))
}

/// MIC_e on pre-sorted axes.
pub fn mic_from_orders(ox: &AxisOrder, oy: &AxisOrder, cfg: &MicConfig) -> f64 {
    entries(ox, oy, cfg).into_iter().fold(0.0, |m, e| m.max(e.3))
}
