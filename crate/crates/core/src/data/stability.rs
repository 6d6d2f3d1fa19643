//! Norms of explanation differences between two models, and energy ratios.

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::explain::{ExplanationMatrix, UnitKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitStability {
    pub kind: UnitKind,
    pub label: String,
    pub difference_norm: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    /// `difference_norm / model_difference_norm`, absent when the models agree.
    pub ratio: Option<f64>,
}

/// Root-sum-square of per-feature difference norms over a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStability {
    pub label: String,
    pub members: Vec<usize>,
    pub difference_norm: f64,
    pub ratio: Option<f64>,
}

/// `Σ_units ‖u‖² / ‖f − v(∅)‖²` for one matrix and unit kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEntry {
    pub matrix: String,
    pub kind: UnitKind,
    pub explanation_energy: f64,
    pub model_energy: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub model_difference_norm: f64,
    pub units: Vec<UnitStability>,
    pub blocks: Vec<BlockStability>,
    pub energy: Vec<EnergyEntry>,
}

impl StabilityReport {
    pub fn unit(&self, kind: UnitKind, label: &str) -> Option<&UnitStability> {
        self.units.iter().find(|u| u.kind == kind && u.label == label)
    }

    pub fn max_difference(&self, kind: UnitKind) -> f64 {
        self.units.iter().filter(|u| u.kind == kind).map(|u| u.difference_norm).fold(0.0, f64::max)
    }
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b > 0.0).then(|| a / b)
}

/// Explanation energies of every unit kind present in `e`.
pub fn energy_entries(e: &ExplanationMatrix, data: &Dataset, label: &str) -> Vec<EnergyEntry> {
    let centred: Vec<f64> = e.predictions.iter().zip(&e.baselines).map(|(p, b)| p - b).collect();
    let model_energy = data.l2_norm(&centred).powi(2);
    let mut kinds: Vec<UnitKind> = Vec::new();
    for u in &e.units {
        if !kinds.contains(&u.kind) {
            kinds.push(u.kind);
        }
    }
    kinds
        .into_iter()
        .map(|kind| {
            let explanation_energy = e.columns_of(kind).iter().map(|&c| data.l2_norm(&e.column(c)).powi(2)).sum();
            EnergyEntry {
                matrix: label.to_string(),
                kind,
                explanation_energy,
                model_energy,
                ratio: ratio(explanation_energy, model_energy),
            }
        })
        .collect()
}

/// Compares explanations of two models over the same rows. Norms are
/// empirical (weighted) means over `data`.
pub fn stability_report(a: &ExplanationMatrix, b: &ExplanationMatrix, data: &Dataset) -> Result<StabilityReport> {
    if a.units != b.units {
        return Err(Error::InvalidArgument("explanations have different units".into()));
    }
    if a.n_rows() != b.n_rows() || a.n_rows() != data.n_samples() {
        return Err(Error::InvalidArgument(format!(
            "row counts differ: {}, {} and {} data rows",
            a.n_rows(),
            b.n_rows(),
            data.n_samples()
        )));
    }
    if a.meta.background != b.meta.background {
        return Err(Error::InvalidArgument("explanations use different background sets".into()));
    }
    if a.meta.data != b.meta.data {
        return Err(Error::InvalidArgument("explanations were computed on different data".into()));
    }
    let model_diff: Vec<f64> = a.predictions.iter().zip(&b.predictions).map(|(x, y)| x - y).collect();
    let model_difference_norm = data.l2_norm(&model_diff);
    let units: Vec<UnitStability> = a
        .units
        .iter()
        .enumerate()
        .map(|(c, u)| {
            let (ca, cb) = (a.column(c), b.column(c));
            let diff: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| x - y).collect();
            let difference_norm = data.l2_norm(&diff);
            UnitStability {
                kind: u.kind,
                label: u.label.clone(),
                difference_norm,
                norm_a: data.l2_norm(&ca),
                norm_b: data.l2_norm(&cb),
                ratio: ratio(difference_norm, model_difference_norm),
            }
        })
        .collect();
    let feature_norm = |i: usize| {
        a.units
            .iter()
            .position(|u| u.kind == UnitKind::Feature && u.members == [i])
            .map_or(0.0, |c| units[c].difference_norm)
    };
    let blocks = match &a.meta.partition {
        Some(p) => p
            .iter()
            .map(|members| {
                let difference_norm = members.iter().map(|&i| feature_norm(i).powi(2)).sum::<f64>().sqrt();
                BlockStability {
                    label: members.iter().map(|&i| a.meta.feature_names[i].as_str()).collect::<Vec<_>>().join("+"),
                    members: members.clone(),
                    difference_norm,
                    ratio: ratio(difference_norm, model_difference_norm),
                }
            })
            .collect(),
        None => Vec::new(),
    };
    let mut energy = energy_entries(a, data, "a");
    energy.extend(energy_entries(b, data, "b"));
    Ok(StabilityReport { model_difference_norm, units, blocks, energy })
}
