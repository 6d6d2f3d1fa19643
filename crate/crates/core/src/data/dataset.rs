use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Rectangular table of finite feature values with optional sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
    weights: Option<Vec<f64>>,
}

/// A dataset read from CSV together with an optional response column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub data: Dataset,
    pub response: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Data("dataset has no features".into()));
        }
        if rows.is_empty() {
            return Err(Error::Data("dataset has no rows".into()));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(Error::Data(format!("row {r} has {} values, expected {}", row.len(), names.len())));
            }
            if let Some(c) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::Data(format!("non-finite value in row {r}, column {}", names[c])));
            }
        }
        Ok(Dataset { names, rows, weights: None })
    }

    /// Names `x1..xn`.
    pub fn with_default_names(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        Dataset::new(default_names(p), rows)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.rows.len() {
            return Err(Error::Data(format!("{} weights for {} rows", weights.len(), self.rows.len())));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Data("weights must be finite, nonnegative and not all zero".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features()).map(|j| self.column(j)).collect()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Sample weights summing to one (uniform when none were given).
    pub fn probabilities(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => {
                let total: f64 = w.iter().sum();
                w.iter().map(|x| x / total).collect()
            }
            None => vec![1.0 / self.rows.len() as f64; self.rows.len()],
        }
    }

    /// Weighted mean of per-row quantities.
    pub fn mean_of(&self, values: &[f64]) -> f64 {
        match &self.weights {
            Some(_) => self.probabilities().iter().zip(values).map(|(p, v)| p * v).sum(),
            None => values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    /// Empirical `L²` norm of per-row quantities.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
        self.mean_of(&sq).sqrt()
    }

    /// First `k` rows (all when `k` exceeds the size).
    pub fn head(&self, k: usize) -> Dataset {
        let k = k.min(self.rows.len());
        Dataset {
            names: self.names.clone(),
            rows: self.rows[..k].to_vec(),
            weights: self.weights.as_ref().map(|w| w[..k].to_vec()),
        }
    }

    /// SHA-256 over names, values and weights; identifies a background set.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for name in &self.names {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        for row in &self.rows {
            for x in row {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        if let Some(w) = &self.weights {
            h.update(b"weights");
            for x in w {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_csv(&self, response: Option<(&str, &[f64])>) -> String {
        let mut header = self.names.clone();
        if let Some((name, _)) = response {
            header.push(name.to_string());
        }
        let mut out = header.join(",");
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            let mut cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            if let Some((_, y)) = response {
                cells.push(format!("{:e}", y[r]));
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses comma-separated text with a header row. A column named
    /// `response` (if given and present) is split off.
    pub fn from_csv(text: &str, response: Option<&str>) -> Result<Table> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let names: Vec<String> =
            header.trim_start_matches('\u{feff}').split(',').map(|s| s.trim().trim_matches('"').to_string()).collect();
        let target = response.and_then(|r| names.iter().position(|n| n == r));
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for (k, line) in lines {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != names.len() {
                return Err(Error::Parse(format!("line {}: {} fields, header has {}", k + 1, cells.len(), names.len())));
            }
            let mut row = Vec::with_capacity(names.len());
            for (c, cell) in cells.iter().enumerate() {
                let x: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: column {}: cannot parse {:?}", k + 1, names[c], cell.trim())))?;
                if Some(c) == target {
                    ys.push(x);
                } else {
                    row.push(x);
                }
            }
            rows.push(row);
        }
        let mut feature_names = names.clone();
        if let Some(t) = target {
            feature_names.remove(t);
        }
        let data = Dataset::new(feature_names, rows).map_err(|e| match e {
            Error::Data(m) => Error::Parse(m),
            other => other,
        })?;
        Ok(Table { data, response: target.map(|_| ys) })
    }

    pub fn load(path: impl AsRef<Path>, response: Option<&str>) -> Result<Table> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_csv(&text, response).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("x{i}")).collect()
}
