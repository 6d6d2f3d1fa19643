//! MIC-based dissimilarities between features and average-linkage
//! clustering into a partition tree.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mic::{axis_order, mic_from_orders, MicConfig};
use crate::tree::{PartitionTree, TreeNode};

/// Symmetric matrix of dissimilarities in `[0, 1]` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    names: Vec<String>,
    d: Vec<Vec<f64>>,
}

impl DissimilarityMatrix {
    pub fn new(names: Vec<String>, d: Vec<Vec<f64>>) -> Result<Self> {
        let n = d.len();
        if names.len() != n || d.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("dissimilarity matrix must be square with one name per row".into()));
        }
        for i in 0..n {
            if d[i][i] != 0.0 {
                return Err(Error::InvalidArgument(format!("diagonal entry {i} is {}", d[i][i])));
            }
            for j in 0..n {
                let x = d[i][j];
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::InvalidArgument(format!("entry ({i},{j}) = {x} outside [0,1]")));
                }
                if x != d[j][i] {
                    return Err(Error::InvalidArgument(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(DissimilarityMatrix { names, d })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.d
    }

    /// CSV with a header of feature names and one row per feature.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for row in &self.d {
            let line: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            writeln!(out, "{}", line.join(",")).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty dissimilarity CSV".into()))?;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut d = Vec::new();
        for (k, line) in lines.enumerate() {
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            d.push(row.map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?);
        }
        DissimilarityMatrix::new(names, d)
    }
}

/// `1 − MIC_e` for every pair of columns, computed in parallel.
pub fn dissimilarity_matrix(columns: &[Vec<f64>], names: &[String], cfg: &MicConfig) -> Result<DissimilarityMatrix> {
    cfg.validate()?;
    let p = columns.len();
    if names.len() != p {
        return Err(Error::InvalidArgument("one name per column required".into()));
    }
    let n = columns.first().map_or(0, Vec::len);
    if n < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 samples, got {n}")));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument("columns have different lengths".into()));
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite values in data".into()));
    }
    let orders: Vec<_> = columns.par_iter().map(|c| axis_order(c)).collect();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect();
    let mics: Vec<f64> = pairs.par_iter().map(|&(i, j)| mic_from_orders(&orders[i], &orders[j], cfg)).collect();
    let mut d = vec![vec![0.0; p]; p];
    for (&(i, j), m) in pairs.iter().zip(mics) {
        let x = (1.0 - m).clamp(0.0, 1.0);
        d[i][j] = x;
        d[j][i] = x;
    }
    DissimilarityMatrix::new(names.to_vec(), d)
}

/// A single agglomeration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// Group-average dissimilarity of the two clusters.
    pub height: f64,
}

/// Group-average agglomerative merge sequence. Clusters are numbered
/// `0..n` for the inputs and `n + k` for the cluster created at step `k`.
/// Ties go to the pair with the smallest indices.
pub fn average_linkage(d: &DissimilarityMatrix) -> Vec<Merge> {
    let n = d.len();
    let mut dist: Vec<Vec<f64>> = d.rows().to_vec();
    let mut size = vec![1usize; n];
    let mut label: Vec<usize> = (0..n).collect();
    let mut active: Vec<bool> = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if active[j] && dist[i][j] < best.2 {
                    best = (i, j, dist[i][j]);
                }
            }
        }
        let (i, j, h) = best;
        merges.push(Merge { left: label[i], right: label[j], height: h });
        // slot i now holds the merged cluster
        let (si, sj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if active[k] && k != i && k != j {
                let x = (si * dist[i][k] + sj * dist[j][k]) / (si + sj);
                dist[i][k] = x;
                dist[k][i] = x;
            }
        }
        size[i] += size[j];
        active[j] = false;
        label[i] = n + step;
    }
    merges
}

/// Average-linkage dendrogram as a partition tree. Heights are the raw
/// merge heights scaled so the root sits at `min(1, max merge)`; raw heights
/// are kept on each node. Merge inversions and zero-height merges are made
/// strictly increasing by `parent = max(parent, child + 1e-9)`.
pub fn average_linkage_cluster(d: &DissimilarityMatrix) -> Result<PartitionTree> {
    let n = d.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no features to cluster".into()));
    }
    let mut nodes: Vec<TreeNode> = (0..n)
        .map(|i| TreeNode { id: i, height: 0.0, parent: None, children: vec![], leaf_player: Some(i), raw_height: None })
        .collect();
    if n == 1 {
        return PartitionTree::from_nodes(nodes);
    }
    let merges = average_linkage(d);
    let max_raw = merges.iter().fold(0.0f64, |m, x| m.max(x.height));
    let scale = if max_raw > 1.0 { 1.0 / max_raw } else { 1.0 };
    let mut inversions = 0;
    for (k, m) in merges.iter().enumerate() {
        let id = n + k;
        let floor = nodes[m.left].height.max(nodes[m.right].height) + crate::tree::TIE_EPSILON;
        let mut h = m.height * scale;
        if h < floor {
            if m.height > 0.0 && k > 0 && m.height < merges[k - 1].height {
                inversions += 1;
            }
            h = floor;
        }
        nodes[m.left].parent = Some(id);
        nodes[m.right].parent = Some(id);
        nodes.push(TreeNode {
            id,
            height: h,
            parent: None,
            children: vec![m.left, m.right],
            leaf_player: None,
            raw_height: Some(m.height),
        });
    }
    if inversions > 0 {
        log::warn!("average linkage produced {inversions} height inversions; heights monotonized");
    }
    let top = nodes.last().map_or(0.0, |x| x.height);
    if top > 1.0 {
        for node in nodes.iter_mut() {
            node.height /= top;
        }
    }
    PartitionTree::from_nodes(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn two_features() {
        let d = DissimilarityMatrix::new(names(2), vec![vec![0.0, 0.3], vec![0.3, 0.0]]).unwrap();
        let t = average_linkage_cluster(&d).unwrap();
        assert_eq!(t.nodes().len(), 3);
        assert!((t.node(t.root()).height - 0.3).abs() < 1e-15);
    }

    #[test]
    fn group_average_heights() {
        // {0,1} at 0.1, then 2 joins at mean(0.5, 0.7) = 0.6
        let d = DissimilarityMatrix::new(
            names(3),
            vec![vec![0.0, 0.1, 0.5], vec![0.1, 0.0, 0.7], vec![0.5, 0.7, 0.0]],
        )
        .unwrap();
        let merges = average_linkage(&d);
        assert_eq!(merges[0], Merge { left: 0, right: 1, height: 0.1 });
        assert_eq!(merges[1].left, 3);
        assert!((merges[1].height - 0.6).abs() < 1e-15);
        let t = average_linkage_cluster(&d).unwrap();
        assert_eq!(t.cut(0.5).unwrap().to_lists(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn duplicated_feature_merges_first_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..500).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..500).map(|_| rng.random()).collect();
        let cols = vec![a.clone(), b, a];
        let d = dissimilarity_matrix(&cols, &names(3), &MicConfig::default()).unwrap();
        assert_eq!(d.get(0, 2), 0.0);
        assert!(d.get(0, 1) > 0.7);
        let merges = average_linkage(&d);
        assert_eq!((merges[0].left, merges[0].right, merges[0].height), (0, 2, 0.0));
        let t = average_linkage_cluster(&d).unwrap();
        assert_eq!(t.node(3).raw_height, Some(0.0));
        assert!(t.node(3).height > 0.0);
    }

    #[test]
    fn csv_roundtrip() {
        let d = DissimilarityMatrix::new(names(2), vec![vec![0.0, 0.25], vec![0.25, 0.0]]).unwrap();
        assert_eq!(DissimilarityMatrix::from_csv(&d.to_csv()).unwrap(), d);
        assert!(DissimilarityMatrix::new(names(2), vec![vec![0.0, 0.2], vec![0.3, 0.0]]).is_err());
    }
}
