//! Partition trees (dendrogram-shaped nested partitions), height cuts, and
//! recursive coalitional values over a tree.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coalition::{intermediate_game, CoalitionalValueSpec, Intermediate};
use crate::error::{Error, Result};
use crate::game::{members, scatter, Game, Partition, DENSE_CAP, MAX_PLAYERS};
use crate::values::GameValue;

/// Offset used to separate tied internal heights.
pub const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub height: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub leaf_player: Option<usize>,
    /// Unscaled merge height, kept by dendrograms built from data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_height: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    nodes: Vec<TreeNode>,
}

/// Nested description of a tree shape, used to build trees by hand.
#[derive(Debug, Clone, PartialEq)]
pub enum Nested {
    Leaf(usize),
    Node(Vec<Nested>),
}

/// A rooted tree whose leaves are the players; every internal node carries
/// a height in `(0, 1]`, leaves sit at 0, and heights decrease towards the
/// leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree {
    nodes: Vec<TreeNode>,
    root: usize,
    n: usize,
    leaf_of: Vec<usize>,
    span: Vec<u64>,
}

impl PartitionTree {
    /// Validates `nodes` (ids must equal positions). Tied internal heights
    /// are separated by `k·1e-9` offsets in input order, with a warning.
    pub fn from_nodes(mut nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidTree("no nodes".into()));
        }
        for (k, node) in nodes.iter().enumerate() {
            if node.id != k {
                return Err(Error::InvalidTree(format!("node at position {k} has id {}", node.id)));
            }
            if !(node.height.is_finite() && (0.0..=1.0).contains(&node.height)) {
                return Err(Error::InvalidTree(format!("node {k} height {} outside [0,1]", node.height)));
            }
            for &c in &node.children {
                if c >= nodes.len() || nodes[c].parent != Some(k) {
                    return Err(Error::InvalidTree(format!("child {c} of node {k} does not point back")));
                }
            }
            if let Some(p) = node.parent {
                if p >= nodes.len() || !nodes[p].children.contains(&k) {
                    return Err(Error::InvalidTree(format!("parent {p} of node {k} does not list it")));
                }
            }
        }
        let roots: Vec<usize> = nodes.iter().filter(|n| n.parent.is_none()).map(|n| n.id).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!("expected one root, found {}", roots.len())));
        }
        let root = roots[0];

        let n = nodes.iter().filter(|x| x.children.is_empty()).count();
        if n > MAX_PLAYERS {
            return Err(Error::TooManyPlayers { n, cap: MAX_PLAYERS });
        }
        let mut leaf_of = vec![usize::MAX; n];
        for node in &nodes {
            match (node.children.is_empty(), node.leaf_player) {
                (true, Some(p)) => {
                    if p >= n || leaf_of[p] != usize::MAX {
                        return Err(Error::InvalidTree(format!("leaf player {p} invalid or repeated")));
                    }
                    if node.height != 0.0 {
                        return Err(Error::InvalidTree(format!("leaf {} has nonzero height", node.id)));
                    }
                    leaf_of[p] = node.id;
                }
                (true, None) => return Err(Error::InvalidTree(format!("leaf {} has no player", node.id))),
                (false, Some(_)) => {
                    return Err(Error::InvalidTree(format!("internal node {} carries a player", node.id)))
                }
                (false, None) => {
                    if node.children.len() < 2 && node.id != root {
                        return Err(Error::InvalidTree(format!("internal node {} has one child", node.id)));
                    }
                }
            }
        }
        if n > 1 && nodes[root].children.len() < 2 {
            return Err(Error::InvalidTree("root has fewer than two children".into()));
        }
        if n == 1 && nodes.len() != 1 {
            return Err(Error::InvalidTree("single-player tree must be a single leaf".into()));
        }

        separate_ties(&mut nodes);

        // reachability, ordering and spans
        let mut span = vec![0u64; nodes.len()];
        let mut seen = 0usize;
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                span[id] = match nodes[id].leaf_player {
                    Some(p) => 1 << p,
                    None => nodes[id].children.iter().fold(0, |acc, &c| acc | span[c]),
                };
                continue;
            }
            seen += 1;
            if seen > nodes.len() {
                return Err(Error::InvalidTree("cycle detected".into()));
            }
            stack.push((id, true));
            for &c in &nodes[id].children {
                if !(nodes[c].height < nodes[id].height) {
                    return Err(Error::InvalidTree(format!(
                        "child {c} height {} not below parent {id} height {}",
                        nodes[c].height, nodes[id].height
                    )));
                }
                stack.push((c, false));
            }
        }
        if seen != nodes.len() {
            return Err(Error::InvalidTree("nodes unreachable from the root".into()));
        }
        if n > 1 && !(nodes[root].height > 0.0) {
            return Err(Error::InvalidTree("root height must be positive".into()));
        }
        Ok(PartitionTree { nodes, root, n, leaf_of, span })
    }

    /// Builds a tree from a nested shape. Internal heights are `level/depth`
    /// where `level` is the longest path down to a leaf.
    pub fn from_nested(shape: &Nested) -> Result<Self> {
        fn build(shape: &Nested, parent: Option<usize>, nodes: &mut Vec<TreeNode>) -> usize {
            let id = nodes.len();
            nodes.push(TreeNode { id, height: 0.0, parent, children: vec![], leaf_player: None, raw_height: None });
            match shape {
                Nested::Leaf(p) => nodes[id].leaf_player = Some(*p),
                Nested::Node(kids) => {
                    let children: Vec<usize> = kids.iter().map(|k| build(k, Some(id), nodes)).collect();
                    nodes[id].children = children;
                }
            }
            id
        }
        fn level(id: usize, nodes: &[TreeNode], out: &mut [usize]) -> usize {
            let l = nodes[id].children.iter().map(|&c| level(c, nodes, out) + 1).max().unwrap_or(0);
            out[id] = l;
            l
        }
        let mut nodes = Vec::new();
        build(shape, None, &mut nodes);
        let mut levels = vec![0; nodes.len()];
        let depth = level(0, &nodes, &mut levels).max(1);
        for (node, l) in nodes.iter_mut().zip(levels) {
            node.height = l as f64 / depth as f64;
        }
        PartitionTree::from_nodes(nodes)
    }

    /// Tree of depth at most two whose root children are the blocks of `p`.
    pub fn two_level(p: &Partition) -> Result<Self> {
        if p.m() == 1 {
            return PartitionTree::from_nested(&Nested::Node(p.members(0).iter().map(|&i| Nested::Leaf(i)).collect()));
        }
        let kids = p
            .blocks()
            .iter()
            .map(|b| {
                if b.len() == 1 {
                    Nested::Leaf(b[0])
                } else {
                    Nested::Node(b.iter().map(|&i| Nested::Leaf(i)).collect())
                }
            })
            .collect();
        PartitionTree::from_nested(&Nested::Node(kids))
    }

    pub fn n_players(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn leaf_of(&self, player: usize) -> usize {
        self.leaf_of[player]
    }

    /// Players below `id`, as a bitmask.
    pub fn span(&self, id: usize) -> u64 {
        self.span[id]
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.nodes[id].children.is_empty()
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(t: &PartitionTree, id: usize) -> usize {
            t.nodes[id].children.iter().map(|&c| go(t, c) + 1).max().unwrap_or(0)
        }
        go(self, self.root)
    }

    /// Partition of the players given by the root's children.
    pub fn root_partition(&self) -> Partition {
        self.partition_of(&self.nodes[self.root].children)
    }

    fn partition_of(&self, ids: &[usize]) -> Partition {
        let masks: Vec<u64> = ids.iter().map(|&c| self.span[c]).collect();
        Partition::from_masks(self.n, masks).expect("node spans partition the players")
    }

    /// Nodes immediately below height `alpha`: leaves for `alpha = 0`,
    /// `{ν : h(ν) < α ≤ h(parent(ν))}` otherwise (the root's parent height
    /// counts as `+∞`). Ordered by smallest member player.
    pub fn cut_nodes(&self, alpha: f64) -> Result<Vec<usize>> {
        if !(alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!("cut height {alpha} must be nonnegative")));
        }
        let mut ids: Vec<usize> = if alpha == 0.0 {
            self.leaf_of.clone()
        } else {
            self.nodes
                .iter()
                .filter(|node| {
                    let above = node.parent.map_or(f64::INFINITY, |p| self.nodes[p].height);
                    node.height < alpha && alpha <= above
                })
                .map(|node| node.id)
                .collect()
        };
        ids.sort_by_key(|&id| self.span[id].trailing_zeros());
        Ok(ids)
    }

    pub fn cut(&self, alpha: f64) -> Result<Partition> {
        Ok(self.partition_of(&self.cut_nodes(alpha)?))
    }

    /// Distinct internal node heights in increasing order.
    pub fn levels(&self) -> Vec<f64> {
        let mut h: Vec<f64> = self.nodes.iter().filter(|n| !n.children.is_empty()).map(|n| n.height).collect();
        h.sort_by(f64::total_cmp);
        h.dedup();
        h
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TreeJson { nodes: self.nodes.clone() }).expect("tree serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let parsed: TreeJson = serde_json::from_value(value.clone())?;
        PartitionTree::from_nodes(parsed.nodes)
    }

    /// Newick string with branch lengths equal to height differences.
    /// Leaves are labelled by `names[player]`, or `x{player}`.
    pub fn to_newick(&self, names: Option<&[String]>) -> String {
        fn go(t: &PartitionTree, id: usize, names: Option<&[String]>, out: &mut String) {
            let node = &t.nodes[id];
            if let Some(p) = node.leaf_player {
                match names.and_then(|ns| ns.get(p)) {
                    Some(name) => out.push_str(&newick_label(name)),
                    None => write!(out, "x{p}").unwrap(),
                }
            } else {
                out.push('(');
                for (k, &c) in node.children.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    go(t, c, names, out);
                }
                out.push(')');
            }
            if let Some(p) = node.parent {
                write!(out, ":{}", t.nodes[p].height - node.height).unwrap();
            }
        }
        let mut out = String::new();
        go(self, self.root, names, &mut out);
        out.push(';');
        out
    }

    /// Graphviz digraph of the tree.
    pub fn to_dot(&self, names: Option<&[String]>) -> String {
        let mut out = String::from("digraph partition_tree {\n  node [shape=box];\n");
        for node in &self.nodes {
            let label = match node.leaf_player {
                Some(p) => names.and_then(|ns| ns.get(p)).cloned().unwrap_or_else(|| format!("x{p}")),
                None => format!("h={:.4}", node.height),
            };
            writeln!(out, "  n{} [label=\"{}\"];", node.id, label.replace('"', "\\\"")).unwrap();
        }
        for node in &self.nodes {
            for &c in &node.children {
                writeln!(out, "  n{} -> n{};", node.id, c).unwrap();
            }
        }
        out.push_str("}\n");
        out
    }
}

fn newick_label(name: &str) -> String {
    if name.chars().any(|c| "(),:;[] '".contains(c)) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}

fn separate_ties(nodes: &mut [TreeNode]) {
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for k in 0..nodes.len() {
        if nodes[k].children.is_empty() {
            continue;
        }
        let key = nodes[k].height.to_bits();
        let count = seen.entry(key).or_insert(0);
        if *count > 0 {
            let old = nodes[k].height;
            nodes[k].height = (old + *count as f64 * TIE_EPSILON).min(1.0);
            log::warn!("internal node {k} shares height {old}; moved to {}", nodes[k].height);
        }
        *count += 1;
    }
}

/// Values `ĝ^{(ν)}` for every node of a tree, indexed by node id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecursiveValues {
    pub per_node: Vec<f64>,
    /// Leaf values indexed by player.
    pub per_player: Vec<f64>,
}

struct Recursion<'a> {
    tree: &'a PartitionTree,
    v: Game,
    h1: &'a dyn GameValue,
    kind: Intermediate,
    /// child index within parent, per node
    position: Vec<usize>,
    unions: Vec<Vec<u64>>,
    memo: RefCell<Vec<HashMap<u64, f64>>>,
}

impl<'a> Recursion<'a> {
    fn new(tree: &'a PartitionTree, v: &Game, h1: &'a dyn GameValue, kind: Intermediate) -> Result<Self> {
        let mut position = vec![0; tree.nodes.len()];
        let mut unions = vec![Vec::new(); tree.nodes.len()];
        for node in &tree.nodes {
            if node.children.is_empty() {
                continue;
            }
            if node.children.len() > DENSE_CAP {
                return Err(Error::TooManyPlayers { n: node.children.len(), cap: DENSE_CAP });
            }
            for (k, &c) in node.children.iter().enumerate() {
                position[c] = k;
            }
            let masks: Vec<u64> = node.children.iter().map(|&c| tree.span[c]).collect();
            let mut table = vec![0u64; 1 << masks.len()];
            for a in 1..table.len() {
                table[a] = table[a & (a - 1)] | masks[a.trailing_zeros() as usize];
            }
            unions[node.id] = table;
        }
        Ok(Recursion {
            tree,
            v: v.centered(),
            h1,
            kind,
            position,
            unions,
            memo: RefCell::new(vec![HashMap::new(); tree.nodes.len()]),
        })
    }

    /// `v^{(node)}(x)` for `x ⊆ S(node)`, a global player mask.
    fn eval(&self, node: usize, x: u64) -> f64 {
        let parent = match self.tree.nodes[node].parent {
            None => return self.v.eval(x),
            Some(p) => p,
        };
        if x == 0 && self.kind == Intermediate::TshIntermediate {
            return 0.0;
        }
        if let Some(&hit) = self.memo.borrow()[node].get(&x) {
            return hit;
        }
        let unions = &self.unions[parent];
        let j = self.position[node];
        let block = self.tree.span[node];
        let hat = intermediate_game(self.kind, |s| self.eval(parent, s), unions, block, j, x);
        let out = self.h1.value_of(&hat, j);
        self.memo.borrow_mut()[node].insert(x, out);
        out
    }
}

/// Recursive values `ĝ^{(ν)}[N, v, T]` for every node (centered game: the
/// root gets `v(N) − v(∅)`).
pub fn recursive_values(tree: &PartitionTree, v: &Game, spec: &CoalitionalValueSpec) -> Result<RecursiveValues> {
    if v.n() != tree.n {
        return Err(Error::InvalidArgument(format!("tree has {} leaves, game has {} players", tree.n, v.n())));
    }
    let (h1, h2, kind) = spec.components();
    let rec = Recursion::new(tree, v, h1.as_ref(), kind)?;
    let mut per_node = vec![0.0; tree.nodes.len()];
    per_node[tree.root] = rec.v.eval(tree.span[tree.root]);
    for node in &tree.nodes {
        let parent = match node.parent {
            None => continue,
            Some(p) => &tree.nodes[p],
        };
        let all_leaves = parent.children.iter().all(|&c| tree.is_leaf(c));
        let first_branch = parent.parent.is_none() || !all_leaves;
        if first_branch {
            per_node[node.id] = rec.eval(node.id, tree.span[node.id]);
        }
    }
    // second branch: leaf children of non-root parents whose children are all leaves
    for parent in &tree.nodes {
        if parent.parent.is_none() || parent.children.is_empty() || !parent.children.iter().all(|&c| tree.is_leaf(c)) {
            continue;
        }
        let players = members(tree.span[parent.id]);
        if players.len() > DENSE_CAP {
            return Err(Error::TooManyPlayers { n: players.len(), cap: DENSE_CAP });
        }
        let local = Game::from_fn(players.len(), |t| rec.eval(parent.id, scatter(t, &players)))?;
        let inner = h2.value(&local);
        for &c in &parent.children {
            let p = tree.nodes[c].leaf_player.expect("leaf");
            let k = players.iter().position(|&q| q == p).expect("leaf inside parent span");
            per_node[c] = inner[k];
        }
    }
    let per_player = (0..tree.n).map(|i| per_node[tree.leaf_of[i]]).collect();
    Ok(RecursiveValues { per_node, per_player })
}

/// Group values at a cut of the tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeGroupExplanation {
    pub alpha: f64,
    pub partition: Partition,
    pub nodes: Vec<usize>,
    /// Sums of leaf values within each block.
    pub leaf_sums: Vec<f64>,
    /// Recursive value of the node spanning each block.
    pub node_values: Vec<f64>,
}

pub fn tree_group_explanations(
    tree: &PartitionTree,
    v: &Game,
    spec: &CoalitionalValueSpec,
    alpha: f64,
) -> Result<TreeGroupExplanation> {
    let values = recursive_values(tree, v, spec)?;
    group_from_values(tree, &values, alpha)
}

pub(crate) fn group_from_values(tree: &PartitionTree, values: &RecursiveValues, alpha: f64) -> Result<TreeGroupExplanation> {
    let nodes = tree.cut_nodes(alpha)?;
    let partition = tree.partition_of(&nodes);
    let leaf_sums = (0..partition.m())
        .map(|j| partition.members(j).iter().map(|&i| values.per_player[i]).sum())
        .collect();
    let node_values = nodes.iter().map(|&id| values.per_node[id]).collect();
    Ok(TreeGroupExplanation { alpha, partition, nodes, leaf_sums, node_values })
}
