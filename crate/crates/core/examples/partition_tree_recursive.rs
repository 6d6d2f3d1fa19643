//! Recursive Owen values on a three-level partition tree, and group values
//! at several cut heights.

use group_explain::tree::{recursive_values, tree_group_explanations, Nested};
use group_explain::{CoalitionalValueSpec, Game, PartitionTree};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    use Nested::{Leaf, Node};
    let shape = Node(vec![Node(vec![Node(vec![Leaf(0), Leaf(1)]), Leaf(2)]), Node(vec![Leaf(3), Leaf(4)])]);
    let tree = PartitionTree::from_nested(&shape)?;
    let names: Vec<String> = (1..=5).map(|i| format!("x{i}")).collect();
    println!("tree: {}", tree.to_newick(Some(&names)));

    // f(x) = x1 x2 + x3 + x4 x5 explained at x = 1 against a zero baseline.
    let v = Game::from_fn(5, |s| {
        let on = |i: usize| if s >> i & 1 == 1 { 1.0 } else { 0.0 };
        on(0) * on(1) + on(2) + on(3) * on(4)
    })?;
    let spec = CoalitionalValueSpec::owen();
    let values = recursive_values(&tree, &v, &spec)?;
    println!("leaf values: {:?}", values.per_player);
    let mut last = None;
    for alpha in tree.levels() {
        let g = tree_group_explanations(&tree, &v, &spec, alpha)?;
        let blocks = g.partition.to_lists();
        if last.as_ref() != Some(&blocks) {
            println!("alpha {alpha:.3}: blocks {blocks:?} node values {:?}", g.node_values);
            last = Some(blocks);
        }
    }
    Ok(())
}
