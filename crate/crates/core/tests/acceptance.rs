//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! with the measured quantity; run with `--nocapture` to see them.

use std::time::Instant;

use group_explain::axioms::{axiom_suite, Axiom};
use group_explain::cluster::{average_linkage_cluster, dissimilarity_matrix};
use group_explain::coalition::two_step_evaluate;
use group_explain::data::explain::{ExplainConfig, GameSource, Structure, UnitKind, ValueChoice};
use group_explain::data::games::{empirical_marginal_game, monte_carlo_conditional_game};
use group_explain::data::stability::energy_entries;
use group_explain::data::{explain, stability_report, Dataset, LatentLinear, ModelOracle, SyntheticFamily};
use group_explain::mic::{mic_e, MicConfig};
use group_explain::oracles::{
    banzhaf_by_enumeration, crosscheck, mic_brute_force_budget, random_game, shapley_by_permutations,
};
use group_explain::tree::Nested;
use group_explain::values::{banzhaf, shapley};
use group_explain::{Banzhaf, CoalitionalKind, CoalitionalValueSpec, Game, Partition, PartitionTree, Shapley};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, what: &str, ok: bool, detail: String) {
    println!("[{id:>2}] {} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "[{id}] {what}: {detail}");
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn random_partition(n: usize, rng: &mut impl Rng) -> Partition {
    let m = rng.random_range(1..=n);
    let mut labels: Vec<usize> = (0..n).map(|i| if i < m { i } else { rng.random_range(0..m) }).collect();
    labels.shuffle(rng);
    let blocks = (0..m).map(|j| (0..n).filter(|&i| labels[i] == j).collect()).collect();
    Partition::new(n, blocks).unwrap()
}

fn quotient(v: &Game, p: &Partition) -> Game {
    let m = p.m();
    Game::from_fn(m, |r| {
        let mut mask = 0u64;
        for j in 0..m {
            if r >> j & 1 == 1 {
                for &i in p.members(j) {
                    mask |= 1 << i;
                }
            }
        }
        v.eval(mask)
    })
    .unwrap()
}

fn block_sums(x: &[f64], p: &Partition) -> Vec<f64> {
    (0..p.m()).map(|j| p.members(j).iter().map(|&i| x[i]).sum()).collect()
}

#[test]
fn c01_shapley_matches_permutation_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(2..=8);
        let v = random_game(n, &mut rng);
        worst = worst.max(max_abs_diff(&shapley(&v), &shapley_by_permutations(&v).unwrap()));
    }
    let secs = start.elapsed().as_secs_f64();
    report(1, "Shapley vs permutation oracle", worst <= 1e-10 && secs < 10.0, format!("max deviation {worst:.2e} in {secs:.2}s"));
}

#[test]
fn c02_two_step_equivalences() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (k, kind) in CoalitionalKind::ALL.into_iter().enumerate() {
        let r = crosscheck(&kind.into(), 200, 200 + k as u64).unwrap();
        lines.push(format!("{} {:.2e} over {} comparisons", r.spec, r.max_abs_deviation, r.comparisons));
        worst = worst.max(r.max_abs_deviation);
    }
    let secs = start.elapsed().as_secs_f64();
    report(2, "direct vs two-step vs reference", worst <= 1e-10 && secs < 60.0, format!("{}; {secs:.1}s", lines.join(", ")));
}

#[test]
fn c03_collapse_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let owen = CoalitionalValueSpec::owen();
    let bzow = CoalitionalValueSpec::banzhaf_owen();
    let tsh = CoalitionalValueSpec::two_step_shapley();
    let mut worst = [0.0f64; 4];
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let v = random_game(n, &mut rng);
        let (s, b) = (shapley_by_permutations(&v).unwrap(), banzhaf_by_enumeration(&v).unwrap());
        let single = Partition::singletons(n);
        worst[0] = worst[0].max(max_abs_diff(&owen.evaluate(&v, &single).unwrap(), &s));
        worst[1] = worst[1].max(max_abs_diff(&bzow.evaluate(&v, &single).unwrap(), &b));
        worst[2] = worst[2].max(max_abs_diff(&owen.evaluate(&v, &Partition::grand(n)).unwrap(), &s));
        worst[3] = worst[3].max(max_abs_diff(&tsh.evaluate(&v, &single).unwrap(), &s));
    }
    let ok = worst.iter().all(|&w| w <= 1e-12);
    report(
        3,
        "collapse identities",
        ok,
        format!("Ow(singletons) {:.1e}, BzOw(singletons) {:.1e}, Ow(grand) {:.1e}, TSh(singletons) {:.1e}", worst[0], worst[1], worst[2], worst[3]),
    );
}

#[test]
fn c04_quotient_game_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let specs: [(CoalitionalValueSpec, bool); 3] = [
        (CoalitionalValueSpec::owen(), true),
        (CoalitionalValueSpec::two_step_shapley(), true),
        (CoalitionalValueSpec::symmetric_banzhaf(), false),
    ];
    let mut worst = [0.0f64; 3];
    let mut bzow_witness: Option<(usize, Vec<Vec<usize>>, f64)> = None;
    let bzow = CoalitionalValueSpec::banzhaf_owen();
    for trial in 0..500 {
        let n = rng.random_range(2..=8);
        let v = random_game(n, &mut rng);
        let p = random_partition(n, &mut rng);
        let q = quotient(&v, &p);
        let (qs, qb) = (shapley_by_permutations(&q).unwrap(), banzhaf_by_enumeration(&q).unwrap());
        for (k, (spec, uses_shapley)) in specs.iter().enumerate() {
            let sums = block_sums(&spec.evaluate(&v, &p).unwrap(), &p);
            worst[k] = worst[k].max(max_abs_diff(&sums, if *uses_shapley { &qs } else { &qb }));
        }
        if bzow_witness.is_none() {
            let d = max_abs_diff(&block_sums(&bzow.evaluate(&v, &p).unwrap(), &p), &qb);
            if d > 1e-10 {
                bzow_witness = Some((trial, p.to_lists(), d));
            }
        }
    }
    let ok = worst.iter().all(|&w| w <= 1e-10) && bzow_witness.is_some();
    report(
        4,
        "quotient game property",
        ok,
        format!(
            "Ow {:.1e}, TSh {:.1e}, Bz-sym {:.1e}; Banzhaf-Owen violation {:?}",
            worst[0], worst[1], worst[2], bzow_witness
        ),
    );
}

fn random_shape(players: &[usize], depth_left: usize, rng: &mut impl Rng) -> Nested {
    if players.len() == 1 {
        return Nested::Leaf(players[0]);
    }
    if depth_left == 1 {
        return Nested::Node(players.iter().map(|&p| Nested::Leaf(p)).collect());
    }
    let mut shuffled = players.to_vec();
    shuffled.shuffle(rng);
    let parts = rng.random_range(2..=players.len().min(4));
    let mut cuts: Vec<usize> = (1..players.len()).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts[..parts - 1].to_vec();
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(players.len());
    Nested::Node(cuts.windows(2).map(|w| random_shape(&shuffled[w[0]..w[1]], depth_left - 1, rng)).collect())
}

#[test]
fn c05_additive_flow_on_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let specs = [CoalitionalValueSpec::owen(), CoalitionalValueSpec::two_step_shapley()];
    let (mut flow, mut flat) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(2..=10);
        let v = random_game(n, &mut rng);
        let players: Vec<usize> = (0..n).collect();
        let tree = PartitionTree::from_nested(&random_shape(&players, rng.random_range(1..=4), &mut rng)).unwrap();
        assert!(tree.depth() <= 4);
        let p = random_partition(n, &mut rng);
        let two = PartitionTree::two_level(&p).unwrap();
        for spec in &specs {
            let r = group_explain::tree::recursive_values(&tree, &v, spec).unwrap();
            flow = flow.max((r.per_node[tree.root()] - (v.grand_value() - v.empty_value())).abs());
            for node in tree.nodes().iter().filter(|n| !n.children.is_empty()) {
                let sum: f64 = node.children.iter().map(|&c| r.per_node[c]).sum();
                flow = flow.max((r.per_node[node.id] - sum).abs());
            }
            let r2 = group_explain::tree::recursive_values(&two, &v, spec).unwrap();
            flat = flat.max(max_abs_diff(&r2.per_player, &spec.evaluate(&v, &p).unwrap()));
        }
    }
    report(5, "additive flow", flow <= 1e-10 && flat <= 1e-12, format!("flow {flow:.1e}, depth-2 vs flat {flat:.1e}"));
}

#[test]
fn c06_hand_verified_fixtures() {
    let majority = Game::from_fn(3, |s| if s.count_ones() >= 2 { 1.0 } else { 0.0 }).unwrap();
    let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
    let mut worst = 0.0f64;
    for spec in [CoalitionalValueSpec::owen(), CoalitionalValueSpec::two_step_shapley(), CoalitionalValueSpec::symmetric_banzhaf()] {
        worst = worst.max(max_abs_diff(&spec.evaluate(&majority, &p).unwrap(), &[0.5, 0.5, 0.0]));
        worst = worst.max(max_abs_diff(&two_step_evaluate(&spec, &majority, &p).unwrap(), &[0.5, 0.5, 0.0]));
    }
    let model = ModelOracle::parse("poly:x1*x2", 2).unwrap();
    let bg = Dataset::with_default_names(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let g = empirical_marginal_game(&[5.0, 6.0], &model, &bg).unwrap();
    worst = worst.max(max_abs_diff(g.dense_values().unwrap(), &[7.0, 15.0, 12.0, 30.0]));
    worst = worst.max(max_abs_diff(&shapley(&g), &[13.0, 10.0]));
    let data = Dataset::with_default_names(vec![vec![5.0, 6.0]]).unwrap();
    let cfg = ExplainConfig::new(ValueChoice::Single(std::sync::Arc::new(Shapley)), Structure::Features, GameSource::Marginal);
    let e = explain(&data, Some(&bg), &model, &cfg).unwrap();
    worst = worst.max(max_abs_diff(&e.values[0], &[13.0, 10.0]));
    report(6, "hand-verified fixtures", worst <= 1e-12, format!("max deviation {worst:.1e}"));
}

#[test]
fn c07_marginal_vs_conditional_groups() {
    let rho = 0.8;
    let family = LatentLinear::rho_pair(rho, 0.6).unwrap();
    let synthetic = SyntheticFamily::LatentLinear(family.clone());
    let data = synthetic.generate(1000, 707).unwrap().data;
    let model = ModelOracle::parse("poly:x2*x3", 3).unwrap();
    let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
    let shapley_value = ValueChoice::Single(std::sync::Arc::new(Shapley));
    let me = explain(
        &data,
        None,
        &model,
        &ExplainConfig::new(shapley_value.clone(), Structure::Partition(p.clone()), GameSource::PopulationMarginal(synthetic.clone())),
    )
    .unwrap();
    let ce = explain(
        &data,
        None,
        &model,
        &ExplainConfig::new(shapley_value, Structure::Partition(p.clone()), GameSource::Conditional(synthetic.clone())),
    )
    .unwrap();
    let groups = me.columns_of(UnitKind::Group);
    assert_eq!(groups, ce.columns_of(UnitKind::Group));
    let mut closed = 0.0f64;
    for (r, x) in data.rows().iter().enumerate() {
        let half = 0.5 * x[1] * x[2];
        let shift = rho * x[0] * x[2] / 6.0;
        closed = closed.max((me.values[r][groups[0]] - half).abs()).max((me.values[r][groups[1]] - half).abs());
        closed = closed.max((ce.values[r][groups[0]] - (half - shift)).abs()).max((ce.values[r][groups[1]] - (half + shift)).abs());
    }

    // Monte Carlo conditional games: the group sums are fixed linear
    // functionals of the coalition values, so their standard errors follow
    // from the per-coalition ones. Every row reuses the same draws.
    let n = 3;
    let coeffs: Vec<Vec<f64>> = (0..1u64 << n)
        .map(|s| {
            let basis = Game::from_fn(n, |t| if t == s { 1.0 } else { 0.0 }).unwrap();
            let phi = shapley_by_permutations(&basis).unwrap();
            vec![phi[0] + phi[1], phi[2]]
        })
        .collect();
    let mut worst_z = 0.0f64;
    for (r, x) in data.rows().iter().enumerate() {
        let (g, se) = monte_carlo_conditional_game(x, &family, &model, 4000, 7070).unwrap();
        for b in 0..2 {
            let est: f64 = (0..1usize << n).map(|s| coeffs[s][b] * g.eval(s as u64)).sum();
            let sd = (0..1usize << n).map(|s| (coeffs[s][b] * se[s]).powi(2)).sum::<f64>().sqrt();
            let err = (est - ce.values[r][groups[b]]).abs();
            if sd > 0.0 {
                worst_z = worst_z.max(err / sd);
            } else {
                worst_z = worst_z.max(if err > 1e-12 { f64::INFINITY } else { 0.0 });
            }
        }
    }
    report(
        7,
        "marginal vs conditional group explanations",
        closed <= 1e-9 && worst_z <= 3.0,
        format!("closed-form deviation {closed:.1e}; Monte Carlo max |error|/SE {worst_z:.2}"),
    );
}

#[test]
fn c08_unification_under_independence() {
    let family = SyntheticFamily::LatentLinear(LatentLinear::independent_blocks(&[2, 2], 0.5).unwrap());
    let background = family.generate(10_000, 808).unwrap().data;
    let data = family.generate(50, 809).unwrap().data;
    let model = ModelOracle::parse("poly:x1*x2 + x3*x4 + 2*x1*x3 + x2^2 - x4", 4).unwrap();
    let p = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
    let value = ValueChoice::Coalitional(CoalitionalValueSpec::owen());
    let mut me_cfg = ExplainConfig::new(value.clone(), Structure::Partition(p.clone()), GameSource::Marginal);
    me_cfg.std_errors = true;
    let me = explain(&data, Some(&background), &model, &me_cfg).unwrap();
    let ce = explain(&data, None, &model, &ExplainConfig::new(value, Structure::Partition(p), GameSource::Conditional(family))).unwrap();
    let cols = me.columns_of(UnitKind::Quotient);
    let (mut worst_z, mut worst_abs) = (0.0f64, 0.0f64);
    for r in 0..data.n_samples() {
        for &c in &cols {
            let se = me.std_errors[c].as_ref().expect("standard errors requested")[r];
            let err = (me.values[r][c] - ce.values[r][c]).abs();
            worst_abs = worst_abs.max(err);
            worst_z = worst_z.max(err / se);
        }
    }
    report(
        8,
        "marginal and conditional quotient explanations agree under independence",
        worst_z <= 3.0,
        format!("max |ME - CE| {worst_abs:.3e}, max |ME - CE|/SE {worst_z:.2}"),
    );
}

fn witness_explanations(p: f64, model: &ModelOracle) -> (Dataset, group_explain::data::ExplanationMatrix) {
    let support = SyntheticFamily::rectangle_witness(p).unwrap().support().unwrap();
    let cfg = ExplainConfig::new(ValueChoice::Single(std::sync::Arc::new(Shapley)), Structure::Features, GameSource::Marginal);
    let e = explain(&support, Some(&support), model, &cfg).unwrap();
    (support, e)
}

#[test]
fn c09_instability_witness() {
    let rect = ModelOracle::parse("rect:0.5,1.5,-0.5,0.5", 2).unwrap();
    let zero = ModelOracle::parse("linear:0,0", 2).unwrap();
    let (support, e) = witness_explanations(0.0, &rect);
    let model_norm = support.l2_norm(&e.predictions);
    let feature_norms: Vec<f64> = e.columns_of(UnitKind::Feature).iter().map(|&c| support.l2_norm(&e.column(c))).collect();
    let exact = model_norm == 0.0 && feature_norms.iter().all(|&x| (x - 0.25).abs() <= 1e-15);

    let mut ratios = Vec::new();
    for p in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
        let (support, a) = witness_explanations(p, &rect);
        let (_, b) = witness_explanations(p, &zero);
        let s = stability_report(&a, &b, &support).unwrap();
        let ratio = s.units.iter().filter(|u| u.kind == UnitKind::Feature).filter_map(|u| u.ratio).fold(0.0, f64::max);
        ratios.push(ratio);
    }
    let growing = ratios.windows(2).all(|w| w[1] > w[0]) && *ratios.last().unwrap() > 1e3;
    report(
        9,
        "instability witness",
        exact && growing,
        format!("||f|| = {model_norm}, feature norms {feature_norms:?}, blow-up ratios {:?}", ratios.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>()),
    );
}

fn random_latent_linear(rng: &mut impl Rng) -> LatentLinear {
    let p = rng.random_range(2..=4);
    let k = rng.random_range(1..=2);
    let means = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loadings = (0..p).map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let noise = (0..p).map(|_| rng.random_range(0.2..1.0)).collect();
    LatentLinear::new(means, loadings, noise).unwrap()
}

fn random_polynomial(p: usize, rng: &mut impl Rng) -> String {
    let mut out = String::new();
    for k in 0..rng.random_range(1..=4) {
        let c: f64 = rng.random_range(-2.0..2.0);
        let sign = if c < 0.0 { "-" } else { "+" };
        if k > 0 {
            out.push_str(&format!(" {sign} "));
        } else if c < 0.0 {
            out.push('-');
        }
        out.push_str(&format!("{:.3}", c.abs()));
        for _ in 0..rng.random_range(1..=3) {
            out.push_str(&format!("*x{}", rng.random_range(1..=p)));
        }
    }
    out
}

/// Five-point Gauss–Hermite rule for `N(0, 1)`: exact for polynomials of
/// degree up to nine.
fn hermite_rule() -> Vec<(f64, f64)> {
    let he4 = |x: f64| x.powi(4) - 6.0 * x * x + 3.0;
    let mut rule = vec![(0.0, 120.0 / (25.0 * he4(0.0).powi(2)))];
    for r in [(5.0 - 10f64.sqrt()).sqrt(), (5.0 + 10f64.sqrt()).sqrt()] {
        let w = 120.0 / (25.0 * he4(r).powi(2));
        rule.push((r, w));
        rule.push((-r, w));
    }
    rule
}

/// Tensor Gauss–Hermite nodes of the family's Gaussian law as a weighted
/// dataset, so that weighted means of polynomials of degree ≤ 9 per
/// coordinate equal their population expectations.
fn gaussian_quadrature(l: &LatentLinear) -> Dataset {
    let p = l.n_features();
    let law = l.marginal(0);
    let (mean, root) = (law.mean(&vec![0.0; p]), law.root());
    let rule = hermite_rule();
    let (mut rows, mut weights) = (Vec::new(), Vec::new());
    for idx in 0..rule.len().pow(p as u32) {
        let (mut k, mut w) = (idx, 1.0);
        let mut z = vec![0.0; p];
        for zi in z.iter_mut() {
            let (node, weight) = rule[k % rule.len()];
            *zi = node;
            w *= weight;
            k /= rule.len();
        }
        rows.push((0..p).map(|i| mean[i] + (0..p).map(|j| root[(i, j)] * z[j]).sum::<f64>()).collect());
        weights.push(w);
    }
    Dataset::with_default_names(rows).unwrap().with_weights(weights).unwrap()
}

#[test]
fn c10_energy_identities() {
    let family = SyntheticFamily::rademacher(2).unwrap();
    let support = family.support().unwrap();
    let model = ModelOracle::parse("poly:x1*x2", 2).unwrap();
    let cfg = ExplainConfig::new(ValueChoice::Single(std::sync::Arc::new(Shapley)), Structure::Features, GameSource::Marginal);
    let e = explain(&support, Some(&support), &model, &cfg).unwrap();
    let entry = energy_entries(&e, &support, "product")[0].clone();
    let product_ratio = entry.ratio.unwrap();

    // Conditional explanations of a polynomial under a Gaussian law are
    // polynomials of the same degree, so the quadrature dataset gives the
    // population energies exactly.
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst_ratio = 0.0f64;
    for _ in 0..100 {
        let l = random_latent_linear(&mut rng);
        let p = l.n_features();
        let spec = random_polynomial(p, &mut rng);
        let model = ModelOracle::parse(&format!("poly:{spec}"), p).unwrap();
        let data = gaussian_quadrature(&l);
        let fam = SyntheticFamily::LatentLinear(l);
        let cfg = ExplainConfig::new(ValueChoice::Single(std::sync::Arc::new(Shapley)), Structure::Features, GameSource::Conditional(fam));
        let e = explain(&data, None, &model, &cfg).unwrap();
        let quadrature_mean = data.mean_of(&e.predictions);
        assert!((quadrature_mean - e.baselines[0]).abs() <= 1e-9 * (1.0 + e.baselines[0].abs()), "{spec}");
        let entry = energy_entries(&e, &data, "ce")[0].clone();
        if let Some(r) = entry.ratio {
            worst_ratio = worst_ratio.max(r);
        }
    }
    report(
        10,
        "energy identities",
        (product_ratio - 0.5).abs() <= 1e-12 && worst_ratio <= 1.0 + 1e-9,
        format!("product model ratio {product_ratio}, largest conditional energy ratio {worst_ratio:.4}"),
    );
}

#[test]
fn c11_mic_clustering_and_oracle() {
    let cfg = MicConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut worst = 0.0f64;
    for trial in 0..300 {
        let n = rng.random_range(8..=30);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = match trial % 4 {
            0 => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            1 => x.iter().map(|v| v * v + 0.1 * rng.random_range(-1.0..1.0)).collect(),
            2 => x.iter().map(|v| (3.0 * v).sin()).collect(),
            // heavy ties on both axes
            _ => (0..n).map(|_| rng.random_range(0..3) as f64).collect(),
        };
        let x = if trial % 4 == 3 { x.iter().map(|v| (v * 2.0).round()).collect() } else { x };
        let fast = mic_e(&x, &y, &cfg).unwrap();
        let exact = mic_brute_force_budget(&x, &y, cfg.budget(n)).unwrap();
        worst = worst.max((fast - exact).abs());
    }

    let expected = vec![vec![0, 1, 2, 3], vec![4], vec![5, 6]];
    let (mut recovered, mut slowest) = (0, 0.0f64);
    for seed in 0..100u64 {
        let data = SyntheticFamily::MicTest.generate(10_000, 11_000 + seed).unwrap().data;
        let start = Instant::now();
        let d = dissimilarity_matrix(&data.columns(), data.names(), &cfg).unwrap();
        let tree = average_linkage_cluster(&d).unwrap();
        let p = tree.cut(0.7).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        if p.to_lists() == expected {
            recovered += 1;
        }
    }
    report(
        11,
        "MIC clustering",
        worst <= 1e-9 && recovered >= 95 && slowest < 30.0,
        format!("MIC_e vs exhaustive {worst:.1e}; recovered {recovered}/100; slowest run {slowest:.1}s"),
    );
}

#[test]
fn c12_grouped_stability() {
    let start = Instant::now();
    let run = || {
        let family = SyntheticFamily::LatentLinear(LatentLinear::shared_latent(0.05).unwrap());
        let data = family.generate(1000, 1212).unwrap().data;
        let background = family.generate(1000, 1213).unwrap().data;
        let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let cfg = ExplainConfig::new(
            ValueChoice::Coalitional(CoalitionalValueSpec::owen()),
            Structure::Partition(p),
            GameSource::Marginal,
        );
        // f_a = (1+a) x1 + (1-a) x2 + x3 for a = 0 and a = 1
        let f0 = ModelOracle::parse("linear:1,1,1", 3).unwrap();
        let f1 = ModelOracle::parse("linear:2,0,1", 3).unwrap();
        let a = explain(&data, Some(&background), &f0, &cfg).unwrap();
        let b = explain(&data, Some(&background), &f1, &cfg).unwrap();
        stability_report(&a, &b, &data).unwrap()
    };
    let s = run();
    let deterministic = s == run();
    let m = s.model_difference_norm;
    let features: Vec<f64> = ["x1", "x2"].iter().map(|l| s.unit(UnitKind::Feature, l).unwrap().difference_norm).collect();
    let quotients: Vec<f64> = s.units.iter().filter(|u| u.kind == UnitKind::Quotient).map(|u| u.difference_norm).collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = deterministic && features.iter().all(|&d| d > m) && quotients.iter().all(|&d| d <= m * 1.1) && secs < 30.0;
    report(
        12,
        "grouped explanations are stable",
        ok,
        format!("||f0 - f1|| {m:.4}, feature differences {features:.4?}, quotient differences {quotients:.4?}, {secs:.2}s"),
    );
}

#[test]
fn c13_axiom_suite() {
    let shapley_axioms = [Axiom::Lp, Axiom::Ep, Axiom::Sp, Axiom::Npp, Axiom::Cdp, Axiom::Sep];
    let s = axiom_suite(&Shapley, &shapley_axioms, 1000, 1313);
    let shapley_ok = s.iter().all(|r| r.passed());
    let b = axiom_suite(&Banzhaf, &[Axiom::Tpp, Axiom::Ep], 1000, 1314);
    let banzhaf_ok = b[0].passed() && !b[1].passed() && b[1].witness.is_some();
    // the witness is a genuine violation
    let witness_ok = b[1].witness.as_ref().is_some_and(|w| {
        let g = Game::from_json(&w.game).unwrap();
        (banzhaf(&g).iter().sum::<f64>() - (g.grand_value() - g.empty_value())).abs() > 1e-9
    });
    report(
        13,
        "axiom suite",
        shapley_ok && banzhaf_ok && witness_ok,
        format!(
            "Shapley failures {:?}; Banzhaf TPP failures {}, EP failures {}/{}",
            s.iter().map(|r| (r.axiom.label(), r.failures)).collect::<Vec<_>>(),
            b[0].failures,
            b[1].failures,
            b[1].trials
        ),
    );
}
