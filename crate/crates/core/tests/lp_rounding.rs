use std::collections::BTreeMap;

use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sndp::cost::Rational;
use sndp::gen::{random_instance, CostStyle, InstanceParams};
use sndp::graph::{parse_instance, Instance};
use sndp::lp::{
    build_tree_lp, round_fractional, sample_valid_tree, solve_tree_lp, trial_count, Cmp, FractionalTree, LpEngine, RoundError,
    RoundingOptions,
};
use sndp::oracle::{brute_force_optimum, DEFAULT_BUDGET};
use sndp::tree_instance::{build_tree_instance, Origin, TreeInstance, TreeLimits, ValidTree};
use sndp::treedec::decompose;

const GROUPS: &str = "\
p rgsndp 6 7 2 2 edge edge
e 0 1 1
e 1 2 2
e 0 3 1
e 3 4 1
e 4 5 1
e 1 4 1
e 2 5 1
r 0
g 1 2 5
g 2 4
";

fn tree_for(inst: &Instance) -> TreeInstance {
    let td = decompose(&inst.graph, None).unwrap().td;
    build_tree_instance(inst, &td, TreeLimits::default()).unwrap()
}

fn groups_fixture() -> TreeInstance {
    tree_for(&parse_instance(GROUPS).unwrap())
}

fn indicator(ti: &TreeInstance, trees: &[&ValidTree]) -> Vec<f64> {
    let mut y = vec![0.0; ti.conns.len()];
    for vt in trees {
        for &c in &vt.conns {
            y[c as usize] += 1.0 / trees.len() as f64;
        }
    }
    y
}

fn small_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = InstanceParams { n: 5, width: 2, keep: 0.7, groups: 2, group_size: 2, max_demand: 2, costs: CostStyle::Integer(3), ..Default::default() };
    random_instance(&p, &mut rng).0
}

#[test]
fn dual_objective_equals_primal() {
    let ti = groups_fixture();
    let lp = build_tree_lp(&ti);
    let primal = lp.solve(LpEngine::Exact).unwrap().exact.unwrap().0;
    let dual = lp.dual().solve(LpEngine::Exact).unwrap().exact.unwrap().0;
    assert_eq!(primal, dual);
    assert_eq!(primal, BigRational::from_integer(5.into()));
    let float = lp.solve(LpEngine::Float).unwrap().objective;
    assert!((float - 5.0).abs() < 1e-7);
}

#[test]
fn covering_trees_satisfy_every_row() {
    let ti = groups_fixture();
    let lp = build_tree_lp(&ti);
    let (cost, best) = ti.min_cover().unwrap();
    let y = indicator(&ti, &[&best]);
    for row in &lp.rows {
        let lhs: f64 = row.coeffs.iter().map(|&(j, c)| y[j] * *c.numer() as f64 / *c.denom() as f64).sum();
        let rhs = *row.rhs.numer() as f64;
        let ok = match row.cmp {
            Cmp::Eq => (lhs - rhs).abs() < 1e-9,
            Cmp::Ge => lhs >= rhs - 1e-9,
            Cmp::Le => lhs <= rhs + 1e-9,
        };
        assert!(ok, "row {} violated: {lhs} vs {rhs}", row.name);
    }
    let point = FractionalTree::from_masses(&ti, y);
    assert!((point.objective - *cost.numer() as f64).abs() < 1e-9);
}

#[test]
fn integral_point_is_sampled_exactly() {
    let ti = groups_fixture();
    let (_, best) = ti.min_cover().unwrap();
    let point = FractionalTree::from_masses(&ti, indicator(&ti, &[&best]));
    for s in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        assert_eq!(sample_valid_tree(&ti, &point, &mut rng).unwrap(), best);
    }
}

#[test]
fn half_and_half_point_splits_evenly() {
    let ti = groups_fixture();
    let mut trees = Vec::new();
    ti.for_each_valid_tree(1_000_000, |vt| trees.push(vt.clone())).unwrap();
    // Two trees that already differ at the first choice below the root.
    let a = &trees[0];
    let b = trees.iter().find(|t| t.conns[0] != a.conns[0]).expect("two root choices");
    let point = FractionalTree::from_masses(&ti, indicator(&ti, &[a, b]));
    let samples = 4000;
    let mut hits_a = 0;
    for s in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        rng.set_stream(s);
        let vt = sample_valid_tree(&ti, &point, &mut rng).unwrap();
        assert!(&vt == a || &vt == b);
        hits_a += usize::from(&vt == a);
    }
    let freq = hits_a as f64 / samples as f64;
    assert!((freq - 0.5).abs() <= 0.05, "frequency {freq}");
}

#[test]
fn zero_mass_is_an_error() {
    let ti = groups_fixture();
    let point = FractionalTree::from_masses(&ti, vec![0.0; ti.conns.len()]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(sample_valid_tree(&ti, &point, &mut rng), Err(RoundError::ZeroMass { node: 0 })));
}

#[test]
fn trial_counts_follow_the_log_formula() {
    assert_eq!(trial_count(8.0, 1, 1), 8);
    assert_eq!(trial_count(8.0, 2, 2), 8);
    // ceil(8 * ln 8 * ln 3) = ceil(18.27)
    assert_eq!(trial_count(8.0, 8, 3), 19);
    assert_eq!(trial_count(0.5, 100, 1), 3);
}

#[test]
fn rounding_on_the_fixture_covers_both_groups() {
    let ti = groups_fixture();
    let frac = solve_tree_lp(&ti, LpEngine::default()).unwrap();
    let run = round_fractional(&ti, &frac, &RoundingOptions::default()).unwrap();
    assert!(run.report.feasible);
    assert!(run.covered_after_first_batch);
    assert_eq!(run.trials.len(), run.trials_per_batch * run.batches);
    let again = round_fractional(&ti, &frac, &RoundingOptions::default()).unwrap();
    assert_eq!(run.to_json().to_string(), again.to_json().to_string());
}

/// Root-to-sink paths through the shared DAG, alternating profile and connecting nodes.
fn dag_paths(ti: &TreeInstance) -> Vec<Vec<Origin>> {
    fn walk(ti: &TreeInstance, p: u32, path: &mut Vec<Origin>, out: &mut Vec<Vec<Origin>>) {
        path.push(Origin::Profile(p));
        let conns = &ti.profiles[p as usize].conns;
        if conns.is_empty() {
            out.push(path.clone());
        }
        for &c in conns {
            path.push(Origin::Connecting(c));
            let kids = &ti.conns[c as usize].children;
            if kids.is_empty() {
                out.push(path.clone());
            }
            for &ch in kids {
                walk(ti, ch, path, out);
            }
            path.pop();
        }
        path.pop();
    }
    let mut out = Vec::new();
    walk(ti, ti.root(), &mut Vec::new(), &mut out);
    out
}

fn multiset(paths: Vec<Vec<Origin>>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for p in paths {
        *m.entry(format!("{p:?}")).or_insert(0) += 1;
    }
    m
}

#[test]
fn materialized_tree_has_the_same_paths() {
    let ti = groups_fixture();
    let tree = ti.materialize(1_000_000).unwrap();
    assert_eq!(tree.nodes.len() as f64, ti.stats.tree_nodes);
    assert_eq!(multiset(tree.leaf_paths()), multiset(dag_paths(&ti)));
    assert!(ti.materialize(3).is_err());
    let dot = tree.to_dot();
    assert!(dot.starts_with("digraph tree {\n") && dot.ends_with("}\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lp_lies_between_zero_and_the_optimum(seed in any::<u64>()) {
        let inst = small_instance(seed);
        let Ok(opt) = brute_force_optimum(&inst, DEFAULT_BUDGET) else { return Ok(()) };
        let ti = tree_for(&inst);
        let frac = solve_tree_lp(&ti, LpEngine::Float).unwrap();
        let opt_f = *opt.cost.numer() as f64 / *opt.cost.denom() as f64;
        prop_assert!(frac.objective >= -1e-9 && frac.objective <= opt_f + 1e-6);
        let (best, _) = ti.min_cover().unwrap();
        prop_assert_eq!(best, opt.cost);
        if ti.conns.len() <= 300 {
            let exact = solve_tree_lp(&ti, LpEngine::Exact).unwrap();
            prop_assert!((exact.objective - frac.objective).abs() < 1e-6);
            let e = exact.exact_objective.unwrap();
            prop_assert!(e <= BigRational::new((*opt.cost.numer()).into(), (*opt.cost.denom()).into()));
        }
    }

    #[test]
    fn sampled_trees_are_valid(seed in any::<u64>()) {
        let inst = small_instance(seed);
        let ti = tree_for(&inst);
        let Ok(frac) = solve_tree_lp(&ti, LpEngine::Float) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let vt = sample_valid_tree(&ti, &frac, &mut rng).unwrap();
            prop_assert!(ti.validate(&vt).is_ok());
            let sol = ti.valid_tree_to_solution(&vt).unwrap();
            prop_assert_eq!(sol.cost, ti.tree_cost(&vt));
        }
    }
}

#[test]
fn rational_costs_survive_scaling() {
    let text = "p rgsndp 3 3 1 2 edge edge\ne 0 1 1/2\ne 1 2 1/3\ne 0 2 1\nr 0\ng 2 2\n";
    let inst = parse_instance(text).unwrap();
    let ti = tree_for(&inst);
    let (best, _) = ti.min_cover().unwrap();
    assert_eq!(best, Rational::new(11, 6));
}
