use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sndp::connsets::{project, tc, tc_star, ConnectionSet};
use sndp::dp::ec::solve_ecsndp;
use sndp::dp::vc::solve_vcsndp;
use sndp::dp::DpOptions;
use sndp::gen::{random_instance, CostStyle, InstanceParams};
use sndp::graph::{check_feasible, parse_instance, serialize_instance, Mode};
use sndp::oracle::flow::FlowNetwork;
use sndp::oracle::{exhaustive_min_cut, exhaustive_path_packing};
use sndp::treedec::{decompose, normalize};

fn pair_set(n: usize, pairs: &[(usize, usize)]) -> ConnectionSet {
    let mut cs = ConnectionSet::empty(0..n);
    for &(u, v) in pairs {
        if u != v {
            cs.insert(u, v);
        }
    }
    cs
}

fn pairs_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<bool>)> {
    (2usize..=7).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..12), prop::collection::vec(any::<bool>(), n)))
}

/// Pairs joined by a path whose interior avoids vertices outside `z`.
fn restricted_bfs(n: usize, edges: &[(usize, usize)], z: &BTreeSet<usize>) -> BTreeSet<(usize, usize)> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u != v {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut out = BTreeSet::new();
    for s in 0..n {
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            if x != s && !z.contains(&x) {
                continue;
            }
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    out.insert((s.min(y), s.max(y)));
                    queue.push_back(y);
                }
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn restricted_closure_matches_bfs((n, pairs, mask) in pairs_strategy()) {
        let z: BTreeSet<usize> = (0..n).filter(|&v| mask[v]).collect();
        let cs = pair_set(n, &pairs);
        let got: BTreeSet<(usize, usize)> = tc_star(&z, &cs).pairs().clone();
        prop_assert_eq!(got, restricted_bfs(n, &pairs, &z));
    }

    #[test]
    fn closure_is_idempotent_and_monotone((n, pairs, mask) in pairs_strategy(), drop in any::<prop::sample::Index>()) {
        let z: BTreeSet<usize> = (0..n).filter(|&v| mask[v]).collect();
        let cs = pair_set(n, &pairs);
        let once = tc_star(&z, &cs);
        prop_assert_eq!(tc_star(&z, &once.union(&ConnectionSet::empty(0..n))), once.clone());
        prop_assert!(tc(&cs).is_closed());
        // Smaller z and fewer pairs give a subset.
        let mut z2 = z.clone();
        if let Some(&v) = z.iter().nth(drop.index(z.len().max(1))) {
            z2.remove(&v);
        }
        let fewer = pair_set(n, &pairs[..pairs.len() / 2]);
        let small = tc_star(&z2, &fewer);
        prop_assert!(small.pairs().is_subset(once.pairs()));
    }

    #[test]
    fn projection_keeps_inner_pairs((n, pairs, mask) in pairs_strategy()) {
        let s: BTreeSet<usize> = (0..n).filter(|&v| mask[v]).collect();
        let p = project(&pair_set(n, &pairs), &s);
        prop_assert_eq!(p.ground(), &s);
        for &(u, v) in p.pairs() {
            prop_assert!(s.contains(&u) && s.contains(&v));
        }
    }

    #[test]
    fn instances_round_trip_through_text(seed in any::<u64>(), vertex in any::<bool>(), halves in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mode = if vertex { Mode::Vertex } else { Mode::Edge };
        let costs = if halves { CostStyle::Halves(5) } else { CostStyle::Integer(5) };
        let p = InstanceParams { n: 7, groups: 3, group_size: 2, cost_mode: mode, costs, ..Default::default() };
        let (inst, _) = random_instance(&p, &mut rng);
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn normalized_decompositions_are_binary_and_valid(seed in any::<u64>(), n in 2usize..=10, w in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (inst, _) = random_instance(&InstanceParams { n, width: w, groups: 1, ..Default::default() }, &mut rng);
        let g = &inst.graph;
        let d = decompose(g, None).unwrap();
        prop_assert!(d.td.width() <= w);
        let (td, ann) = normalize(&d.td, g);
        prop_assert!(td.validate(g).is_ok());
        let mut seen = BTreeSet::new();
        for t in 0..td.bag_count() {
            prop_assert!(td.children(t).len() <= 2);
            if td.is_leaf(t) {
                prop_assert!(ann.bag_edges[t].is_empty());
                if let Some(p) = td.parent(t) {
                    prop_assert!(td.bag(t).iter().all(|v| td.bag(p).contains(v)));
                }
            }
            for &e in &ann.bag_edges[t] {
                prop_assert!(seen.insert(e));
            }
        }
        prop_assert_eq!(seen.len(), g.edge_count());
    }

    #[test]
    fn flow_agrees_with_exhaustive_counts(seed in any::<u64>(), n in 3usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (inst, _) = random_instance(&InstanceParams { n, width: 2, keep: 0.8, groups: 0, ..Default::default() }, &mut rng);
        let g = &inst.graph;
        let (s, t) = (0, n - 1);
        let mut net = FlowNetwork::edge_disjoint(n, g.edges().iter().copied(), s, t);
        let flow = net.max_flow(usize::MAX);
        prop_assert_eq!(flow, exhaustive_path_packing(g, Mode::Edge, s, t));
        prop_assert_eq!(flow, exhaustive_min_cut(g, s, t));
        let mut net = FlowNetwork::vertex_disjoint(n, &vec![true; n], g.edges().iter().copied(), s, t);
        prop_assert_eq!(net.max_flow(usize::MAX), exhaustive_path_packing(g, Mode::Vertex, s, t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dp_certificates_pass_the_checker(seed in any::<u64>(), k in 1usize..=2, vertex in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mode = if vertex { Mode::Vertex } else { Mode::Edge };
        let p = InstanceParams {
            n: 6,
            width: 2,
            keep: 0.8,
            groups: 2,
            max_demand: k,
            roots: if vertex { 2 } else { 1 },
            cost_mode: mode,
            conn_mode: mode,
            ..Default::default()
        };
        let (inst, td) = random_instance(&p, &mut rng);
        let sol = match mode {
            Mode::Edge => solve_ecsndp(&inst, &td, &DpOptions::default()).map(|s| s.solution),
            Mode::Vertex => solve_vcsndp(&inst, &td, false, &DpOptions::default()).map(|s| s.solution),
        };
        if let Ok(sol) = sol {
            prop_assert!(check_feasible(&inst, &sol).unwrap().feasible);
            let witnesses = sol.certificate.clone().unwrap_or_default();
            prop_assert!(!witnesses.is_empty() || inst.groups.iter().enumerate().all(|(i, _)| inst.group_is_trivial(i)));
            for w in &witnesses {
                prop_assert_eq!(w.paths.len(), inst.groups[w.group].demand);
                let mut used = BTreeSet::new();
                for path in &w.paths {
                    prop_assert_eq!(path.first(), Some(&w.root));
                    prop_assert_eq!(path.last(), Some(&w.vertex));
                    let keys: Vec<usize> = match mode {
                        Mode::Edge => path.windows(2).map(|x| inst.graph.edge_id(x[0], x[1]).expect("consecutive vertices adjacent")).collect(),
                        Mode::Vertex => {
                            prop_assert!(path.windows(2).all(|x| inst.graph.edge_id(x[0], x[1]).is_some()));
                            path[1..path.len() - 1].to_vec()
                        }
                    };
                    for key in keys {
                        prop_assert!(used.insert(key), "paths share {}", key);
                    }
                }
            }
        }
    }
}
