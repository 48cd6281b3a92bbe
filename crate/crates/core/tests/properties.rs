use std::collections::BTreeSet;

use proptest::prelude::*;

use dragonshare::kkm::solve_dragon_kkm;
use dragonshare::scenario::{resolve_piece_grab, resolve_player_swallow, solve_scenario_piece, solve_scenario_player};
use dragonshare::valuation::random_profile;
use dragonshare::{
    check_dragon_condition, root_tree, sdr_avoiding, spanning_tree_representatives, tree_choice_probabilities,
    LabeledTree, Params, Regime, SetFamily, TreeEdge,
};

/// A labeled tree from a parent choice per vertex and a label permutation.
fn tree_strategy(max_v: usize) -> impl Strategy<Value = LabeledTree> {
    (2..=max_v)
        .prop_flat_map(|v| {
            let parents: Vec<_> = (1..v).map(|k| 0..k).collect();
            (Just(v), parents, Just((1..v).collect::<Vec<usize>>()).prop_shuffle())
        })
        .prop_map(|(v, parents, labels)| {
            let edges = parents
                .iter()
                .enumerate()
                .map(|(k, &p)| TreeEdge::new(p + 1, k + 2, labels[k]))
                .collect();
            LabeledTree::new(v, edges).unwrap()
        })
}

fn family_strategy() -> impl Strategy<Value = SetFamily> {
    (2usize..=7)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(proptest::collection::btree_set(1..=n, 1..=n), n - 1),
            )
        })
        .prop_map(|(n, sets)| SetFamily::new(n, sets.into_iter().map(|s| s.into_iter().collect()).collect()).unwrap())
}

proptest! {
    #[test]
    fn rooting_is_a_bijection_onto_the_edges(tree in tree_strategy(9), pick in 0usize..100) {
        let v = tree.vertex_count();
        let root = 1 + pick % v;
        let parent = root_tree(&tree, root).unwrap();
        let vertices: BTreeSet<usize> = parent.keys().copied().collect();
        let labels: BTreeSet<usize> = parent.values().map(|e| e.label).collect();
        prop_assert_eq!(vertices, (1..=v).filter(|&x| x != root).collect::<BTreeSet<_>>());
        prop_assert_eq!(labels.len(), v - 1);
        // walking parent edges from any vertex reaches the root
        for start in 1..=v {
            let (mut x, mut steps) = (start, 0);
            while x != root {
                x = parent[&x].other(x);
                steps += 1;
                prop_assert!(steps < v);
            }
        }
    }

    #[test]
    fn choice_probabilities_sum_to_one(tree in tree_strategy(9)) {
        for c in tree_choice_probabilities(&tree) {
            prop_assert_eq!(c.roots_u + c.roots_w, tree.vertex_count());
            prop_assert!((c.p_u + c.p_w - 1.0).abs() <= 1e-15);
            prop_assert!(c.roots_u >= 1 && c.roots_w >= 1);
        }
    }

    #[test]
    fn resolutions_use_only_announced_names(tree in tree_strategy(7)) {
        let v = tree.vertex_count();
        for dragon in 1..=v {
            let grab = resolve_piece_grab(&tree, dragon).unwrap();
            for (&player, &b) in &grab.map {
                let e = tree.edge(player).unwrap();
                prop_assert!(b != dragon && (e.u == b || e.w == b));
            }
            let swallow = resolve_player_swallow(&tree, dragon).unwrap();
            prop_assert!(!swallow.map.contains_key(&dragon));
            for (&player, &b) in &swallow.map {
                prop_assert!(tree.edge(b).unwrap().touches(player));
            }
            let boxes: BTreeSet<usize> = swallow.map.values().copied().collect();
            prop_assert_eq!(boxes.len(), v - 1);
        }
    }

    #[test]
    fn trees_exist_exactly_when_the_condition_holds(family in family_strategy()) {
        let holds = check_dragon_condition(&family);
        let every_sdr = (1..=family.n()).all(|j| sdr_avoiding(&family, j).unwrap().is_some());
        prop_assert_eq!(holds, every_sdr);
        match spanning_tree_representatives(&family) {
            Ok(tree) => {
                prop_assert!(holds);
                prop_assert!(tree.is_valid_for(&family));
            }
            Err(_) => prop_assert!(!holds),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn kkm_points_load_every_piece_evenly(seed in 0u64..10_000, n in 1usize..=3) {
        let p = Params::default();
        let profile = random_profile(seed, n, Regime::Hungry, 5).unwrap();
        let sol = solve_dragon_kkm(&profile, &p).unwrap();
        let target = n as f64 / (n + 1) as f64;
        for s in sol.weights.row_sums() {
            prop_assert!((s - target).abs() <= n as f64 * p.tol);
        }
        for (root, pi) in (1..=n + 1).zip(&sol.bijections) {
            for (&j, &i) in &pi.map {
                prop_assert!(i != root && sol.weights.weight(i, j) > p.eps_sign);
            }
        }
    }

    #[test]
    fn scenario_results_are_envy_free(seed in 0u64..10_000, r in 2usize..=3, signed in any::<bool>()) {
        let p = Params::default();
        let regime = if signed { Regime::Signed } else { Regime::Hungry };
        let piece = solve_scenario_piece(&random_profile(seed, r - 1, regime, 5).unwrap(), &p).unwrap();
        prop_assert!(piece.min_margin() >= -p.envy_tol);
        prop_assert_eq!(piece.outcomes.len(), r);
        let player = solve_scenario_player(&random_profile(seed, r + 1, regime, 5).unwrap(), &p).unwrap();
        prop_assert!(player.min_margin() >= -p.envy_tol);
        prop_assert_eq!(player.outcomes.len(), r + 1);
    }

    #[test]
    fn scaling_a_player_keeps_the_decisions(seed in 0u64..10_000, factor in 0.25f64..4.0) {
        let p = Params::default();
        let profile = random_profile(seed, 2, Regime::Hungry, 5).unwrap();
        let mut scaled = profile.clone();
        scaled.players[0] = scaled.players[0].scaled(factor);
        let a = solve_scenario_piece(&profile, &p).unwrap();
        let b = solve_scenario_piece(&scaled, &p).unwrap();
        prop_assert_eq!(&a.tree, &b.tree);
        let signs = |res: &dragonshare::scenario::ScenarioResult| -> Vec<bool> {
            res.outcomes.iter().flat_map(|o| o.margins.values().map(|m| *m >= -p.envy_tol)).collect()
        };
        prop_assert_eq!(signs(&a), signs(&b));
    }
}
