use rand::{rngs::StdRng, SeedableRng};

use super::*;
use crate::arena::SafetyGame;
use crate::generators::{gen_example, gen_qbf, gen_worstcase, random_game_file, Example, Qbf, Quantifier};
use crate::unfolding::unfold;

fn fig2_tree() -> UnfoldingTree {
    unfold(&gen_example(Example::Fig2))
}

/// Tuple letter from a compact string such as "aaab".
fn t(s: &str) -> TupleLetter {
    s.chars().map(|c| (c as u8 - b'a') as usize).collect()
}

/// Acceptance of the components on edges into safe nodes, in edge order.
fn safe_acceptance(tree: &UnfoldingTree, q: &ProductState) -> Vec<bool> {
    tree.edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| !tree.is_unsafe_leaf(e.target))
        .map(|(s, e)| e.dfa.is_accepting(q.0[s]))
        .collect()
}

#[test]
fn fig2_product_transitions() {
    let tree = fig2_tree();
    let q0 = initial_state(&tree);
    assert_eq!(q0.0.len(), 9);
    assert_eq!(safe_acceptance(&tree, &q0), [false; 6]);

    // (a,a,·,b): p0 p0 q1 | s1 | r1 | s3
    let q1 = step(&tree, &q0, &t("aaab"));
    assert_eq!(safe_acceptance(&tree, &q1), [false, false, true, false, true, true]);
    assert_eq!(q1.0[0], q1.0[1]);
    assert!(phi_eval(&tree, &q1));
    // the unused coordinate of n2 does not matter for these components
    assert_eq!(step(&tree, &q0, &t("aabb")), q1);

    // (b,a,·,·): p1 p1 × | s2 | r1 | ×
    let q2 = step(&tree, &q1, &t("baaa"));
    assert_eq!(safe_acceptance(&tree, &q2), [true, true, false, true, true, false]);
    let root_to_v2 = 2;
    assert!(tree.edges()[root_to_v2].dfa.is_dead(q2.0[root_to_v2]));
    assert!(phi_eval(&tree, &q2));
    assert_eq!(step(&tree, &q2, &t("aaaa")), q2);

    // (b,a,·,b) from the start reaches v1 and n1's "a" leads to bot
    assert!(!phi_eval(&tree, &step(&tree, &q0, &t("baab"))));
    let q5 = step(&tree, &q0, &t("bbab"));
    assert!(phi_eval(&tree, &q5));
    assert!(!phi_eval(&tree, &step(&tree, &q5, &t("aaaa"))));
    assert!(!phi_eval(&tree, &step(&tree, &q0, &t("aaaa"))));
}

#[test]
fn fig2_lexicographic_lasso() {
    let tree = fig2_tree();
    let opts = SolveOptions {
        route: Route::Explicit,
        ..SolveOptions::default()
    };
    let report = solve(&tree, &opts).unwrap();
    let lasso = report.lasso.unwrap();
    assert!(lasso.is_accepted(&tree));
    assert_eq!(lasso.stem, vec![t("aaab"), t("baaa")]);
    assert_eq!(lasso.cycle, vec![t("aaaa")]);
    let root: Vec<Letter> = (1..=3).map(|k| lasso.letter_at(k)[0]).collect();
    assert_eq!(root, [0, 1, 0]);
}

#[test]
fn fig1_is_winnable_both_ways() {
    let tree = unfold(&gen_example(Example::Fig1));
    for route in [Route::Explicit, Route::Compositional, Route::Auto] {
        let opts = SolveOptions {
            route,
            ..SolveOptions::default()
        };
        let report = solve(&tree, &opts).unwrap();
        assert!(report.lasso.as_ref().unwrap().is_accepted(&tree), "{route:?}");
    }
}

#[test]
fn single_unsafe_successor_is_lost() {
    let file = crate::arena::ArenaFile {
        alphabet: vec!["a".into()],
        vertices: vec!["v0".into(), "u".into()],
        safe: vec!["v0".into()],
        initial: "v0".into(),
        default_target: None,
        edges: vec![crate::arena::EdgeSpec {
            from: "v0".into(),
            to: "u".into(),
            lang: "a+".into(),
        }],
    };
    let tree = unfold(&SafetyGame::from_file(&file).unwrap().normalize());
    for route in [Route::Explicit, Route::Compositional] {
        let opts = SolveOptions {
            route,
            ..SolveOptions::default()
        };
        assert!(solve(&tree, &opts).unwrap().lasso.is_none());
    }
}

#[test]
fn degenerate_trees() {
    let mut file = crate::generators::example_file(Example::Fig2);
    file.safe.retain(|v| v != "v0");
    let tree = unfold(&SafetyGame::from_file(&file).unwrap().normalize());
    assert!(initial_state(&tree).0.is_empty());
    assert!(solve(&tree, &SolveOptions::default()).unwrap().lasso.is_none());

    let file = crate::arena::ArenaFile {
        alphabet: vec!["a".into()],
        vertices: vec!["v0".into()],
        safe: vec!["v0".into()],
        initial: "v0".into(),
        default_target: None,
        edges: vec![crate::arena::EdgeSpec {
            from: "v0".into(),
            to: "v0".into(),
            lang: ".+".into(),
        }],
    };
    let tree = unfold(&SafetyGame::from_file(&file).unwrap().normalize());
    assert_eq!(initial_state(&tree).0.len(), 1);
    // every leaf is safe, so every state satisfies the formula
    let mut q = initial_state(&tree);
    for _ in 0..3 {
        assert!(phi_eval(&tree, &q));
        q = step(&tree, &q, &[0]);
    }
    assert!(solve(&tree, &SolveOptions::default()).unwrap().winnable());
}

#[test]
fn explored_states_within_product_bound() {
    for g in [gen_example(Example::Fig1), gen_example(Example::Fig2)] {
        let tree = unfold(&g);
        let report = solve(
            &tree,
            &SolveOptions {
                route: Route::Explicit,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let bound: f64 = tree.edges().iter().map(|e| e.dfa.num_states() as f64).product();
        assert!((report.stats.explored as f64) <= bound);
    }
}

#[test]
fn routes_agree_on_random_games() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut compared = 0;
    let mut winnable = 0;
    while compared < 150 {
        let file = random_game_file(&mut rng, 4);
        let game = SafetyGame::from_file(&file).unwrap().normalize();
        let tree = unfold(&game);
        if tree.num_internal() > 10 {
            continue;
        }
        let explicit = solve(
            &tree,
            &SolveOptions {
                route: Route::Explicit,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let compositional = solve(
            &tree,
            &SolveOptions {
                route: Route::Compositional,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(explicit.winnable(), compositional.winnable(), "{file:?}");
        for l in explicit.lasso.iter().chain(&compositional.lasso) {
            assert!(l.is_accepted(&tree));
        }
        winnable += explicit.winnable() as usize;
        compared += 1;
    }
    assert!(winnable > 10 && winnable < 140, "{winnable}");
}

#[test]
fn lasso_from_words_closes_the_cycle() {
    let tree = fig2_tree();
    let words = vec![
        UPWord::new(vec![0, 1], vec![0]).unwrap(),
        UPWord::constant(0),
        UPWord::new(vec![], vec![0, 1]).unwrap(),
        UPWord::constant(1),
    ];
    let lasso = lasso_from_words(&tree, &words);
    assert!(lasso.is_accepted(&tree));
    for k in 1..20 {
        let expected: TupleLetter = words.iter().map(|w| w.letter_at(k as u64)).collect();
        assert_eq!(lasso.letter_at(k), &expected);
    }
}

#[test]
fn large_games_use_the_compositional_route() {
    let tree = unfold(&gen_worstcase(2).unwrap());
    let report = solve(&tree, &SolveOptions::default()).unwrap();
    assert_eq!(report.route, Route::Compositional);
    assert!(report.lasso.unwrap().is_accepted(&tree));

    let e = Quantifier::Exists;
    let a = Quantifier::Forall;
    let false_phi = Qbf::new(vec![e, a], vec![vec![1, 2], vec![-1, 2]]).unwrap();
    let tree = unfold(&gen_qbf(&false_phi).unwrap());
    assert!(!solve(&tree, &SolveOptions::default()).unwrap().winnable());
    let tree = unfold(&gen_qbf(&crate::generators::fig8_formula()).unwrap());
    assert!(solve(&tree, &SolveOptions::default()).unwrap().winnable());
}

#[test]
fn budgets_are_reported() {
    let tree = fig2_tree();
    let tight = SolveOptions {
        route: Route::Explicit,
        max_letters: 4,
        max_states: 10,
    };
    assert!(matches!(solve(&tree, &tight), Err(ProductError::TooManyLetters { .. })));
    let tight = SolveOptions {
        route: Route::Explicit,
        max_letters: 4096,
        max_states: 2,
    };
    assert!(matches!(solve(&tree, &tight), Err(ProductError::StateBudget { .. })));
}

#[test]
fn dot_marks_accepting_states() {
    let tree = fig2_tree();
    let dot = product_dot(&tree, tree.alphabet(), 4096, 50).unwrap();
    assert!(dot.contains("fillcolor=lightblue"));
    assert!(dot.starts_with("digraph product"));
    let small = product_dot(&tree, tree.alphabet(), 4096, 2).unwrap();
    assert!(small.contains("truncated at 2 states"));
}
