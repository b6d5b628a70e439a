use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use coalition_core::arena::SafetyGame;
use coalition_core::generators::{
    fig8_formula, gen_example, gen_qbf, gen_worstcase, qbf_corpus, qbf_eval, random_game_file, Example,
};
use coalition_core::product::{solve, Route, SolveOptions};
use coalition_core::synthesis::{build_memory, extract_strategy, MemoryStrategy};
use coalition_core::unfolding::unfold;
use coalition_core::verify::{brute_force_exists, verify_all_k, verify_fixed_k};

const LCM_CAP: u64 = 1 << 20;

fn synthesize(game: &SafetyGame, route: Route) -> Option<MemoryStrategy> {
    let tree = unfold(game);
    let options = SolveOptions {
        route,
        ..SolveOptions::default()
    };
    let lasso = solve(&tree, &options).unwrap().lasso?;
    Some(build_memory(game, &tree, &extract_strategy(&tree, &lasso).unwrap()))
}

#[test]
fn built_in_strategies_verify() {
    let mut games = vec![gen_example(Example::Fig1), gen_example(Example::Fig2)];
    games.extend((1..=3).map(|n| gen_worstcase(n).unwrap()));
    games.push(gen_qbf(&fig8_formula()).unwrap());
    for game in &games {
        let ms = synthesize(game, Route::Auto).expect("winnable");
        assert!(verify_all_k(game, &ms, LCM_CAP).is_safe());
        // the strategy survives a round trip through its file
        let back = MemoryStrategy::from_json(&ms.to_json(), game).unwrap();
        assert!(verify_all_k(game, &back, LCM_CAP).is_safe());
    }
}

#[test]
fn qbf_strategies_verify() {
    for phi in qbf_corpus(2, 2) {
        let game = gen_qbf(&phi).unwrap();
        match synthesize(&game, Route::Auto) {
            Some(ms) => {
                assert!(qbf_eval(&phi).unwrap(), "{phi:?}");
                assert!(verify_all_k(&game, &ms, LCM_CAP).is_safe(), "{phi:?}");
            }
            None => assert!(!qbf_eval(&phi).unwrap(), "{phi:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    /// A winning strategy passes the exact check and any bounded search
    /// succeeds; a lost game never yields a strategy.
    #[test]
    fn solver_agrees_with_oracles(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let game = SafetyGame::from_file(&random_game_file(&mut rng, 4)).unwrap().normalize();
        let tree = unfold(&game);
        prop_assume!(tree.num_internal() <= 10);
        match synthesize(&game, Route::Auto) {
            Some(ms) => {
                prop_assert!(verify_all_k(&game, &ms, LCM_CAP).is_safe());
                for k in [1, 2, 3, 17] {
                    prop_assert!(verify_fixed_k(&game, &ms, k).is_safe());
                }
                prop_assert_eq!(brute_force_exists(&game, &tree, 3, false, 10_000_000), Ok(true));
            }
            None => {
                prop_assert!(synthesize(&game, Route::Compositional).is_none());
            }
        }
    }
}
