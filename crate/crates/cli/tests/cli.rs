use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scratch(test: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coalition-cli-{}-{test}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run<P: AsRef<std::ffi::OsStr>>(args: &[P]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coalition"))
        .args(args)
        .env_remove("COALITION_MAX_STATES")
        .env_remove("COALITION_MAX_LETTERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

/// Writes a built-in arena into `dir` and returns its path.
fn gen(dir: &Path, args: &[&str], file: &str) -> PathBuf {
    let path = dir.join(file);
    let mut full: Vec<&str> = vec!["gen"];
    full.extend(args);
    full.extend(["-o", path.to_str().unwrap()]);
    let o = run(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn check_reports_shape() {
    let dir = scratch("check");
    let fig2 = gen(&dir, &["example", "fig2"], "fig2.json");
    let o = run(&["check", fig2.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("complete: yes, deterministic: no"));

    let fig1 = gen(&dir, &["example", "fig1"], "fig1.json");
    let o = run(&["check", fig1.to_str().unwrap()]);
    assert!(stdout(&o).contains("deterministic: yes"));

    let o = run(&[Path::new("--json"), Path::new("check"), &fixture("empty_alphabet.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let o = run(&[Path::new("check"), &dir.join("missing.json")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = scratch("solve");
    for (args, file) in [
        (vec!["example", "fig1"], "fig1.json"),
        (vec!["example", "fig2"], "fig2.json"),
        (vec!["worstcase", "2"], "wc2.json"),
    ] {
        let arena = gen(&dir, &args, file);
        let strategy = dir.join(format!("{file}.strategy.json"));
        let o = run(&[
            Path::new("--json"),
            Path::new("solve"),
            &arena,
            Path::new("--emit-strategy"),
            &strategy,
        ]);
        assert_eq!(o.status.code(), Some(0), "{file}");
        assert_eq!(json(&o)["winnable"], true);
        let o = run(&[Path::new("--json"), Path::new("verify"), &arena, &strategy, Path::new("--all")]);
        assert_eq!(o.status.code(), Some(0), "{file}: {}", stdout(&o));
        assert_eq!(json(&o)["verdict"], "safe");
    }
}

#[test]
fn solve_fig2_first_word_and_exports() {
    let dir = scratch("exports");
    let arena = gen(&dir, &["example", "fig2"], "fig2.json");
    let (tree, product) = (dir.join("tree.dot"), dir.join("product.dot"));
    let o = run(&[
        Path::new("--json"),
        Path::new("solve"),
        &arena,
        Path::new("--dot-tree"),
        &tree,
        Path::new("--dot-product"),
        &product,
    ]);
    assert!(o.status.success());
    let j = json(&o);
    assert_eq!(j["root_word"], "ab(a)^ω");
    assert_eq!(j["tree_nodes"], 10);
    assert_eq!(j["tree_internal"], 4);
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    assert!(std::fs::read_to_string(tree).unwrap().starts_with("digraph"));
    assert!(std::fs::read_to_string(product).unwrap().contains("lightblue"));
}

#[test]
fn false_qbf_is_not_winnable() {
    let dir = scratch("qbf");
    let arena = gen(&dir, &["qbf", fixture("false.qdimacs").to_str().unwrap()], "false.json");
    let o = run(&[Path::new("solve"), &arena]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("not winnable"));

    let arena = gen(&dir, &["qbf", fixture("fig8.qdimacs").to_str().unwrap()], "fig8.json");
    let o = run(&[Path::new("--json"), Path::new("check"), &arena]);
    assert_eq!(json(&o)["vertices"], 13);
    assert_eq!(run(&[Path::new("solve"), &arena]).status.code(), Some(0));
}

#[test]
fn generated_arenas_round_trip() {
    let dir = scratch("gen");
    let fig1 = gen(&dir, &["example", "fig1"], "fig1.json");
    assert!(run(&[Path::new("check"), &fig1]).status.success());
    let wc = gen(&dir, &["worstcase", "2"], "wc.json");
    let o = run(&[Path::new("--json"), Path::new("check"), &wc]);
    assert_eq!(json(&o)["vertices"], 10);
    // stdout output is the same file
    let o = run(&["gen", "worstcase", "2"]);
    assert_eq!(stdout(&o).trim(), std::fs::read_to_string(&wc).unwrap().trim());
    assert_eq!(run(&["gen", "worstcase", "9"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "example", "fig5"]).status.code(), Some(2));
}

#[test]
fn verify_finds_losing_plays() {
    let dir = scratch("verify");
    let fig2 = gen(&dir, &["example", "fig2"], "fig2.json");
    let losing = fixture("fig2_memoryless_a.json");
    let o = run(&[Path::new("--json"), Path::new("verify"), &fig2, &losing, Path::new("--agents"), Path::new("1")]);
    assert_eq!(o.status.code(), Some(1));
    let j = json(&o);
    assert_eq!(j["verdict"], "unsafe");
    assert_eq!(j["k"], 1);
    assert_eq!(j["play"], serde_json::json!(["v0", "v2", "v1", "bot"]));

    let dot = dir.join("play.dot");
    let o = run(&[
        Path::new("verify"),
        &fig2,
        &losing,
        Path::new("--agents"),
        Path::new("1..3"),
        Path::new("--dot-play"),
        &dot,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(std::fs::read_to_string(dot).unwrap().contains("color=red"));

    let o = run(&[Path::new("verify"), &fig2, &fixture("wrong_alphabet.json"), Path::new("--all")]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[Path::new("verify"), &fig2, &losing]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hand_strategy_for_fig1() {
    let dir = scratch("hand");
    let fig1 = gen(&dir, &["example", "fig1"], "fig1.json");
    let hand = fixture("fig1_hand.json");
    let o = run(&[Path::new("verify"), &fig1, &hand, Path::new("--all")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let trace = |k: &str| {
        let o = run(&[
            Path::new("--json"),
            Path::new("simulate"),
            &fig1,
            &hand,
            Path::new("--agents"),
            Path::new(k),
            Path::new("--steps"),
            Path::new("6"),
        ]);
        assert!(o.status.success());
        json(&o)["play"].clone()
    };
    assert_eq!(trace("2"), serde_json::json!(["v0", "v1", "v3", "v5", "v5", "v5"]));
    assert_eq!(trace("3"), serde_json::json!(["v0", "v2", "v3", "v5", "v5", "v5"]));
}

#[test]
fn simulation_flags() {
    let dir = scratch("simulate");
    let fig1 = gen(&dir, &["example", "fig1"], "fig1.json");
    let hand = fixture("fig1_hand.json");
    let play = |seed: &str, steps: &str| {
        let o = run(&[
            Path::new("--json"),
            Path::new("simulate"),
            &fig1,
            &hand,
            Path::new("--agents"),
            Path::new("7"),
            Path::new("--steps"),
            Path::new(steps),
            Path::new("--seed"),
            Path::new(seed),
        ]);
        assert!(o.status.success());
        json(&o)["play"].as_array().unwrap().clone()
    };
    // the arena is deterministic, so the seed cannot matter
    assert_eq!(play("1", "9"), play("2", "9"));
    assert_eq!(play("1", "9").len(), 9);
    assert_eq!(play("1", "1").len(), 1);
    let o = run(&[Path::new("simulate"), &fig1, &hand, Path::new("--agents"), Path::new("0")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn brute_force_command() {
    let dir = scratch("brute");
    let fig2 = gen(&dir, &["example", "fig2"], "fig2.json");
    let o = run(&[Path::new("brute"), &fig2, Path::new("--bound"), Path::new("2")]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&[Path::new("brute"), &fig2, Path::new("--bound"), Path::new("2"), Path::new("--memoryless")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn budget_from_environment() {
    let dir = scratch("budget");
    let fig2 = gen(&dir, &["example", "fig2"], "fig2.json");
    let o = Command::new(env!("CARGO_BIN_EXE_coalition"))
        .args([Path::new("solve"), &fig2, Path::new("--route"), Path::new("explicit")])
        .env("COALITION_MAX_STATES", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}
