//! The `coalition` command line, usable in-process through [`execute`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use coalition_core::arena::SafetyGame;
use coalition_core::generators::{gen_example, gen_qbf, gen_worstcase, Example, Qbf};
use coalition_core::product::{product_dot, solve, Route, SolveOptions};
use coalition_core::synthesis::{build_memory, extract_strategy, MemoryStrategy};
use coalition_core::unfolding::unfold;
use coalition_core::verify::{
    brute_force_exists, play_dot, render_play, simulate, verify_all_k, verify_fixed_k, Resolver, Verdict,
    VerificationReport,
};

/// States drawn by `solve --dot-product` before the drawing is truncated.
const DOT_PRODUCT_STATES: usize = 500;

#[derive(Parser)]
#[command(name = "coalition", version, about = "Solve safety games played by an unknown number of agents")]
struct Cli {
    /// Print machine-readable JSON on stdout; human text goes to stderr.
    #[arg(long, global = true)]
    json: bool,
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

/// Budget caps shared by all commands.
#[derive(Args, Debug, Clone)]
struct Config {
    /// Largest explicit product alphabet before switching to the compositional solver.
    #[arg(long, global = true, env = "COALITION_MAX_LETTERS", default_value_t = 4096,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_letters: u64,
    /// Product states explored before giving up on the explicit route.
    #[arg(long, global = true, env = "COALITION_MAX_STATES", default_value_t = 2_000_000,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,
    /// Largest period lcm accepted by `verify --all`.
    #[arg(long, global = true, env = "COALITION_LCM_CAP", default_value_t = 1 << 20,
          value_parser = clap::value_parser!(u64).range(1..))]
    lcm_cap: u64,
    /// Step budget of the brute-force search.
    #[arg(long, global = true, env = "COALITION_BRUTE_BUDGET", default_value_t = 50_000_000,
          value_parser = clap::value_parser!(u64).range(1..))]
    brute_budget: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, normalize and report on an arena.
    Check { arena: PathBuf },
    /// Decide whether the coalition wins; exit 0 if so, 1 if not.
    Solve {
        arena: PathBuf,
        /// Write the synthesized strategy here.
        #[arg(long)]
        emit_strategy: Option<PathBuf>,
        /// Write the unfolding tree in DOT.
        #[arg(long)]
        dot_tree: Option<PathBuf>,
        /// Write the reachable part of the product automaton in DOT.
        #[arg(long)]
        dot_product: Option<PathBuf>,
        #[arg(long, default_value = "auto", value_parser = parse_route)]
        route: Route,
    },
    /// Check a strategy; exit 0 if safe, 1 if unsafe, 3 if undecided.
    Verify {
        arena: PathBuf,
        strategy: PathBuf,
        /// A number `k`, or a range `1..K` (inclusive).
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        agents: Option<String>,
        /// Every number of agents.
        #[arg(long)]
        all: bool,
        /// Write the arena with the losing play highlighted in DOT.
        #[arg(long)]
        dot_play: Option<PathBuf>,
    },
    /// Print one play of a strategy.
    Simulate {
        arena: PathBuf,
        strategy: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        agents: u64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// How the environment picks among possible successors: random, first or minimal.
        #[arg(long, default_value = "random")]
        resolver: Resolver,
    },
    /// Search all strategies using words of length K for up to K agents.
    Brute {
        arena: PathBuf,
        #[arg(long)]
        bound: u64,
        /// Require the same word at every visit of a vertex.
        #[arg(long)]
        memoryless: bool,
    },
    /// Write a built-in or generated arena.
    Gen {
        #[command(subcommand)]
        what: Gen,
        /// Output file (stdout if absent).
        #[arg(long, short, global = true)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Gen {
    /// One of the small examples: fig1 or fig2.
    Example { name: Example },
    /// The family whose unfolding grows exponentially.
    Worstcase { n: usize },
    /// The reduction of a formula given in QDIMACS or JSON.
    Qbf { file: PathBuf },
}

fn parse_route(s: &str) -> Result<Route, String> {
    match s {
        "auto" => Ok(Route::Auto),
        "explicit" => Ok(Route::Explicit),
        "compositional" => Ok(Route::Compositional),
        _ => Err(format!("unknown route '{s}' (expected auto, explicit or compositional)")),
    }
}

/// Where human-readable text and machine output go.
struct Out<'a> {
    json: bool,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Out<'_> {
    fn say(&mut self, text: impl AsRef<str>) {
        let w = if self.json { &mut *self.stderr } else { &mut *self.stdout };
        let _ = writeln!(w, "{}", text.as_ref());
    }

    fn note(&mut self, text: impl AsRef<str>) {
        let _ = writeln!(self.stderr, "{}", text.as_ref());
    }

    fn data(&mut self, value: serde_json::Value) {
        if self.json {
            let _ = writeln!(self.stdout, "{}", serde_json::to_string_pretty(&value).expect("json value"));
        }
    }

    fn raw(&mut self, text: &str) {
        let _ = writeln!(self.stdout, "{text}");
    }
}

/// Runs one command line (`args[0]` is the program name) and returns the
/// exit code: 0 success, 1 negative answer, 2 error, 3 undecided.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let failed = e.use_stderr();
            let text = e.render().to_string();
            let _ = if failed { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return if failed { 2 } else { 0 };
        }
    };
    let mut out = Out {
        json: cli.json,
        stdout,
        stderr,
    };
    match run(cli.command, &cli.config, &mut out) {
        Ok(code) => code,
        Err(e) => {
            out.note(format!("error: {e:#}"));
            2
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_game(path: &Path) -> Result<SafetyGame> {
    let game = SafetyGame::from_json(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
    Ok(game.normalize())
}

fn load_strategy(path: &Path, game: &SafetyGame) -> Result<MemoryStrategy> {
    MemoryStrategy::from_json(&read(path)?, game).with_context(|| format!("loading {}", path.display()))
}

fn parse_agents(spec: &str) -> Result<(u64, u64)> {
    let num = |s: &str| -> Result<u64> {
        let k: u64 = s.trim().parse().with_context(|| format!("bad agent count '{s}'"))?;
        if k == 0 {
            bail!("agent counts start at 1");
        }
        Ok(k)
    };
    match spec.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
            if lo > hi {
                bail!("empty agent range {spec}");
            }
            Ok((lo, hi))
        }
        None => {
            let k = num(spec)?;
            Ok((k, k))
        }
    }
}

fn run(command: Command, config: &Config, out: &mut Out) -> Result<u8> {
    match command {
        Command::Check { arena } => {
            let game = load_game(&arena)?;
            let a = game.arena();
            let complete = a.completeness_check();
            let deterministic = a.determinism_check();
            let yes = |b: bool| if b { "yes" } else { "no" };
            out.say(format!(
                "vertices: {} ({} safe), edges: {}, letters: {}, DFA states: {}\ncomplete: {}, deterministic: {}",
                a.num_vertices(),
                game.safe_vertices().count(),
                a.num_edges(),
                a.alphabet().len(),
                a.total_dfa_states(),
                yes(complete),
                yes(deterministic)
            ));
            out.data(json!({
                "vertices": a.num_vertices(),
                "safe": game.safe_vertices().count(),
                "edges": a.num_edges(),
                "letters": a.alphabet().len(),
                "dfa_states": a.total_dfa_states(),
                "complete": complete,
                "deterministic": deterministic,
            }));
            Ok(0)
        }
        Command::Solve {
            arena,
            emit_strategy,
            dot_tree,
            dot_product,
            route,
        } => {
            let game = load_game(&arena)?;
            let tree = unfold(&game);
            if let Some(path) = &dot_tree {
                write(path, &tree.to_dot())?;
            }
            if let Some(path) = &dot_product {
                match product_dot(&tree, tree.alphabet(), config.max_letters, DOT_PRODUCT_STATES) {
                    Ok(dot) => write(path, &dot)?,
                    Err(e) => out.note(format!("warning: no product drawing: {e}")),
                }
            }
            let options = SolveOptions {
                route,
                max_letters: config.max_letters,
                max_states: config.max_states as usize,
            };
            let report = solve(&tree, &options)?;
            let summary = format!(
                "tree: {} nodes, {} internal; route: {:?}; {} product states explored",
                tree.num_nodes(),
                tree.num_internal(),
                report.route,
                report.stats.explored
            );
            let mut data = json!({
                "winnable": report.winnable(),
                "route": format!("{:?}", report.route).to_lowercase(),
                "tree_nodes": tree.num_nodes(),
                "tree_internal": tree.num_internal(),
                "explored": report.stats.explored,
            });
            let Some(lasso) = &report.lasso else {
                out.say(format!("not winnable\n{summary}"));
                out.data(data);
                return Ok(1);
            };
            let ms = build_memory(&game, &tree, &extract_strategy(&tree, lasso)?);
            let root_word = ms.next(ms.root()).render(ms.alphabet());
            out.say(format!(
                "winnable\n{summary}\nmemory size: {}; first word: {root_word}",
                ms.memory_size()
            ));
            if let Some(path) = &emit_strategy {
                write(path, &ms.to_json())?;
            }
            data["memory_size"] = json!(ms.memory_size());
            data["root_word"] = json!(root_word);
            data["strategy"] = serde_json::to_value(ms.to_file())?;
            out.data(data);
            Ok(0)
        }
        Command::Verify {
            arena,
            strategy,
            agents,
            all,
            dot_play,
        } => {
            let game = load_game(&arena)?;
            let ms = load_strategy(&strategy, &game)?;
            let report = if all {
                verify_all_k(&game, &ms, config.lcm_cap)
            } else {
                let (lo, hi) = parse_agents(agents.as_deref().expect("required by clap"))?;
                let mut explored = 0;
                let mut last = None;
                for k in lo..=hi {
                    let r = verify_fixed_k(&game, &ms, k);
                    explored += r.stats.states_explored;
                    let unsafe_k = !r.is_safe();
                    last = Some(r);
                    if unsafe_k {
                        break;
                    }
                }
                let mut r: VerificationReport = last.expect("nonempty range");
                r.stats.states_explored = explored;
                r.stats.ks_checked = match r.verdict {
                    Verdict::Unsafe { k, .. } => (k - lo + 1) as usize,
                    _ => (hi - lo + 1) as usize,
                };
                r
            };
            if let (Some(path), Verdict::Unsafe { play, .. }) = (&dot_play, &report.verdict) {
                write(path, &play_dot(&game, play))?;
            }
            out.say(report.to_text(game.arena()));
            out.data(report.to_json(game.arena()));
            Ok(match report.verdict {
                Verdict::Safe => 0,
                Verdict::Unsafe { .. } => 1,
                Verdict::Undecided { .. } => 3,
            })
        }
        Command::Simulate {
            arena,
            strategy,
            agents,
            steps,
            seed,
            resolver,
        } => {
            if steps == 0 {
                bail!("--steps must be at least 1");
            }
            let game = load_game(&arena)?;
            let ms = load_strategy(&strategy, &game)?;
            let trace = simulate(&game, &ms, agents, steps, seed, resolver);
            let a = game.arena();
            let sigma = ms.alphabet();
            let mut text = render_play(a, &trace.vertices);
            for (j, w) in trace.played.iter().enumerate() {
                text.push_str(&format!(
                    "\n{} [{}] plays {}",
                    a.name(trace.vertices[j]),
                    ms.memory_name(trace.memory[j]),
                    sigma.format_word(w)
                ));
            }
            let reached_unsafe = trace.vertices.iter().any(|&v| !game.is_safe(v));
            out.say(text);
            out.data(json!({
                "play": trace.vertices.iter().map(|&v| a.name(v)).collect::<Vec<_>>(),
                "memory": trace.memory.iter().map(|&m| ms.memory_name(m)).collect::<Vec<_>>(),
                "words": trace.played.iter().map(|w| sigma.format_word(w)).collect::<Vec<_>>(),
                "safe": !reached_unsafe,
            }));
            Ok(0)
        }
        Command::Brute {
            arena,
            bound,
            memoryless,
        } => {
            let game = load_game(&arena)?;
            let tree = unfold(&game);
            let found = brute_force_exists(&game, &tree, bound, memoryless, config.brute_budget)?;
            let kind = if memoryless { "memoryless " } else { "" };
            out.say(if found {
                format!("a {kind}strategy with words of length {bound} wins for every k <= {bound}")
            } else {
                format!("no {kind}strategy wins for every k <= {bound}")
            });
            out.data(json!({ "exists": found, "bound": bound, "memoryless": memoryless }));
            Ok(if found { 0 } else { 1 })
        }
        Command::Gen { what, output } => {
            let game = match what {
                Gen::Example { name } => gen_example(name),
                Gen::Worstcase { n } => gen_worstcase(n)?,
                Gen::Qbf { file } => {
                    let text = read(&file)?;
                    let phi = if text.trim_start().starts_with('{') {
                        Qbf::from_json(&text)?
                    } else {
                        Qbf::from_qdimacs(&text)?
                    };
                    gen_qbf(&phi)?
                }
            };
            let text = serde_json::to_string_pretty(&game.to_file())?;
            match output {
                Some(path) => {
                    write(&path, &text)?;
                    out.note(format!("wrote {} ({} vertices)", path.display(), game.arena().num_vertices()));
                }
                None => out.raw(&text),
            }
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agent_specs() {
        assert_eq!(parse_agents("3").unwrap(), (3, 3));
        assert_eq!(parse_agents("1..5").unwrap(), (1, 5));
        assert_eq!(parse_agents("2..=4").unwrap(), (2, 4));
        assert!(parse_agents("0").is_err());
        assert!(parse_agents("5..2").is_err());
        assert!(parse_agents("x").is_err());
    }

    #[test]
    fn clap_definition() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
