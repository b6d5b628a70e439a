//! Built-in games: the two small example arenas, the family whose unfolding
//! grows exponentially, and the reduction from quantified Boolean formulas.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{ArenaFile, DefaultTarget, EdgeSpec, SafetyGame};
use crate::synthesis::{NodeEntry, StrategyFile, UpdateEntry};

pub const MAX_PRIME_INDEX: usize = 16;
pub const MAX_WORSTCASE: usize = 6;
pub const MAX_QBF_EVAL_VARS: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("unknown example '{0}' (expected fig1 or fig2)")]
    UnknownExample(String),
    #[error("prime index {0} out of range 1..={MAX_PRIME_INDEX}")]
    PrimeIndex(usize),
    #[error("worst-case size {0} out of range 1..={MAX_WORSTCASE}")]
    WorstCaseSize(usize),
    #[error("malformed formula: {0}")]
    MalformedQbf(String),
    #[error("formula has {0} variables; evaluation is limited to {MAX_QBF_EVAL_VARS}")]
    EvalBudget(usize),
}

/// The `i`-th prime, 1-based.
pub fn prime(i: usize) -> Result<u64, GenError> {
    if i == 0 || i > MAX_PRIME_INDEX {
        return Err(GenError::PrimeIndex(i));
    }
    // the 16th prime is 53
    const LIMIT: usize = 64;
    let mut composite = [false; LIMIT];
    let mut primes = Vec::new();
    for n in 2..LIMIT {
        if !composite[n] {
            primes.push(n as u64);
            let mut m = n * n;
            while m < LIMIT {
                composite[m] = true;
                m += n;
            }
        }
    }
    Ok(primes[i - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    Fig1,
    Fig2,
}

impl FromStr for Example {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig1" => Ok(Example::Fig1),
            "fig2" => Ok(Example::Fig2),
            other => Err(GenError::UnknownExample(other.to_string())),
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Example::Fig1 => "fig1",
            Example::Fig2 => "fig2",
        })
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn edge(from: &str, to: &str, lang: &str) -> EdgeSpec {
    EdgeSpec {
        from: from.to_string(),
        to: to.to_string(),
        lang: lang.to_string(),
    }
}

/// The example arena as a file, before normalization.
pub fn example_file(example: Example) -> ArenaFile {
    match example {
        Example::Fig1 => ArenaFile {
            alphabet: strings(&["a", "b"]),
            vertices: strings(&["v0", "v1", "v2", "v3", "v4", "v5"]),
            safe: strings(&["v0", "v1", "v2", "v3", "v5"]),
            initial: "v0".into(),
            default_target: Some(DefaultTarget::All("v4".into())),
            edges: vec![
                edge("v0", "v1", "(..)+"),
                edge("v0", "v2", ".(..)*"),
                edge("v1", "v3", ".+"),
                edge("v2", "v3", ".+"),
                edge("v3", "v4", "(bb)+ | a(aa)*"),
                edge("v3", "v5", "(aa)+ | b(bb)*"),
                edge("v4", "v4", ".+"),
                edge("v5", "v5", ".+"),
            ],
        },
        Example::Fig2 => ArenaFile {
            alphabet: strings(&["a", "b"]),
            vertices: strings(&["v0", "v1", "v2"]),
            safe: strings(&["v0", "v1", "v2"]),
            initial: "v0".into(),
            default_target: None,
            edges: vec![
                edge("v0", "v0", "a*ba*"),
                edge("v0", "v1", "a*ba*"),
                edge("v0", "v2", "a"),
                edge("v2", "v1", ".+"),
                edge("v1", "v0", "b | aa+"),
            ],
        },
    }
}

/// The example arena, normalized.
pub fn gen_example(example: Example) -> SafetyGame {
    SafetyGame::from_file(&example_file(example))
        .expect("built-in example is well-formed")
        .normalize()
}

fn multiples(letter: &str, p: u64) -> String {
    format!("mod({letter},{p},{{0}})")
}

fn non_multiples(letter: &str, p: u64) -> String {
    format!("{letter}+ \\ mod({letter},{p},{{0}})")
}

/// Arena of the exponential-memory family, before normalization.
pub fn worstcase_file(n: usize) -> Result<ArenaFile, GenError> {
    if n == 0 || n > MAX_WORSTCASE {
        return Err(GenError::WorstCaseSize(n));
    }
    let mut vertices = Vec::new();
    for i in 1..=n {
        vertices.extend([format!("B{i}"), format!("v{i}"), format!("v{i}_bar")]);
    }
    vertices.extend((1..=n).map(|i| format!("C{i}")));
    vertices.extend(["top".to_string(), "bot".to_string()]);

    let mut edges = Vec::new();
    for i in 1..=n {
        let p = prime(i)?;
        let next = if i < n { format!("B{}", i + 1) } else { "C1".to_string() };
        edges.push(edge(&format!("B{i}"), &format!("v{i}"), &multiples("a", p)));
        edges.push(edge(&format!("B{i}"), &format!("v{i}_bar"), &non_multiples("a", p)));
        edges.push(edge(&format!("v{i}"), &next, ".+"));
        edges.push(edge(&format!("v{i}_bar"), &next, ".+"));
    }
    for i in 1..=n {
        let p = prime(i)?;
        let next = if i < n { format!("C{}", i + 1) } else { "top".to_string() };
        let lang = format!("{} | ({})", multiples("a", p), non_multiples("b", p));
        edges.push(edge(&format!("C{i}"), &next, &lang));
    }
    edges.push(edge("top", "top", ".+"));

    Ok(ArenaFile {
        alphabet: strings(&["a", "b"]),
        safe: vertices.iter().filter(|v| *v != "bot").cloned().collect(),
        vertices,
        initial: "B1".into(),
        default_target: Some(DefaultTarget::All("bot".into())),
        edges,
    })
}

pub fn gen_worstcase(n: usize) -> Result<SafetyGame, GenError> {
    Ok(SafetyGame::from_file(&worstcase_file(n)?)
        .expect("generated arena is well-formed")
        .normalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantifier {
    #[serde(rename = "e")]
    Exists,
    #[serde(rename = "a")]
    Forall,
}

/// A prenex formula: `prefix[i]` quantifies variable `i + 1`; clauses hold
/// DIMACS-style signed literals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qbf {
    pub prefix: Vec<Quantifier>,
    pub clauses: Vec<Vec<i32>>,
}

impl Qbf {
    pub fn new(prefix: Vec<Quantifier>, clauses: Vec<Vec<i32>>) -> Result<Qbf, GenError> {
        let q = Qbf { prefix, clauses };
        q.validate()?;
        Ok(q)
    }

    pub fn num_vars(&self) -> usize {
        self.prefix.len()
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::MalformedQbf(m));
        if self.prefix.is_empty() {
            return bad("empty quantifier prefix".into());
        }
        if self.prefix.len() > MAX_PRIME_INDEX {
            return bad(format!("at most {MAX_PRIME_INDEX} variables are supported"));
        }
        for (i, &quant) in self.prefix.iter().enumerate() {
            let expected = if i % 2 == 0 { Quantifier::Exists } else { Quantifier::Forall };
            if quant != expected {
                return bad(format!(
                    "prefix must alternate starting with an existential; variable {} breaks it",
                    i + 1
                ));
            }
        }
        for (h, clause) in self.clauses.iter().enumerate() {
            if clause.len() > 3 {
                return bad(format!("clause {} has more than 3 literals", h + 1));
            }
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > self.prefix.len() {
                    return bad(format!("clause {} uses unquantified literal {lit}", h + 1));
                }
            }
        }
        Ok(())
    }

    /// Parses the JSON form `{"prefix": ["e","a",...], "clauses": [[1,-2],...]}`.
    pub fn from_json(text: &str) -> Result<Qbf, GenError> {
        let q: Qbf = serde_json::from_str(text).map_err(|e| GenError::MalformedQbf(e.to_string()))?;
        q.validate()?;
        Ok(q)
    }

    /// Parses QDIMACS-like text: `c` comments, an optional `p cnf` header,
    /// quantifier lines `e 1 0` / `a 2` and zero-terminated clause lines.
    /// Quantified variables must be listed as 1, 2, 3, … in order.
    pub fn from_qdimacs(text: &str) -> Result<Qbf, GenError> {
        let mut prefix = Vec::new();
        let mut clauses = Vec::new();
        let mut current: Vec<i32> = Vec::new();
        let ints = |tokens: &[&str]| -> Result<Vec<i32>, GenError> {
            tokens
                .iter()
                .map(|t| t.parse::<i32>().map_err(|_| GenError::MalformedQbf(format!("bad integer '{t}'"))))
                .collect()
        };
        for line in text.lines() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.first() {
                None | Some(&"c") | Some(&"p") => continue,
                Some(&q @ ("e" | "a")) => {
                    if !clauses.is_empty() || !current.is_empty() {
                        return Err(GenError::MalformedQbf("quantifier after clauses".into()));
                    }
                    let quant = if q == "e" { Quantifier::Exists } else { Quantifier::Forall };
                    for v in ints(&tokens[1..])? {
                        if v == 0 {
                            break;
                        }
                        if v as usize != prefix.len() + 1 {
                            return Err(GenError::MalformedQbf(format!(
                                "expected variable {} in the prefix, found {v}",
                                prefix.len() + 1
                            )));
                        }
                        prefix.push(quant);
                    }
                }
                Some(_) => {
                    for lit in ints(&tokens)? {
                        if lit == 0 {
                            clauses.push(std::mem::take(&mut current));
                        } else {
                            current.push(lit);
                        }
                    }
                }
            }
        }
        if !current.is_empty() {
            return Err(GenError::MalformedQbf("last clause is not terminated by 0".into()));
        }
        Qbf::new(prefix, clauses)
    }

    pub fn to_qdimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars(), self.clauses.len());
        for (i, q) in self.prefix.iter().enumerate() {
            let tag = if *q == Quantifier::Exists { "e" } else { "a" };
            out.push_str(&format!("{tag} {} 0\n", i + 1));
        }
        for c in &self.clauses {
            let lits: Vec<String> = c.iter().map(|l| l.to_string()).collect();
            out.push_str(format!("{} 0\n", lits.join(" ")).trim_start());
        }
        out
    }
}

/// Truth value by recursive quantifier expansion.
pub fn qbf_eval(phi: &Qbf) -> Result<bool, GenError> {
    if phi.num_vars() > MAX_QBF_EVAL_VARS {
        return Err(GenError::EvalBudget(phi.num_vars()));
    }
    fn go(phi: &Qbf, assignment: &mut Vec<bool>) -> bool {
        let i = assignment.len();
        if i == phi.num_vars() {
            return phi.clauses.iter().all(|c| {
                c.iter().any(|&l| assignment[l.unsigned_abs() as usize - 1] == (l > 0))
            });
        }
        let mut branch = |value: bool| {
            assignment.push(value);
            let r = go(phi, assignment);
            assignment.pop();
            r
        };
        match phi.prefix[i] {
            Quantifier::Exists => branch(true) || branch(false),
            Quantifier::Forall => branch(true) && branch(false),
        }
    }
    Ok(go(phi, &mut Vec::new()))
}

/// Arena of the reduction, before normalization.
pub fn qbf_file(phi: &Qbf) -> Result<ArenaFile, GenError> {
    phi.validate()?;
    let q = phi.num_vars();
    let m = phi.clauses.len();
    let clause_vertex = |h: usize| if h > m { "top".to_string() } else { format!("C{h}") };
    // v_q is identified with the first clause vertex
    let chain_vertex = |i: usize| if i == q { clause_vertex(1) } else { format!("v{i}") };

    let mut alphabet = strings(&["a", "b", "c"]);
    alphabet.extend((1..=q).map(|i| format!("a{i}")));

    let mut vertices = Vec::new();
    for i in 1..=q {
        vertices.extend([format!("v{}", i - 1), format!("x{i}"), format!("x{i}_bar")]);
    }
    vertices.extend((1..=m).map(|h| format!("C{h}")));
    vertices.extend(["top".to_string(), "bot".to_string()]);

    let mut edges = Vec::new();
    for i in 1..=q {
        let p = prime(i)?;
        let from = chain_vertex(i - 1);
        let (pos, neg) = (format!("x{i}"), format!("x{i}_bar"));
        match phi.prefix[i - 1] {
            Quantifier::Exists => {
                edges.push(edge(&from, &pos, &multiples("a", p)));
                edges.push(edge(&from, &neg, &non_multiples("b", p)));
                let escape = format!("({}) | {}", non_multiples("a", p), multiples("b", p));
                edges.push(edge(&from, "top", &escape));
            }
            Quantifier::Forall => {
                edges.push(edge(&from, &pos, &multiples("c", p)));
                edges.push(edge(&from, &neg, &non_multiples("c", p)));
            }
        }
        edges.push(edge(&pos, &chain_vertex(i), ".+"));
        edges.push(edge(&neg, &chain_vertex(i), ".+"));
    }
    for (h, clause) in phi.clauses.iter().enumerate() {
        let parts: Vec<String> = clause
            .iter()
            .map(|&lit| {
                let i = lit.unsigned_abs() as usize;
                let letter = format!("a{i}");
                let p = prime(i).expect("validated");
                if lit > 0 {
                    multiples(&letter, p)
                } else {
                    format!("({})", non_multiples(&letter, p))
                }
            })
            .collect();
        if !parts.is_empty() {
            edges.push(edge(&clause_vertex(h + 1), &clause_vertex(h + 2), &parts.join(" | ")));
        }
    }
    edges.push(edge("top", "top", ".+"));

    Ok(ArenaFile {
        alphabet,
        safe: vertices.iter().filter(|v| *v != "bot").cloned().collect(),
        vertices,
        initial: chain_vertex(0),
        default_target: Some(DefaultTarget::All("bot".into())),
        edges,
    })
}

pub fn gen_qbf(phi: &Qbf) -> Result<SafetyGame, GenError> {
    Ok(SafetyGame::from_file(&qbf_file(phi)?)
        .expect("generated arena is well-formed")
        .normalize())
}

/// Every formula with up to `max_vars` variables and up to `max_clauses`
/// clauses whose literals form a nonempty set of at most three over distinct
/// variables, in a fixed order. Clause lists are unordered multisets.
pub fn qbf_corpus(max_vars: usize, max_clauses: usize) -> Vec<Qbf> {
    let mut out = Vec::new();
    for q in 1..=max_vars {
        let prefix: Vec<Quantifier> = (0..q)
            .map(|i| if i % 2 == 0 { Quantifier::Exists } else { Quantifier::Forall })
            .collect();
        // each variable is absent, positive or negative
        let mut clauses: Vec<Vec<i32>> = Vec::new();
        for code in 1..3usize.pow(q as u32) {
            let mut c = Vec::new();
            let mut rest = code;
            for v in 1..=q as i32 {
                match rest % 3 {
                    1 => c.push(v),
                    2 => c.push(-v),
                    _ => {}
                }
                rest /= 3;
            }
            if c.len() <= 3 {
                clauses.push(c);
            }
        }
        for chosen in multisets(clauses.len(), max_clauses) {
            out.push(Qbf {
                prefix: prefix.clone(),
                clauses: chosen.iter().map(|&i| clauses[i].clone()).collect(),
            });
        }
    }
    out
}

/// Nondecreasing index sequences over `0..n` of length at most `max_len`.
fn multisets(n: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| {
                let from = s.last().copied().unwrap_or(0);
                (from..n).map(move |i| {
                    let mut s = s.clone();
                    s.push(i);
                    s
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

const LABEL_POOL: &[&str] = &[
    "a", "b", ".", ".+", "a+", "b+", "(..)+", ".(..)*", "a*ba*", "b | aa+", "mod(a,2,{0})",
    "mod(b,3,{1,2})", "(ab)+", "a.*", ".b", "!(a+)",
];

/// A small random game over `{a, b}` with `2..=max_vertices` vertices, edge
/// labels drawn from a fixed pool, and uncovered words sent to a fresh `bot`.
/// Intended for differential testing.
pub fn random_game_file<R: rand::Rng>(rng: &mut R, max_vertices: usize) -> ArenaFile {
    let n = rng.gen_range(2..=max_vertices.max(2));
    let vertices: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
    let mut edges = Vec::new();
    for from in &vertices {
        for to in &vertices {
            if rng.gen_bool(0.45) {
                let lang = LABEL_POOL[rng.gen_range(0..LABEL_POOL.len())];
                edges.push(edge(from, to, lang));
            }
        }
    }
    let safe = vertices
        .iter()
        .enumerate()
        .filter(|(i, _)| *i == 0 || rng.gen_bool(0.8))
        .map(|(_, v)| v.clone())
        .collect();
    ArenaFile {
        alphabet: strings(&["a", "b"]),
        initial: vertices[0].clone(),
        vertices,
        safe,
        default_target: None,
        edges,
    }
}

/// The three-variable, two-clause formula used to illustrate the reduction.
pub fn fig8_formula() -> Qbf {
    Qbf::new(
        vec![Quantifier::Exists, Quantifier::Forall, Quantifier::Exists],
        vec![vec![1, -2, -3], vec![1, -2, 3]],
    )
    .expect("well-formed")
}

/// The hand-written strategy for the first example: `a` everywhere until
/// `v3`, where the memory of the route taken (even or odd `k`) picks `a^ω`
/// or `b^ω`.
pub fn fig1_hand_strategy() -> StrategyFile {
    let node = |id: &str, vertex: &str, period: &str| NodeEntry {
        id: id.into(),
        vertex: vertex.into(),
        prefix: String::new(),
        period: period.into(),
    };
    let upd = |from: &str, vertex: &str, to: &str| UpdateEntry {
        from: from.into(),
        vertex: vertex.into(),
        to: to.into(),
    };
    StrategyFile {
        nodes: vec![
            node("start", "v0", "a"),
            node("even", "v1", "a"),
            node("odd", "v2", "a"),
            node("even_v3", "v3", "a"),
            node("odd_v3", "v3", "b"),
            node("done", "v5", "a"),
        ],
        root: "start".into(),
        upd: vec![
            upd("start", "v1", "even"),
            upd("start", "v2", "odd"),
            upd("even", "v3", "even_v3"),
            upd("odd", "v3", "odd_v3"),
            upd("even_v3", "v5", "done"),
            upd("odd_v3", "v5", "done"),
            upd("done", "v5", "done"),
        ],
        dead_letter: "a".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        assert_eq!(prime(1), Ok(2));
        assert_eq!(prime(2), Ok(3));
        assert_eq!(prime(3), Ok(5));
        assert_eq!(prime(16), Ok(53));
        assert!(prime(0).is_err() && prime(17).is_err());
        // trial division as an independent check
        let is_prime = |n: u64| n >= 2 && (2..n).all(|d| n % d != 0);
        let mut expected = (2..).filter(|&n| is_prime(n));
        for i in 1..=16 {
            assert_eq!(prime(i).unwrap(), expected.next().unwrap());
        }
    }

    #[test]
    fn examples() {
        let g1 = gen_example(Example::Fig1);
        assert_eq!(g1.arena().num_vertices(), 6);
        let unsafe1: Vec<_> = g1.unsafe_vertices().map(|v| g1.arena().name(v).to_string()).collect();
        assert_eq!(unsafe1, ["v4"]);
        let g2 = gen_example(Example::Fig2);
        assert_eq!(g2.arena().num_vertices(), 4);
        assert_eq!(g2.arena().name(3), "bot");
        assert_eq!(g2.safe_vertices().count(), 3);
        assert!(!g2.arena().determinism_check());
        assert!("fig3".parse::<Example>().is_err());
    }

    #[test]
    fn worstcase_shape() {
        let g = gen_worstcase(2).unwrap();
        assert_eq!(g.arena().num_vertices(), 10);
        assert!(g.arena().determinism_check());
        assert!(gen_worstcase(0).is_err() && gen_worstcase(7).is_err());
        for n in 1..=4 {
            assert_eq!(gen_worstcase(n).unwrap().arena().num_vertices(), 4 * n + 2);
        }
    }

    #[test]
    fn fig8_reduction_shape() {
        let phi = fig8_formula();
        let g = gen_qbf(&phi).unwrap();
        assert_eq!(g.arena().num_vertices(), 13);
        assert_eq!(g.unsafe_vertices().count(), 1);
        assert!(g.arena().completeness_check());
        assert_eq!(qbf_eval(&phi), Ok(true));
    }

    #[test]
    fn qbf_evaluation() {
        let e = Quantifier::Exists;
        let a = Quantifier::Forall;
        assert_eq!(qbf_eval(&Qbf::new(vec![e], vec![vec![1]]).unwrap()), Ok(true));
        let false_one = Qbf::new(vec![e, a], vec![vec![1, 2], vec![-1, 2]]).unwrap();
        assert_eq!(qbf_eval(&false_one), Ok(false));
        assert!(Qbf::new(vec![a], vec![vec![1]]).is_err());
        assert!(Qbf::new(vec![e, e], vec![]).is_err());
        assert!(Qbf::new(vec![e], vec![vec![2]]).is_err());
    }

    #[test]
    fn qdimacs_round_trip() {
        let phi = fig8_formula();
        let text = phi.to_qdimacs();
        assert_eq!(Qbf::from_qdimacs(&text).unwrap(), phi);
        let json = serde_json::to_string(&phi).unwrap();
        assert_eq!(Qbf::from_json(&json).unwrap(), phi);
        assert!(Qbf::from_qdimacs("e 2 0\n1 0\n").is_err());
        assert!(Qbf::from_qdimacs("e 1 0\n1").is_err());
    }

    #[test]
    fn corpus_is_well_formed() {
        let corpus = qbf_corpus(3, 2);
        assert!(corpus.len() >= 40);
        let mut fig8 = fig8_formula();
        fig8.clauses.sort();
        assert!(corpus.iter().any(|p| {
            let mut c = p.clauses.clone();
            c.sort();
            p.prefix == fig8.prefix && c == fig8.clauses
        }));
        for phi in &corpus {
            phi.validate().unwrap();
        }
        let truth: Vec<bool> = corpus.iter().map(|p| qbf_eval(p).unwrap()).collect();
        assert!(truth.contains(&true) && truth.contains(&false));
    }
}
