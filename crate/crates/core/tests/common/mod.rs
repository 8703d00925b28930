//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

pub mod golden;

use rand::seq::SliceRandom;
use rand::Rng;

use semtape::machine::{Guard, HaltReason, Machine, Row, RunState};
use semtape::store::{Env, Graph, Pattern, PatternTerm, Resource, Triple};
use semtape::tape::{Symbol, Tape};

pub const NODES: [&str; 4] = ["a", "b", "c", "d"];
pub const PREDICATES: [&str; 2] = ["p", "q"];
pub const LITERALS: [&str; 2] = ["0", "1"];
pub const HEADS: [&str; 3] = ["x", "y", "z"];

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn read_repo(rel: &str) -> String {
    std::fs::read_to_string(repo_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Every `*.stm` program shipped in programs/, sorted by file name.
pub fn shipped_programs() -> Vec<(String, Machine)> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(repo_path("programs")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "stm") {
            let text = std::fs::read_to_string(&path).unwrap();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let m = Machine::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            out.push((name, m));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn uri(s: &str) -> Resource {
    Resource::uri(s)
}

pub fn node<R: Rng>(rng: &mut R) -> Resource {
    uri(NODES.choose(rng).unwrap())
}

pub fn object<R: Rng>(rng: &mut R) -> Resource {
    if rng.gen_bool(0.25) {
        Resource::literal(*LITERALS.choose(rng).unwrap())
    } else {
        node(rng)
    }
}

pub fn random_triple<R: Rng>(rng: &mut R) -> Triple {
    Triple::new(node(rng), uri(PREDICATES.choose(rng).unwrap()), object(rng)).unwrap()
}

pub fn random_graph<R: Rng>(rng: &mut R, max: usize) -> Graph {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| random_triple(rng)).collect()
}

/// Which pattern shapes the generator may produce.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Anything the engine accepts, with constant predicates.
    Any,
    /// Reads with const/static subject and predicate; the class the shipped
    /// meta-interpreter handles.
    MetaClass,
}

fn head<R: Rng>(rng: &mut R) -> String {
    HEADS.choose(rng).unwrap().to_string()
}

fn read_pattern<R: Rng>(rng: &mut R, shape: Shape) -> Pattern {
    let s = match (shape, rng.gen_range(0..4)) {
        (Shape::Any, 0) => PatternTerm::Bind(head(rng)),
        (_, 3) => PatternTerm::Static(head(rng)),
        _ => PatternTerm::Const(node(rng)),
    };
    let o = match rng.gen_range(0..4) {
        0 => PatternTerm::Const(object(rng)),
        1 => PatternTerm::Static(head(rng)),
        _ => PatternTerm::Bind(head(rng)),
    };
    Pattern::new(s, PatternTerm::Const(uri(PREDICATES.choose(rng).unwrap())), o)
}

/// A const, or a static head the row's own read binds so it is bound
/// whenever the row fires.
fn mutation_term<R: Rng>(rng: &mut R, bound: &[String], gen: impl Fn(&mut R) -> Resource) -> PatternTerm {
    if !bound.is_empty() && rng.gen_bool(0.5) {
        PatternTerm::Static(bound.choose(rng).unwrap().clone())
    } else {
        PatternTerm::Const(gen(rng))
    }
}

/// ≤5 states, ≤2 rows per state, heads drawn from x, y, z.
pub fn random_machine<R: Rng>(rng: &mut R, shape: Shape) -> Machine {
    let n = rng.gen_range(1..=5);
    let states: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
    let mut targets = states.clone();
    targets.push("H".into());
    let mut rows = Vec::new();
    for state in &states {
        let fail = targets.choose(rng).unwrap().clone();
        for _ in 0..rng.gen_range(1..=2) {
            let read = rng.gen_bool(0.85).then(|| read_pattern(rng, shape));
            let bound: Vec<String> = read
                .as_ref()
                .map(|p| p.bind_heads().map(str::to_string).collect())
                .unwrap_or_default();
            let mut guards = Vec::new();
            for _ in 0..rng.gen_range(0..=1) {
                let c = object(rng);
                guards.push(if rng.gen_bool(0.5) { Guard::eq(head(rng), c) } else { Guard::ne(head(rng), c) });
            }
            let erase = rng.gen_bool(0.3).then(|| {
                Pattern::new(
                    mutation_term(rng, &[], node),
                    PatternTerm::Const(uri(PREDICATES.choose(rng).unwrap())),
                    mutation_term(rng, &bound, object),
                )
            });
            let write = rng.gen_bool(0.5).then(|| {
                Pattern::new(
                    PatternTerm::Const(node(rng)),
                    PatternTerm::Const(uri(PREDICATES.choose(rng).unwrap())),
                    mutation_term(rng, &bound, object),
                )
            });
            rows.push(Row {
                state: state.clone(),
                read,
                guards,
                erase,
                write,
                next: targets.choose(rng).unwrap().clone(),
                fail: fail.clone(),
            });
        }
    }
    Machine::new(
        "m",
        "S0",
        ["H".to_string()],
        HEADS.iter().map(|h| h.to_string()),
        rows,
    )
    .expect("generated machines are valid")
}

/// Literal text drawn from a mix of plain, escaped and non-ascii characters.
pub fn random_text<R: Rng>(rng: &mut R) -> String {
    const CHARS: &[char] = &['a', 'Z', '0', ' ', '"', '\\', '\n', '\t', 'é', '→', '#', '.'];
    (0..rng.gen_range(0..8)).map(|_| *CHARS.choose(rng).unwrap()).collect()
}

pub fn random_run_state<R: Rng>(rng: &mut R) -> RunState {
    let mut env = Env::new();
    for h in HEADS {
        match rng.gen_range(0..3) {
            0 => {}
            1 => env.bind(h, node(rng)),
            _ => env.bind(h, Resource::literal(random_text(rng))),
        }
    }
    RunState {
        current: format!("S{}", rng.gen_range(0..5)),
        env,
        steps: rng.gen(),
        halt_reason: match rng.gen_range(0..3) {
            0 => None,
            1 => Some(HaltReason::HaltState),
            _ => Some(HaltReason::StepLimit),
        },
    }
}

pub fn random_tape<R: Rng>(rng: &mut R, max: usize) -> Tape {
    let n = rng.gen_range(1..=max);
    Tape::new(
        (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => Symbol::Blank,
                1 => Symbol::new("0"),
                _ => Symbol::new("1"),
            })
            .collect(),
    )
}

/// `k` ones followed by a zero.
pub fn unary(k: usize) -> Tape {
    let mut cells = vec![Symbol::new("1"); k];
    cells.push(Symbol::new("0"));
    Tape::new(cells)
}

/// Written and erased triples of each step, in order.
pub fn mutations(trace: &[semtape::machine::TraceEvent]) -> Vec<(Vec<Triple>, Vec<Triple>)> {
    trace.iter().map(|e| (e.written.clone(), e.erased.clone())).collect()
}
