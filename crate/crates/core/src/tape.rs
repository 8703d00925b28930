//! Classic one-tape Turing machines, and the linked-list encoding of a tape
//! as `hasValue`/`nextBit` triples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::machine::HaltReason;
use crate::store::{Env, Graph, Pattern, PatternTerm, Resource, Triple};
use crate::syntax::{self, Cursor, SyntaxError, Tok};

pub const HAS_VALUE: &str = "hasValue";
pub const NEXT_BIT: &str = "nextBit";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TapeError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("invalid tape machine: {0}")]
    Invalid(String),
    #[error("state {state}: no transition for symbol {symbol}")]
    MissingTransition { state: String, symbol: Symbol },
    #[error("state {state}: head moved left of cell 0")]
    LeftOfStart { state: String },
    #[error("tape is empty")]
    EmptyTape,
    #[error("invalid base uri {0:?}")]
    InvalidBase(String),
    #[error("node {0} has no {HAS_VALUE} triple")]
    MissingValue(Resource),
    #[error("node {0} has more than one {HAS_VALUE} triple")]
    MultipleValues(Resource),
    #[error("node {0} has a non-literal value")]
    NonLiteralValue(Resource),
    #[error("node {0} has more than one {NEXT_BIT} triple")]
    Branch(Resource),
    #[error("{NEXT_BIT} chain loops back to {0}")]
    Cycle(Resource),
}

/// A tape cell: a symbol or the blank, written `_`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Blank,
    Sym(String),
}

impl Symbol {
    pub fn new(s: &str) -> Self {
        if s == "_" {
            Symbol::Blank
        } else {
            Symbol::Sym(s.to_string())
        }
    }

    fn as_literal(&self) -> Resource {
        match self {
            Symbol::Blank => Resource::literal("_"),
            Symbol::Sym(s) => Resource::literal(s.as_str()),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Blank => f.write_str("_"),
            Symbol::Sym(s) if syntax::is_ident(s) || s.chars().all(|c| c.is_ascii_digit()) && !s.is_empty() => {
                f.write_str(s)
            }
            Symbol::Sym(s) => f.write_str(&syntax::quote(s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Left,
    Right,
    Stay,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::Left => "lf",
            Move::Right => "rt",
            Move::Stay => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    /// `Some(Symbol::Blank)` is an erase.
    pub write: Option<Symbol>,
    pub motion: Move,
    pub next: String,
}

/// `M = ⟨Q, Γ, δ, q₀, d₀⟩` with δ keyed by (state, symbol read).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuringMachine {
    pub name: String,
    pub start: String,
    pub halts: BTreeSet<String>,
    pub delta: BTreeMap<(String, Symbol), Transition>,
}

impl TuringMachine {
    pub fn states(&self) -> BTreeSet<&str> {
        let mut s: BTreeSet<&str> = self.halts.iter().map(String::as_str).collect();
        s.insert(&self.start);
        s.extend(self.delta.keys().map(|(q, _)| q.as_str()));
        s
    }

    /// Parses the row grammar with `read SYMBOL | write SYMBOL | erase | move lf|rt|none`.
    pub fn parse(text: &str) -> Result<Self, TapeError> {
        let mut name = None;
        let mut start = None;
        let mut halts = BTreeSet::new();
        let mut delta = BTreeMap::new();

        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let toks = syntax::tokenize(line, lineno)?;
            if toks.is_empty() {
                continue;
            }
            let mut cur = Cursor::new(&toks, lineno, line.chars().count());
            match cur.expect_ident("a declaration keyword")?.as_str() {
                "machine" => {
                    name = Some(cur.expect_ident("machine name")?);
                    cur.expect_end()?;
                }
                "start" => {
                    start = Some(cur.expect_ident("start state")?);
                    cur.expect_end()?;
                }
                "halt" => {
                    while !cur.at_end() {
                        halts.insert(cur.expect_ident("halt state")?);
                    }
                }
                "row" => {
                    let (state, read, tr) = parse_tm_row(&mut cur)?;
                    match read {
                        Some(sym) => {
                            let key = (state, sym);
                            if delta.contains_key(&key) {
                                return Err(TapeError::Invalid(format!(
                                    "duplicate transition for state {} reading {}",
                                    key.0, key.1
                                )));
                            }
                            delta.insert(key, tr);
                        }
                        // the `B | ∅ ... | B` convention marks a halt state
                        None if tr.next == state && tr.write.is_none() && tr.motion == Move::Stay => {
                            halts.insert(state);
                        }
                        None => {
                            return Err(SyntaxError::new(lineno, 1, "row needs a `read` symbol").into())
                        }
                    }
                }
                other => {
                    return Err(SyntaxError::new(lineno, 1, format!("unknown declaration `{other}`")).into())
                }
            }
        }

        let tm = TuringMachine {
            name: name.ok_or_else(|| SyntaxError::new(1, 1, "missing `machine NAME` line"))?,
            start: start.ok_or_else(|| SyntaxError::new(1, 1, "missing `start STATE` line"))?,
            halts,
            delta,
        };
        let states = tm.states();
        for ((q, sym), tr) in &tm.delta {
            if !states.contains(tr.next.as_str()) {
                return Err(TapeError::Invalid(format!(
                    "state {q} reading {sym}: unknown state {}",
                    tr.next
                )));
            }
        }
        Ok(tm)
    }
}

fn parse_symbol(cur: &mut Cursor<'_>) -> Result<Symbol, SyntaxError> {
    match cur.next() {
        Some(Tok::Ident(s)) | Some(Tok::Integer(s)) => Ok(Symbol::new(s)),
        Some(Tok::Literal(s)) if s != "_" => Ok(Symbol::Sym(s.clone())),
        _ => Err(cur.error("expected a tape symbol")),
    }
}

fn parse_tm_row(cur: &mut Cursor<'_>) -> Result<(String, Option<Symbol>, Transition), SyntaxError> {
    let state = cur.expect_ident("row state")?;
    let mut read = None;
    let mut write = None;
    let mut motion = None;
    let mut next = None;
    while !cur.at_end() {
        cur.expect(&Tok::Pipe)?;
        let section = cur.expect_ident("a row section")?;
        let seen = match section.as_str() {
            "read" => read.replace(parse_symbol(cur)?).is_some(),
            "write" => write.replace(parse_symbol(cur)?).is_some(),
            "erase" => write.replace(Symbol::Blank).is_some(),
            "move" => {
                let m = match cur.expect_ident("lf, rt or none")?.as_str() {
                    "lf" => Move::Left,
                    "rt" => Move::Right,
                    "none" => Move::Stay,
                    other => return Err(cur.error(format!("unknown move `{other}`"))),
                };
                motion.replace(m).is_some()
            }
            "next" => next.replace(cur.expect_ident("next state")?).is_some(),
            other => return Err(cur.error(format!("unknown tape row section `{other}`"))),
        };
        if seen {
            return Err(cur.error(format!("duplicate or conflicting `{section}` section")));
        }
    }
    let next = next.ok_or_else(|| cur.error("row is missing its `next` section"))?;
    Ok((
        state,
        read,
        Transition {
            write,
            motion: motion.unwrap_or(Move::Stay),
            next,
        },
    ))
}

impl fmt::Display for TuringMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "machine {}", self.name)?;
        writeln!(f, "start {}", self.start)?;
        if !self.halts.is_empty() {
            let hs: Vec<&str> = self.halts.iter().map(String::as_str).collect();
            writeln!(f, "halt {}", hs.join(" "))?;
        }
        for ((q, sym), tr) in &self.delta {
            write!(f, "row {q} | read {sym}")?;
            match &tr.write {
                Some(Symbol::Blank) => write!(f, " | erase")?,
                Some(s) => write!(f, " | write {s}")?,
                None => {}
            }
            writeln!(f, " | move {} | next {}", tr.motion, tr.next)?;
        }
        Ok(())
    }
}

/// The tape `D` and head position `d₀`. Right-infinite: moving past the end
/// appends a blank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tape {
    pub cells: Vec<Symbol>,
    pub head: usize,
}

impl Tape {
    pub fn new(cells: Vec<Symbol>) -> Self {
        Tape { cells, head: 0 }
    }

    /// Space-separated symbols, e.g. `1 1 0 0`.
    pub fn parse(text: &str) -> Result<Self, TapeError> {
        let toks = syntax::tokenize(text, 1)?;
        let mut cur = Cursor::new(&toks, 1, text.chars().count());
        let mut cells = Vec::new();
        while !cur.at_end() {
            cells.push(parse_symbol(&mut cur)?);
        }
        Ok(Tape::new(cells))
    }

    /// Cells without trailing blanks; two tapes holding the same content
    /// compare equal here regardless of how far right a head wandered.
    pub fn content(&self) -> &[Symbol] {
        let end = self
            .cells
            .iter()
            .rposition(|c| *c != Symbol::Blank)
            .map_or(0, |i| i + 1);
        &self.cells[..end]
    }
}

impl fmt::Display for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.cells.iter().map(ToString::to_string).collect();
        f.write_str(&cells.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmRun {
    pub tape: Tape,
    pub state: String,
    pub steps: u64,
    pub halt_reason: HaltReason,
}

/// Applies δ until a halt state or `max_steps` transitions.
pub fn tm_run(tm: &TuringMachine, mut tape: Tape, max_steps: u64) -> Result<TmRun, TapeError> {
    let mut state = tm.start.clone();
    let mut steps = 0;
    loop {
        if tm.halts.contains(&state) {
            return Ok(TmRun {
                tape,
                state,
                steps,
                halt_reason: HaltReason::HaltState,
            });
        }
        if steps >= max_steps {
            return Ok(TmRun {
                tape,
                state,
                steps,
                halt_reason: HaltReason::StepLimit,
            });
        }
        if tape.cells.is_empty() {
            return Err(TapeError::EmptyTape);
        }
        let symbol = tape.cells[tape.head].clone();
        let tr = tm
            .delta
            .get(&(state.clone(), symbol.clone()))
            .ok_or_else(|| TapeError::MissingTransition {
                state: state.clone(),
                symbol,
            })?;
        if let Some(w) = &tr.write {
            tape.cells[tape.head] = w.clone();
        }
        match tr.motion {
            Move::Left => {
                if tape.head == 0 {
                    return Err(TapeError::LeftOfStart { state });
                }
                tape.head -= 1;
            }
            Move::Right => {
                tape.head += 1;
                if tape.head == tape.cells.len() {
                    tape.cells.push(Symbol::Blank);
                }
            }
            Move::Stay => {}
        }
        state = tr.next.clone();
        steps += 1;
    }
}

/// Encodes an n-cell tape as nodes `{base}1..{base}n` with one `hasValue`
/// literal each and `nextBit` links between neighbours: `2n − 1` triples.
pub fn tape_to_graph(tape: &Tape, base: &str) -> Result<Graph, TapeError> {
    let node = |i: usize| {
        Resource::try_uri(format!("{base}{i}")).map_err(|_| TapeError::InvalidBase(base.to_string()))
    };
    let has_value = Resource::uri(HAS_VALUE);
    let next_bit = Resource::uri(NEXT_BIT);
    let mut g = Graph::new();
    for (i, cell) in tape.cells.iter().enumerate() {
        let n = node(i + 1)?;
        g.write(Triple::new(n.clone(), has_value.clone(), cell.as_literal()).expect("uri subject"));
        if i + 1 < tape.cells.len() {
            g.write(Triple::new(n, next_bit.clone(), node(i + 2)?).expect("uri subject"));
        }
    }
    Ok(g)
}

/// Decodes the `nextBit` chain starting at `head`; the result has its head at 0.
pub fn graph_to_tape(g: &Graph, head: &Resource) -> Result<Tape, TapeError> {
    let mut cells = Vec::new();
    let mut seen = BTreeSet::new();
    let mut node = head.clone();
    let env = Env::new();
    loop {
        if !seen.insert(node.clone()) {
            return Err(TapeError::Cycle(node));
        }
        let values = Pattern::new(
            PatternTerm::Const(node.clone()),
            PatternTerm::Const(Resource::uri(HAS_VALUE)),
            PatternTerm::Bind("v".into()),
        );
        let mut hits = g.matches(&values, &env).map(|m| m.triple.o().clone());
        let value = hits.next().ok_or_else(|| TapeError::MissingValue(node.clone()))?;
        if hits.next().is_some() {
            return Err(TapeError::MultipleValues(node));
        }
        match value {
            Resource::Literal(v) => cells.push(Symbol::new(&v)),
            Resource::Uri(_) => return Err(TapeError::NonLiteralValue(node)),
        }

        let links = Pattern::new(
            PatternTerm::Const(node.clone()),
            PatternTerm::Const(Resource::uri(NEXT_BIT)),
            PatternTerm::Bind("n".into()),
        );
        let mut next = g.matches(&links, &env).map(|m| m.triple.o().clone());
        match (next.next(), next.next()) {
            (None, _) => break,
            (Some(n), None) => node = n,
            (Some(_), Some(_)) => return Err(TapeError::Branch(node)),
        }
    }
    Ok(Tape::new(cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const UNARY: &str = "\
machine unary
start A
halt B
row A | read 0 | write 1 | move rt | next B
row A | read 1 | move rt | next A
row B | next B
";

    fn ones_then_zero(k: usize) -> Tape {
        let mut cells = vec![Symbol::new("1"); k];
        cells.push(Symbol::new("0"));
        Tape::new(cells)
    }

    #[test]
    fn unary_increment_of_two() {
        let tm = TuringMachine::parse(UNARY).unwrap();
        let run = tm_run(&tm, Tape::parse("1 1 0 0").unwrap(), 100).unwrap();
        assert_eq!(run.tape.to_string(), "1 1 1 0");
        assert_eq!(run.state, "B");
        assert_eq!(run.steps, 3);
        assert_eq!(run.halt_reason, HaltReason::HaltState);
    }

    #[test]
    fn start_in_halt_leaves_tape() {
        let tm = TuringMachine::parse("machine m\nstart B\nhalt B\n").unwrap();
        let tape = Tape::parse("1 0").unwrap();
        let run = tm_run(&tm, tape.clone(), 10).unwrap();
        assert_eq!((run.tape, run.steps), (tape, 0));
    }

    #[test]
    fn increments_k_ones() {
        let tm = TuringMachine::parse(UNARY).unwrap();
        for k in 0..=10 {
            let run = tm_run(&tm, ones_then_zero(k), 1000).unwrap();
            assert_eq!(run.tape.content(), vec![Symbol::new("1"); k + 1].as_slice());
        }
    }

    #[test]
    fn faults() {
        let tm = TuringMachine::parse(UNARY).unwrap();
        let e = tm_run(&tm, Tape::parse("1 1").unwrap(), 100).unwrap_err();
        assert_eq!(
            e,
            TapeError::MissingTransition {
                state: "A".into(),
                symbol: Symbol::Blank
            }
        );
        let left = TuringMachine::parse("machine m\nstart A\nhalt H\nrow A | read 1 | move lf | next H\n").unwrap();
        assert!(matches!(
            tm_run(&left, Tape::parse("1").unwrap(), 5),
            Err(TapeError::LeftOfStart { .. })
        ));
        assert!(TuringMachine::parse("machine m\nstart A\nrow A | read 1 | next Z\n").is_err());
        assert!(TuringMachine::parse(
            "machine m\nstart A\nhalt A\nrow A | read 1 | next A\nrow A | read 1 | next A\n"
        )
        .is_err());
    }

    #[test]
    fn print_parse_round_trip() {
        let tm = TuringMachine::parse(UNARY).unwrap();
        assert_eq!(TuringMachine::parse(&tm.to_string()).unwrap(), tm);
    }

    #[test]
    fn encodes_tape_as_chain() {
        let g = tape_to_graph(&Tape::parse("1 1 0 0").unwrap(), "bit").unwrap();
        assert_eq!(g.len(), 2 * 4 - 1);
        assert!(g.contains(
            &Triple::new(Resource::uri("bit1"), Resource::uri(HAS_VALUE), Resource::literal("1")).unwrap()
        ));
        assert!(g.contains(&Triple::uris("bit1", NEXT_BIT, "bit2")));
        assert_eq!(tape_to_graph(&Tape::parse("0").unwrap(), "bit").unwrap().len(), 1);
        assert_eq!(
            graph_to_tape(&g, &Resource::uri("bit1")).unwrap(),
            Tape::parse("1 1 0 0").unwrap()
        );
    }

    #[test]
    fn decode_errors() {
        let g = Graph::parse("b1 hasValue \"1\" .").unwrap();
        assert_eq!(graph_to_tape(&g, &Resource::uri("b1")).unwrap().to_string(), "1");

        let g = Graph::parse("b1 hasValue \"1\" .\nb1 hasValue \"0\" .").unwrap();
        assert!(matches!(
            graph_to_tape(&g, &Resource::uri("b1")),
            Err(TapeError::MultipleValues(_))
        ));
        let g = Graph::parse("b1 hasValue 1 .\nb1 nextBit b2 .\nb2 hasValue 0 .\nb2 nextBit b1 .").unwrap();
        assert!(matches!(graph_to_tape(&g, &Resource::uri("b1")), Err(TapeError::Cycle(_))));
        let g = Graph::parse("b1 hasValue 1 .\nb1 nextBit b2 .").unwrap();
        assert!(matches!(
            graph_to_tape(&g, &Resource::uri("b1")),
            Err(TapeError::MissingValue(_))
        ));
    }
}
