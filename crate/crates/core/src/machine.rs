//! Semantic Turing machines: δ-table programs whose heads read, write and
//! erase triples of a [`Graph`].
//!
//! A machine is a list of rows. Each row belongs to a state and may read a
//! pattern, test guards on the freshly bound heads, erase a pattern and write
//! a triple before moving to its `next` state. When no row of the current
//! state fires, the machine moves to the state's `fail` target instead.
//!
//! The interpreter is written against the [`Program`] trait so the same step
//! semantics drive a parsed [`Machine`] and a program read out of the graph.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::store::{Env, Graph, Pattern, PatternTerm, Resource, Triple};
use crate::syntax::{self, Cursor, SyntaxError, Tok};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MachineError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("invalid machine:\n{}", render_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("state {state}, row {row}: cannot write: {reason}")]
    WriteFault {
        state: String,
        row: usize,
        reason: String,
    },
    #[error("machine already halted in state {0}")]
    Halted(String),
    #[error("step budget must be at least 1")]
    ZeroBudget,
}

fn render_diagnostics(ds: &[Diagnostic]) -> String {
    ds.iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GuardOp {
    Eq,
    /// Extension beyond the plain equality test of the original tables.
    Ne,
}

/// A test on a head's binding, evaluated after the row's read.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Guard {
    pub head: String,
    pub op: GuardOp,
    pub constant: Resource,
}

impl Guard {
    pub fn eq(head: impl Into<String>, constant: Resource) -> Self {
        Guard {
            head: head.into(),
            op: GuardOp::Eq,
            constant,
        }
    }

    pub fn ne(head: impl Into<String>, constant: Resource) -> Self {
        Guard {
            head: head.into(),
            op: GuardOp::Ne,
            constant,
        }
    }

    /// An unbound head fails the guard whatever the operator.
    pub fn holds(&self, env: &Env) -> bool {
        match env.get(&self.head) {
            None => false,
            Some(v) => match self.op {
                GuardOp::Eq => *v == self.constant,
                GuardOp::Ne => *v != self.constant,
            },
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            GuardOp::Eq => "=",
            GuardOp::Ne => "!=",
        };
        write!(f, "{}{}{}", self.head, op, self.constant)
    }
}

/// One δ-table row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Row {
    pub state: String,
    pub read: Option<Pattern>,
    pub guards: Vec<Guard>,
    pub erase: Option<Pattern>,
    pub write: Option<Pattern>,
    pub next: String,
    pub fail: String,
}

impl Row {
    /// A row with no read, guards or effects.
    pub fn goto(state: impl Into<String>, next: impl Into<String>) -> Self {
        let state = state.into();
        Row {
            fail: state.clone(),
            state,
            read: None,
            guards: Vec::new(),
            erase: None,
            write: None,
            next: next.into(),
        }
    }

    fn is_trivial_self_loop(&self) -> bool {
        self.read.is_none()
            && self.guards.is_empty()
            && self.erase.is_none()
            && self.write.is_none()
            && self.next == self.state
    }

    fn patterns(&self) -> impl Iterator<Item = &Pattern> {
        self.read
            .iter()
            .chain(self.erase.iter())
            .chain(self.write.iter())
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}", self.state)?;
        if let Some(p) = &self.read {
            write!(f, " | read {p}")?;
        }
        if !self.guards.is_empty() {
            let gs: Vec<String> = self.guards.iter().map(ToString::to_string).collect();
            write!(f, " | guard {}", gs.join(", "))?;
        }
        if let Some(p) = &self.erase {
            write!(f, " | erase {p}")?;
        }
        if let Some(p) = &self.write {
            write!(f, " | write {p}")?;
        }
        write!(f, " | next {} | fail {}", self.next, self.fail)
    }
}

/// A semantic Turing machine `⟨Q, Γ, δ, q₀, X⟩`.
///
/// [`Machine::new`] normalizes (rows grouped by state in name order, guards
/// sorted, all-empty self-loop rows turned into halt declarations) and
/// rejects machines with error diagnostics. The fields stay public so that
/// ill-formed machines can still be built and handed to [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pub name: String,
    pub start: String,
    pub halts: BTreeSet<String>,
    pub heads: BTreeSet<String>,
    pub rows: Vec<Row>,
}

impl Machine {
    pub fn new(
        name: impl Into<String>,
        start: impl Into<String>,
        halts: impl IntoIterator<Item = String>,
        heads: impl IntoIterator<Item = String>,
        rows: Vec<Row>,
    ) -> Result<Self, MachineError> {
        let mut m = Machine {
            name: name.into(),
            start: start.into(),
            halts: halts.into_iter().collect(),
            heads: heads.into_iter().collect(),
            rows,
        };
        m.normalize();
        let errors: Vec<Diagnostic> = validate(&m)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        if errors.is_empty() {
            Ok(m)
        } else {
            Err(MachineError::Invalid(errors))
        }
    }

    fn normalize(&mut self) {
        let mut per_state: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &self.rows {
            *per_state.entry(r.state.as_str()).or_default() += 1;
        }
        let lone_loops: BTreeSet<String> = self
            .rows
            .iter()
            .filter(|r| per_state[r.state.as_str()] == 1 && r.is_trivial_self_loop())
            .map(|r| r.state.clone())
            .collect();
        self.rows.retain(|r| !lone_loops.contains(&r.state));
        self.halts.extend(lone_loops);
        for r in &mut self.rows {
            r.guards.sort();
            r.guards.dedup();
        }
        self.rows.sort_by(|a, b| a.state.cmp(&b.state));
    }

    /// Start, halt and row states.
    pub fn states(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self.halts.iter().cloned().collect();
        s.insert(self.start.clone());
        s.extend(self.rows.iter().map(|r| r.state.clone()));
        s
    }

    pub fn rows_of<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.state == state)
    }

    /// The state taken when no row fires; a state without rows stays put.
    pub fn fail_target<'a>(&'a self, state: &'a str) -> &'a str {
        self.rows_of(state)
            .next()
            .map_or(state, |r| r.fail.as_str())
    }

    pub fn parse(text: &str) -> Result<Self, MachineError> {
        parse_program(text)
    }
}

impl fmt::Display for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "machine {}", self.name)?;
        writeln!(f, "start {}", self.start)?;
        if !self.halts.is_empty() {
            let hs: Vec<&str> = self.halts.iter().map(String::as_str).collect();
            writeln!(f, "halt {}", hs.join(" "))?;
        }
        if !self.heads.is_empty() {
            let hs: Vec<&str> = self.heads.iter().map(String::as_str).collect();
            writeln!(f, "heads {}", hs.join(" "))?;
        }
        for r in &self.rows {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Checks the machine invariants. Errors make a machine unusable; warnings
/// flag unreachable states, static heads that no path ever binds first, and
/// rows attached to halt states.
pub fn validate(m: &Machine) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let states = m.states();

    let mut fails: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (i, r) in m.rows.iter().enumerate() {
        let at = format!("row {i} (state {})", r.state);
        for target in [&r.next, &r.fail] {
            if !states.contains(target) {
                out.push(Diagnostic::error(format!("{at}: unknown state {target}")));
            }
        }
        fails.entry(&r.state).or_default().insert(&r.fail);

        for p in r.patterns() {
            for h in p.terms().into_iter().filter_map(PatternTerm::head) {
                if !m.heads.contains(h) {
                    out.push(Diagnostic::error(format!("{at}: undeclared head {h}")));
                }
            }
            for (pos, t) in [("subject", &p.s), ("predicate", &p.p)] {
                if let PatternTerm::Const(c) = t {
                    if c.is_literal() {
                        out.push(Diagnostic::error(format!(
                            "{at}: literal {c} in {pos} position of {p}"
                        )));
                    }
                }
            }
        }
        for g in &r.guards {
            if !m.heads.contains(&g.head) {
                out.push(Diagnostic::error(format!(
                    "{at}: guard on undeclared head {}",
                    g.head
                )));
            }
        }
        if let Some(w) = &r.write {
            for h in w.bind_heads() {
                out.push(Diagnostic::error(format!(
                    "{at}: bind head ?{h} in write pattern {w}"
                )));
            }
        }
    }
    for (state, targets) in &fails {
        if targets.len() > 1 {
            let ts: Vec<&str> = targets.iter().copied().collect();
            out.push(Diagnostic::error(format!(
                "state {state}: inconsistent fail target ({})",
                ts.join(", ")
            )));
        }
    }

    let reachable = reachable_states(m);
    for s in &states {
        if !reachable.contains(s.as_str()) {
            out.push(Diagnostic::warning(format!("state {s} is unreachable")));
        }
    }
    for h in &m.halts {
        if m.rows_of(h).next().is_some() {
            out.push(Diagnostic::warning(format!(
                "halt state {h} has rows that never fire"
            )));
        }
    }
    out.extend(unbound_static_uses(m));
    out
}

fn reachable_states(m: &Machine) -> BTreeSet<&str> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([m.start.as_str()]);
    while let Some(s) = queue.pop_front() {
        if !seen.insert(s) || m.halts.contains(s) {
            continue;
        }
        for r in m.rows_of(s) {
            queue.push_back(&r.next);
            queue.push_back(&r.fail);
        }
    }
    seen
}

/// Forward may-be-bound analysis: warns about `!h` uses where no path from
/// the start state binds `?h` first.
fn unbound_static_uses(m: &Machine) -> Vec<Diagnostic> {
    let mut bound: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    bound.insert(&m.start, BTreeSet::new());
    let mut queue = VecDeque::from([m.start.as_str()]);
    while let Some(s) = queue.pop_front() {
        if m.halts.contains(s) {
            continue;
        }
        let entry = bound[s].clone();
        for r in m.rows_of(s) {
            let mut post = entry.clone();
            if let Some(p) = &r.read {
                post.extend(p.bind_heads());
            }
            for (target, set) in [(r.next.as_str(), post), (r.fail.as_str(), entry.clone())] {
                match bound.get_mut(target) {
                    None => {
                        bound.insert(target, set);
                        queue.push_back(target);
                    }
                    Some(slot) => {
                        let before = slot.len();
                        slot.extend(set);
                        if slot.len() != before {
                            queue.push_back(target);
                        }
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    for (i, r) in m.rows.iter().enumerate() {
        let Some(entry) = bound.get(r.state.as_str()) else {
            continue;
        };
        let mut post = entry.clone();
        let mut check = |h: &str, set: &BTreeSet<&str>, what: &str| {
            if !set.contains(h) {
                out.push(Diagnostic::warning(format!(
                    "row {i} (state {}): {what} uses head {h} before any path binds it",
                    r.state
                )));
            }
        };
        if let Some(p) = &r.read {
            for h in p.static_heads() {
                check(h, entry, "read");
            }
            post.extend(p.bind_heads());
        }
        for g in &r.guards {
            check(&g.head, &post, "guard");
        }
        for (what, p) in [("erase", &r.erase), ("write", &r.write)] {
            if let Some(p) = p {
                for h in p.static_heads() {
                    check(h, &post, what);
                }
            }
        }
    }
    out
}

/// Parses the program text format.
pub fn parse_program(text: &str) -> Result<Machine, MachineError> {
    let mut name = None;
    let mut start = None;
    let mut halts = Vec::new();
    let mut heads = Vec::new();
    let mut rows: Vec<(Row, bool)> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = syntax::tokenize(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(&toks, lineno, line.chars().count());
        let kw = cur.expect_ident("a declaration keyword")?;
        match kw.as_str() {
            "machine" => {
                let n = match cur.next() {
                    Some(Tok::Ident(s)) | Some(Tok::Iri(s)) => s.clone(),
                    _ => return Err(cur.error("expected machine name").into()),
                };
                cur.expect_end()?;
                name = Some(n);
            }
            "start" => {
                start = Some(cur.expect_ident("start state")?);
                cur.expect_end()?;
            }
            "halt" => {
                halts.push(cur.expect_ident("halt state")?);
                while !cur.at_end() {
                    halts.push(cur.expect_ident("halt state")?);
                }
            }
            "heads" => {
                while !cur.at_end() {
                    heads.push(cur.expect_ident("head name")?);
                }
            }
            "row" => rows.push(parse_row(&mut cur)?),
            other => {
                return Err(SyntaxError::new(lineno, 1, format!("unknown declaration `{other}`")).into())
            }
        }
    }

    let name = name.ok_or_else(|| SyntaxError::new(1, 1, "missing `machine NAME` line"))?;
    let start = start.ok_or_else(|| SyntaxError::new(1, 1, "missing `start STATE` line"))?;

    // rows that omitted `fail` (only allowed when they cannot fail) inherit
    // their state's declared fail target, or loop on themselves
    let declared: BTreeMap<String, String> = rows
        .iter()
        .filter(|(_, explicit)| *explicit)
        .map(|(r, _)| (r.state.clone(), r.fail.clone()))
        .collect();
    let rows = rows
        .into_iter()
        .map(|(mut r, explicit)| {
            if !explicit {
                if let Some(f) = declared.get(&r.state) {
                    r.fail = f.clone();
                }
            }
            r
        })
        .collect();

    Machine::new(name, start, halts, heads, rows)
}

fn parse_row(cur: &mut Cursor<'_>) -> Result<(Row, bool), SyntaxError> {
    let state = cur.expect_ident("row state")?;
    let mut read = None;
    let mut guards = None;
    let mut erase = None;
    let mut write = None;
    let mut next = None;
    let mut fail = None;

    while !cur.at_end() {
        cur.expect(&Tok::Pipe)?;
        let col = cur.col();
        let section = cur.expect_ident("a row section")?;
        let dup = |seen: bool| -> Result<(), SyntaxError> {
            if seen {
                Err(SyntaxError::new(
                    cur.error("").line,
                    col,
                    format!("duplicate `{section}` section"),
                ))
            } else {
                Ok(())
            }
        };
        match section.as_str() {
            "read" => {
                dup(read.is_some())?;
                read = Some(parse_pattern(cur)?);
            }
            "erase" => {
                dup(erase.is_some())?;
                erase = Some(parse_pattern(cur)?);
            }
            "write" => {
                dup(write.is_some())?;
                write = Some(parse_pattern(cur)?);
            }
            "guard" => {
                dup(guards.is_some())?;
                let mut gs = vec![parse_guard(cur)?];
                while cur.peek() == Some(&Tok::Comma) {
                    cur.next();
                    gs.push(parse_guard(cur)?);
                }
                guards = Some(gs);
            }
            "next" => {
                dup(next.is_some())?;
                next = Some(cur.expect_ident("next state")?);
            }
            "fail" => {
                dup(fail.is_some())?;
                fail = Some(cur.expect_ident("fail state")?);
            }
            other => {
                return Err(SyntaxError::new(
                    cur.error("").line,
                    col,
                    format!("unknown row section `{other}`"),
                ))
            }
        }
    }

    let next = next.ok_or_else(|| cur.error("row is missing its `next` section"))?;
    let guards = guards.unwrap_or_default();
    let explicit = fail.is_some();
    if !explicit && (read.is_some() || !guards.is_empty()) {
        return Err(cur.error("a row with a read or guard needs a `fail` section"));
    }
    let fail = fail.unwrap_or_else(|| state.clone());
    Ok((
        Row {
            state,
            read,
            guards,
            erase,
            write,
            next,
            fail,
        },
        explicit,
    ))
}

fn parse_term(cur: &mut Cursor<'_>) -> Result<PatternTerm, SyntaxError> {
    match cur.peek() {
        Some(Tok::Bind(h)) => {
            cur.next();
            Ok(PatternTerm::Bind(h.clone()))
        }
        Some(Tok::Static(h)) => {
            cur.next();
            Ok(PatternTerm::Static(h.clone()))
        }
        _ => cur.constant().map(PatternTerm::Const),
    }
}

pub(crate) fn parse_pattern(cur: &mut Cursor<'_>) -> Result<Pattern, SyntaxError> {
    cur.expect(&Tok::LParen)?;
    let s = parse_term(cur)?;
    let p = parse_term(cur)?;
    let o = parse_term(cur)?;
    cur.expect(&Tok::RParen)?;
    Ok(Pattern::new(s, p, o))
}

fn parse_guard(cur: &mut Cursor<'_>) -> Result<Guard, SyntaxError> {
    let head = cur.expect_ident("guard head")?;
    let op = match cur.next() {
        Some(Tok::Eq) => GuardOp::Eq,
        Some(Tok::Ne) => GuardOp::Ne,
        _ => return Err(cur.error("expected `=` or `!=` in guard")),
    };
    let constant = cur.constant()?;
    Ok(Guard { head, op, constant })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HaltReason {
    HaltState,
    StepLimit,
}

impl fmt::Display for HaltReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HaltReason::HaltState => "halt-state",
            HaltReason::StepLimit => "step-limit",
        })
    }
}

/// Runtime bookkeeping of one machine run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunState {
    pub current: String,
    pub env: Env,
    pub steps: u64,
    pub halt_reason: Option<HaltReason>,
}

impl RunState {
    pub fn initial<P: Program>(program: &P, g: &Graph) -> Result<Self, P::Error> {
        Ok(RunState::at(program.start(g)?))
    }

    pub fn at(state: impl Into<String>) -> Self {
        RunState {
            current: state.into(),
            env: Env::new(),
            steps: 0,
            halt_reason: None,
        }
    }

    pub fn halted(&self) -> bool {
        self.halt_reason.is_some()
    }
}

/// One step of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    /// 1-based step index.
    pub step: u64,
    pub state: String,
    /// Index of the fired row among the state's rows.
    pub row: Option<usize>,
    pub next: String,
    pub env: Env,
    pub written: Vec<Triple>,
    pub erased: Vec<Triple>,
}

impl TraceEvent {
    pub fn matched(&self) -> bool {
        self.row.is_some()
    }
}

fn render_mutation(ts: &[Triple]) -> String {
    let inner: Vec<String> = ts.iter().map(ToString::to_string).collect();
    format!("({})", inner.join("; "))
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = self
            .row
            .map_or_else(|| "none".to_string(), |r| r.to_string());
        write!(
            f,
            "step={} state={} row={} match={} +{} -{}",
            self.step,
            self.state,
            row,
            if self.matched() { "yes" } else { "no" },
            render_mutation(&self.written),
            render_mutation(&self.erased),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub graph: Graph,
    pub state: RunState,
    pub trace: Vec<TraceEvent>,
}

impl RunResult {
    pub fn halt_reason(&self) -> HaltReason {
        self.state.halt_reason.unwrap_or(HaltReason::StepLimit)
    }

    pub fn env(&self) -> &Env {
        &self.state.env
    }
}

/// Where the interpreter fetches δ-table rows from.
pub trait Program {
    type Error: From<MachineError>;

    fn start(&self, g: &Graph) -> Result<String, Self::Error>;

    fn is_halt(&self, g: &Graph, state: &str) -> Result<bool, Self::Error>;

    /// Rows of `state` in dispatch order.
    fn rows<'a>(&'a self, g: &Graph, state: &str) -> Result<Cow<'a, [Row]>, Self::Error>;
}

impl Program for Machine {
    type Error = MachineError;

    fn start(&self, _g: &Graph) -> Result<String, MachineError> {
        Ok(self.start.clone())
    }

    fn is_halt(&self, _g: &Graph, state: &str) -> Result<bool, MachineError> {
        Ok(self.halts.contains(state))
    }

    fn rows<'a>(&'a self, _g: &Graph, state: &str) -> Result<Cow<'a, [Row]>, MachineError> {
        Ok(Cow::Owned(self.rows_of(state).cloned().collect()))
    }
}

/// Performs one transition of `rs` over `g`.
///
/// Rows are tried top-down; the first whose read matches and whose guards
/// hold under the post-read env fires: its erase is applied, then its write,
/// and the heads move. If none fires the state's fail target is taken with
/// env and graph untouched. Either way one step is consumed.
///
/// A machine sitting in a halt state spends one last step halting, so the
/// uncle machine takes A, B, C: three steps.
pub fn step_with<P: Program>(
    program: &P,
    g: &mut Graph,
    rs: &mut RunState,
    max_steps: u64,
) -> Result<TraceEvent, P::Error> {
    if rs.halted() {
        return Err(MachineError::Halted(rs.current.clone()).into());
    }
    if program.is_halt(g, &rs.current)? {
        rs.steps += 1;
        rs.halt_reason = Some(HaltReason::HaltState);
        return Ok(TraceEvent {
            step: rs.steps,
            state: rs.current.clone(),
            row: None,
            next: rs.current.clone(),
            env: rs.env.clone(),
            written: Vec::new(),
            erased: Vec::new(),
        });
    }
    let rows = program.rows(g, &rs.current)?;
    let mut fired = None;
    for (i, row) in rows.iter().enumerate() {
        let env = match &row.read {
            Some(p) => match g.match_first(p, &rs.env) {
                Some(m) => m.env,
                None => continue,
            },
            None => rs.env.clone(),
        };
        if row.guards.iter().all(|gd| gd.holds(&env)) {
            fired = Some((i, row, env));
            break;
        }
    }

    let from = rs.current.clone();
    let mut written = Vec::new();
    let mut erased = Vec::new();
    let row_index = match fired {
        Some((i, row, env)) => {
            let to_write = match &row.write {
                Some(p) => Some(instantiate_write(p, &env).map_err(|reason| {
                    MachineError::WriteFault {
                        state: from.clone(),
                        row: i,
                        reason,
                    }
                })?),
                None => None,
            };
            if let Some(p) = &row.erase {
                erased.extend(g.erase(p, &env));
            }
            if let Some(t) = to_write {
                if g.write(t.clone()) {
                    written.push(t);
                }
            }
            rs.env = env;
            rs.current = row.next.clone();
            Some(i)
        }
        None => {
            rs.current = rows
                .first()
                .map_or_else(|| rs.current.clone(), |r| r.fail.clone());
            None
        }
    };
    drop(rows);

    rs.steps += 1;
    if rs.steps >= max_steps {
        rs.halt_reason = Some(HaltReason::StepLimit);
    }

    Ok(TraceEvent {
        step: rs.steps,
        state: from,
        row: row_index,
        next: rs.current.clone(),
        env: rs.env.clone(),
        written,
        erased,
    })
}

fn instantiate_write(p: &Pattern, env: &Env) -> Result<Triple, String> {
    let mut parts = Vec::with_capacity(3);
    for t in p.terms() {
        let r = match t {
            PatternTerm::Const(r) => r.clone(),
            PatternTerm::Static(h) => env
                .get(h)
                .cloned()
                .ok_or_else(|| format!("head {h} is unbound"))?,
            PatternTerm::Bind(h) => return Err(format!("bind head ?{h} in write")),
        };
        parts.push(r);
    }
    let o = parts.pop().unwrap();
    let pr = parts.pop().unwrap();
    let s = parts.pop().unwrap();
    Triple::new(s, pr, o).map_err(|e| e.to_string())
}

/// Steps `rs` until it halts.
pub fn run_from<P: Program>(
    program: &P,
    mut g: Graph,
    mut rs: RunState,
    max_steps: u64,
) -> Result<RunResult, P::Error> {
    if max_steps == 0 {
        return Err(MachineError::ZeroBudget.into());
    }
    let mut trace = Vec::new();
    while !rs.halted() {
        trace.push(step_with(program, &mut g, &mut rs, max_steps)?);
    }
    Ok(RunResult {
        graph: g,
        state: rs,
        trace,
    })
}

pub fn run_with<P: Program>(program: &P, g: Graph, max_steps: u64) -> Result<RunResult, P::Error> {
    let rs = RunState::initial(program, &g)?;
    run_from(program, g, rs, max_steps)
}

/// Single step of a parsed machine.
pub fn step(
    m: &Machine,
    g: &mut Graph,
    rs: &mut RunState,
    max_steps: u64,
) -> Result<TraceEvent, MachineError> {
    step_with(m, g, rs, max_steps)
}

/// Runs `m` on `g` until a halt state or `max_steps` transitions.
pub fn run(m: &Machine, g: Graph, max_steps: u64) -> Result<RunResult, MachineError> {
    run_with(m, g, max_steps)
}
