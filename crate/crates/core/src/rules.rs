//! Horn rules over binary predicates: `p(a,?x) & q(?x,?y) => r(a,?y)`.
//!
//! A rule compiles to a δ-table that fires once, on the first binding the
//! machine's reads find. [`apply_rule_once`] and [`fixpoint`] instead fire
//! every binding at once, round by round.

use std::collections::BTreeSet;
use std::fmt;

use crate::machine::{Machine, Row};
use crate::store::{Env, Graph, Pattern, PatternTerm, Resource, Triple};
use crate::syntax::{self, Cursor, SyntaxError, Tok};

pub const DEFAULT_MAX_ROUNDS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("rule body is empty")]
    EmptyBody,
    #[error("head variable ?{0} does not occur in the body")]
    Unsafe(String),
    #[error("predicate {0} must be a uri")]
    LiteralPredicate(Resource),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Resource),
    Var(String),
}

impl Term {
    pub fn var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(r) => r.fmt(f),
            Term::Var(v) => write!(f, "?{v}"),
        }
    }
}

/// `predicate(subject, object)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Resource,
    pub subject: Term,
    pub object: Term,
}

impl Atom {
    pub fn new(predicate: Resource, subject: Term, object: Term) -> Result<Self, RuleError> {
        if !predicate.is_uri() {
            return Err(RuleError::LiteralPredicate(predicate));
        }
        Ok(Atom {
            predicate,
            subject,
            object,
        })
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.subject.var().into_iter().chain(self.object.var())
    }

    /// The head triple under `env`; `None` if a variable is unbound or the
    /// subject would be a literal.
    pub fn instantiate(&self, env: &Env) -> Option<Triple> {
        let resolve = |t: &Term| match t {
            Term::Const(r) => Some(r.clone()),
            Term::Var(v) => env.get(v).cloned(),
        };
        Triple::new(resolve(&self.subject)?, self.predicate.clone(), resolve(&self.object)?).ok()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.predicate, self.subject, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub body: Vec<Atom>,
    pub head: Atom,
}

impl Rule {
    /// Checks the body is non-empty and every head variable occurs in it.
    pub fn new(body: Vec<Atom>, head: Atom) -> Result<Self, RuleError> {
        if body.is_empty() {
            return Err(RuleError::EmptyBody);
        }
        let bound: BTreeSet<&str> = body.iter().flat_map(Atom::vars).collect();
        if let Some(v) = head.vars().find(|v| !bound.contains(v)) {
            return Err(RuleError::Unsafe(v.to_string()));
        }
        Ok(Rule { body, head })
    }

    pub fn parse(text: &str) -> Result<Self, RuleError> {
        parse_rule(text)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.body.iter().map(ToString::to_string).collect();
        write!(f, "{} => {}", body.join(" & "), self.head)
    }
}

fn parse_term(cur: &mut Cursor<'_>) -> Result<Term, SyntaxError> {
    match cur.peek() {
        Some(Tok::Bind(v)) => {
            cur.next();
            Ok(Term::Var(v.clone()))
        }
        Some(Tok::Static(_)) => Err(cur.error("rule variables are written ?name")),
        _ => Ok(Term::Const(cur.constant()?)),
    }
}

fn parse_atom(cur: &mut Cursor<'_>) -> Result<Atom, RuleError> {
    if matches!(cur.peek(), Some(Tok::Literal(_)) | Some(Tok::Integer(_))) {
        return Err(cur.error("predicate must be a uri").into());
    }
    let predicate = cur.constant()?;
    cur.expect(&Tok::LParen)?;
    let subject = parse_term(cur)?;
    cur.expect(&Tok::Comma)?;
    let object = parse_term(cur)?;
    cur.expect(&Tok::RParen)?;
    Atom::new(predicate, subject, object)
}

fn parse_conjunction(cur: &mut Cursor<'_>) -> Result<Vec<Atom>, RuleError> {
    let mut atoms = vec![parse_atom(cur)?];
    while cur.peek() == Some(&Tok::Amp) {
        cur.next();
        atoms.push(parse_atom(cur)?);
    }
    Ok(atoms)
}

fn parse_rule_line(line: &str, lineno: usize) -> Result<Option<Rule>, RuleError> {
    let toks = syntax::tokenize(line, lineno)?;
    if toks.is_empty() {
        return Ok(None);
    }
    let mut cur = Cursor::new(&toks, lineno, line.chars().count());
    let body = parse_conjunction(&mut cur)?;
    cur.expect(&Tok::Arrow)?;
    let head = parse_atom(&mut cur)?;
    cur.expect_end()?;
    Rule::new(body, head).map(Some)
}

/// Parses a single rule.
pub fn parse_rule(text: &str) -> Result<Rule, RuleError> {
    let mut rules = parse_rules(text)?;
    match rules.len() {
        1 => Ok(rules.remove(0)),
        n => Err(SyntaxError::new(1, 1, format!("expected one rule, found {n}")).into()),
    }
}

/// Parses a rule file: one rule per line, `#` comments.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, RuleError> {
    let mut rules = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        rules.extend(parse_rule_line(line, idx + 1)?);
    }
    Ok(rules)
}

/// Parses a query body such as `isA(marko,?x) & likes(?x,?y)`.
pub fn parse_query(text: &str) -> Result<Vec<Atom>, RuleError> {
    let toks = syntax::tokenize(text, 1)?;
    let mut cur = Cursor::new(&toks, 1, text.chars().count());
    let atoms = parse_conjunction(&mut cur)?;
    cur.expect_end()?;
    Ok(atoms)
}

/// Read patterns for `atoms` in order: a variable binds at its first
/// occurrence and is static afterwards.
fn body_patterns(atoms: &[Atom]) -> Vec<Pattern> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    atoms
        .iter()
        .map(|a| {
            let term = |t: &Term| match t {
                Term::Const(r) => PatternTerm::Const(r.clone()),
                Term::Var(v) if seen.contains(v.as_str()) => PatternTerm::Static(v.clone()),
                Term::Var(v) => PatternTerm::Bind(v.clone()),
            };
            let p = Pattern::new(term(&a.subject), PatternTerm::Const(a.predicate.clone()), term(&a.object));
            seen.extend(a.vars());
            p
        })
        .collect()
}

fn state_name(i: usize) -> String {
    match u8::try_from(i) {
        Ok(i) if i < 26 => char::from(b'A' + i).to_string(),
        _ => format!("Q{i}"),
    }
}

/// One state per body atom, then a halt state. Any failed read jumps to the
/// halt state; the last atom's row writes the head.
pub fn compile_rule(r: &Rule) -> Machine {
    let n = r.body.len();
    let halt = state_name(n);
    let heads: BTreeSet<String> = r.body.iter().flat_map(Atom::vars).map(str::to_string).collect();
    let mut rows: Vec<Row> = body_patterns(&r.body)
        .into_iter()
        .enumerate()
        .map(|(i, read)| Row {
            state: state_name(i),
            read: Some(read),
            guards: Vec::new(),
            erase: None,
            write: None,
            next: state_name(i + 1),
            fail: halt.clone(),
        })
        .collect();
    let term = |t: &Term| match t {
        Term::Const(c) => PatternTerm::Const(c.clone()),
        Term::Var(v) => PatternTerm::Static(v.clone()),
    };
    rows[n - 1].write = Some(Pattern::new(
        term(&r.head.subject),
        PatternTerm::Const(r.head.predicate.clone()),
        term(&r.head.object),
    ));
    Machine::new("rule", state_name(0), [halt], heads, rows).expect("compiled rules are well formed")
}

/// Every variable assignment satisfying `body` in `g`, in join order.
fn solutions(g: &Graph, body: &[Atom]) -> Vec<Env> {
    let mut envs = vec![Env::new()];
    for p in body_patterns(body) {
        envs = envs
            .iter()
            .flat_map(|env| g.matches(&p, env).map(|m| m.env).collect::<Vec<_>>())
            .collect();
    }
    envs
}

fn heads_of(g: &Graph, r: &Rule) -> Vec<Triple> {
    solutions(g, &r.body)
        .iter()
        .filter_map(|env| r.head.instantiate(env))
        .collect()
}

/// Adds the head of `r` for every body binding in `g` as it stands; triples
/// added here do not feed this pass. Ill-formed heads are skipped.
pub fn apply_rule_once(g: &Graph, r: &Rule) -> Graph {
    let mut out = g.clone();
    out.extend(heads_of(g, r));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixpoint {
    pub graph: Graph,
    /// Rounds applied, counting the final one that found nothing new.
    pub rounds: u64,
    pub converged: bool,
}

/// Applies all rules simultaneously until a round adds nothing or
/// `max_rounds` rounds have run.
pub fn fixpoint(g: &Graph, rules: &[Rule], max_rounds: u64) -> Fixpoint {
    let mut graph = g.clone();
    for round in 1..=max_rounds {
        let new: Vec<Triple> = rules
            .iter()
            .flat_map(|r| heads_of(&graph, r))
            .filter(|t| !graph.contains(t))
            .collect();
        if new.is_empty() {
            return Fixpoint {
                graph,
                rounds: round,
                converged: true,
            };
        }
        graph.extend(new);
    }
    Fixpoint {
        graph,
        rounds: max_rounds,
        converged: false,
    }
}

/// Result of [`select`]: one column per variable in order of first use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Resource>>,
}

impl fmt::Display for BindingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<String> = self.columns.iter().map(|c| format!("?{c}")).collect();
        writeln!(f, "{}", header.join("\t"))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "{}", cells.join("\t"))?;
        }
        Ok(())
    }
}

/// All satisfying assignments of the conjunctive query `body`, distinct and
/// sorted.
pub fn select(g: &Graph, body: &[Atom]) -> BindingTable {
    let mut columns: Vec<String> = Vec::new();
    for v in body.iter().flat_map(Atom::vars) {
        if !columns.iter().any(|c| c == v) {
            columns.push(v.to_string());
        }
    }
    let rows: BTreeSet<Vec<Resource>> = solutions(g, body)
        .into_iter()
        .map(|env| columns.iter().map(|c| env.get(c).cloned().expect("every column is bound")).collect())
        .collect();
    BindingTable {
        columns,
        rows: rows.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{run, DEFAULT_MAX_STEPS};

    const UNCLE_RULE: &str = "hasParent(marko,?x1) & hasBrother(?x1,?x2) => hasUncle(marko,?x2)";
    const FRIEND_RULE: &str = "hasFriend(?x1,?x2) & hasFriend(?x2,?x3) => hasFriend(?x1,?x3)";

    fn family() -> Graph {
        Graph::parse("marko hasParent carole .\ncarole hasBrother george .\n").unwrap()
    }

    #[test]
    fn parses_rules() {
        let r = parse_rule(UNCLE_RULE).unwrap();
        assert_eq!(r.body.len(), 2);
        assert_eq!(r.to_string(), UNCLE_RULE);
        assert!(parse_rule(FRIEND_RULE).is_ok());
        assert_eq!(
            parse_rule("p(?x,?y) => q(?y,?z)").unwrap_err(),
            RuleError::Unsafe("z".into())
        );
        assert!(matches!(parse_rule("p(?x,?y) q(?x,?y)"), Err(RuleError::Syntax(_))));
        assert!(matches!(parse_rule("\"p\"(?x,?y) => q(?x,?y)"), Err(RuleError::Syntax(_))));
    }

    #[test]
    fn compiles_to_uncle_table() {
        let m = compile_rule(&parse_rule(UNCLE_RULE).unwrap());
        let expected = Machine::parse(
            "machine rule\nstart A\nhalt C\nheads x1 x2\n\
             row A | read (marko hasParent ?x1) | next B | fail C\n\
             row B | read (!x1 hasBrother ?x2) | write (marko hasUncle !x2) | next C | fail C\n",
        )
        .unwrap();
        assert_eq!(m, expected);
        let single = compile_rule(&parse_rule("p(?x,?y) => q(?x,?y)").unwrap());
        assert_eq!(single.states().len(), 2);
    }

    #[test]
    fn uncle_rule_once() {
        let r = parse_rule(UNCLE_RULE).unwrap();
        let g = apply_rule_once(&family(), &r);
        assert_eq!(
            g.dump(),
            "carole hasBrother george .\nmarko hasParent carole .\nmarko hasUncle george .\n"
        );
        assert_eq!(run(&compile_rule(&r), family(), DEFAULT_MAX_STEPS).unwrap().graph, g);
    }

    #[test]
    fn once_is_simultaneous() {
        let r = parse_rule(FRIEND_RULE).unwrap();
        let chain = Graph::parse("a hasFriend b .\nb hasFriend c .\nc hasFriend d .\n").unwrap();
        let once = apply_rule_once(&chain, &r);
        assert_eq!(once.len(), 5);
        assert!(!once.contains(&Triple::uris("a", "hasFriend", "d")));
        assert_eq!(apply_rule_once(&Graph::new(), &r), Graph::new());
    }

    #[test]
    fn friend_closure() {
        let r = parse_rule(FRIEND_RULE).unwrap();
        let chain = Graph::parse("a hasFriend b .\nb hasFriend c .\nc hasFriend d .\n").unwrap();
        let fp = fixpoint(&chain, &[r], 100);
        assert!(fp.converged);
        assert_eq!(fp.graph.len(), 6);
        let limited = fixpoint(&chain, &[parse_rule(FRIEND_RULE).unwrap()], 1);
        assert!(!limited.converged);
        assert_eq!(fixpoint(&chain, &[], 5).graph, chain);
    }

    #[test]
    fn select_query() {
        let g = Graph::parse("marko isA human .\nmarko isA agent .\n").unwrap();
        let t = select(&g, &parse_query("isA(marko,?x)").unwrap());
        assert_eq!(t.columns, ["x"]);
        assert_eq!(t.rows, vec![vec![Resource::uri("agent")], vec![Resource::uri("human")]]);
        assert_eq!(t.to_string(), "?x\nagent\nhuman\n");
        assert!(select(&Graph::new(), &parse_query("isA(marko,?x)").unwrap()).rows.is_empty());

        let body = parse_rule(UNCLE_RULE).unwrap().body;
        let t = select(&family(), &body);
        assert_eq!(t.rows, vec![vec![Resource::uri("carole"), Resource::uri("george")]]);
    }

    #[test]
    fn repeated_variable_in_one_atom() {
        let g = Graph::parse("a likes a .\na likes b .\n").unwrap();
        let t = select(&g, &parse_query("likes(?x,?x)").unwrap());
        assert_eq!(t.rows, vec![vec![Resource::uri("a")]]);
    }
}
