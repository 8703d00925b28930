//! In-memory triple store with the three machine primitives: read (match),
//! write and erase.
//!
//! A [`Graph`] is a set of [`Triple`]s kept in canonical order: lexicographic
//! over subject, predicate, then object, with uri objects sorting before
//! literal objects of the same text. Every read returns the canonically first
//! agreeing triple, so machine runs are reproducible.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::syntax::{self, Cursor, SyntaxError, Tok};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("invalid uri {0:?}: must be non-empty with no whitespace or angle brackets")]
    InvalidUri(String),
    #[error("{position} of a triple must be a uri, found literal {value:?}")]
    LiteralPosition {
        position: &'static str,
        value: String,
    },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// A uri symbol or a literal.
///
/// The derived order puts every uri before every literal and otherwise
/// compares the text, which is exactly the object ordering the canonical
/// triple order needs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resource {
    Uri(Arc<str>),
    Literal(Arc<str>),
}

impl Resource {
    pub fn try_uri(value: impl Into<Arc<str>>) -> Result<Self, StoreError> {
        let value = value.into();
        if value.is_empty()
            || value
                .chars()
                .any(|c| c.is_whitespace() || c == '<' || c == '>')
        {
            return Err(StoreError::InvalidUri(value.to_string()));
        }
        Ok(Resource::Uri(value))
    }

    /// Builds a uri, panicking on an invalid value. Meant for known-good constants.
    pub fn uri(value: impl Into<Arc<str>>) -> Self {
        Self::try_uri(value).expect("invalid uri constant")
    }

    pub fn literal(value: impl Into<Arc<str>>) -> Self {
        Resource::Literal(value.into())
    }

    pub fn value(&self) -> &str {
        match self {
            Resource::Uri(v) | Resource::Literal(v) => v,
        }
    }

    pub fn is_uri(&self) -> bool {
        matches!(self, Resource::Uri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Resource::Literal(_))
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resource::Uri(v) if syntax::is_ident(v) => f.write_str(v),
            Resource::Uri(v) => write!(f, "<{v}>"),
            Resource::Literal(v) => f.write_str(&syntax::quote(v)),
        }
    }
}

/// One edge `⟨s, p, o⟩`; subject and predicate are always uris.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    s: Resource,
    p: Resource,
    o: Resource,
}

impl Triple {
    pub fn new(s: Resource, p: Resource, o: Resource) -> Result<Self, StoreError> {
        for (position, r) in [("subject", &s), ("predicate", &p)] {
            if let Resource::Literal(v) = r {
                return Err(StoreError::LiteralPosition {
                    position,
                    value: v.to_string(),
                });
            }
        }
        Ok(Triple { s, p, o })
    }

    /// Shorthand for an all-uri triple. Panics on invalid uris.
    pub fn uris(s: &str, p: &str, o: &str) -> Self {
        Triple {
            s: Resource::uri(s),
            p: Resource::uri(p),
            o: Resource::uri(o),
        }
    }

    pub fn s(&self) -> &Resource {
        &self.s
    }

    pub fn p(&self) -> &Resource {
        &self.p
    }

    pub fn o(&self) -> &Resource {
        &self.o
    }

    pub fn positions(&self) -> [&Resource; 3] {
        [&self.s, &self.p, &self.o]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.s, self.p, self.o)
    }
}

/// Head-name → resource bindings of a running machine.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Env(BTreeMap<String, Resource>);

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, head: &str) -> Option<&Resource> {
        self.0.get(head)
    }

    /// Binds `head`, replacing any earlier binding.
    pub fn bind(&mut self, head: impl Into<String>, value: Resource) {
        self.0.insert(head.into(), value);
    }

    pub fn unbind(&mut self, head: &str) -> Option<Resource> {
        self.0.remove(head)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Resource)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, Resource)> for Env {
    fn from_iter<I: IntoIterator<Item = (String, Resource)>>(iter: I) -> Self {
        Env(iter.into_iter().collect())
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

/// One position of a query pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternTerm {
    Const(Resource),
    /// `?x`: matches anything and moves the head to the matched resource.
    Bind(String),
    /// `!x`: stands for the resource the head currently points at.
    Static(String),
}

impl PatternTerm {
    pub fn head(&self) -> Option<&str> {
        match self {
            PatternTerm::Const(_) => None,
            PatternTerm::Bind(h) | PatternTerm::Static(h) => Some(h),
        }
    }

    /// Resolves static heads and constants against `env`. Bind heads and
    /// unbound statics yield `None`.
    pub fn resolve(&self, env: &Env) -> Option<Resource> {
        match self {
            PatternTerm::Const(r) => Some(r.clone()),
            PatternTerm::Static(h) => env.get(h).cloned(),
            PatternTerm::Bind(_) => None,
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Const(r) => r.fmt(f),
            PatternTerm::Bind(h) => write!(f, "?{h}"),
            PatternTerm::Static(h) => write!(f, "!{h}"),
        }
    }
}

/// A three-position query `⟨a, b, c⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    pub s: PatternTerm,
    pub p: PatternTerm,
    pub o: PatternTerm,
}

impl Pattern {
    pub fn new(s: PatternTerm, p: PatternTerm, o: PatternTerm) -> Self {
        Pattern { s, p, o }
    }

    /// The ground pattern denoting exactly `t`.
    pub fn ground(t: &Triple) -> Self {
        Pattern {
            s: PatternTerm::Const(t.s.clone()),
            p: PatternTerm::Const(t.p.clone()),
            o: PatternTerm::Const(t.o.clone()),
        }
    }

    pub fn terms(&self) -> [&PatternTerm; 3] {
        [&self.s, &self.p, &self.o]
    }

    pub fn bind_heads(&self) -> impl Iterator<Item = &str> {
        self.terms().into_iter().filter_map(|t| match t {
            PatternTerm::Bind(h) => Some(h.as_str()),
            _ => None,
        })
    }

    pub fn static_heads(&self) -> impl Iterator<Item = &str> {
        self.terms().into_iter().filter_map(|t| match t {
            PatternTerm::Static(h) => Some(h.as_str()),
            _ => None,
        })
    }

    /// Substitutes `env` into every position and builds the triple; `None`
    /// when a position is a bind head, an unbound static, or a literal in
    /// subject/predicate position.
    pub fn instantiate(&self, env: &Env) -> Option<Triple> {
        let s = self.s.resolve(env)?;
        let p = self.p.resolve(env)?;
        let o = self.o.resolve(env)?;
        Triple::new(s, p, o).ok()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.s, self.p, self.o)
    }
}

/// A successful read: the matched triple and the env extended with the
/// pattern's bind heads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub triple: Triple,
    pub env: Env,
}

enum Slot<'a> {
    Fixed(Resource),
    Free(&'a str),
}

/// The triple set `G`.
///
/// Besides the canonical set, three hash indexes (by subject, predicate and
/// object) narrow the candidates of a read. Index buckets are themselves
/// ordered, so the first agreeing candidate is the canonical first match.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    by_s: HashMap<Resource, BTreeSet<Triple>>,
    by_p: HashMap<Resource, BTreeSet<Triple>>,
    by_o: HashMap<Resource, BTreeSet<Triple>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    /// Triples in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    /// `W`: adds `t`. Returns whether the graph changed.
    pub fn write(&mut self, t: Triple) -> bool {
        if self.triples.contains(&t) {
            return false;
        }
        self.by_s.entry(t.s.clone()).or_default().insert(t.clone());
        self.by_p.entry(t.p.clone()).or_default().insert(t.clone());
        self.by_o.entry(t.o.clone()).or_default().insert(t.clone());
        self.triples.insert(t);
        true
    }

    /// Removes exactly `t`. Returns whether it was present.
    pub fn remove(&mut self, t: &Triple) -> bool {
        if !self.triples.remove(t) {
            return false;
        }
        for (index, key) in [
            (&mut self.by_s, &t.s),
            (&mut self.by_p, &t.p),
            (&mut self.by_o, &t.o),
        ] {
            if let Some(bucket) = index.get_mut(key) {
                bucket.remove(t);
                if bucket.is_empty() {
                    index.remove(key);
                }
            }
        }
        true
    }

    /// `R`: the canonically first triple agreeing with `pattern` under `env`.
    ///
    /// An unbound static head, or a literal in subject/predicate position
    /// after substitution, is a no-match.
    pub fn match_first(&self, pattern: &Pattern, env: &Env) -> Option<Match> {
        self.matches(pattern, env).next()
    }

    /// Every agreeing triple, in canonical order.
    pub fn matches<'a>(
        &'a self,
        pattern: &'a Pattern,
        env: &'a Env,
    ) -> Box<dyn Iterator<Item = Match> + 'a> {
        let mut slots = Vec::with_capacity(3);
        for (i, term) in pattern.terms().into_iter().enumerate() {
            let slot = match term {
                PatternTerm::Bind(h) => Slot::Free(h.as_str()),
                other => match other.resolve(env) {
                    Some(r) if i < 2 && r.is_literal() => return Box::new(std::iter::empty()),
                    Some(r) => Slot::Fixed(r),
                    None => return Box::new(std::iter::empty()),
                },
            };
            slots.push(slot);
        }

        let empty: &BTreeSet<Triple> = empty_set();
        let mut candidates: Option<&'a BTreeSet<Triple>> = None;
        for (slot, index) in slots.iter().zip([&self.by_s, &self.by_p, &self.by_o]) {
            if let Slot::Fixed(r) = slot {
                let bucket = index.get(r).unwrap_or(empty);
                if candidates.is_none_or(|c| bucket.len() < c.len()) {
                    candidates = Some(bucket);
                }
            }
        }
        let candidates = candidates.unwrap_or(&self.triples);

        Box::new(candidates.iter().filter_map(move |t| {
            let mut out = env.clone();
            let mut fresh: Vec<(&str, &Resource)> = Vec::new();
            for (slot, value) in slots.iter().zip(t.positions()) {
                match slot {
                    Slot::Fixed(r) => {
                        if r != value {
                            return None;
                        }
                    }
                    Slot::Free(h) => {
                        if let Some((_, prev)) = fresh.iter().find(|(name, _)| name == h) {
                            if *prev != value {
                                return None;
                            }
                        } else {
                            fresh.push((h, value));
                        }
                    }
                }
            }
            for (h, v) in fresh {
                out.bind(h, v.clone());
            }
            Some(Match {
                triple: t.clone(),
                env: out,
            })
        }))
    }

    /// `E`: removes the triple `R(pattern)` resolves to. A non-matching
    /// pattern leaves the graph unchanged.
    pub fn erase(&mut self, pattern: &Pattern, env: &Env) -> Option<Triple> {
        let hit = self.match_first(pattern, env)?.triple;
        self.remove(&hit);
        Some(hit)
    }

    /// Objects of `⟨s p ·⟩`, in canonical order.
    pub fn objects<'a>(&'a self, s: &'a Resource, p: &'a Resource) -> impl Iterator<Item = &'a Resource> + 'a {
        self.by_s
            .get(s)
            .into_iter()
            .flatten()
            .filter(move |t| t.p == *p)
            .map(|t| &t.o)
    }

    /// Subjects of `⟨· p o⟩`, in canonical order.
    pub fn subjects<'a>(&'a self, p: &'a Resource, o: &'a Resource) -> impl Iterator<Item = &'a Resource> + 'a {
        self.by_o
            .get(o)
            .into_iter()
            .flatten()
            .filter(move |t| t.p == *p)
            .map(|t| &t.s)
    }

    /// Adds every triple of `other`.
    pub fn extend<I: IntoIterator<Item = Triple>>(&mut self, other: I) {
        for t in other {
            self.write(t);
        }
    }

    /// Parses the line-oriented graph format.
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let mut g = Graph::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let toks = syntax::tokenize(line, lineno)?;
            if toks.is_empty() {
                continue;
            }
            let mut cur = Cursor::new(&toks, lineno, line.chars().count());
            let s = node(&mut cur, "subject")?;
            let p = node(&mut cur, "predicate")?;
            let o = cur.constant()?;
            cur.expect(&Tok::Dot)?;
            cur.expect_end()?;
            // s and p are uris by construction
            g.write(Triple { s, p, o });
        }
        Ok(g)
    }

    /// Canonical text form: one `s p o .` line per triple.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_string());
            out.push_str(" .\n");
        }
        out
    }
}

fn empty_set() -> &'static BTreeSet<Triple> {
    static EMPTY: BTreeSet<Triple> = BTreeSet::new();
    &EMPTY
}

fn node(cur: &mut Cursor<'_>, what: &str) -> Result<Resource, SyntaxError> {
    match cur.peek() {
        Some(Tok::Ident(_)) | Some(Tok::Iri(_)) => cur.constant(),
        Some(t) => Err(cur.error(format!(
            "expected {what} (identifier or <uri>), found {t}"
        ))),
        None => Err(cur.error(format!("expected {what}, found end of line"))),
    }
}

impl FromStr for Graph {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Graph::parse(s)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = Graph::new();
        g.extend(iter);
        g
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::collections::btree_set::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

impl IntoIterator for Graph {
    type Item = Triple;
    type IntoIter = std::collections::btree_set::IntoIter<Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.into_iter()
    }
}
