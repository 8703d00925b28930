//! Machines and run states as triples.
//!
//! Node identifiers are derived from the machine uri `m`:
//!
//! | node        | uri               |
//! |-------------|-------------------|
//! | state `A`   | `m:q:A`           |
//! | head `x1`   | `m:h:x1`          |
//! | row `i`     | `m:r{i}`          |
//! | term        | `m:r{i}:readS` .. |
//! | guard `j`   | `m:r{i}:g{j}`     |
//!
//! Rows of a state form a `stm:firstRow`/`stm:nextRow` list and the guards
//! of a row a `stm:firstGuard`/`stm:nextGuard` list, so a program walking an
//! encoding never needs arithmetic.

use std::collections::{BTreeMap, BTreeSet};

use crate::machine::{Guard, GuardOp, HaltReason, Machine, MachineError, Row, RunState};
use crate::store::{Env, Graph, Pattern, PatternTerm, Resource, Triple};

pub mod vocab {
    pub const PREFIX: &str = "stm:";

    pub const TYPE: &str = "stm:type";
    pub const MACHINE: &str = "stm:Machine";
    pub const START_STATE: &str = "stm:startState";
    pub const HALT_STATE: &str = "stm:haltState";
    pub const HAS_ROWS: &str = "stm:hasRows";
    pub const FIRST_ROW: &str = "stm:firstRow";
    pub const NEXT_ROW: &str = "stm:nextRow";
    pub const ROW_STATE: &str = "stm:rowState";
    pub const READ: [&str; 3] = ["stm:readS", "stm:readP", "stm:readO"];
    pub const ERASE: [&str; 3] = ["stm:eraseS", "stm:eraseP", "stm:eraseO"];
    pub const WRITE: [&str; 3] = ["stm:writeS", "stm:writeP", "stm:writeO"];
    pub const FIRST_GUARD: &str = "stm:firstGuard";
    pub const NEXT_GUARD: &str = "stm:nextGuard";
    pub const GUARD_HEAD: &str = "stm:guardHead";
    pub const GUARD_OP: &str = "stm:guardOp";
    pub const GUARD_CONST: &str = "stm:guardConst";
    pub const EQ: &str = "stm:eq";
    pub const NE: &str = "stm:ne";
    pub const NEXT_STATE: &str = "stm:nextState";
    pub const FAIL_STATE: &str = "stm:failState";
    pub const HEAD: &str = "stm:head";
    pub const HEAD_CLASS: &str = "stm:Head";
    pub const HEAD_NAME: &str = "stm:headName";
    pub const MODE: &str = "stm:mode";
    pub const BIND: &str = "stm:bind";
    pub const STATIC: &str = "stm:static";
    pub const CONST: &str = "stm:const";
    pub const CONST_VALUE: &str = "stm:constValue";
    pub const TERM_HEAD: &str = "stm:termHead";

    pub const VM: &str = "stm:VM";
    pub const EXECUTES_MACHINE: &str = "stm:executesMachine";
    pub const CURRENT_STATE: &str = "stm:currentState";
    pub const STEP_COUNT: &str = "stm:stepCount";
    pub const BINDS: &str = "stm:binds";
    pub const BIND_HEAD: &str = "stm:bindHead";
    pub const BIND_VALUE: &str = "stm:bindValue";
    pub const HALTED: &str = "stm:halted";
    pub const HALT_REASON: &str = "stm:haltReason";

    pub const NUMERAL: &str = "stm:numeral";
    pub const SUCC: &str = "stm:succ";
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodingError {
    #[error("{0} is in the reserved stm: vocabulary")]
    Reserved(Resource),
    #[error("{0} is not a valid node name")]
    InvalidName(String),
    #[error("not a machine: {0}")]
    NotAMachine(Resource),
    #[error("machine {0} has no stm:startState")]
    MissingStart(Resource),
    #[error("row list cycle at {0}")]
    RowListCycle(Resource),
    #[error("dangling row {row}: not a row of state {state}")]
    DanglingRow { row: Resource, state: Resource },
    #[error("term {term} has unknown mode {mode}")]
    UnknownMode { term: Resource, mode: Resource },
    #[error("not a vm: {0}")]
    NotAVm(Resource),
    #[error("ambiguous VM state: {0} has several stm:currentState triples")]
    AmbiguousState(Resource),
    #[error("{node}: {message}")]
    Malformed { node: Resource, message: String },
    #[error(transparent)]
    Machine(#[from] MachineError),
}

type Result<T> = std::result::Result<T, EncodingError>;

fn v(term: &str) -> Resource {
    Resource::uri(term)
}

fn node(text: String) -> Result<Resource> {
    Resource::try_uri(text.as_str()).map_err(|_| EncodingError::InvalidName(text))
}

fn triple(s: &Resource, p: &str, o: Resource) -> Triple {
    Triple::new(s.clone(), v(p), o).expect("subjects here are uris")
}

fn malformed(node: &Resource, message: impl Into<String>) -> EncodingError {
    EncodingError::Malformed {
        node: node.clone(),
        message: message.into(),
    }
}

pub fn is_reserved(r: &Resource) -> bool {
    r.is_uri() && r.value().starts_with(vocab::PREFIX)
}

/// Triples whose predicate is outside the `stm:` vocabulary.
pub fn is_data_triple(t: &Triple) -> bool {
    !is_reserved(t.p())
}

pub fn data_triples(g: &Graph) -> Graph {
    g.iter().filter(|t| is_data_triple(t)).cloned().collect()
}

pub fn state_node(machine: &Resource, state: &str) -> Result<Resource> {
    node(format!("{}:q:{state}", machine.value()))
}

pub fn state_name(machine: &Resource, state: &Resource) -> Result<String> {
    let prefix = format!("{}:q:", machine.value());
    match state {
        Resource::Uri(s) if s.starts_with(&prefix) => Ok(s[prefix.len()..].to_string()),
        _ => Err(malformed(state, format!("not a state of machine {machine}"))),
    }
}

pub fn head_node(machine: &Resource, head: &str) -> Result<Resource> {
    node(format!("{}:h:{head}", machine.value()))
}

/// Binding node the host mints for `head` of `vm`.
pub fn binding_node(vm: &Resource, head: &str) -> Result<Resource> {
    node(format!("{}:b:{head}", vm.value()))
}

/// The single object of `⟨s p ·⟩`, if any; more than one is malformed.
pub(crate) fn opt(g: &Graph, s: &Resource, p: &str) -> Result<Option<Resource>> {
    let p = v(p);
    let mut it = g.objects(s, &p);
    match (it.next(), it.next()) {
        (None, _) => Ok(None),
        (Some(o), None) => Ok(Some(o.clone())),
        _ => Err(malformed(s, format!("more than one {p}"))),
    }
}

pub(crate) fn one(g: &Graph, s: &Resource, p: &str) -> Result<Resource> {
    opt(g, s, p)?.ok_or_else(|| malformed(s, format!("missing {p}")))
}

fn literal(g: &Graph, s: &Resource, p: &str) -> Result<String> {
    match one(g, s, p)? {
        Resource::Literal(l) => Ok(l.to_string()),
        other => Err(malformed(s, format!("{p} must be a literal, found {other}"))),
    }
}

fn objects(g: &Graph, s: &Resource, p: &str) -> Vec<Resource> {
    let p = v(p);
    g.objects(s, &p).cloned().collect()
}

/// The Ŝ fragment describing `m` at `machine`.
pub fn encode_machine(m: &Machine, machine: &Resource) -> Result<Graph> {
    if !machine.is_uri() || is_reserved(machine) {
        return Err(EncodingError::Reserved(machine.clone()));
    }
    let mut g = Graph::new();
    let q = |s: &str| state_node(machine, s);

    g.write(triple(machine, vocab::TYPE, v(vocab::MACHINE)));
    g.write(triple(machine, vocab::START_STATE, q(&m.start)?));
    for h in &m.halts {
        g.write(triple(machine, vocab::HALT_STATE, q(h)?));
    }
    for h in &m.heads {
        let hn = head_node(machine, h)?;
        g.write(triple(machine, vocab::HEAD, hn.clone()));
        g.write(triple(&hn, vocab::TYPE, v(vocab::HEAD_CLASS)));
        g.write(triple(&hn, vocab::HEAD_NAME, Resource::literal(h.as_str())));
    }

    let mut prev: BTreeMap<&str, Resource> = BTreeMap::new();
    for (i, row) in m.rows.iter().enumerate() {
        let r = node(format!("{}:r{i}", machine.value()))?;
        let qn = q(&row.state)?;
        match prev.insert(&row.state, r.clone()) {
            Some(p) => g.write(triple(&p, vocab::NEXT_ROW, r.clone())),
            None => {
                g.write(triple(machine, vocab::HAS_ROWS, qn.clone()));
                g.write(triple(&qn, vocab::FIRST_ROW, r.clone()))
            }
        };
        g.write(triple(&r, vocab::ROW_STATE, qn));
        for (pattern, preds) in [
            (&row.read, vocab::READ),
            (&row.erase, vocab::ERASE),
            (&row.write, vocab::WRITE),
        ] {
            let Some(pattern) = pattern else { continue };
            for (term, pred) in pattern.terms().into_iter().zip(preds) {
                let t = node(format!("{}:{}", r.value(), &pred[vocab::PREFIX.len()..]))?;
                g.write(triple(&r, pred, t.clone()));
                match term {
                    PatternTerm::Const(c) => {
                        g.write(triple(&t, vocab::MODE, v(vocab::CONST)));
                        g.write(triple(&t, vocab::CONST_VALUE, c.clone()));
                    }
                    PatternTerm::Bind(h) | PatternTerm::Static(h) => {
                        let mode = if matches!(term, PatternTerm::Bind(_)) {
                            vocab::BIND
                        } else {
                            vocab::STATIC
                        };
                        g.write(triple(&t, vocab::MODE, v(mode)));
                        g.write(triple(&t, vocab::TERM_HEAD, head_node(machine, h)?));
                    }
                }
            }
        }
        for (j, guard) in row.guards.iter().enumerate() {
            let gn = node(format!("{}:g{j}", r.value()))?;
            let op = match guard.op {
                GuardOp::Eq => vocab::EQ,
                GuardOp::Ne => vocab::NE,
            };
            match j {
                0 => g.write(triple(&r, vocab::FIRST_GUARD, gn.clone())),
                _ => g.write(triple(
                    &node(format!("{}:g{}", r.value(), j - 1))?,
                    vocab::NEXT_GUARD,
                    gn.clone(),
                )),
            };
            g.write(triple(&gn, vocab::GUARD_HEAD, head_node(machine, &guard.head)?));
            g.write(triple(&gn, vocab::GUARD_OP, v(op)));
            g.write(triple(&gn, vocab::GUARD_CONST, guard.constant.clone()));
        }
        g.write(triple(&r, vocab::NEXT_STATE, q(&row.next)?));
        g.write(triple(&r, vocab::FAIL_STATE, q(&row.fail)?));
    }
    Ok(g)
}

pub fn is_machine(g: &Graph, machine: &Resource) -> bool {
    machine.is_uri() && g.contains(&triple(machine, vocab::TYPE, v(vocab::MACHINE)))
}

pub(crate) fn decode_start(g: &Graph, machine: &Resource) -> Result<String> {
    if !is_machine(g, machine) {
        return Err(EncodingError::NotAMachine(machine.clone()));
    }
    let q = opt(g, machine, vocab::START_STATE)?.ok_or_else(|| EncodingError::MissingStart(machine.clone()))?;
    state_name(machine, &q)
}

pub(crate) fn decode_is_halt(g: &Graph, machine: &Resource, state: &str) -> Result<bool> {
    Ok(g.contains(&triple(machine, vocab::HALT_STATE, state_node(machine, state)?)))
}

fn head_name(g: &Graph, hn: &Resource) -> Result<String> {
    literal(g, hn, vocab::HEAD_NAME)
}

fn decode_term(g: &Graph, t: &Resource) -> Result<PatternTerm> {
    let mode = one(g, t, vocab::MODE)?;
    match mode.value() {
        vocab::CONST if mode.is_uri() => Ok(PatternTerm::Const(one(g, t, vocab::CONST_VALUE)?)),
        vocab::BIND | vocab::STATIC if mode.is_uri() => {
            let name = head_name(g, &one(g, t, vocab::TERM_HEAD)?)?;
            Ok(if mode.value() == vocab::BIND {
                PatternTerm::Bind(name)
            } else {
                PatternTerm::Static(name)
            })
        }
        _ => Err(EncodingError::UnknownMode {
            term: t.clone(),
            mode,
        }),
    }
}

fn decode_pattern(g: &Graph, r: &Resource, preds: [&str; 3]) -> Result<Option<Pattern>> {
    let [s, p, o] = preds.map(|pred| opt(g, r, pred));
    match (s?, p?, o?) {
        (None, None, None) => Ok(None),
        (Some(s), Some(p), Some(o)) => Ok(Some(Pattern::new(
            decode_term(g, &s)?,
            decode_term(g, &p)?,
            decode_term(g, &o)?,
        ))),
        _ => Err(malformed(r, format!("incomplete pattern {}", preds.join("/")))),
    }
}

fn decode_row(g: &Graph, machine: &Resource, r: &Resource, state: &str) -> Result<Row> {
    let mut guards = Vec::new();
    let mut seen = BTreeSet::new();
    let mut cursor = opt(g, r, vocab::FIRST_GUARD)?;
    while let Some(gn) = cursor {
        if !seen.insert(gn.clone()) {
            return Err(malformed(r, format!("guard list cycle at {gn}")));
        }
        cursor = opt(g, &gn, vocab::NEXT_GUARD)?;
        let op = one(g, &gn, vocab::GUARD_OP)?;
        let op = match op.value() {
            vocab::EQ => GuardOp::Eq,
            vocab::NE => GuardOp::Ne,
            _ => return Err(malformed(&gn, format!("unknown guard op {op}"))),
        };
        guards.push(Guard {
            head: head_name(g, &one(g, &gn, vocab::GUARD_HEAD)?)?,
            op,
            constant: one(g, &gn, vocab::GUARD_CONST)?,
        });
    }
    Ok(Row {
        state: state.to_string(),
        read: decode_pattern(g, r, vocab::READ)?,
        guards,
        erase: decode_pattern(g, r, vocab::ERASE)?,
        write: decode_pattern(g, r, vocab::WRITE)?,
        next: state_name(machine, &one(g, r, vocab::NEXT_STATE)?)?,
        fail: state_name(machine, &one(g, r, vocab::FAIL_STATE)?)?,
    })
}

/// Rows of `state`, read from `g` by walking its row list.
pub fn decode_rows(g: &Graph, machine: &Resource, state: &str) -> Result<Vec<Row>> {
    let q = state_node(machine, state)?;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    let mut cursor = opt(g, &q, vocab::FIRST_ROW)?;
    while let Some(r) = cursor {
        if !seen.insert(r.clone()) {
            return Err(EncodingError::RowListCycle(r));
        }
        if !r.is_uri() || !g.contains(&triple(&r, vocab::ROW_STATE, q.clone())) {
            return Err(EncodingError::DanglingRow { row: r, state: q });
        }
        rows.push(decode_row(g, machine, &r, state)?);
        cursor = opt(g, &r, vocab::NEXT_ROW)?;
    }
    Ok(rows)
}

/// Reads back the machine at `machine`; its name is the uri text.
pub fn decode_machine(g: &Graph, machine: &Resource) -> Result<Machine> {
    let start = decode_start(g, machine)?;
    let halts = objects(g, machine, vocab::HALT_STATE)
        .iter()
        .map(|q| state_name(machine, q))
        .collect::<Result<Vec<_>>>()?;
    let heads = objects(g, machine, vocab::HEAD)
        .iter()
        .map(|hn| head_name(g, hn))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for q in objects(g, machine, vocab::HAS_ROWS) {
        rows.extend(decode_rows(g, machine, &state_name(machine, &q)?)?);
    }
    Ok(Machine::new(machine.value(), start, halts, heads, rows)?)
}

/// The Ŝ* record of `rs` for a VM running `machine`.
pub fn encode_run_state(rs: &RunState, vm: &Resource, machine: &Resource) -> Result<Graph> {
    if !vm.is_uri() || is_reserved(vm) {
        return Err(EncodingError::Reserved(vm.clone()));
    }
    let mut g = Graph::new();
    g.write(triple(vm, vocab::EXECUTES_MACHINE, machine.clone()));
    g.write(triple(vm, vocab::CURRENT_STATE, state_node(machine, &rs.current)?));
    g.write(triple(vm, vocab::STEP_COUNT, Resource::literal(rs.steps.to_string())));
    g.write(triple(vm, vocab::HALTED, Resource::literal(rs.halted().to_string())));
    if let Some(reason) = rs.halt_reason {
        g.write(triple(vm, vocab::HALT_REASON, Resource::literal(reason.to_string())));
    }
    for (head, value) in rs.env.iter() {
        let b = binding_node(vm, head)?;
        g.write(triple(vm, vocab::BINDS, b.clone()));
        g.write(triple(&b, vocab::BIND_HEAD, Resource::literal(head)));
        g.write(triple(&b, vocab::BIND_VALUE, value.clone()));
    }
    Ok(g)
}

pub fn is_vm(g: &Graph, vm: &Resource) -> bool {
    vm.is_uri() && g.objects(vm, &v(vocab::EXECUTES_MACHINE)).next().is_some()
}

/// The machine a VM executes.
pub fn vm_machine(g: &Graph, vm: &Resource) -> Result<Resource> {
    if !vm.is_uri() {
        return Err(EncodingError::NotAVm(vm.clone()));
    }
    opt(g, vm, vocab::EXECUTES_MACHINE)?.ok_or_else(|| EncodingError::NotAVm(vm.clone()))
}

/// Binding nodes of `vm` keyed by head name. A node without a
/// `stm:bindValue` is an empty slot.
pub(crate) fn binding_nodes(g: &Graph, vm: &Resource) -> Result<BTreeMap<String, (Resource, Option<Resource>)>> {
    let mut out = BTreeMap::new();
    for b in objects(g, vm, vocab::BINDS) {
        if !b.is_uri() {
            return Err(malformed(vm, format!("binding node {b} is a literal")));
        }
        let head = literal(g, &b, vocab::BIND_HEAD)?;
        let value = opt(g, &b, vocab::BIND_VALUE)?;
        if out.insert(head.clone(), (b, value)).is_some() {
            return Err(malformed(vm, format!("several bindings for head {head}")));
        }
    }
    Ok(out)
}

pub fn decode_run_state(g: &Graph, vm: &Resource) -> Result<RunState> {
    let machine = vm_machine(g, vm)?;
    let current = {
        let pred = v(vocab::CURRENT_STATE);
        let mut it = g.objects(vm, &pred);
        match (it.next(), it.next()) {
            (Some(q), None) => state_name(&machine, q)?,
            (None, _) => return Err(malformed(vm, "missing stm:currentState")),
            _ => return Err(EncodingError::AmbiguousState(vm.clone())),
        }
    };
    let steps = literal(g, vm, vocab::STEP_COUNT)?;
    let steps = steps
        .parse()
        .map_err(|_| malformed(vm, format!("step count {steps:?} is not a decimal count")))?;
    let halt_reason = match literal(g, vm, vocab::HALTED)?.as_str() {
        "false" => None,
        "true" => Some(match literal(g, vm, vocab::HALT_REASON)?.as_str() {
            "halt-state" => HaltReason::HaltState,
            "step-limit" => HaltReason::StepLimit,
            other => return Err(malformed(vm, format!("unknown halt reason {other:?}"))),
        }),
        other => return Err(malformed(vm, format!("stm:halted must be \"true\" or \"false\", found {other:?}"))),
    };
    let env: Env = binding_nodes(g, vm)?
        .into_iter()
        .filter_map(|(head, (_, value))| value.map(|v| (head, v)))
        .collect();
    Ok(RunState {
        current,
        env,
        steps,
        halt_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNCLE: &str = include_str!("../../../programs/uncle.stm");

    fn uri(s: &str) -> Resource {
        Resource::uri(s)
    }

    #[test]
    fn uncle_round_trips() {
        let m = Machine::parse(UNCLE).unwrap();
        let g = encode_machine(&m, &uri("uncle")).unwrap();
        assert_eq!(decode_machine(&g, &uri("uncle")).unwrap(), m);
        assert_eq!(g.objects(&uri("uncle"), &uri(vocab::HAS_ROWS)).count(), 2);
        assert!(g.contains(&Triple::uris("uncle:r1", vocab::WRITE[2], "uncle:r1:writeO")));
        assert!(g.contains(&Triple::uris("uncle:r1:writeO", vocab::TERM_HEAD, "uncle:h:x2")));
    }

    #[test]
    fn name_follows_uri() {
        let m = Machine::parse(UNCLE).unwrap();
        let g = encode_machine(&m, &uri("prog")).unwrap();
        let back = decode_machine(&g, &uri("prog")).unwrap();
        assert_eq!(back.name, "prog");
        assert_eq!(back.rows, m.rows);
    }

    #[test]
    fn halt_only_machine() {
        let m = Machine::parse("machine h\nstart H\nhalt H\n").unwrap();
        let g = encode_machine(&m, &uri("h")).unwrap();
        assert_eq!(
            g.dump(),
            "h stm:haltState h:q:H .\nh stm:startState h:q:H .\nh stm:type stm:Machine .\n"
        );
        assert_eq!(decode_machine(&g, &uri("h")).unwrap(), m);
    }

    #[test]
    fn heads_are_reified() {
        let m = Machine::parse(UNCLE).unwrap();
        let g = encode_machine(&m, &uri("uncle")).unwrap();
        assert!(g.iter().all(|t| {
            !(t.o().is_literal() && (t.o().value().starts_with('?') || t.o().value().starts_with('!')))
        }));
    }

    #[test]
    fn reserved_uri_rejected() {
        let m = Machine::parse(UNCLE).unwrap();
        assert!(matches!(
            encode_machine(&m, &uri("stm:Machine")),
            Err(EncodingError::Reserved(_))
        ));
    }

    #[test]
    fn decode_errors() {
        let m = Machine::parse(UNCLE).unwrap();
        let mut g = encode_machine(&m, &uri("uncle")).unwrap();
        assert_eq!(
            decode_machine(&g, &uri("other")).unwrap_err().to_string(),
            "not a machine: other"
        );

        let mut no_start = g.clone();
        no_start.remove(&Triple::uris("uncle", vocab::START_STATE, "uncle:q:A"));
        assert!(matches!(
            decode_machine(&no_start, &uri("uncle")),
            Err(EncodingError::MissingStart(_))
        ));

        let mut bad_mode = g.clone();
        bad_mode.remove(&Triple::uris("uncle:r0:readS", vocab::MODE, vocab::CONST));
        bad_mode.write(Triple::uris("uncle:r0:readS", vocab::MODE, "stm:wild"));
        assert!(matches!(
            decode_machine(&bad_mode, &uri("uncle")),
            Err(EncodingError::UnknownMode { .. })
        ));

        let mut dangling = g.clone();
        dangling.write(Triple::uris("uncle:r0", vocab::NEXT_ROW, "nowhere"));
        assert!(matches!(
            decode_machine(&dangling, &uri("uncle")),
            Err(EncodingError::DanglingRow { .. })
        ));

        g.write(Triple::uris("uncle:r0", vocab::NEXT_ROW, "uncle:r0"));
        let e = decode_machine(&g, &uri("uncle")).unwrap_err();
        assert!(e.to_string().starts_with("row list cycle"), "{e}");
    }

    #[test]
    fn fresh_run_state() {
        let g = encode_run_state(&RunState::at("A"), &uri("vm"), &uri("uncle")).unwrap();
        assert_eq!(
            g.dump(),
            "vm stm:currentState uncle:q:A .\n\
             vm stm:executesMachine uncle .\n\
             vm stm:halted \"false\" .\n\
             vm stm:stepCount \"0\" .\n"
        );
        let rs = decode_run_state(&g, &uri("vm")).unwrap();
        assert_eq!(rs, RunState::at("A"));
        assert!(rs.env.is_empty());
    }

    #[test]
    fn bindings_and_halt() {
        let mut rs = RunState::at("C");
        rs.env.bind("x1", uri("carole"));
        rs.steps = 3;
        rs.halt_reason = Some(HaltReason::HaltState);
        let g = encode_run_state(&rs, &uri("vm"), &uri("uncle")).unwrap();
        let b = binding_node(&uri("vm"), "x1").unwrap();
        assert!(g.contains(&Triple::new(b.clone(), uri(vocab::BIND_HEAD), Resource::literal("x1")).unwrap()));
        assert!(g.contains(&Triple::new(b, uri(vocab::BIND_VALUE), uri("carole")).unwrap()));
        assert_eq!(decode_run_state(&g, &uri("vm")).unwrap(), rs);
    }

    #[test]
    fn ambiguous_state() {
        let mut g = encode_run_state(&RunState::at("A"), &uri("vm"), &uri("uncle")).unwrap();
        g.write(Triple::uris("vm", vocab::CURRENT_STATE, "uncle:q:B"));
        assert_eq!(
            decode_run_state(&g, &uri("vm")).unwrap_err().to_string(),
            "ambiguous VM state: vm has several stm:currentState triples"
        );
        assert!(matches!(
            decode_run_state(&g, &uri("nobody")),
            Err(EncodingError::NotAVm(_))
        ));
    }

    #[test]
    fn data_triples_skip_vocabulary() {
        let mut g = encode_run_state(&RunState::at("A"), &uri("vm"), &uri("uncle")).unwrap();
        g.write(Triple::uris("marko", "hasParent", "carole"));
        assert_eq!(data_triples(&g).dump(), "marko hasParent carole .\n");
    }
}
