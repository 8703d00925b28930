//! Running machines that live in the graph.
//!
//! [`exec_stored`] is the stored-program level: the host fetches a state's
//! rows from `G` every step. [`step_virtual`] and [`run_virtual`] go one
//! level further and keep the run state itself in `G`, so a VM can be dumped
//! mid-run, reloaded and continued. [`run_chain`] steps a VM whose machine
//! is the shipped meta-interpreter, which in turn runs an inner VM purely
//! through triple reads and writes.

use std::borrow::Cow;

use crate::encoding::{self, vocab, EncodingError};
use crate::machine::{
    run_with, step_with, HaltReason, Machine, MachineError, Program, Row, RunResult, RunState, TraceEvent,
};
use crate::store::{Env, Graph, Resource, Triple};

/// Source of the meta-interpreter program.
pub const META_PROGRAM: &str = include_str!("../../../programs/meta.stm");

/// The head of the meta-interpreter that names the inner VM.
pub const META_VM_HEAD: &str = "vm";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UniversalError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("vm halted: {0}")]
    VmHalted(Resource),
    #[error("{0} is already a vm")]
    AlreadyVm(Resource),
    #[error("meta-interpreter vm {0} has no `vm` binding")]
    NoInnerVm(Resource),
    #[error("meta-interpreter reached Error: the machine of {0} is outside the supported class")]
    Unsupported(Resource),
}

type Result<T> = std::result::Result<T, UniversalError>;

/// A machine read from its encoding on every fetch, never snapshotted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredProgram {
    pub machine: Resource,
}

impl Program for StoredProgram {
    type Error = UniversalError;

    fn start(&self, g: &Graph) -> Result<String> {
        Ok(encoding::decode_start(g, &self.machine)?)
    }

    fn is_halt(&self, g: &Graph, state: &str) -> Result<bool> {
        Ok(encoding::decode_is_halt(g, &self.machine, state)?)
    }

    fn rows<'a>(&'a self, g: &Graph, state: &str) -> Result<Cow<'a, [Row]>> {
        Ok(Cow::Owned(encoding::decode_rows(g, &self.machine, state)?))
    }
}

/// Runs the machine encoded at `machine` directly from `g`.
pub fn exec_stored(g: Graph, machine: &Resource, max_steps: u64) -> Result<RunResult> {
    run_with(&StoredProgram { machine: machine.clone() }, g, max_steps)
}

/// Adds a fresh VM record for `machine` at `vm`.
pub fn spawn_vm(g: &mut Graph, machine: &Resource, vm: &Resource) -> Result<()> {
    spawn_vm_with(g, machine, vm, Env::new())
}

/// Like [`spawn_vm`] with heads bound up front.
pub fn spawn_vm_with(g: &mut Graph, machine: &Resource, vm: &Resource, env: Env) -> Result<()> {
    if encoding::is_vm(g, vm) {
        return Err(UniversalError::AlreadyVm(vm.clone()));
    }
    let m = encoding::decode_machine(g, machine)?;
    let rs = RunState {
        env,
        ..RunState::at(m.start)
    };
    g.extend(encoding::encode_run_state(&rs, vm, machine)?);
    Ok(())
}

fn set(g: &mut Graph, s: &Resource, p: &str, o: Resource) {
    let p = Resource::uri(p);
    let old: Vec<Triple> = g
        .objects(s, &p)
        .map(|o| Triple::new(s.clone(), p.clone(), o.clone()).expect("uri subject"))
        .collect();
    for t in &old {
        g.remove(t);
    }
    g.write(Triple::new(s.clone(), p, o).expect("uri subject"));
}

/// One step of `vm`, with its state read from and written back to `g`.
pub fn step_virtual(g: &mut Graph, vm: &Resource) -> Result<TraceEvent> {
    let before = encoding::decode_run_state(g, vm)?;
    if before.halted() {
        return Err(UniversalError::VmHalted(vm.clone()));
    }
    let machine = encoding::vm_machine(g, vm)?;
    let mut rs = before.clone();
    let event = step_with(&StoredProgram { machine: machine.clone() }, g, &mut rs, u64::MAX)?;

    if rs.current != before.current {
        set(g, vm, vocab::CURRENT_STATE, encoding::state_node(&machine, &rs.current)?);
    }
    set(g, vm, vocab::STEP_COUNT, Resource::literal(rs.steps.to_string()));
    if let Some(reason) = rs.halt_reason {
        set(g, vm, vocab::HALTED, Resource::literal("true"));
        set(g, vm, vocab::HALT_REASON, Resource::literal(reason.to_string()));
    }
    let nodes = encoding::binding_nodes(g, vm)?;
    for (head, value) in rs.env.iter() {
        if before.env.get(head) == Some(value) {
            continue;
        }
        let b = match nodes.get(head) {
            Some((b, _)) => b.clone(),
            None => {
                let b = encoding::binding_node(vm, head)?;
                g.write(Triple::new(vm.clone(), Resource::uri(vocab::BINDS), b.clone()).expect("uri subject"));
                set(g, &b, vocab::BIND_HEAD, Resource::literal(head));
                b
            }
        };
        set(g, &b, vocab::BIND_VALUE, value.clone());
    }
    Ok(event)
}

/// Steps `vm` until it halts or `max_steps` steps were taken in this call.
///
/// Running out of budget is reported in the result only; the record in the
/// graph stays live so the VM can be resumed.
pub fn run_virtual(mut g: Graph, vm: &Resource, max_steps: u64) -> Result<RunResult> {
    if max_steps == 0 {
        return Err(MachineError::ZeroBudget.into());
    }
    let mut trace = Vec::new();
    let mut state = encoding::decode_run_state(&g, vm)?;
    while !state.halted() {
        if trace.len() as u64 == max_steps {
            state.halt_reason = Some(HaltReason::StepLimit);
            break;
        }
        trace.push(step_virtual(&mut g, vm)?);
        state = encoding::decode_run_state(&g, vm)?;
    }
    Ok(RunResult { graph: g, state, trace })
}

pub fn meta_machine() -> Machine {
    Machine::parse(META_PROGRAM).expect("shipped meta-interpreter parses")
}

/// Node of the numeral `n` in the successor table the meta-interpreter
/// counts steps with.
pub fn numeral_node(n: u64) -> Resource {
    Resource::uri(format!("stm:n{n}"))
}

/// Makes sure `n` and its successor are in the numeral table. The host does
/// the arithmetic; the meta-interpreter only follows `stm:succ` links.
pub fn ensure_numeral(g: &mut Graph, n: u64) {
    let numeral = Resource::uri(vocab::NUMERAL);
    for k in [n, n + 1] {
        g.write(Triple::new(numeral_node(k), numeral.clone(), Resource::literal(k.to_string())).expect("uri"));
    }
    g.write(Triple::new(numeral_node(n), Resource::uri(vocab::SUCC), numeral_node(n + 1)).expect("uri"));
}

/// Encodes `inner` at `inner_machine` and the meta-interpreter at
/// `meta_machine`, then spawns the inner VM and an outer VM pointed at it.
pub fn prepare_chain(
    g: &mut Graph,
    inner: &Machine,
    inner_machine: &Resource,
    inner_vm: &Resource,
    meta_uri: &Resource,
    outer_vm: &Resource,
) -> Result<()> {
    g.extend(encoding::encode_machine(inner, inner_machine)?);
    spawn_vm(g, inner_machine, inner_vm)?;
    if !encoding::is_machine(g, meta_uri) {
        g.extend(encoding::encode_machine(&meta_machine(), meta_uri)?);
    }
    let env: Env = [(META_VM_HEAD.to_string(), inner_vm.clone())].into_iter().collect();
    spawn_vm_with(g, meta_uri, outer_vm, env)
}

/// Steps only `outer`, a meta-interpreter VM, at most `max_host_steps` times.
///
/// Between outer steps the host keeps the numeral table one ahead of the
/// inner VM's step count; that is its only write besides the outer VM's own
/// record.
pub fn run_chain(mut g: Graph, outer: &Resource, max_host_steps: u64) -> Result<RunResult> {
    if max_host_steps == 0 {
        return Err(MachineError::ZeroBudget.into());
    }
    let mut trace = Vec::new();
    let mut state = encoding::decode_run_state(&g, outer)?;
    while !state.halted() {
        if trace.len() as u64 == max_host_steps {
            state.halt_reason = Some(HaltReason::StepLimit);
            break;
        }
        let inner = state
            .env
            .get(META_VM_HEAD)
            .cloned()
            .ok_or_else(|| UniversalError::NoInnerVm(outer.clone()))?;
        if let Some(count) = encoding::opt(&g, &inner, vocab::STEP_COUNT)? {
            if let Ok(n) = count.value().parse() {
                ensure_numeral(&mut g, n);
            }
        }
        trace.push(step_virtual(&mut g, outer)?);
        state = encoding::decode_run_state(&g, outer)?;
    }
    if state.current == "Error" {
        let inner = state.env.get(META_VM_HEAD).cloned().unwrap_or_else(|| outer.clone());
        return Err(UniversalError::Unsupported(inner));
    }
    Ok(RunResult { graph: g, state, trace })
}
