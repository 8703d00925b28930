use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use semtape::encoding;
use semtape::machine::{step_with, HaltReason, Machine, Program, RunState, TraceEvent, DEFAULT_MAX_STEPS};
use semtape::rules::{self, DEFAULT_MAX_ROUNDS};
use semtape::store::{Env, Graph, Resource};
use semtape::tape::{self, Tape, TuringMachine};
use semtape::universal::{self, StoredProgram};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (graph format 1, program format 1)");

#[derive(Parser)]
#[command(name = "semtape", version = VERSION, about = "Turing machines that read and write a triple store")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Graphs {
    /// Graph file; repeat to take the union.
    #[arg(long = "graph", short = 'g', value_name = "FILE")]
    graphs: Vec<PathBuf>,
}

#[derive(Args)]
struct Budget {
    #[arg(long, env = "SEMTAPE_MAX_STEPS", default_value_t = DEFAULT_MAX_STEPS,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of standard output.
    #[arg(long, short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a δ-table program directly.
    Run {
        #[command(flatten)]
        graphs: Graphs,
        #[arg(long, short = 'p')]
        program: PathBuf,
        #[command(flatten)]
        budget: Budget,
        /// Print one line per step on standard error.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Run a classic tape machine and print the final tape.
    Tm {
        #[arg(long, short = 'p')]
        program: PathBuf,
        /// Tape symbols, e.g. "1 1 0 0".
        #[arg(long)]
        tape: String,
        #[command(flatten)]
        budget: Budget,
        /// Print the final tape as a hasValue/nextBit graph with this node prefix.
        #[arg(long, value_name = "BASE")]
        as_graph: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Encode a program as triples.
    Encode {
        #[arg(long, short = 'p')]
        program: PathBuf,
        /// Machine node; defaults to the program's name.
        #[arg(long)]
        uri: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Run a machine stored in the graph.
    ExecStored {
        #[command(flatten)]
        graphs: Graphs,
        #[arg(long)]
        machine: String,
        #[command(flatten)]
        budget: Budget,
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Add a virtual machine record to the graph.
    Spawn {
        #[command(flatten)]
        graphs: Graphs,
        #[arg(long)]
        machine: String,
        #[arg(long)]
        vm: String,
        /// Initial binding HEAD=VALUE; repeatable.
        #[arg(long = "bind", value_name = "HEAD=VALUE")]
        binds: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Advance a virtual machine by one step.
    StepVirtual {
        #[command(flatten)]
        graphs: Graphs,
        #[arg(long)]
        vm: String,
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Step a virtual machine until it halts.
    RunVirtual {
        #[command(flatten)]
        graphs: Graphs,
        #[arg(long)]
        vm: String,
        #[command(flatten)]
        budget: Budget,
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Step a meta-interpreter VM, which runs its inner VM.
    RunChain {
        #[command(flatten)]
        graphs: Graphs,
        #[arg(long)]
        outer: String,
        #[command(flatten)]
        budget: Budget,
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Apply Horn rules.
    Rule {
        #[command(flatten)]
        graphs: Graphs,
        #[arg(long, short = 'r')]
        rules: PathBuf,
        /// One simultaneous pass.
        #[arg(long, conflicts_with = "fixpoint", required_unless_present = "fixpoint")]
        once: bool,
        /// Repeat until nothing new is derived.
        #[arg(long)]
        fixpoint: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS, value_parser = clap::value_parser!(u64).range(1..))]
        max_rounds: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Answer a conjunctive query such as 'isA(marko,?x)'.
    Query {
        #[command(flatten)]
        graphs: Graphs,
        query: String,
        #[command(flatten)]
        out: Output,
    },
    /// Print the union of the graphs in canonical order.
    Dump {
        #[command(flatten)]
        graphs: Graphs,
        #[command(flatten)]
        out: Output,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(graphs: &Graphs) -> Result<Graph> {
    let mut g = Graph::new();
    for path in &graphs.graphs {
        g.extend(Graph::parse(&read(path)?).with_context(|| format!("in {}", path.display()))?);
    }
    Ok(g)
}

fn uri(text: &str) -> Result<Resource> {
    Resource::try_uri(text).map_err(Into::into)
}

fn emit(out: &Output, text: &str) -> Result<()> {
    match &out.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn exit_for(reason: HaltReason) -> ExitCode {
    match reason {
        HaltReason::HaltState => ExitCode::SUCCESS,
        HaltReason::StepLimit => ExitCode::from(2),
    }
}

fn show(trace: bool, event: &TraceEvent) {
    if trace {
        eprintln!("{event}");
    }
}

/// Steps `program` to a halt, streaming trace lines as it goes.
fn drive<P: Program>(program: &P, mut g: Graph, budget: u64, trace: bool) -> Result<(Graph, HaltReason)>
where
    P::Error: std::error::Error + Send + Sync + 'static,
{
    let mut rs = RunState::initial(program, &g)?;
    while !rs.halted() {
        show(trace, &step_with(program, &mut g, &mut rs, budget)?);
    }
    Ok((g, rs.halt_reason.unwrap_or(HaltReason::StepLimit)))
}

fn parse_binding(text: &str) -> Result<(String, Resource)> {
    let Some((head, value)) = text.split_once('=') else {
        bail!("binding {text:?} is not HEAD=VALUE");
    };
    let value = match value.strip_prefix('"').and_then(|v| v.strip_suffix('"')) {
        Some(lit) => Resource::literal(lit),
        None => uri(value.trim_start_matches('<').trim_end_matches('>'))?,
    };
    Ok((head.to_string(), value))
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            graphs,
            program,
            budget,
            trace,
            out,
        } => {
            let m = Machine::parse(&read(&program)?).with_context(|| format!("in {}", program.display()))?;
            let (g, reason) = drive(&m, load(&graphs)?, budget.max_steps, trace)?;
            emit(&out, &g.dump())?;
            Ok(exit_for(reason))
        }
        Command::Tm {
            program,
            tape: cells,
            budget,
            as_graph,
            out,
        } => {
            let tm = TuringMachine::parse(&read(&program)?).with_context(|| format!("in {}", program.display()))?;
            let run = tape::tm_run(&tm, Tape::parse(&cells)?, budget.max_steps)?;
            let text = match as_graph {
                Some(base) => tape::tape_to_graph(&run.tape, &base)?.dump(),
                None => format!("{}\n", run.tape),
            };
            emit(&out, &text)?;
            Ok(exit_for(run.halt_reason))
        }
        Command::Encode { program, uri: at, out } => {
            let m = Machine::parse(&read(&program)?).with_context(|| format!("in {}", program.display()))?;
            let at = uri(at.as_deref().unwrap_or(&m.name))?;
            emit(&out, &encoding::encode_machine(&m, &at)?.dump())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExecStored {
            graphs,
            machine,
            budget,
            trace,
            out,
        } => {
            let program = StoredProgram { machine: uri(&machine)? };
            let (g, reason) = drive(&program, load(&graphs)?, budget.max_steps, trace)?;
            emit(&out, &g.dump())?;
            Ok(exit_for(reason))
        }
        Command::Spawn {
            graphs,
            machine,
            vm,
            binds,
            out,
        } => {
            let mut g = load(&graphs)?;
            let env: Env = binds.iter().map(|b| parse_binding(b)).collect::<Result<_>>()?;
            universal::spawn_vm_with(&mut g, &uri(&machine)?, &uri(&vm)?, env)?;
            emit(&out, &g.dump())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::StepVirtual { graphs, vm, trace, out } => {
            let mut g = load(&graphs)?;
            show(trace, &universal::step_virtual(&mut g, &uri(&vm)?)?);
            emit(&out, &g.dump())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::RunVirtual {
            graphs,
            vm,
            budget,
            trace,
            out,
        } => {
            let vm = uri(&vm)?;
            let mut g = load(&graphs)?;
            let mut taken = 0;
            while !encoding::decode_run_state(&g, &vm)?.halted() && taken < budget.max_steps {
                show(trace, &universal::step_virtual(&mut g, &vm)?);
                taken += 1;
            }
            let halted = encoding::decode_run_state(&g, &vm)?.halted();
            emit(&out, &g.dump())?;
            Ok(exit_for(if halted { HaltReason::HaltState } else { HaltReason::StepLimit }))
        }
        Command::RunChain {
            graphs,
            outer,
            budget,
            trace,
            out,
        } => {
            let r = universal::run_chain(load(&graphs)?, &uri(&outer)?, budget.max_steps)?;
            for event in &r.trace {
                show(trace, event);
            }
            emit(&out, &r.graph.dump())?;
            Ok(exit_for(r.halt_reason()))
        }
        Command::Rule {
            graphs,
            rules: path,
            once,
            fixpoint: _,
            max_rounds,
            out,
        } => {
            let rs = rules::parse_rules(&read(&path)?).with_context(|| format!("in {}", path.display()))?;
            let g = load(&graphs)?;
            if once {
                let mut result = g.clone();
                for r in &rs {
                    result.extend(rules::apply_rule_once(&g, r));
                }
                emit(&out, &result.dump())?;
                return Ok(ExitCode::SUCCESS);
            }
            let fp = rules::fixpoint(&g, &rs, max_rounds);
            emit(&out, &fp.graph.dump())?;
            if fp.converged {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("no fixpoint after {} rounds", fp.rounds);
                Ok(ExitCode::from(2))
            }
        }
        Command::Query { graphs, query, out } => {
            let body = rules::parse_query(&query)?;
            emit(&out, &rules::select(&load(&graphs)?, &body).to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dump { graphs, out } => {
            emit(&out, &load(&graphs)?.dump())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
