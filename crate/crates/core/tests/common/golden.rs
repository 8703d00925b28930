//! A scripted tour of the command line, shared by the cli and acceptance
//! targets.

use std::path::Path;
use std::process::Command;

use super::repo_path;

pub struct Outcome {
    pub name: &'static str,
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// (name, arguments, extra environment). `{R}` expands to the repository
/// root and `{T}` to the scratch directory.
const CASES: &[(&str, &[&str], &[(&str, &str)])] = &[
    ("run-uncle", &["run", "-g", "{R}/data/family.nt", "-p", "{R}/programs/uncle.stm", "--trace"], &[]),
    ("step-limit", &["run", "-g", "{R}/data/family.nt", "-p", "{R}/programs/uncle.stm"], &[("SEMTAPE_MAX_STEPS", "2")]),
    ("tm-unary", &["tm", "-p", "{R}/programs/unary.tm", "--tape", "1 1 0 0"], &[]),
    ("query", &["query", "-g", "{R}/data/marko.nt", "isA(marko,?x)"], &[]),
    ("query-empty", &["query", "isA(marko,?x)"], &[]),
    ("rule-once", &["rule", "-g", "{R}/data/friends.nt", "-r", "{R}/programs/friends.rules", "--once"], &[]),
    ("rule-fixpoint", &["rule", "-g", "{R}/data/friends.nt", "-r", "{R}/programs/friends.rules", "--fixpoint"], &[]),
    ("unknown-command", &["frobnicate"], &[]),
    ("missing-file", &["dump", "-g", "{T}/nope.nt"], &[]),
    ("encode-uncle", &["encode", "-p", "{R}/programs/uncle.stm", "--uri", "uncle", "-o", "{T}/uncle.nt"], &[]),
    ("encode-meta", &["encode", "-p", "{R}/programs/meta.stm", "--uri", "meta", "-o", "{T}/meta.nt"], &[]),
    ("exec-stored", &["exec-stored", "-g", "{R}/data/family.nt", "-g", "{T}/uncle.nt", "--machine", "uncle", "-o", "{T}/stored.nt"], &[]),
    (
        "spawn-inner",
        &["spawn", "-g", "{R}/data/family.nt", "-g", "{T}/uncle.nt", "-g", "{T}/meta.nt", "--machine", "uncle", "--vm", "inner", "-o", "{T}/s1.nt"],
        &[],
    ),
    ("run-virtual", &["run-virtual", "-g", "{T}/s1.nt", "--vm", "inner", "--trace", "-o", "{T}/virtual.nt"], &[]),
    ("spawn-outer", &["spawn", "-g", "{T}/s1.nt", "--machine", "meta", "--vm", "outer", "--bind", "vm=inner", "-o", "{T}/s2.nt"], &[]),
    ("run-chain", &["run-chain", "-g", "{T}/s2.nt", "--outer", "outer", "-o", "{T}/chain.nt"], &[]),
    ("dump-chain", &["dump", "-g", "{T}/chain.nt"], &[]),
];

pub fn run_suite(bin: &Path) -> Vec<Outcome> {
    let scratch = tempfile::tempdir().unwrap();
    let root = repo_path("").canonicalize().unwrap();
    let expand = |a: &str| {
        a.replace("{R}", &root.to_string_lossy())
            .replace("{T}", &scratch.path().to_string_lossy())
    };
    CASES
        .iter()
        .map(|(name, args, env)| {
            let mut cmd = Command::new(bin);
            cmd.args(args.iter().map(|a| expand(a))).env_remove("SEMTAPE_MAX_STEPS");
            for (k, v) in *env {
                cmd.env(k, v);
            }
            let out = cmd.output().unwrap();
            Outcome {
                name,
                code: out.status.code().unwrap_or(-1),
                stdout: String::from_utf8(out.stdout).unwrap(),
                // scratch paths differ between runs
                stderr: String::from_utf8(out.stderr).unwrap().replace(&*scratch.path().to_string_lossy(), "{T}"),
            }
        })
        .collect()
}
