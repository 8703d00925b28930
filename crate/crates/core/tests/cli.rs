mod common;

use std::collections::BTreeMap;

use common::golden::{run_suite, Outcome};
use common::repo_path;
use semtape::encoding::data_triples;
use semtape::store::Graph;

fn outcomes() -> BTreeMap<&'static str, Outcome> {
    run_suite(env!("CARGO_BIN_EXE_semtape").as_ref())
        .into_iter()
        .map(|o| (o.name, o))
        .collect()
}

#[test]
fn golden_outputs() {
    let all = outcomes();
    let get = |name: &str| &all[name];

    let uncle = get("run-uncle");
    assert_eq!(uncle.code, 0);
    assert_eq!(
        uncle.stdout,
        "carole hasBrother george .\nmarko hasParent carole .\nmarko hasUncle george .\n"
    );
    assert_eq!(
        uncle.stderr,
        "step=1 state=A row=0 match=yes +() -()\n\
         step=2 state=B row=0 match=yes +(marko hasUncle george) -()\n\
         step=3 state=C row=none match=no +() -()\n"
    );

    assert_eq!(get("step-limit").code, 2);
    assert_eq!(get("tm-unary").stdout, "1 1 1 0\n");
    assert_eq!(get("query").stdout, "?x\nagent\nhuman\n");
    let empty = get("query-empty");
    assert_eq!((empty.code, empty.stdout.as_str()), (0, "?x\n"));

    let once = get("rule-once");
    assert_eq!(once.stdout.lines().count(), 5);
    let fixpoint = get("rule-fixpoint");
    assert_eq!(fixpoint.code, 0);
    assert_eq!(fixpoint.stdout.lines().count(), 6);
    assert!(fixpoint.stdout.contains("a hasFriend d .\n"));

    assert_eq!(get("unknown-command").code, 1);
    let missing = get("missing-file");
    assert_eq!(missing.code, 1);
    assert!(missing.stderr.contains("nope.nt"), "{}", missing.stderr);

    for step in ["encode-uncle", "encode-meta", "exec-stored", "spawn-inner", "run-virtual", "spawn-outer", "run-chain"] {
        assert_eq!(get(step).code, 0, "{step}: {}", get(step).stderr);
    }
    assert_eq!(get("run-virtual").stderr.lines().count(), 3);

    // the chained run leaves the same data behind as the direct run
    let chain = Graph::parse(&get("dump-chain").stdout).unwrap();
    assert_eq!(data_triples(&chain), Graph::parse(&uncle.stdout).unwrap());
}

#[test]
fn usage_errors_exit_one() {
    let bin = env!("CARGO_BIN_EXE_semtape");
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["--version"]), Some(0));
    assert_eq!(status(&["--help"]), Some(0));
    assert_eq!(status(&["run"]), Some(1));
    let zero = repo_path("programs/uncle.stm");
    assert_eq!(status(&["run", "-p", zero.to_str().unwrap(), "--max-steps", "0"]), Some(1));
    assert_eq!(status(&["rule", "-r", zero.to_str().unwrap()]), Some(1));
}
