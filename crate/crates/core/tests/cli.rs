//! The command line driven in-process: explore, gensuite, run, replay and
//! stats, including their exit statuses.

use std::path::Path;

use actor_mbt::cli::{run, EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION};

struct Out {
    code: u8,
    stdout: String,
    stderr: String,
}

fn mbt(dir: &Path, args: &[&str]) -> Out {
    let mut argv = vec!["mbt".to_string()];
    for a in args {
        // Relative file arguments are resolved against `dir`.
        argv.push(if a.contains('.') && !a.starts_with('-') { dir.join(a).display().to_string() } else { a.to_string() });
    }
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    Out { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn stat(stdout: &str, key: &str) -> usize {
    stdout
        .split_whitespace()
        .find_map(|t| t.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
        .parse()
        .unwrap()
}

#[test]
fn explore_kv_with_one_set_writes_three_state_graph() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbt(dir.path(), &["explore", "--model", "kv", "--max-sets", "1", "--out", "kv.graph"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(stat(&o.stdout, "states"), 3);
    let text = std::fs::read_to_string(dir.path().join("kv.graph")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("S ")).count(), 3);
    assert_eq!(text.lines().filter(|l| l.starts_with("E ")).count(), 2);
}

#[test]
fn unknown_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mbt(dir.path(), &["explore", "--model", "paxos"]).code, EXIT_USAGE);
    assert_eq!(mbt(dir.path(), &["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(mbt(dir.path(), &["gensuite"]).code, EXIT_USAGE);
}

#[test]
fn buggy_model_exits_with_a_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbt(dir.path(), &["explore", "--model", "vr-commit-without-quorum", "--max-queries", "2"]);
    assert_eq!(o.code, EXIT_VERIFICATION);
    assert!(o.stdout.contains("PrefixLogConsistency"), "{}", o.stdout);
    assert!(o.stdout.contains("counterexample steps=5"), "{}", o.stdout);
}

#[test]
fn state_cap_reports_partial_stats() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbt(dir.path(), &["explore", "--model", "vr", "--state-cap", "100"]);
    assert_eq!(o.code, EXIT_VERIFICATION);
    assert!(o.stderr.contains("state cap of 100 exceeded"), "{}", o.stderr);
}

#[test]
fn gensuite_on_chain_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("chain.txt"), "# a -> b -> c\n1 2\n2 3\n").unwrap();
    let o = mbt(dir.path(), &["gensuite", "--graph", "chain.txt", "--algorithm", "baseline"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(stat(&o.stdout, "paths"), 2);
    assert_eq!(stat(&o.stdout, "uncovered"), 0);
    let o = mbt(dir.path(), &["gensuite", "--graph", "chain.txt", "--algorithm", "min"]);
    assert_eq!((stat(&o.stdout, "paths"), stat(&o.stdout, "total")), (1, 2));
}

#[test]
fn min_is_never_longer_than_flow() {
    let dir = tempfile::tempdir().unwrap();
    mbt(dir.path(), &["explore", "--model", "vr", "--max-views", "0", "--out", "vr.graph"]);
    let total = |alg: &str| {
        let o = mbt(dir.path(), &["gensuite", "--graph", "vr.graph", "--algorithm", alg]);
        assert_eq!(o.code, EXIT_OK);
        stat(&o.stdout, "total")
    };
    assert!(total("min") <= total("flow"));
    assert!(total("flow") <= total("baseline"));
}

#[test]
fn malformed_inputs_are_rejected_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "1 2\n2 x\n").unwrap();
    let o = mbt(dir.path(), &["gensuite", "--graph", "bad.txt"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("line 2"), "{}", o.stderr);
    std::fs::write(dir.path().join("empty.txt"), "").unwrap();
    let o = mbt(dir.path(), &["stats", "empty.txt"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("malformed input at line 1"), "{}", o.stderr);
    assert_eq!(mbt(dir.path(), &["stats", "missing.txt"]).code, EXIT_USAGE);
}

#[test]
fn stats_for_graph_and_suite() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("chain.txt"), "1 2\n2 3\n").unwrap();
    let o = mbt(dir.path(), &["stats", "chain.txt"]);
    assert_eq!(o.code, EXIT_OK);
    let record = o.stdout.lines().find(|l| l.starts_with("STATS")).unwrap();
    assert_eq!((stat(record, "D"), stat(record, "V"), stat(record, "E")), (2, 3, 2));

    mbt(dir.path(), &["explore", "--model", "kv", "--replicas", "2", "--max-gets", "1", "--out", "kv.graph"]);
    mbt(dir.path(), &["gensuite", "--graph", "kv.graph", "--out", "kv.suite"]);
    let o = mbt(dir.path(), &["stats", "--suite", "kv.suite"]);
    assert_eq!(o.code, EXIT_OK);
    let header = std::fs::read_to_string(dir.path().join("kv.suite")).unwrap();
    let header = header.lines().next().unwrap();
    assert_eq!(stat(&o.stdout, "P"), stat(header, "paths"));
}

#[test]
fn pipeline_closes_for_unmodified_examples() {
    let dir = tempfile::tempdir().unwrap();
    let kv = [
        "explore", "--model", "kv", "--replicas", "2", "--max-gets", "1", "--max-crashes", "1", "--max-drops", "1",
        "--max-corruptions", "1", "--out", "kv.graph",
    ];
    let vr = ["explore", "--model", "vr", "--max-views", "0", "--out", "vr.graph"];
    for (explore, name) in [(&kv[..], "kv"), (&vr[..], "vr")] {
        assert_eq!(mbt(dir.path(), explore).code, EXIT_OK);
        let graph = format!("{name}.graph");
        let suite = format!("{name}.suite");
        assert_eq!(mbt(dir.path(), &["gensuite", "--graph", &graph, "--out", &suite]).code, EXIT_OK);
        let o = mbt(dir.path(), &["run", "--suite", &suite, "--model", name, "--jobs", "2"]);
        assert_eq!(o.code, EXIT_OK, "{}{}", o.stdout, o.stderr);
        assert_eq!(stat(&o.stdout, "skipped"), 0);
    }
}

#[test]
fn run_refuses_mismatched_or_tampered_suites() {
    let dir = tempfile::tempdir().unwrap();
    mbt(dir.path(), &["explore", "--model", "kv", "--out", "kv.graph"]);
    mbt(dir.path(), &["gensuite", "--graph", "kv.graph", "--out", "kv.suite"]);
    let o = mbt(dir.path(), &["run", "--suite", "kv.suite", "--model", "vr"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("generated for model kv"), "{}", o.stderr);

    let path = dir.path().join("kv.suite");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("v1\"", "v2\"", 1)).unwrap();
    let o = mbt(dir.path(), &["run", "--suite", "kv.suite"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("hash mismatch"), "{}", o.stderr);
    assert_eq!(mbt(dir.path(), &["run", "--suite", "kv.suite", "--mutation", "unordered-catchup"]).code, EXIT_USAGE);
}

#[test]
fn mutation_fails_and_replay_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    mbt(dir.path(), &["explore", "--model", "vr", "--max-views", "0", "--out", "vr.graph"]);
    mbt(dir.path(), &["gensuite", "--graph", "vr.graph", "--out", "vr.suite"]);
    let replays = dir.path().join("replays");
    let replays = replays.to_str().unwrap();
    let o = mbt(
        dir.path(),
        &["run", "--suite", "vr.suite", "--mutation", "skip-commit-increment", "--replay-dir", replays, "--out", "r.txt"],
    );
    assert_eq!(o.code, EXIT_VERIFICATION);
    let report = std::fs::read_to_string(dir.path().join("r.txt")).unwrap();
    assert!(report.contains("status=STATE_MISMATCH"));
    let mut logs: Vec<_> = std::fs::read_dir(replays).unwrap().map(|e| e.unwrap().path()).collect();
    logs.sort();
    assert!(!logs.is_empty());
    let log = logs[0].to_str().unwrap();

    let first_failure = report.lines().find(|l| l.contains("STATE_MISMATCH")).unwrap();
    let o = mbt(dir.path(), &["replay", "--replay-log", log, "--suite", "vr.suite", "--mutation", "skip-commit-increment"]);
    assert_eq!(o.code, EXIT_VERIFICATION);
    assert_eq!(o.stdout.trim(), first_failure);
    // Without the bug the same path passes.
    let o = mbt(dir.path(), &["replay", "--replay-log", log]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stdout);

    mbt(dir.path(), &["explore", "--model", "vr", "--max-views", "0", "--max-queries", "2", "--out", "other.graph"]);
    mbt(dir.path(), &["gensuite", "--graph", "other.graph", "--out", "other.suite"]);
    let o = mbt(dir.path(), &["replay", "--replay-log", log, "--suite", "other.suite"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("replay log was made from suite"), "{}", o.stderr);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..2 {
        let graph = format!("g{i}.graph");
        let suite = format!("s{i}.suite");
        let report = format!("r{i}.txt");
        mbt(dir.path(), &["explore", "--model", "vr", "--max-views", "0", "--out", &graph]);
        mbt(dir.path(), &["gensuite", "--graph", &graph, "--out", &suite]);
        let jobs = if i == 0 { "1" } else { "3" };
        mbt(dir.path(), &["run", "--suite", &suite, "--jobs", jobs, "--out", &report]);
    }
    for (a, b) in [("g0.graph", "g1.graph"), ("s0.suite", "s1.suite"), ("r0.txt", "r1.txt")] {
        assert_eq!(std::fs::read(dir.path().join(a)).unwrap(), std::fs::read(dir.path().join(b)).unwrap());
    }
}
