//! A failing conformance run writes one replay log per failing path; the
//! log alone is enough to reproduce the failure later.

use actor_mbt::conformance::{replay, run_suite, ReplayLog, RunOptions, Suite};
use actor_mbt::format::{GraphFile, SuiteFile};
use actor_mbt::model::{explore, ExploreOptions};
use actor_mbt::systems::vr::{vr_config, Mutation, VrBounds, VrModel};
use actor_mbt::tsg::{min_suite, Algorithm};

fn main() {
    let bounds = VrBounds { replicas: 3, max_queries: 1, max_views: 0 };
    let graph = GraphFile::from_graph(&explore(&VrModel::new(bounds), ExploreOptions::default()).unwrap().graph);
    let ts = min_suite(&graph.cover_graph().unwrap()).unwrap();
    let suite = Suite::from_file(&SuiteFile::build(&graph, &ts, Algorithm::Min).unwrap()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let mutation = Mutation::SkipCommitIncrement;
    let options = RunOptions { jobs: 1, fail_fast: true, replay_dir: Some(dir.path().to_path_buf()) };
    let report = run_suite(&vr_config(3, Some(mutation)), &suite, &options).unwrap();
    println!("{}", report.summary());

    let name = &report.replay_logs[0];
    let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
    println!("{name}:\n{text}");

    let log = ReplayLog::parse(&text).unwrap();
    log.check_suite(&suite).unwrap();
    println!("with {mutation}: {}", replay(&log, &vr_config(3, Some(mutation))).to_line());
    println!("without it:     {}", replay(&log, &vr_config(3, None)).to_line());
}
