//! Seeds each cataloged bug into the replicas and reports the first path
//! that exposes it. Bugs in view-change bookkeeping need a second view
//! change, so a two-view suite backs up the default one.

use actor_mbt::conformance::{run_suite, RunOptions, Suite};
use actor_mbt::format::{GraphFile, SuiteFile};
use actor_mbt::model::{explore, ExploreOptions};
use actor_mbt::systems::vr::{vr_config, Mutation, VrBounds, VrModel};
use actor_mbt::tsg::{min_suite, Algorithm};

fn suite(bounds: VrBounds) -> Suite {
    let graph = GraphFile::from_graph(&explore(&VrModel::new(bounds), ExploreOptions::default()).unwrap().graph);
    let ts = min_suite(&graph.cover_graph().unwrap()).unwrap();
    Suite::from_file(&SuiteFile::build(&graph, &ts, Algorithm::Min).unwrap()).unwrap()
}

fn main() {
    let suites = [
        ("3/1/1", suite(VrBounds { replicas: 3, max_queries: 1, max_views: 1 })),
        ("3/0/2", suite(VrBounds { replicas: 3, max_queries: 0, max_views: 2 })),
    ];
    let options = RunOptions { jobs: 1, fail_fast: true, replay_dir: None };
    for m in Mutation::ALL {
        let found = suites.iter().find_map(|(name, s)| {
            let report = run_suite(&vr_config(3, Some(m)), s, &options).unwrap();
            report.verdicts.iter().find(|v| !v.passed()).map(|v| format!("suite {name}: {}", v.to_line()))
        });
        println!("{m:<24} {}", found.as_deref().unwrap_or("NOT DETECTED"));
    }
}
