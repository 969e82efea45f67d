//! The full pipeline on the replication example: explore, generate the
//! minimal suite, write and re-read the suite file, then run every path
//! against the replica implementation.

use std::time::Instant;

use actor_mbt::conformance::{run_suite, RunOptions, Suite};
use actor_mbt::format::{GraphFile, SuiteFile};
use actor_mbt::model::{explore, ExploreOptions};
use actor_mbt::systems::vr::{VrBounds, VrModel};
use actor_mbt::tsg::{min_suite, Algorithm};

fn main() {
    let bounds = VrBounds::default();
    let graph = GraphFile::from_graph(&explore(&VrModel::new(bounds), ExploreOptions::default()).unwrap().graph);

    let start = Instant::now();
    let ts = min_suite(&graph.cover_graph().unwrap()).unwrap();
    println!("{} paths generated in {:.2?}", ts.paths.len(), start.elapsed());

    let text = SuiteFile::build(&graph, &ts, Algorithm::Min).unwrap().to_text();
    let suite = Suite::from_file(&SuiteFile::parse(&text).unwrap()).unwrap();
    println!("suite file: {} bytes, hash {}", text.len(), suite.hash);

    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = run_suite(&bounds.emulator_config(), &suite, &RunOptions { jobs, ..RunOptions::default() }).unwrap();
    println!("{}", report.summary());
    println!("{:.0} paths/s on {jobs} worker(s)", report.paths_per_second());
}
