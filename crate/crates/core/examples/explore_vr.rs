//! Explores the replication model and checks its invariants, then shows the
//! shortest counterexample the commit-without-quorum variant produces.
//!
//! Usage: `explore_vr [replicas] [max_queries] [max_views]`, default 3 1 1.

use std::time::Instant;

use actor_mbt::model::{check_quiescent_progress, explore, ExploreError, ExploreOptions};
use actor_mbt::systems::vr::{VrBounds, VrModel};

fn main() {
    let args: Vec<i64> = std::env::args().skip(1).map(|a| a.parse().expect("integer bound")).collect();
    let arg = |i: usize, default: i64| args.get(i).copied().unwrap_or(default);
    let bounds = VrBounds { replicas: arg(0, 3) as u16, max_queries: arg(1, 1), max_views: arg(2, 1) };

    let start = Instant::now();
    let model = VrModel::new(bounds);
    let exploration = explore(&model, ExploreOptions::default()).expect("the correct model is safe");
    let graph = &exploration.graph;
    println!("{bounds:?}: {} in {:.2?}", graph.stats().unwrap(), start.elapsed());

    let progress = check_quiescent_progress(&model, graph);
    println!(
        "quiescent progress: {} sinks, {} with bounds exhausted, {} violations",
        progress.sinks,
        progress.checked,
        progress.violations.len()
    );

    let buggy = VrModel::buggy(VrBounds { max_queries: 2, ..bounds });
    match explore(&buggy, ExploreOptions::default()) {
        Err(ExploreError::InvariantViolated(cx)) => print!("commit without quorum, {} steps:\n{cx}", cx.len()),
        other => println!("no violation found: {:?}", other.map(|x| x.graph.states.len())),
    }
}
