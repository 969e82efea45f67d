//! Compares the three suite generators on a small hand-made graph and on the
//! replication model's transition graph.

use actor_mbt::format::GraphFile;
use actor_mbt::model::{explore, ExploreOptions};
use actor_mbt::systems::vr::{VrBounds, VrModel};
use actor_mbt::tsg::{generate, verify_coverage, Algorithm, CoverGraph};

fn compare(name: &str, g: &CoverGraph) {
    println!("{name}: |V|={} |E|={}", g.vertex_count(), g.edge_count());
    for alg in [Algorithm::Baseline, Algorithm::Flow, Algorithm::Min] {
        let suite = generate(g, alg).unwrap();
        let report = verify_coverage(g, &suite).unwrap();
        println!(
            "  {:<8} paths={:<6} total={:<7} uncovered={} bound (D+1)|E|={}",
            alg.name(),
            report.paths,
            report.total_length,
            report.uncovered.len(),
            report.bound
        );
    }
}

fn main() {
    // Diamond with a back edge: 0 -> {1, 2} -> 3 -> 0, plus a self-loop.
    let diamond = CoverGraph::new(4, vec![(0, 1), (0, 2), (1, 3), (2, 3), (3, 0), (3, 3)]).unwrap();
    compare("diamond", &diamond);
    let suite = generate(&diamond, Algorithm::Min).unwrap();
    for p in &suite.paths {
        let walk: Vec<String> = p.edges.iter().map(|&e| format!("{:?}", diamond.edge(e))).collect();
        println!("  min path: {}", walk.join(" "));
    }

    let graph = explore(&VrModel::new(VrBounds::default()), ExploreOptions::default()).unwrap().graph;
    compare("vr 3/1/1", &GraphFile::from_graph(&graph).cover_graph().unwrap());
}
