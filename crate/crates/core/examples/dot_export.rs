//! Writes a small transition graph in DOT form and reads it back.

use actor_mbt::model::{explore, export_dot, import_dot, ExploreOptions};
use actor_mbt::systems::kv::{KvBounds, KvModel};

fn main() {
    let bounds = KvBounds { actors: 2, sets: 1, ..KvBounds::default() };
    let graph = explore(&KvModel::new(bounds), ExploreOptions::default()).unwrap().graph;
    let dot = export_dot(&graph);
    print!("{dot}");

    let back = import_dot(&dot).unwrap();
    assert_eq!(back.states, graph.states);
    assert_eq!(back.edges, graph.edges);
    eprintln!("round trip ok: {} states, {} edges", back.states.len(), back.edges.len());
}
