use super::{
    diameter, euler_circuit, min_cost_circulation, solve_circulation, Algorithm, CoverGraph,
    FlowNetwork, Path, TestSuite, TsgError,
};

/// One path per edge: the BFS tree path to the edge's tail, then the edge.
pub fn baseline_suite(g: &CoverGraph) -> Result<TestSuite, TsgError> {
    g.check_reachable()?;
    let (_, parent) = g.bfs_tree();
    let mut tree_paths: Vec<Option<Vec<usize>>> = vec![None; g.vertex_count()];
    let mut paths = Vec::with_capacity(g.edge_count());
    for (e, &(u, _)) in g.edges().iter().enumerate() {
        let prefix = tree_paths[u].get_or_insert_with(|| {
            let mut walk = Vec::new();
            let mut at = u;
            while let Some(pe) = parent[at] {
                walk.push(pe);
                at = g.edge(pe).0;
            }
            walk.reverse();
            walk
        });
        let mut edges = Vec::with_capacity(prefix.len() + 1);
        edges.extend_from_slice(prefix);
        edges.push(e);
        paths.push(Path { edges });
    }
    Ok(TestSuite { paths })
}

/// Covering suite from a feasible (not necessarily cheapest) circulation.
pub fn flow_suite(g: &CoverGraph) -> Result<TestSuite, TsgError> {
    circulation_suite(g, false)
}

/// Covering suite of minimum total length.
pub fn min_suite(g: &CoverGraph) -> Result<TestSuite, TsgError> {
    circulation_suite(g, true)
}

pub fn generate(g: &CoverGraph, algorithm: Algorithm) -> Result<TestSuite, TsgError> {
    match algorithm {
        Algorithm::Baseline => baseline_suite(g),
        Algorithm::Flow => flow_suite(g),
        Algorithm::Min => min_suite(g),
    }
}

fn circulation_suite(g: &CoverGraph, min_cost: bool) -> Result<TestSuite, TsgError> {
    g.check_reachable()?;
    let m = g.edge_count();
    if m == 0 {
        return Ok(TestSuite::default());
    }
    let n = g.vertex_count();
    let s = g.source();
    // No covering circulation needs more than m units on any edge.
    let cap = m as i64 + 1;
    let mut net = FlowNetwork::new(n);
    for &(u, v) in g.edges() {
        net.add_edge(u, v, 1, cap, 1);
    }
    // Backward edge v -> s has id m + v.
    for v in 0..n {
        net.add_edge(v, s, 0, cap, 0);
    }
    if min_cost {
        min_cost_circulation(&mut net)?;
    } else {
        solve_circulation(&mut net)?;
    }
    let all: Vec<(usize, usize)> = net.edges.iter().map(|e| (e.from, e.to)).collect();
    let multiplicity: Vec<usize> = net.edges.iter().map(|e| e.flow as usize).collect();
    let circuit = euler_circuit(n, &all, &multiplicity, s)?;

    let mut paths = Vec::new();
    let mut current = Vec::new();
    for e in circuit {
        if e >= m {
            if !current.is_empty() {
                paths.push(Path { edges: std::mem::take(&mut current) });
            }
        } else {
            current.push(e);
        }
    }
    if !current.is_empty() {
        paths.push(Path { edges: current });
    }
    Ok(TestSuite { paths })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    /// Number of path steps that traverse each edge.
    pub hits: Vec<usize>,
    pub uncovered: Vec<usize>,
    pub paths: usize,
    pub total_length: usize,
    pub diameter: usize,
    /// `(diameter + 1) * |E|`, the length of the one-path-per-edge suite's
    /// worst case.
    pub bound: usize,
}

impl CoverageReport {
    pub fn is_complete(&self) -> bool {
        self.uncovered.is_empty()
    }

    pub fn within_bound(&self) -> bool {
        self.total_length <= self.bound
    }
}

/// Checks that every path starts at the source and chains, and counts how
/// often each edge is covered.
pub fn verify_coverage(g: &CoverGraph, suite: &TestSuite) -> Result<CoverageReport, TsgError> {
    let d = diameter(g)?;
    let mut hits = vec![0usize; g.edge_count()];
    for (pi, path) in suite.paths.iter().enumerate() {
        let mut at = g.source();
        for (step, &e) in path.edges.iter().enumerate() {
            if e >= g.edge_count() {
                return Err(TsgError::MalformedPath {
                    path: pi,
                    reason: format!("step {step} uses unknown edge {e}"),
                });
            }
            let (u, v) = g.edge(e);
            if u != at {
                let reason = if step == 0 {
                    format!("first edge {e} does not leave the source")
                } else {
                    format!("edge {e} at step {step} does not continue from vertex {at}")
                };
                return Err(TsgError::MalformedPath { path: pi, reason });
            }
            hits[e] += 1;
            at = v;
        }
    }
    let uncovered = hits
        .iter()
        .enumerate()
        .filter(|(_, &h)| h == 0)
        .map(|(e, _)| e)
        .collect();
    Ok(CoverageReport {
        hits,
        uncovered,
        paths: suite.paths.len(),
        total_length: suite.total_length(),
        diameter: d,
        bound: (d + 1) * g.edge_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> CoverGraph {
        CoverGraph::new(3, vec![(0, 1), (1, 2)]).unwrap()
    }

    fn star(k: usize) -> CoverGraph {
        CoverGraph::new(k + 1, (1..=k).map(|v| (0, v)).collect()).unwrap()
    }

    /// Vertices 1..6 of the motivating example shifted to 0..5; edge `Ei`
    /// has id `i - 1`.
    fn motivating_example() -> CoverGraph {
        CoverGraph::new(
            6,
            vec![(0, 1), (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 5)],
        )
        .unwrap()
    }

    fn edges_of(s: &TestSuite) -> Vec<Vec<usize>> {
        s.paths.iter().map(|p| p.edges.clone()).collect()
    }

    #[test]
    fn baseline_on_chain() {
        let s = baseline_suite(&chain()).unwrap();
        assert_eq!(edges_of(&s), vec![vec![0], vec![0, 1]]);
        assert_eq!(s.total_length(), 3);
    }

    #[test]
    fn baseline_on_star() {
        let s = baseline_suite(&star(4)).unwrap();
        assert_eq!(s.paths.len(), 4);
        assert!(s.paths.iter().all(|p| p.len() == 1));
    }

    #[test]
    fn baseline_on_motivating_example() {
        let g = motivating_example();
        let s = baseline_suite(&g).unwrap();
        assert_eq!(s.paths.len(), 7);
        assert!(verify_coverage(&g, &s).unwrap().is_complete());
    }

    #[test]
    fn flow_on_chain_is_one_path() {
        let s = flow_suite(&chain()).unwrap();
        assert_eq!(edges_of(&s), vec![vec![0, 1]]);
    }

    #[test]
    fn min_on_chain_meets_lower_bound() {
        let s = min_suite(&chain()).unwrap();
        assert_eq!(s.total_length(), 2);
        assert_eq!(s.paths.len(), 1);
    }

    #[test]
    fn circulation_suites_on_star() {
        for s in [flow_suite(&star(5)).unwrap(), min_suite(&star(5)).unwrap()] {
            assert_eq!(s.paths.len(), 5);
            assert_eq!(s.total_length(), 5);
        }
    }

    #[test]
    fn motivating_example_needs_two_paths_of_total_eight() {
        let g = motivating_example();
        for s in [flow_suite(&g).unwrap(), min_suite(&g).unwrap()] {
            let r = verify_coverage(&g, &s).unwrap();
            assert!(r.is_complete());
            assert_eq!(r.paths, 2);
            assert_eq!(r.total_length, 8);
            let mut paths = edges_of(&s);
            paths.sort();
            // E1 and E2 start different paths; one continues to E6, the
            // other ends with E7.
            assert_eq!(paths[0][0], 0);
            assert_eq!(paths[1][0], 1);
            assert!(paths.iter().all(|p| p[1] == 2));
            let tails: Vec<usize> = paths.iter().map(|p| *p.last().unwrap()).collect();
            assert!(tails.contains(&5) && tails.contains(&6));
        }
    }

    #[test]
    fn edges_back_to_source_are_covered() {
        let g = CoverGraph::new(2, vec![(0, 1), (1, 0), (0, 0)]).unwrap();
        for alg in [Algorithm::Baseline, Algorithm::Flow, Algorithm::Min] {
            let s = generate(&g, alg).unwrap();
            assert!(verify_coverage(&g, &s).unwrap().is_complete(), "{alg}");
        }
        assert_eq!(min_suite(&g).unwrap().total_length(), 3);
    }

    #[test]
    fn empty_graph_has_empty_suites() {
        let g = CoverGraph::new(1, vec![]).unwrap();
        for alg in [Algorithm::Baseline, Algorithm::Flow, Algorithm::Min] {
            assert!(generate(&g, alg).unwrap().paths.is_empty());
        }
    }

    #[test]
    fn missing_edge_is_reported() {
        let g = chain();
        let s = TestSuite { paths: vec![Path { edges: vec![0] }] };
        assert_eq!(verify_coverage(&g, &s).unwrap().uncovered, vec![1]);
    }

    #[test]
    fn broken_chain_is_malformed() {
        let g = chain();
        let s = TestSuite { paths: vec![Path { edges: vec![1] }] };
        assert!(matches!(
            verify_coverage(&g, &s),
            Err(TsgError::MalformedPath { path: 0, .. })
        ));
    }

    #[test]
    fn unreachable_vertex_is_rejected() {
        let g = CoverGraph::new(3, vec![(0, 1), (2, 1)]).unwrap();
        for alg in [Algorithm::Baseline, Algorithm::Flow, Algorithm::Min] {
            assert_eq!(generate(&g, alg), Err(TsgError::UnreachableVertex(2)));
        }
    }
}
