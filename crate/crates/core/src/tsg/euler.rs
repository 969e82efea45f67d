use super::TsgError;

/// Euler circuit from `start` through the multigraph in which edge `i`
/// (`edges[i]`) occurs `multiplicity[i]` times. Returns the edge ids in walk
/// order. Out-edges are taken by ascending id (Hierholzer).
pub fn euler_circuit(
    n: usize,
    edges: &[(usize, usize)],
    multiplicity: &[usize],
    start: usize,
) -> Result<Vec<usize>, TsgError> {
    assert_eq!(edges.len(), multiplicity.len(), "one multiplicity per edge");
    let mut balance = vec![0i64; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut total = 0;
    for (id, (&(u, v), &m)) in edges.iter().zip(multiplicity).enumerate() {
        if m == 0 {
            continue;
        }
        balance[u] -= m as i64;
        balance[v] += m as i64;
        out[u].push(id);
        total += m;
    }
    if let Some(v) = balance.iter().position(|&b| b != 0) {
        return Err(TsgError::UnbalancedDegree(v));
    }
    if total == 0 {
        return Ok(Vec::new());
    }

    let mut remaining = multiplicity.to_vec();
    let mut next = vec![0usize; n];
    let mut stack: Vec<(usize, Option<usize>)> = vec![(start, None)];
    let mut circuit = Vec::with_capacity(total);
    while let Some(&(u, via)) = stack.last() {
        while next[u] < out[u].len() && remaining[out[u][next[u]]] == 0 {
            next[u] += 1;
        }
        if next[u] < out[u].len() {
            let e = out[u][next[u]];
            remaining[e] -= 1;
            stack.push((edges[e].1, Some(e)));
        } else {
            stack.pop();
            if let Some(e) = via {
                circuit.push(e);
            }
        }
    }
    if circuit.len() != total {
        return Err(TsgError::Disconnected);
    }
    circuit.reverse();
    Ok(circuit)
}
