use std::fmt::Write as _;

use thiserror::Error;

use super::{Bounds, GraphEdge, ModelState, TransitionGraph};
use crate::actor::Action;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dot line {line}: {message}")]
pub struct DotError {
    pub line: usize,
    pub message: String,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

/// Dot digraph with 1-based node ids. Node labels carry the canonical state
/// and edge labels the canonical action, so the graph can be re-imported.
pub fn export_dot(graph: &TransitionGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(&graph.model));
    let _ = writeln!(out, "  graph [bounds=\"{}\"];", escape(&graph.bounds.to_string()));
    for (i, s) in graph.states.iter().enumerate() {
        let _ = writeln!(out, "  {} [label=\"{}\"];", i + 1, escape(&s.to_canonical()));
    }
    for e in &graph.edges {
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}\"];",
            e.src + 1,
            e.dst + 1,
            escape(&e.action.to_canonical())
        );
    }
    out.push_str("}\n");
    out
}

/// Reads back the output of [`export_dot`].
pub fn import_dot(text: &str) -> Result<TransitionGraph, DotError> {
    let mut model = None;
    let mut bounds = Bounds::new();
    let mut states = Vec::new();
    let mut edges = Vec::new();
    let mut closed = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| DotError { line, message };
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if model.is_none() {
            let name = l
                .strip_prefix("digraph")
                .and_then(|r| r.trim().strip_suffix('{'))
                .ok_or_else(|| err("expected `digraph <name> {`".into()))?;
            model = Some(unquote(name.trim()).map_err(err)?);
            continue;
        }
        if l == "}" {
            closed = true;
            continue;
        }
        if closed {
            return Err(err("content after closing brace".into()));
        }
        let body = l
            .strip_suffix("];")
            .ok_or_else(|| err("expected a statement ending in `];`".into()))?;
        let (head, attr) = body
            .split_once('[')
            .ok_or_else(|| err("missing attribute list".into()))?;
        let (key, value) = attr
            .split_once('=')
            .ok_or_else(|| err("malformed attribute".into()))?;
        let value = unquote(value.trim()).map_err(err)?;
        let head = head.trim();
        match key.trim() {
            "bounds" if head == "graph" => {
                bounds = Value::parse(&value)
                    .ok()
                    .and_then(|v| Bounds::from_value(&v))
                    .ok_or_else(|| err(format!("bad bounds {value:?}")))?;
            }
            "label" => {
                if let Some((a, b)) = head.split_once("->") {
                    let node = |s: &str| -> Result<usize, DotError> {
                        s.trim()
                            .parse::<usize>()
                            .ok()
                            .filter(|&n| n >= 1)
                            .map(|n| n - 1)
                            .ok_or_else(|| err(format!("bad node id {s:?}")))
                    };
                    let action = Action::parse(&value).map_err(|e| err(e.to_string()))?;
                    edges.push((node(a)?, node(b)?, action, line));
                } else {
                    let id: usize = head.parse().map_err(|_| err(format!("bad node id {head:?}")))?;
                    if id != states.len() + 1 {
                        return Err(err(format!("node {id} out of order")));
                    }
                    states.push(ModelState::parse(&value).map_err(|e| err(e.to_string()))?);
                }
            }
            other => return Err(err(format!("unsupported attribute {other:?}"))),
        }
    }
    if !closed {
        return Err(DotError { line: text.lines().count(), message: "missing closing brace".into() });
    }
    if states.is_empty() {
        return Err(DotError { line: 1, message: "graph has no nodes".into() });
    }
    let edges = edges
        .into_iter()
        .map(|(src, dst, action, line)| {
            if src >= states.len() || dst >= states.len() {
                Err(DotError { line, message: "edge endpoint is not a declared node".into() })
            } else {
                Ok(GraphEdge { src, dst, action })
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(TransitionGraph {
        model: model.unwrap_or_default(),
        bounds,
        states,
        edges,
    })
}

fn unquote(s: &str) -> Result<String, String> {
    let inner = s
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .ok_or_else(|| format!("expected a quoted string, got {s:?}"))?;
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some(n) => out.push(n),
                None => return Err("dangling escape".into()),
            }
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actor::{ActorId, Endpoint, Event};

    fn graph(n: usize, edges: &[(usize, usize)]) -> TransitionGraph {
        let states = (0..n)
            .map(|i| ModelState::new(vec![Value::str(&format!("s \"{i}\""))], Value::empty_record()))
            .collect();
        let edges = edges
            .iter()
            .map(|&(src, dst)| GraphEdge {
                src,
                dst,
                action: Action::deliver(Event::new(
                    "Go",
                    Endpoint::External,
                    Endpoint::Actor(ActorId(0)),
                    Value::Int(dst as i64),
                )),
            })
            .collect();
        TransitionGraph {
            model: "toy".into(),
            bounds: Bounds::new().with("n", n as i64),
            states,
            edges,
        }
    }

    #[test]
    fn single_vertex() {
        let text = export_dot(&graph(1, &[]));
        assert_eq!(text.lines().filter(|l| l.contains("[label=")).count(), 1);
        assert!(!text.contains("->"));
    }

    #[test]
    fn one_edge_line_with_label() {
        let text = export_dot(&graph(2, &[(0, 1)]));
        let edge_lines: Vec<_> = text.lines().filter(|l| l.contains("->")).collect();
        assert_eq!(edge_lines.len(), 1);
        assert!(edge_lines[0].starts_with("  1 -> 2 [label=\""));
    }

    #[test]
    fn round_trip() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0), (0, 1)]);
        assert_eq!(import_dot(&export_dot(&g)).unwrap(), g);
    }

    #[test]
    fn truncated_input_is_rejected() {
        let text = export_dot(&graph(2, &[(0, 1)]));
        let cut = &text[..text.len() - 3];
        assert!(import_dot(cut).is_err());
    }
}
