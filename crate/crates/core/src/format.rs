//! Line-oriented graph and suite files.
//!
//! Both files start with one header line of `key=value` tokens, followed by
//! `S <index> <state>` lines (1-based, initial state first). A graph file
//! then lists `E <src> <dst> <action>` lines; a suite file lists
//! `P <count> <action> <dst> ...` lines. States and actions are stored in
//! their canonical text form, which never contains spaces. The header's
//! `hash` is the SHA-256 of everything after the header line.
//!
//! Plain edge lists (`<src> <dst> [label]` per line, 1-based, `#` comments)
//! are accepted wherever a graph file is expected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{GraphEdge, GraphStats, ModelState, TransitionGraph};
use crate::actor::Action;
use crate::tsg::{self, Algorithm, CoverGraph, TestSuite, TsgError};
use crate::value::{Cursor, Value};

pub const GRAPH_MAGIC: &str = "MBT-GRAPH";
pub const SUITE_MAGIC: &str = "MBT-SUITE";
pub const VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("content hash mismatch: header says {expected}, content hashes to {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error("unsupported format version {0}")]
    Version(String),
    #[error(transparent)]
    Graph(#[from] TsgError),
}

fn malformed(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Malformed { line, message: message.into() }
}

pub fn sha256_hex(data: &str) -> String {
    hex::encode(Sha256::digest(data.as_bytes()))
}

/// Parsed `key=value` header tokens after the magic and version.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header(BTreeMap<String, String>);

impl Header {
    fn parse(line: &str, magic: &str) -> Result<Header, FormatError> {
        let mut tokens = line.split(' ');
        if tokens.next() != Some(magic) {
            return Err(malformed(1, format!("expected {magic} header")));
        }
        match tokens.next() {
            Some(VERSION) => {}
            Some(v) => return Err(FormatError::Version(v.to_string())),
            None => return Err(malformed(1, "missing version")),
        }
        let mut map = BTreeMap::new();
        for t in tokens.filter(|t| !t.is_empty()) {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| malformed(1, format!("header token {t:?} is not key=value")))?;
            map.insert(k.to_string(), v.to_string());
        }
        Ok(Header(map))
    }

    pub fn get(&self, key: &str) -> Result<&str, FormatError> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| malformed(1, format!("header lacks {key}")))
    }

    pub fn number(&self, key: &str) -> Result<usize, FormatError> {
        let v = self.get(key)?;
        v.parse().map_err(|_| malformed(1, format!("header {key}={v} is not a count")))
    }
}

/// Splits off the header line and checks the body hash.
fn split_and_verify<'a>(text: &'a str, magic: &str) -> Result<(Header, &'a str), FormatError> {
    let (head, body) = text.split_once('\n').unwrap_or((text, ""));
    let header = Header::parse(head, magic)?;
    let expected = header.get("hash")?.to_string();
    let actual = sha256_hex(body);
    if expected != actual {
        return Err(FormatError::HashMismatch { expected, actual });
    }
    Ok((header, body))
}

fn check_count(header: &Header, key: &str, actual: usize) -> Result<(), FormatError> {
    let claimed = header.number(key)?;
    if claimed != actual {
        return Err(malformed(1, format!("header claims {key}={claimed} but found {actual}")));
    }
    Ok(())
}

/// Reads an `S <index> <state>` line body (after `S `).
fn parse_state_line(rest: &str, expected: usize, line: usize) -> Result<String, FormatError> {
    let (idx, state) = rest
        .split_once(' ')
        .ok_or_else(|| malformed(line, "state line needs an index and a state"))?;
    let idx: usize = idx.parse().map_err(|_| malformed(line, format!("bad state index {idx:?}")))?;
    if idx != expected {
        return Err(malformed(line, format!("state {idx} out of order, expected {expected}")));
    }
    if state.is_empty() || state.contains(' ') {
        return Err(malformed(line, "state must be one canonical token"));
    }
    Ok(state.to_string())
}

fn index(token: &str, n: usize, line: usize) -> Result<usize, FormatError> {
    match token.parse::<usize>() {
        Ok(i) if (1..=n).contains(&i) => Ok(i - 1),
        _ => Err(malformed(line, format!("state index {token:?} not in 1..={n}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEdge {
    /// Zero-based endpoints.
    pub src: usize,
    pub dst: usize,
    pub label: String,
}

/// Transition graph as stored on disk. States and labels are kept as text so
/// that graphs produced by other tools (plain edge lists) can be handled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFile {
    pub model: String,
    pub bounds: String,
    pub states: Vec<String>,
    pub edges: Vec<FileEdge>,
}

impl GraphFile {
    pub fn from_graph(g: &TransitionGraph) -> GraphFile {
        GraphFile {
            model: g.model.clone(),
            bounds: g.bounds.to_string(),
            states: g.states.iter().map(ModelState::to_canonical).collect(),
            edges: g
                .edges
                .iter()
                .map(|e| FileEdge { src: e.src, dst: e.dst, label: e.action.to_canonical() })
                .collect(),
        }
    }

    pub fn cover_graph(&self) -> Result<CoverGraph, TsgError> {
        CoverGraph::new(self.states.len(), self.edges.iter().map(|e| (e.src, e.dst)).collect())
    }

    pub fn stats(&self) -> Result<GraphStats, TsgError> {
        let g = self.cover_graph()?;
        let mut out_deg = vec![0usize; self.states.len()];
        for e in &self.edges {
            out_deg[e.src] += 1;
        }
        Ok(GraphStats {
            states: self.states.len(),
            edges: self.edges.len(),
            diameter: tsg::diameter(&g)?,
            sinks: out_deg.iter().filter(|&&d| d == 0).count(),
        })
    }

    fn body(&self) -> String {
        let mut body = String::new();
        for (i, s) in self.states.iter().enumerate() {
            let _ = writeln!(body, "S {} {}", i + 1, s);
        }
        for e in &self.edges {
            let _ = writeln!(body, "E {} {} {}", e.src + 1, e.dst + 1, e.label);
        }
        body
    }

    pub fn to_text(&self) -> Result<String, TsgError> {
        let stats = self.stats()?;
        let body = self.body();
        Ok(format!(
            "{GRAPH_MAGIC} {VERSION} model={} bounds={} states={} edges={} diameter={} sinks={} hash={}\n{}",
            self.model,
            self.bounds,
            stats.states,
            stats.edges,
            stats.diameter,
            stats.sinks,
            sha256_hex(&body),
            body
        ))
    }

    /// Parses a graph file, or a plain edge list when the text does not
    /// start with the graph header.
    pub fn parse(text: &str) -> Result<GraphFile, FormatError> {
        if text.trim().is_empty() {
            return Err(malformed(1, "empty input"));
        }
        if !text.starts_with(GRAPH_MAGIC) {
            return Self::parse_edge_list(text);
        }
        let (header, body) = split_and_verify(text, GRAPH_MAGIC)?;
        let mut states = Vec::new();
        let mut edges = Vec::new();
        let mut raw_edges = Vec::new();
        for (i, l) in body.lines().enumerate() {
            let line = i + 2;
            if let Some(rest) = l.strip_prefix("S ") {
                if !raw_edges.is_empty() {
                    return Err(malformed(line, "state after edges"));
                }
                states.push(parse_state_line(rest, states.len() + 1, line)?);
            } else if let Some(rest) = l.strip_prefix("E ") {
                raw_edges.push((rest, line));
            } else {
                return Err(malformed(line, "expected an S or E line"));
            }
        }
        if states.is_empty() {
            return Err(malformed(2, "graph has no states"));
        }
        for (rest, line) in raw_edges {
            let mut t = rest.split(' ');
            let (Some(a), Some(b), Some(label), None) = (t.next(), t.next(), t.next(), t.next()) else {
                return Err(malformed(line, "edge line needs src, dst and one action"));
            };
            edges.push(FileEdge {
                src: index(a, states.len(), line)?,
                dst: index(b, states.len(), line)?,
                label: label.to_string(),
            });
        }
        check_count(&header, "states", states.len())?;
        check_count(&header, "edges", edges.len())?;
        Ok(GraphFile {
            model: header.get("model")?.to_string(),
            bounds: header.get("bounds")?.to_string(),
            states,
            edges,
        })
    }

    fn parse_edge_list(text: &str) -> Result<GraphFile, FormatError> {
        let mut raw = Vec::new();
        let mut n = 1;
        for (i, l) in text.lines().enumerate() {
            let line = i + 1;
            let l = l.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let mut t = l.split_whitespace();
            let (Some(a), Some(b)) = (t.next(), t.next()) else {
                return Err(malformed(line, "edge list lines need `<src> <dst> [label]`"));
            };
            let label = t.next().map(str::to_string);
            if t.next().is_some() {
                return Err(malformed(line, "trailing tokens after label"));
            }
            let num = |s: &str| {
                s.parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| malformed(line, format!("bad vertex {s:?}")))
            };
            let (a, b) = (num(a)?, num(b)?);
            n = n.max(a).max(b);
            raw.push((a - 1, b - 1, label));
        }
        let edges = raw
            .into_iter()
            .enumerate()
            .map(|(id, (src, dst, label))| FileEdge {
                src,
                dst,
                label: label.unwrap_or_else(|| format!("e{}", id + 1)),
            })
            .collect();
        Ok(GraphFile {
            model: "edgelist".into(),
            bounds: "()".into(),
            states: (1..=n).map(|i| i.to_string()).collect(),
            edges,
        })
    }

    /// Typed view; fails unless every state and label is canonical text.
    pub fn to_transition_graph(&self) -> Result<TransitionGraph, FormatError> {
        let bounds = Value::parse(&self.bounds)
            .ok()
            .and_then(|v| crate::model::Bounds::from_value(&v))
            .ok_or_else(|| malformed(1, format!("bad bounds {}", self.bounds)))?;
        let states = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| ModelState::parse(s).map_err(|e| malformed(i + 2, e.to_string())))
            .collect::<Result<_, _>>()?;
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Action::parse(&e.label)
                    .map(|action| GraphEdge { src: e.src, dst: e.dst, action })
                    .map_err(|err| malformed(self.states.len() + i + 2, err.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(TransitionGraph { model: self.model.clone(), bounds, states, edges })
    }
}

/// Suite as stored on disk: the graph's state table plus the covering paths
/// as (action, destination) steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteFile {
    pub model: String,
    pub bounds: String,
    pub algorithm: String,
    pub edges: usize,
    pub diameter: usize,
    pub states: Vec<String>,
    /// Zero-based destination indices.
    pub paths: Vec<Vec<(String, usize)>>,
}

impl SuiteFile {
    pub fn build(graph: &GraphFile, suite: &TestSuite, algorithm: Algorithm) -> Result<SuiteFile, TsgError> {
        let stats = graph.stats()?;
        Ok(SuiteFile {
            model: graph.model.clone(),
            bounds: graph.bounds.clone(),
            algorithm: algorithm.name().to_string(),
            edges: stats.edges,
            diameter: stats.diameter,
            states: graph.states.clone(),
            paths: suite
                .paths
                .iter()
                .map(|p| {
                    p.edges
                        .iter()
                        .map(|&e| (graph.edges[e].label.clone(), graph.edges[e].dst))
                        .collect()
                })
                .collect(),
        })
    }

    pub fn total_length(&self) -> usize {
        self.paths.iter().map(Vec::len).sum()
    }

    fn body(&self) -> String {
        let mut body = String::new();
        for (i, s) in self.states.iter().enumerate() {
            let _ = writeln!(body, "S {} {}", i + 1, s);
        }
        for p in &self.paths {
            body.push_str("P ");
            body.push_str(&p.len().to_string());
            for (label, dst) in p {
                let _ = write!(body, " {} {}", label, dst + 1);
            }
            body.push('\n');
        }
        body
    }

    pub fn to_text(&self) -> String {
        let body = self.body();
        format!(
            "{SUITE_MAGIC} {VERSION} model={} bounds={} states={} edges={} diameter={} paths={} total={} algorithm={} hash={}\n{}",
            self.model,
            self.bounds,
            self.states.len(),
            self.edges,
            self.diameter,
            self.paths.len(),
            self.total_length(),
            self.algorithm,
            sha256_hex(&body),
            body
        )
    }

    /// Content hash, identical to the header's `hash`.
    pub fn hash(&self) -> String {
        sha256_hex(&self.body())
    }

    pub fn parse(text: &str) -> Result<SuiteFile, FormatError> {
        if text.trim().is_empty() {
            return Err(malformed(1, "empty input"));
        }
        let (header, body) = split_and_verify(text, SUITE_MAGIC)?;
        let mut states = Vec::new();
        let mut raw_paths = Vec::new();
        for (i, l) in body.lines().enumerate() {
            let line = i + 2;
            if let Some(rest) = l.strip_prefix("S ") {
                if !raw_paths.is_empty() {
                    return Err(malformed(line, "state after paths"));
                }
                states.push(parse_state_line(rest, states.len() + 1, line)?);
            } else if let Some(rest) = l.strip_prefix("P ") {
                raw_paths.push((rest, line));
            } else {
                return Err(malformed(line, "expected an S or P line"));
            }
        }
        if states.is_empty() {
            return Err(malformed(2, "suite has no states"));
        }
        let mut paths = Vec::with_capacity(raw_paths.len());
        for (rest, line) in raw_paths {
            let mut c = Cursor::new(rest);
            let count = c.unsigned().map_err(|e| malformed(line, e.to_string()))? as usize;
            let mut steps = Vec::with_capacity(count);
            for _ in 0..count {
                c.skip_spaces();
                let label = c.word().map_err(|e| malformed(line, e.to_string()))?;
                c.skip_spaces();
                let dst = c.word().map_err(|e| malformed(line, e.to_string()))?;
                steps.push((label.to_string(), index(dst, states.len(), line)?));
            }
            if !c.at_end() {
                return Err(malformed(line, format!("path declares {count} edges but has more tokens")));
            }
            paths.push(steps);
        }
        check_count(&header, "states", states.len())?;
        check_count(&header, "paths", paths.len())?;
        let file = SuiteFile {
            model: header.get("model")?.to_string(),
            bounds: header.get("bounds")?.to_string(),
            algorithm: header.get("algorithm")?.to_string(),
            edges: header.number("edges")?,
            diameter: header.number("diameter")?,
            states,
            paths,
        };
        check_count(&header, "total", file.total_length())?;
        Ok(file)
    }
}
