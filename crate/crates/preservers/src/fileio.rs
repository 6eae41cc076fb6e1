//! Text formats for graphs, demand pairs, and layer annotations.
//!
//! Graph file: a header line `n=<int> directed=<0|1> weighted=<0|1>`, then
//! one edge per line (`u v` or `u v w`), with optional `layer <node> <int>`
//! and `pair <s> <t>` lines. `#` starts a comment. Pairs may also live in a
//! separate file with one `s t` per line. Serialization preserves edge and
//! pair order, so a round trip reproduces the input exactly.

use std::collections::HashSet;

use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId, PairSet};
use crate::preserver::Preserver;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FileFormatError {
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invariant violation: {0}")]
    Invariant(#[from] GraphError),
}

fn parse_err(line: usize, reason: impl Into<String>) -> FileFormatError {
    FileFormatError::Parse {
        line,
        reason: reason.into(),
    }
}

/// A parsed graph file: the graph, any inline pairs, and any layer labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedInstance {
    pub graph: Graph,
    pub pairs: PairSet,
    pub layers: Option<Vec<usize>>,
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, bool, bool), FileFormatError> {
    let mut n = None;
    let mut directed = None;
    let mut weighted = None;
    for token in line.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, format!("expected key=value, got '{token}'")))?;
        match key {
            "n" => {
                n = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| parse_err(lineno, format!("bad node count '{value}'")))?,
                );
            }
            "directed" | "weighted" => {
                let flag = match value {
                    "0" => false,
                    "1" => true,
                    _ => return Err(parse_err(lineno, format!("bad flag '{key}={value}'"))),
                };
                if key == "directed" {
                    directed = Some(flag);
                } else {
                    weighted = Some(flag);
                }
            }
            _ => return Err(parse_err(lineno, format!("unknown header key '{key}'"))),
        }
    }
    match (n, directed, weighted) {
        (Some(n), Some(d), Some(w)) => Ok((n, d, w)),
        _ => Err(parse_err(lineno, "header needs n=, directed=, weighted=")),
    }
}

fn parse_id(token: &str, lineno: usize, what: &str) -> Result<usize, FileFormatError> {
    token
        .parse::<usize>()
        .map_err(|_| parse_err(lineno, format!("bad {what} '{token}'")))
}

/// Parses a graph file, including any inline `pair` and `layer` lines.
pub fn parse_graph(text: &str) -> Result<ParsedInstance, FileFormatError> {
    let mut header: Option<(usize, bool, bool)> = None;
    let mut edges: Vec<(NodeId, NodeId, u64)> = Vec::new();
    let mut edge_keys: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut pair_list: Vec<(NodeId, NodeId)> = Vec::new();
    let mut layer_lines: Vec<(usize, NodeId, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((n, directed, weighted)) = header else {
            header = Some(parse_header(line, lineno)?);
            continue;
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "layer" => {
                if tokens.len() != 3 {
                    return Err(parse_err(lineno, "layer lines are 'layer <node> <int>'"));
                }
                let node = parse_id(tokens[1], lineno, "node id")?;
                let layer = parse_id(tokens[2], lineno, "layer")?;
                if node >= n {
                    return Err(parse_err(lineno, format!("layer node {node} out of range")));
                }
                layer_lines.push((lineno, node, layer));
            }
            "pair" => {
                if tokens.len() != 3 {
                    return Err(parse_err(lineno, "pair lines are 'pair <s> <t>'"));
                }
                let s = parse_id(tokens[1], lineno, "pair source")?;
                let t = parse_id(tokens[2], lineno, "pair target")?;
                pair_list.push((s, t));
            }
            _ => {
                let want = if weighted { 3 } else { 2 };
                if tokens.len() != want {
                    return Err(parse_err(
                        lineno,
                        format!("edge lines here have {want} fields, got {}", tokens.len()),
                    ));
                }
                let u = parse_id(tokens[0], lineno, "node id")?;
                let v = parse_id(tokens[1], lineno, "node id")?;
                let w = if weighted {
                    tokens[2]
                        .parse::<u64>()
                        .map_err(|_| parse_err(lineno, format!("bad weight '{}'", tokens[2])))?
                } else {
                    1
                };
                let key = if directed || u < v { (u, v) } else { (v, u) };
                if !edge_keys.insert(key) {
                    return Err(parse_err(lineno, format!("duplicate edge ({u}, {v})")));
                }
                edges.push((u, v, w));
            }
        }
    }
    let Some((n, directed, weighted)) = header else {
        return Err(parse_err(0, "missing header line"));
    };
    let graph = Graph::new(n, directed, weighted, edges)?;
    let pairs = PairSet::new(&graph, pair_list)?;
    let layers = if layer_lines.is_empty() {
        None
    } else {
        let mut layers = vec![None; n];
        for (lineno, node, layer) in layer_lines {
            if layers[node].replace(layer).is_some() {
                return Err(parse_err(lineno, format!("node {node} labeled twice")));
            }
        }
        let missing: Vec<_> = layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.is_none().then_some(i))
            .collect();
        if !missing.is_empty() {
            return Err(parse_err(
                0,
                format!("layer labels incomplete; node {} unlabeled", missing[0]),
            ));
        }
        Some(layers.into_iter().map(|l| l.unwrap()).collect())
    };
    Ok(ParsedInstance {
        graph,
        pairs,
        layers,
    })
}

/// Parses a standalone pairs file (one `s t` per line) against `host`.
pub fn parse_pairs(text: &str, host: &Graph) -> Result<PairSet, FileFormatError> {
    let mut pair_list = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(parse_err(lineno, "pair lines are '<s> <t>'"));
        }
        let s = parse_id(tokens[0], lineno, "pair source")?;
        let t = parse_id(tokens[1], lineno, "pair target")?;
        pair_list.push((s, t));
    }
    Ok(PairSet::new(host, pair_list)?)
}

/// Serializes a graph with optional inline pairs and layer labels.
pub fn serialize_graph(g: &Graph, pairs: Option<&PairSet>, layers: Option<&[usize]>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "n={} directed={} weighted={}\n",
        g.node_count(),
        g.is_directed() as u8,
        g.is_weighted() as u8
    ));
    for e in g.edges() {
        if g.is_weighted() {
            out.push_str(&format!("{} {} {}\n", e.u, e.v, e.weight));
        } else {
            out.push_str(&format!("{} {}\n", e.u, e.v));
        }
    }
    if let Some(layers) = layers {
        for (node, layer) in layers.iter().enumerate() {
            out.push_str(&format!("layer {node} {layer}\n"));
        }
    }
    if let Some(pairs) = pairs {
        for &(s, t) in pairs.iter() {
            out.push_str(&format!("pair {s} {t}\n"));
        }
    }
    out
}

/// Serializes a pairs-only file.
pub fn serialize_pairs(pairs: &PairSet) -> String {
    let mut out = String::new();
    for &(s, t) in pairs.iter() {
        out.push_str(&format!("{s} {t}\n"));
    }
    out
}

/// Serializes a preserver as a graph file with its demand pairs inline and
/// the edge ownership map as trailing comments, so certificates can be
/// re-audited without recomputation.
pub fn serialize_preserver(p: &Preserver) -> String {
    let mut out = serialize_graph(p.subgraph(), Some(p.demanded()), None);
    for (&(u, v), &(s, t)) in p.provenance() {
        out.push_str(&format!("# owner {u} {v} : {s} {t}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preserver::build_dw_preserver;

    #[test]
    fn parses_documented_example() {
        let text = "n=3 directed=0 weighted=0\n0 1\n1 2\npair 0 2\n";
        let inst = parse_graph(text).unwrap();
        assert_eq!(inst.graph.node_count(), 3);
        assert_eq!(inst.graph.edge_count(), 2);
        assert_eq!(inst.pairs.pairs(), &[(0, 2)]);
        assert!(inst.layers.is_none());
    }

    #[test]
    fn duplicate_edge_is_a_parse_error() {
        let text = "n=3 directed=0 weighted=0\n0 1\n1 0\n";
        assert!(matches!(
            parse_graph(text),
            Err(FileFormatError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn zero_weight_is_an_invariant_violation() {
        let text = "n=3 directed=0 weighted=1\n0 1 0\n";
        assert!(matches!(
            parse_graph(text),
            Err(FileFormatError::Invariant(GraphError::InvalidWeight { .. }))
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# a path\nn=3 directed=0 weighted=0\n\n0 1 # first\n1 2\n";
        let inst = parse_graph(text).unwrap();
        assert_eq!(inst.graph.edge_count(), 2);
    }

    #[test]
    fn layer_labels_round_trip_and_must_be_complete() {
        let text = "n=2 directed=0 weighted=0\n0 1\nlayer 0 0\nlayer 1 1\n";
        let inst = parse_graph(text).unwrap();
        assert_eq!(inst.layers, Some(vec![0, 1]));
        let partial = "n=2 directed=0 weighted=0\n0 1\nlayer 0 0\n";
        assert!(matches!(
            parse_graph(partial),
            Err(FileFormatError::Parse { .. })
        ));
    }

    #[test]
    fn graph_round_trip_is_exact() {
        let g = Graph::new(5, true, true, vec![(0, 1, 3), (1, 2, 1), (4, 0, 7)]).unwrap();
        let pairs = PairSet::new(&g, vec![(0, 2), (4, 1)]).unwrap();
        let layers = vec![0, 1, 2, 0, 1];
        let text = serialize_graph(&g, Some(&pairs), Some(&layers));
        let inst = parse_graph(&text).unwrap();
        assert_eq!(inst.graph, g);
        assert_eq!(inst.pairs, pairs);
        assert_eq!(inst.layers, Some(layers));
        assert_eq!(
            serialize_graph(&inst.graph, Some(&inst.pairs), inst.layers.as_deref()),
            text
        );
    }

    #[test]
    fn pairs_file_round_trip() {
        let g = Graph::unweighted(4, false, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let pairs = PairSet::new(&g, vec![(0, 3), (2, 0)]).unwrap();
        let text = serialize_pairs(&pairs);
        assert_eq!(parse_pairs(&text, &g).unwrap(), pairs);
        assert!(matches!(
            parse_pairs("0 0\n", &g),
            Err(FileFormatError::Invariant(GraphError::PairEndpointsEqual(
                0
            )))
        ));
    }

    #[test]
    fn preserver_serialization_parses_back_with_provenance_ignored() {
        let g = Graph::unweighted(5, false, (0..4).map(|i| (i, i + 1)).collect()).unwrap();
        let pairs = PairSet::new(&g, vec![(0, 4)]).unwrap();
        let p = build_dw_preserver(&g, &pairs).unwrap();
        let text = serialize_preserver(&p);
        assert!(text.contains("# owner"));
        let inst = parse_graph(&text).unwrap();
        assert_eq!(&inst.graph, p.subgraph());
        assert_eq!(&inst.pairs, p.demanded());
    }
}
