//! Subset-preserver lower-bound instances: outer/inner generators, the
//! regularize-and-layer transform, the weighted and unweighted obstacle
//! products, and brute-force structure verification.
//!
//! The generators here are structurally valid but deliberately non-extremal;
//! denser outer/inner instances can be supplied from files and validated
//! with the same checkers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId, PairSet, Path};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LowerBoundError {
    #[error("middle-layer degree {0} must be even and at least 2")]
    OddDegree(u64),
    #[error("inner instance for middle node {middle} has {got} pairs, expected {want}")]
    PairCountMismatch {
        middle: NodeId,
        got: usize,
        want: usize,
    },
    #[error("layer mismatch: {0}")]
    LayerMismatch(String),
    #[error("not a unique edge-disjoint path system: {0}")]
    NotDisjointSystem(String),
    #[error("average pair distance below 2: {edges} edges over {pairs} pairs")]
    DegenerateSplit { edges: usize, pairs: usize },
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("more than {cap} shortest paths; raise the cap or shrink the instance")]
    CapExceeded { cap: usize },
    #[error("bad instance file: {0}")]
    BadInstanceFile(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn enumeration_error(e: GraphError) -> LowerBoundError {
    match e {
        GraphError::CapExceeded { cap } => LowerBoundError::CapExceeded { cap },
        other => LowerBoundError::Graph(other),
    }
}

/// A 3-layered outer instance: demand pairs run from the first layer to the
/// last, every middle node has the same even degree, every pair has a unique
/// two-edge shortest path, and every edge serves exactly one pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuterInstance {
    pub graph: Graph,
    pub pairs: PairSet,
    pub degree: u64,
    pub first_layer: Vec<NodeId>,
    pub middle_layer: Vec<NodeId>,
    pub last_layer: Vec<NodeId>,
}

impl OuterInstance {
    /// Assembles an outer instance from parsed parts with a 0/1/2 layer
    /// labeling. The middle degree is read off the first middle node;
    /// `validate_outer` certifies everything else.
    pub fn from_layered(
        graph: Graph,
        pairs: PairSet,
        layer_of: &[usize],
    ) -> Result<Self, LowerBoundError> {
        if layer_of.len() != graph.node_count() {
            return Err(LowerBoundError::LayerMismatch(format!(
                "{} layer labels for {} nodes",
                layer_of.len(),
                graph.node_count()
            )));
        }
        let mut first_layer = Vec::new();
        let mut middle_layer = Vec::new();
        let mut last_layer = Vec::new();
        for (node, &layer) in layer_of.iter().enumerate() {
            match layer {
                0 => first_layer.push(node),
                1 => middle_layer.push(node),
                2 => last_layer.push(node),
                other => {
                    return Err(LowerBoundError::LayerMismatch(format!(
                        "outer layers are 0, 1, 2; node {node} has {other}"
                    )));
                }
            }
        }
        let Some(&probe) = middle_layer.first() else {
            return Err(LowerBoundError::LayerMismatch(
                "no middle-layer nodes".into(),
            ));
        };
        let degree = graph.out_degree(probe) as u64;
        Ok(OuterInstance {
            graph,
            pairs,
            degree,
            first_layer,
            middle_layer,
            last_layer,
        })
    }
}

/// Generates an outer instance: each of `n_mid` middle nodes gets `D/2`
/// fresh first-layer and `D/2` fresh last-layer neighbors, paired up through
/// it. All weights are 1; `weighted` only sets the graph flag so the
/// weighted obstacle product can scale the edges later.
pub fn gen_outer(
    n_mid: usize,
    degree: u64,
    weighted: bool,
) -> Result<OuterInstance, LowerBoundError> {
    if degree < 2 || !degree.is_multiple_of(2) {
        return Err(LowerBoundError::OddDegree(degree));
    }
    let half = (degree / 2) as usize;
    let first_count = n_mid * half;
    let mid_start = first_count;
    let last_start = mid_start + n_mid;
    let n = last_start + first_count;
    let mut edges = Vec::new();
    let mut pair_list = Vec::new();
    for v_idx in 0..n_mid {
        let mid = mid_start + v_idx;
        for i in 0..half {
            let c = v_idx * half + i;
            let z = last_start + v_idx * half + i;
            edges.push((c, mid, 1));
            edges.push((mid, z, 1));
            pair_list.push((c, z));
        }
    }
    let graph = Graph::new(n, false, weighted, edges)?;
    let pairs = PairSet::new(&graph, pair_list)?;
    Ok(OuterInstance {
        graph,
        pairs,
        degree,
        first_layer: (0..first_count).collect(),
        middle_layer: (mid_start..last_start).collect(),
        last_layer: (last_start..n).collect(),
    })
}

/// One failed outer-instance property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OuterViolation {
    DegreeNotUniform {
        node: NodeId,
        got: u64,
        want: u64,
    },
    DegreeOdd {
        degree: u64,
    },
    PairPathNotUniqueTwoEdges {
        s: NodeId,
        t: NodeId,
        detail: String,
    },
    EdgeUsage {
        edge: (NodeId, NodeId),
        used_by: u64,
    },
    PairEndpointsNotOnOuterLayers {
        s: NodeId,
        t: NodeId,
    },
    LayerStructure {
        detail: String,
    },
}

impl std::fmt::Display for OuterViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OuterViolation::DegreeNotUniform { node, got, want } => {
                write!(f, "middle node {node} has degree {got}, expected {want}")
            }
            OuterViolation::DegreeOdd { degree } => write!(f, "middle degree {degree} is odd"),
            OuterViolation::PairPathNotUniqueTwoEdges { s, t, detail } => {
                write!(
                    f,
                    "pair ({s}, {t}) lacks a unique two-edge shortest path: {detail}"
                )
            }
            OuterViolation::EdgeUsage { edge, used_by } => {
                write!(
                    f,
                    "edge ({}, {}) lies on {used_by} pair paths, expected 1",
                    edge.0, edge.1
                )
            }
            OuterViolation::PairEndpointsNotOnOuterLayers { s, t } => {
                write!(f, "pair ({s}, {t}) does not join the first and last layers")
            }
            OuterViolation::LayerStructure { detail } => write!(f, "layer structure: {detail}"),
        }
    }
}

/// Brute-force validation of the three outer properties plus the 3-layer
/// shape. Empty report means valid.
pub fn validate_outer(
    inst: &OuterInstance,
    cap: usize,
) -> Result<Vec<OuterViolation>, LowerBoundError> {
    let mut violations = Vec::new();
    let g = &inst.graph;
    if !inst.degree.is_multiple_of(2) {
        violations.push(OuterViolation::DegreeOdd {
            degree: inst.degree,
        });
    }
    let first: BTreeSet<_> = inst.first_layer.iter().copied().collect();
    let middle: BTreeSet<_> = inst.middle_layer.iter().copied().collect();
    let last: BTreeSet<_> = inst.last_layer.iter().copied().collect();
    let mut seen: BTreeSet<NodeId> = BTreeSet::new();
    for &x in inst
        .first_layer
        .iter()
        .chain(&inst.middle_layer)
        .chain(&inst.last_layer)
    {
        if !seen.insert(x) {
            violations.push(OuterViolation::LayerStructure {
                detail: format!("node {x} assigned to multiple layers"),
            });
        }
    }
    if seen.len() != g.node_count() {
        violations.push(OuterViolation::LayerStructure {
            detail: format!(
                "{} of {} nodes assigned to layers",
                seen.len(),
                g.node_count()
            ),
        });
    }
    for e in g.edges() {
        let spans_first = (first.contains(&e.u) && middle.contains(&e.v))
            || (middle.contains(&e.u) && first.contains(&e.v));
        let spans_last = (middle.contains(&e.u) && last.contains(&e.v))
            || (last.contains(&e.u) && middle.contains(&e.v));
        if !spans_first && !spans_last {
            violations.push(OuterViolation::LayerStructure {
                detail: format!("edge ({}, {}) does not join consecutive layers", e.u, e.v),
            });
        }
    }
    for &v in &inst.middle_layer {
        let got = g.out_degree(v) as u64;
        if got != inst.degree {
            violations.push(OuterViolation::DegreeNotUniform {
                node: v,
                got,
                want: inst.degree,
            });
        }
    }
    let mut edge_usage: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
    for &(s, t) in inst.pairs.iter() {
        let on_layers =
            (first.contains(&s) && last.contains(&t)) || (last.contains(&s) && first.contains(&t));
        if !on_layers {
            violations.push(OuterViolation::PairEndpointsNotOnOuterLayers { s, t });
        }
        let paths = g
            .enumerate_shortest_paths(s, t, cap)
            .map_err(enumeration_error)?;
        if paths.len() != 1 || paths[0].edge_len() != 2 {
            violations.push(OuterViolation::PairPathNotUniqueTwoEdges {
                s,
                t,
                detail: format!(
                    "{} shortest paths, first has {} edges",
                    paths.len(),
                    paths.first().map_or(0, |p| p.edge_len())
                ),
            });
            continue;
        }
        for (a, b) in paths[0].steps() {
            *edge_usage.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    for e in g.edges() {
        let used = edge_usage.get(&(e.u, e.v)).copied().unwrap_or(0);
        if used != 1 {
            violations.push(OuterViolation::EdgeUsage {
                edge: (e.u, e.v),
                used_by: used,
            });
        }
    }
    Ok(violations)
}

/// Layer assignment for a layered inner instance: `layer_of[u]` in
/// `0..num_layers`, edges only between consecutive layers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layering {
    pub num_layers: usize,
    pub layer_of: Vec<usize>,
}

/// An inner instance: every pair has a unique shortest path, the paths are
/// pairwise edge-disjoint, and the edge set is exactly their union. Layered
/// variants additionally run every pair from the first to the last layer at
/// distance `num_layers - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerInstance {
    pub graph: Graph,
    pub pairs: PairSet,
    pub layering: Option<Layering>,
    /// Demanded distance per pair.
    pub path_lengths: BTreeMap<(NodeId, NodeId), u64>,
}

impl InnerInstance {
    /// Assembles an inner instance from parsed parts, computing the demanded
    /// distances. Layer labels, when given, define a layering with
    /// `max + 1` layers; `validate_inner` certifies the rest.
    pub fn from_parts(
        graph: Graph,
        pairs: PairSet,
        layer_of: Option<Vec<usize>>,
    ) -> Result<Self, LowerBoundError> {
        let mut path_lengths = BTreeMap::new();
        for &(q, r) in pairs.iter() {
            let d = graph
                .shortest_distance(q, r)?
                .ok_or(GraphError::Disconnected(q, r))?;
            path_lengths.insert((q, r), d);
        }
        let layering = match layer_of {
            Some(layer_of) => {
                if layer_of.len() != graph.node_count() {
                    return Err(LowerBoundError::LayerMismatch(format!(
                        "{} layer labels for {} nodes",
                        layer_of.len(),
                        graph.node_count()
                    )));
                }
                let num_layers = layer_of.iter().max().copied().unwrap_or(0) + 1;
                Some(Layering {
                    num_layers,
                    layer_of,
                })
            }
            None => None,
        };
        Ok(InnerInstance {
            graph,
            pairs,
            layering,
            path_lengths,
        })
    }
}

/// Generates `p_count` vertex-disjoint paths of `len` edges each; pair `i`
/// demands the endpoints of path `i`.
pub fn gen_inner(p_count: usize, len: usize, layered: bool) -> InnerInstance {
    assert!(
        p_count >= 1 && len >= 1,
        "need at least one path of length one"
    );
    let stride = len + 1;
    let n = p_count * stride;
    let mut edges = Vec::new();
    let mut pair_list = Vec::new();
    let mut layer_of = vec![0usize; n];
    for i in 0..p_count {
        let base = i * stride;
        for j in 0..len {
            edges.push((base + j, base + j + 1));
            layer_of[base + j] = j;
        }
        layer_of[base + len] = len;
        pair_list.push((base, base + len));
    }
    let graph = Graph::unweighted(n, false, edges).expect("disjoint paths are a valid graph");
    let pairs = PairSet::new(&graph, pair_list).expect("path endpoints are connected");
    let path_lengths = pairs.iter().map(|&p| (p, len as u64)).collect();
    let layering = layered.then_some(Layering {
        num_layers: len + 1,
        layer_of,
    });
    InnerInstance {
        graph,
        pairs,
        layering,
        path_lengths,
    }
}

/// Certifies that `(g, pairs)` is a unique edge-disjoint shortest-path
/// system covering every edge, returning the unique path per pair.
pub fn check_disjoint_system(
    g: &Graph,
    pairs: &PairSet,
) -> Result<BTreeMap<(NodeId, NodeId), Path>, LowerBoundError> {
    let mut paths = BTreeMap::new();
    let mut owner: BTreeMap<(NodeId, NodeId), (NodeId, NodeId)> = BTreeMap::new();
    for &(s, t) in pairs.iter() {
        // cap 2 suffices: two found paths already disprove uniqueness
        let found = match g.enumerate_shortest_paths(s, t, 2) {
            Ok(found) => found,
            Err(GraphError::CapExceeded { .. }) => {
                return Err(LowerBoundError::NotDisjointSystem(format!(
                    "pair ({s}, {t}) has multiple shortest paths"
                )));
            }
            Err(e) => return Err(e.into()),
        };
        match found.len() {
            1 => {}
            0 => {
                return Err(LowerBoundError::NotDisjointSystem(format!(
                    "pair ({s}, {t}) is unreachable"
                )));
            }
            _ => {
                return Err(LowerBoundError::NotDisjointSystem(format!(
                    "pair ({s}, {t}) has multiple shortest paths"
                )));
            }
        }
        let path = found.into_iter().next().unwrap();
        for (a, b) in path.steps() {
            let key = (a.min(b), a.max(b));
            if let Some(&other) = owner.get(&key) {
                return Err(LowerBoundError::NotDisjointSystem(format!(
                    "edge ({}, {}) is shared by pairs {:?} and ({s}, {t})",
                    key.0, key.1, other
                )));
            }
            owner.insert(key, (s, t));
        }
        paths.insert((s, t), path);
    }
    if owner.len() != g.edge_count() {
        return Err(LowerBoundError::NotDisjointSystem(format!(
            "{} of {} edges lie on pair paths",
            owner.len(),
            g.edge_count()
        )));
    }
    Ok(paths)
}

/// One failed inner-instance property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InnerViolation {
    System {
        detail: String,
    },
    PathLengthMismatch {
        s: NodeId,
        t: NodeId,
        recorded: u64,
        actual: u64,
    },
    LayerSpan {
        s: NodeId,
        t: NodeId,
        detail: String,
    },
    LayerEdge {
        edge: (NodeId, NodeId),
        detail: String,
    },
    LayerShape {
        detail: String,
    },
}

impl std::fmt::Display for InnerViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InnerViolation::System { detail } => write!(f, "path system: {detail}"),
            InnerViolation::PathLengthMismatch {
                s,
                t,
                recorded,
                actual,
            } => {
                write!(
                    f,
                    "pair ({s}, {t}) records length {recorded}, actual {actual}"
                )
            }
            InnerViolation::LayerSpan { s, t, detail } => {
                write!(f, "pair ({s}, {t}) layer span: {detail}")
            }
            InnerViolation::LayerEdge { edge, detail } => {
                write!(f, "edge ({}, {}): {detail}", edge.0, edge.1)
            }
            InnerViolation::LayerShape { detail } => write!(f, "layering: {detail}"),
        }
    }
}

/// Checks all inner-instance invariants by brute force.
pub fn validate_inner(inst: &InnerInstance) -> Result<Vec<InnerViolation>, LowerBoundError> {
    let mut violations = Vec::new();
    let paths = match check_disjoint_system(&inst.graph, &inst.pairs) {
        Ok(paths) => Some(paths),
        Err(LowerBoundError::NotDisjointSystem(detail)) => {
            violations.push(InnerViolation::System { detail });
            None
        }
        Err(e) => return Err(e),
    };
    if let Some(paths) = &paths {
        for (&(s, t), path) in paths {
            let recorded = inst.path_lengths.get(&(s, t)).copied().unwrap_or(0);
            if recorded != *path.length() {
                violations.push(InnerViolation::PathLengthMismatch {
                    s,
                    t,
                    recorded,
                    actual: *path.length(),
                });
            }
        }
    }
    if let Some(layering) = &inst.layering {
        if layering.layer_of.len() != inst.graph.node_count() || layering.num_layers == 0 {
            violations.push(InnerViolation::LayerShape {
                detail: format!(
                    "{} layer entries for {} nodes ({} layers)",
                    layering.layer_of.len(),
                    inst.graph.node_count(),
                    layering.num_layers
                ),
            });
            return Ok(violations);
        }
        let ell = layering.num_layers;
        for e in inst.graph.edges() {
            let (la, lb) = (layering.layer_of[e.u], layering.layer_of[e.v]);
            if la.abs_diff(lb) != 1 {
                violations.push(InnerViolation::LayerEdge {
                    edge: (e.u, e.v),
                    detail: format!("joins layers {la} and {lb}"),
                });
            }
        }
        for &(s, t) in inst.pairs.iter() {
            let (ls, lt) = (layering.layer_of[s], layering.layer_of[t]);
            if ls != 0 || lt != ell - 1 {
                violations.push(InnerViolation::LayerSpan {
                    s,
                    t,
                    detail: format!("spans layers {ls}..{lt}, expected 0..{}", ell - 1),
                });
                continue;
            }
            let dist = inst.graph.shortest_distance(s, t)?;
            if dist != Some((ell - 1) as u64) {
                violations.push(InnerViolation::LayerSpan {
                    s,
                    t,
                    detail: format!("distance {dist:?}, expected {}", ell - 1),
                });
            }
        }
    }
    Ok(violations)
}

/// Regularizes a unique edge-disjoint path system to uniform pair distance
/// and lifts it onto layers.
///
/// Step 1: with `L` the average pair distance, each pair's path is split
/// into subpaths of exactly `floor(L/2)` edges, each re-demanded by its
/// endpoints; remainder edges are deleted. Step 2: `floor(L/2) + 1` node
/// copies are connected layer to layer along the surviving segments, and
/// each segment is re-demanded from its first-layer start to its last-layer
/// end. The output keeps exactly the union of the demanded paths, so all
/// inner-instance invariants hold.
pub fn layered_regularize(g: &Graph, pairs: &PairSet) -> Result<InnerInstance, LowerBoundError> {
    if g.is_directed() || g.is_weighted() {
        return Err(LowerBoundError::ModeMismatch(format!(
            "layered regularization needs an undirected unweighted host, got directed={} weighted={}",
            g.is_directed(),
            g.is_weighted()
        )));
    }
    let paths = check_disjoint_system(g, pairs)?;
    if pairs.is_empty() {
        return Err(LowerBoundError::DegenerateSplit {
            edges: g.edge_count(),
            pairs: 0,
        });
    }
    // average distance L = |E| / p since paths are disjoint and cover E
    let k = g.edge_count() / (2 * pairs.len());
    if k == 0 {
        return Err(LowerBoundError::DegenerateSplit {
            edges: g.edge_count(),
            pairs: pairs.len(),
        });
    }
    // step 1: cut each path into length-k segments, drop remainders
    let mut segments: Vec<Vec<NodeId>> = Vec::new();
    for &pair in pairs.iter() {
        let nodes = paths[&pair].nodes();
        let mut start = 0;
        while start + k < nodes.len() {
            segments.push(nodes[start..=start + k].to_vec());
            start += k;
        }
    }
    // step 2: layer the survivors; segment step j runs from copy j to j+1
    let n = g.node_count();
    let ell = k + 1;
    let layered_n = ell * n;
    let mut edges = Vec::new();
    let mut pair_list = Vec::new();
    for seg in &segments {
        for (j, ab) in seg.windows(2).enumerate() {
            edges.push((j * n + ab[0], (j + 1) * n + ab[1]));
        }
        pair_list.push((seg[0], (ell - 1) * n + seg[k]));
    }
    let graph = Graph::unweighted(layered_n, false, edges)?;
    let pairs_out = PairSet::new(&graph, pair_list).map_err(|e| match e {
        GraphError::DuplicatePair(s, t) => LowerBoundError::NotDisjointSystem(format!(
            "regularized segments collide on pair ({s}, {t})"
        )),
        other => LowerBoundError::Graph(other),
    })?;
    let layer_of = (0..layered_n).map(|id| id / n).collect();
    let path_lengths = pairs_out.iter().map(|&p| (p, k as u64)).collect();
    Ok(InnerInstance {
        graph,
        pairs: pairs_out,
        layering: Some(Layering {
            num_layers: ell,
            layer_of,
        }),
        path_lengths,
    })
}

/// Obstacle-product flavor: scale outer weights, or rely on layered inners.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProductMode {
    Weighted,
    Unweighted,
}

/// Records how one demanded pair threads its middle replacement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrespondenceEntry {
    /// Composed ids (c, z), first-layer endpoint first.
    pub outer_pair: (NodeId, NodeId),
    /// Composed ids (q, r) of the matched inner pair.
    pub inner_pair: (NodeId, NodeId),
    /// The same inner pair in the inner instance's local ids.
    pub inner_pair_local: (NodeId, NodeId),
}

/// One replaced middle node: where its inner copy lives in the composed
/// graph and how outer pairs map to inner pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub node_offset: usize,
    pub node_count: usize,
    pub entries: Vec<CorrespondenceEntry>,
}

/// A composed lower-bound instance. `subset` is the first plus last outer
/// layer; `demanded` re-expresses the outer pairs in composed ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObstacleInstance {
    pub graph: Graph,
    pub subset: BTreeSet<NodeId>,
    pub demanded: PairSet,
    pub replacement: BTreeMap<NodeId, Replacement>,
    pub scale: u64,
}

/// Composes an outer instance with per-middle-node inner instances.
///
/// Every middle node is replaced by a fresh inner copy; the outer edge pair
/// {(c, v), (v, z)} of each demanded pair becomes (c, q), (r, z) for that
/// pair's matched inner pair (q, r). Weighted mode multiplies outer edge
/// weights by `2 * D_I` where `D_I` is the largest demanded inner distance;
/// with integer weights any suboptimal outer route is longer by at least 1,
/// so this scaling keeps every composed shortest path on the structured
/// route. Unweighted mode instead requires layered inners of one common
/// height, attached first layer to first layer and last to last.
pub fn obstacle_product<F>(
    outer: &OuterInstance,
    mut inner_factory: F,
    mode: ProductMode,
    cap: usize,
) -> Result<ObstacleInstance, LowerBoundError>
where
    F: FnMut(NodeId) -> InnerInstance,
{
    if outer.degree < 2 || !outer.degree.is_multiple_of(2) {
        return Err(LowerBoundError::OddDegree(outer.degree));
    }
    let outer_violations = validate_outer(outer, cap)?;
    if !outer_violations.is_empty() {
        return Err(LowerBoundError::PreconditionFailed(format!(
            "outer instance invalid: {}",
            outer_violations[0]
        )));
    }
    if mode == ProductMode::Unweighted && outer.graph.is_weighted() {
        return Err(LowerBoundError::ModeMismatch(
            "unweighted product needs an unweighted outer instance".into(),
        ));
    }
    if mode == ProductMode::Weighted && !outer.graph.is_weighted() {
        return Err(LowerBoundError::ModeMismatch(
            "weighted product needs a weighted outer instance".into(),
        ));
    }
    let first: BTreeSet<_> = outer.first_layer.iter().copied().collect();
    let half = (outer.degree / 2) as usize;

    // group demanded pairs by the middle node of their unique two-edge path
    let mut pairs_of_middle: BTreeMap<NodeId, Vec<(NodeId, NodeId)>> = BTreeMap::new();
    for &(s, t) in outer.pairs.iter() {
        let path = outer
            .graph
            .enumerate_shortest_paths(s, t, cap)
            .map_err(enumeration_error)?
            .pop()
            .expect("validated outer pair has a path");
        let mid = path.nodes()[1];
        // normalize to (first-layer endpoint, last-layer endpoint)
        let (c, z) = if first.contains(&s) { (s, t) } else { (t, s) };
        pairs_of_middle.entry(mid).or_default().push((c, z));
    }

    // composed layout: outer first layer, outer last layer, then inner blocks
    let mut composed_of_outer: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut next = 0;
    for &c in &outer.first_layer {
        composed_of_outer.insert(c, next);
        next += 1;
    }
    for &z in &outer.last_layer {
        composed_of_outer.insert(z, next);
        next += 1;
    }

    let mut inners: BTreeMap<NodeId, (InnerInstance, usize)> = BTreeMap::new();
    let mut common_layers: Option<usize> = None;
    let mut max_inner_dist: u64 = 0;
    for &v in &outer.middle_layer {
        let inner = inner_factory(v);
        if inner.pairs.len() != half {
            return Err(LowerBoundError::PairCountMismatch {
                middle: v,
                got: inner.pairs.len(),
                want: half,
            });
        }
        if inner.graph.is_directed() {
            return Err(LowerBoundError::ModeMismatch(
                "inner instances must be undirected".into(),
            ));
        }
        match mode {
            ProductMode::Unweighted => {
                if inner.graph.is_weighted() {
                    return Err(LowerBoundError::ModeMismatch(
                        "unweighted product needs unweighted inner instances".into(),
                    ));
                }
                let layering = inner.layering.as_ref().ok_or_else(|| {
                    LowerBoundError::LayerMismatch(format!(
                        "inner instance for middle node {v} is not layered"
                    ))
                })?;
                match common_layers {
                    None => common_layers = Some(layering.num_layers),
                    Some(ell) if ell == layering.num_layers => {}
                    Some(ell) => {
                        return Err(LowerBoundError::LayerMismatch(format!(
                            "inner instance for middle node {v} has {} layers, expected {ell}",
                            layering.num_layers
                        )));
                    }
                }
                for &(q, r) in inner.pairs.iter() {
                    if layering.layer_of[q] != 0 || layering.layer_of[r] != layering.num_layers - 1
                    {
                        return Err(LowerBoundError::LayerMismatch(format!(
                            "inner pair ({q}, {r}) does not span first to last layer"
                        )));
                    }
                }
            }
            ProductMode::Weighted => {}
        }
        for &(q, r) in inner.pairs.iter() {
            let d = inner
                .graph
                .shortest_distance(q, r)?
                .expect("inner pairs are connected");
            max_inner_dist = max_inner_dist.max(d);
        }
        let offset = next;
        next += inner.graph.node_count();
        inners.insert(v, (inner, offset));
    }

    let scale = match mode {
        ProductMode::Weighted => 2 * max_inner_dist.max(1),
        ProductMode::Unweighted => 1,
    };
    let composed_weighted = mode == ProductMode::Weighted;
    let composed_n = next;
    let mut edges: Vec<(NodeId, NodeId, u64)> = Vec::new();
    let mut replacement = BTreeMap::new();
    for &v in &outer.middle_layer {
        let (inner, offset) = &inners[&v];
        for e in inner.graph.edges() {
            edges.push((e.u + offset, e.v + offset, e.weight));
        }
        let outer_pairs_here = pairs_of_middle.remove(&v).unwrap_or_default();
        debug_assert_eq!(outer_pairs_here.len(), half);
        let mut entries = Vec::new();
        for (j, &(c, z)) in outer_pairs_here.iter().enumerate() {
            let (q, r) = inner.pairs.pairs()[j];
            let wc = *outer.graph.edge_weight(c, v).expect("outer edge (c, v)");
            let wz = *outer.graph.edge_weight(v, z).expect("outer edge (v, z)");
            let overflow =
                || LowerBoundError::PreconditionFailed("outer weight scaling overflow".into());
            let cq = (composed_of_outer[&c], q + offset);
            let rz = (r + offset, composed_of_outer[&z]);
            edges.push((cq.0, cq.1, wc.checked_mul(scale).ok_or_else(overflow)?));
            edges.push((rz.0, rz.1, wz.checked_mul(scale).ok_or_else(overflow)?));
            entries.push(CorrespondenceEntry {
                outer_pair: (composed_of_outer[&c], composed_of_outer[&z]),
                inner_pair: (q + offset, r + offset),
                inner_pair_local: (q, r),
            });
        }
        replacement.insert(
            v,
            Replacement {
                node_offset: *offset,
                node_count: inner.graph.node_count(),
                entries,
            },
        );
    }
    let graph = Graph::new(composed_n, false, composed_weighted, edges)?;
    let demanded_list: Vec<(NodeId, NodeId)> = outer
        .pairs
        .iter()
        .map(|&(s, t)| (composed_of_outer[&s], composed_of_outer[&t]))
        .collect();
    let demanded = PairSet::new(&graph, demanded_list)?;
    let subset = outer
        .first_layer
        .iter()
        .chain(&outer.last_layer)
        .map(|o| composed_of_outer[o])
        .collect();
    Ok(ObstacleInstance {
        graph,
        subset,
        demanded,
        replacement,
        scale,
    })
}

/// A composed shortest path that does not thread its designated inner copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureViolation {
    pub pair: (NodeId, NodeId),
    pub path: Vec<NodeId>,
    pub reason: String,
}

fn copy_subgraph(inst: &ObstacleInstance, rep: &Replacement) -> Result<Graph, LowerBoundError> {
    let lo = rep.node_offset;
    let hi = rep.node_offset + rep.node_count;
    let edges = inst
        .graph
        .edges()
        .iter()
        .filter(|e| (lo..hi).contains(&e.u) && (lo..hi).contains(&e.v))
        .map(|e| (e.u - lo, e.v - lo, e.weight))
        .collect();
    Ok(Graph::new(
        rep.node_count,
        false,
        inst.graph.is_weighted(),
        edges,
    )?)
}

/// Verifies the composed shortest-path structure by enumeration: every
/// shortest path of every demanded pair must cross exactly its recorded
/// attachment edges and walk a shortest path of the designated inner copy in
/// between. Empty report means the obstacle product preserved structure.
pub fn check_path_structure(
    inst: &ObstacleInstance,
    cap: usize,
) -> Result<Vec<StructureViolation>, LowerBoundError> {
    let mut violations = Vec::new();
    // index: normalized demanded pair -> (replacement, entry)
    let mut entry_of: BTreeMap<(NodeId, NodeId), (&Replacement, &CorrespondenceEntry)> =
        BTreeMap::new();
    for rep in inst.replacement.values() {
        for entry in &rep.entries {
            entry_of.insert(entry.outer_pair, (rep, entry));
        }
    }
    let mut copy_dist: BTreeMap<NodeId, Graph> = BTreeMap::new();
    for (&mid, rep) in &inst.replacement {
        copy_dist.insert(mid, copy_subgraph(inst, rep)?);
    }
    let rep_of_entry: BTreeMap<(NodeId, NodeId), NodeId> = inst
        .replacement
        .iter()
        .flat_map(|(&mid, rep)| rep.entries.iter().map(move |e| (e.outer_pair, mid)))
        .collect();
    for &(s, t) in inst.demanded.iter() {
        let key = if entry_of.contains_key(&(s, t)) {
            (s, t)
        } else {
            (t, s)
        };
        let Some(&(rep, entry)) = entry_of.get(&key) else {
            violations.push(StructureViolation {
                pair: (s, t),
                path: Vec::new(),
                reason: "no replacement correspondence recorded for this pair".into(),
            });
            continue;
        };
        let (c, z) = entry.outer_pair;
        let (q, r) = entry.inner_pair;
        let mid = rep_of_entry[&key];
        let copy = &copy_dist[&mid];
        let lo = rep.node_offset;
        let inner_dist = copy.shortest_distance(q - lo, r - lo)?.ok_or_else(|| {
            LowerBoundError::PreconditionFailed(format!(
                "inner pair ({q}, {r}) disconnected within its copy"
            ))
        })?;
        let paths = inst
            .graph
            .enumerate_shortest_paths(c, z, cap)
            .map_err(enumeration_error)?;
        for path in paths {
            let nodes = path.nodes();
            let fail = |reason: String| StructureViolation {
                pair: (s, t),
                path: nodes.to_vec(),
                reason,
            };
            if nodes.len() < 4 {
                violations.push(fail("path too short to thread an inner copy".into()));
                continue;
            }
            if nodes[1] != q {
                violations.push(fail(format!("first hop is {} instead of {q}", nodes[1])));
                continue;
            }
            if nodes[nodes.len() - 2] != r {
                violations.push(fail(format!(
                    "last hop is {} instead of {r}",
                    nodes[nodes.len() - 2]
                )));
                continue;
            }
            let interior = &nodes[1..nodes.len() - 1];
            if !interior
                .iter()
                .all(|&x| (rep.node_offset..rep.node_offset + rep.node_count).contains(&x))
            {
                violations.push(fail("path leaves the designated inner copy".into()));
                continue;
            }
            let mut portion = 0u64;
            for ab in interior.windows(2) {
                portion += inst
                    .graph
                    .edge_weight(ab[0], ab[1])
                    .expect("consecutive path nodes are adjacent");
            }
            if portion != inner_dist {
                violations.push(fail(format!(
                    "inner portion has weight {portion}, copy distance is {inner_dist}"
                )));
            }
        }
    }
    Ok(violations)
}

/// The provably forced edges of a structure-checked instance: both
/// attachment edges of every demanded pair plus every edge of each inner
/// pair's unique within-copy shortest path. Any preserver of
/// `(graph, demanded)` must keep all of them.
pub fn forced_edge_set(
    inst: &ObstacleInstance,
    cap: usize,
) -> Result<BTreeSet<(NodeId, NodeId)>, LowerBoundError> {
    let structure = check_path_structure(inst, cap)?;
    if !structure.is_empty() {
        return Err(LowerBoundError::PreconditionFailed(format!(
            "path structure does not hold: {}",
            structure[0].reason
        )));
    }
    let mut forced: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut count: usize = 0;
    let add = |set: &mut BTreeSet<(NodeId, NodeId)>, a: NodeId, b: NodeId| -> bool {
        set.insert((a.min(b), a.max(b)))
    };
    for rep in inst.replacement.values() {
        let copy = copy_subgraph(inst, rep)?;
        let lo = rep.node_offset;
        for entry in &rep.entries {
            let (c, z) = entry.outer_pair;
            let (q, r) = entry.inner_pair;
            let inner_paths = match copy.enumerate_shortest_paths(q - lo, r - lo, 2) {
                Ok(found) if found.len() == 1 => found,
                Ok(found) => {
                    return Err(LowerBoundError::PreconditionFailed(format!(
                        "inner pair ({q}, {r}) needs a unique within-copy shortest path, found {}",
                        found.len()
                    )));
                }
                Err(GraphError::CapExceeded { .. }) => {
                    return Err(LowerBoundError::PreconditionFailed(format!(
                        "inner pair ({q}, {r}) has multiple within-copy shortest paths"
                    )));
                }
                Err(e) => return Err(e.into()),
            };
            let mut fresh = true;
            fresh &= add(&mut forced, c, q);
            fresh &= add(&mut forced, r, z);
            count += 2;
            for (a, b) in inner_paths[0].steps() {
                fresh &= add(&mut forced, a + lo, b + lo);
                count += 1;
            }
            if !fresh {
                return Err(LowerBoundError::PreconditionFailed(
                    "forced edges of distinct pairs overlap".into(),
                ));
            }
        }
    }
    debug_assert_eq!(count, forced.len());
    Ok(forced)
}

/// Size of `forced_edge_set`: a hard lower bound on any preserver of the
/// composed instance.
pub fn forced_edge_count(inst: &ObstacleInstance, cap: usize) -> Result<u64, LowerBoundError> {
    Ok(forced_edge_set(inst, cap)?.len() as u64)
}

/// Serialization mirror for `ObstacleInstance`.
#[derive(Serialize, Deserialize)]
struct ObstacleData {
    n: usize,
    directed: bool,
    weighted: bool,
    edges: Vec<(NodeId, NodeId, u64)>,
    subset: Vec<NodeId>,
    demanded: Vec<(NodeId, NodeId)>,
    replacement: BTreeMap<NodeId, Replacement>,
    scale: u64,
}

impl ObstacleInstance {
    pub fn to_json(&self) -> String {
        let data = ObstacleData {
            n: self.graph.node_count(),
            directed: self.graph.is_directed(),
            weighted: self.graph.is_weighted(),
            edges: self
                .graph
                .edges()
                .iter()
                .map(|e| (e.u, e.v, e.weight))
                .collect(),
            subset: self.subset.iter().copied().collect(),
            demanded: self.demanded.pairs().to_vec(),
            replacement: self.replacement.clone(),
            scale: self.scale,
        };
        serde_json::to_string_pretty(&data).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LowerBoundError> {
        let data: ObstacleData = serde_json::from_str(text)
            .map_err(|e| LowerBoundError::BadInstanceFile(e.to_string()))?;
        let graph = Graph::new(data.n, data.directed, data.weighted, data.edges)?;
        let demanded = PairSet::new(&graph, data.demanded)?;
        for &s in &data.subset {
            if s >= graph.node_count() {
                return Err(LowerBoundError::BadInstanceFile(format!(
                    "subset node {s} out of range"
                )));
            }
        }
        Ok(ObstacleInstance {
            graph,
            subset: data.subset.into_iter().collect(),
            demanded,
            replacement: data.replacement,
            scale: data.scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_single_middle_is_a_path() {
        let outer = gen_outer(1, 2, false).unwrap();
        assert_eq!(outer.graph.node_count(), 3);
        assert_eq!(outer.graph.edge_count(), 2);
        assert_eq!(outer.pairs.len(), 1);
        assert!(validate_outer(&outer, 100).unwrap().is_empty());
    }

    #[test]
    fn outer_two_middles_degree_four() {
        let outer = gen_outer(2, 4, true).unwrap();
        assert_eq!(outer.middle_layer.len(), 2);
        assert_eq!(outer.first_layer.len() + outer.last_layer.len(), 8);
        assert_eq!(outer.pairs.len(), 4);
        assert!(validate_outer(&outer, 100).unwrap().is_empty());
    }

    #[test]
    fn outer_three_disjoint_paths() {
        let outer = gen_outer(3, 2, false).unwrap();
        assert_eq!(outer.graph.edge_count(), 6);
        assert_eq!(outer.pairs.len(), 3);
        assert!(validate_outer(&outer, 100).unwrap().is_empty());
    }

    #[test]
    fn outer_rejects_odd_degree() {
        assert!(matches!(
            gen_outer(2, 3, false),
            Err(LowerBoundError::OddDegree(3))
        ));
        assert!(matches!(
            gen_outer(2, 0, false),
            Err(LowerBoundError::OddDegree(0))
        ));
    }

    #[test]
    fn validate_outer_flags_degree_bump() {
        let mut outer = gen_outer(1, 2, false).unwrap();
        // add one more first-layer neighbor to the middle node
        let mid = outer.middle_layer[0];
        let mut edges: Vec<_> = outer.graph.edges().iter().map(|e| (e.u, e.v)).collect();
        edges.push((mid, 3));
        outer.graph = Graph::unweighted(4, false, edges).unwrap();
        outer.first_layer.push(3);
        let violations = validate_outer(&outer, 100).unwrap();
        assert!(violations
            .iter()
            .any(|v| matches!(v, OuterViolation::DegreeNotUniform { got: 3, .. })));
    }

    #[test]
    fn validate_outer_flags_shared_edges() {
        // c1 and the pairs (c1, z1), (c1, z2) share the edge (c1, v)
        let graph = Graph::unweighted(5, false, vec![(0, 2), (1, 2), (2, 3), (2, 4)]).unwrap();
        let pairs = PairSet::new(&graph, vec![(0, 3), (0, 4)]).unwrap();
        let outer = OuterInstance {
            graph,
            pairs,
            degree: 4,
            first_layer: vec![0, 1],
            middle_layer: vec![2],
            last_layer: vec![3, 4],
        };
        let violations = validate_outer(&outer, 100).unwrap();
        assert!(violations
            .iter()
            .any(|v| matches!(v, OuterViolation::EdgeUsage { used_by: 2, .. })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, OuterViolation::EdgeUsage { used_by: 0, .. })));
    }

    #[test]
    fn inner_single_path() {
        let inner = gen_inner(1, 2, false);
        assert_eq!(inner.graph.node_count(), 3);
        assert_eq!(inner.pairs.pairs(), &[(0, 2)]);
        assert!(validate_inner(&inner).unwrap().is_empty());
    }

    #[test]
    fn inner_layered_paths() {
        let inner = gen_inner(3, 4, true);
        let layering = inner.layering.as_ref().unwrap();
        assert_eq!(layering.num_layers, 5);
        for &(q, r) in inner.pairs.iter() {
            assert_eq!(inner.graph.shortest_distance(q, r).unwrap(), Some(4));
        }
        assert!(validate_inner(&inner).unwrap().is_empty());
    }

    #[test]
    fn disjoint_system_rejects_ties_and_gaps() {
        let cycle = Graph::unweighted(4, false, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let pairs = PairSet::new(&cycle, vec![(0, 2)]).unwrap();
        assert!(matches!(
            check_disjoint_system(&cycle, &pairs),
            Err(LowerBoundError::NotDisjointSystem(_))
        ));
        // unused edge
        let path = Graph::unweighted(4, false, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let pairs = PairSet::new(&path, vec![(0, 2)]).unwrap();
        assert!(matches!(
            check_disjoint_system(&path, &pairs),
            Err(LowerBoundError::NotDisjointSystem(_))
        ));
        // crossing spider is fine: a-m-b and c-m-d share only the node m
        let spider = Graph::unweighted(5, false, vec![(0, 2), (2, 1), (3, 2), (2, 4)]).unwrap();
        let pairs = PairSet::new(&spider, vec![(0, 1), (3, 4)]).unwrap();
        let paths = check_disjoint_system(&spider, &pairs).unwrap();
        assert_eq!(paths.len(), 2);
    }

    #[test]
    fn regularize_documented_path_example() {
        // path on 6 nodes, one pair at distance 5: L = 5, k = 2
        let g = Graph::unweighted(6, false, (0..5).map(|i| (i, i + 1)).collect()).unwrap();
        let pairs = PairSet::new(&g, vec![(0, 5)]).unwrap();
        let inst = layered_regularize(&g, &pairs).unwrap();
        let layering = inst.layering.as_ref().unwrap();
        assert_eq!(layering.num_layers, 3);
        // segments (0..2) and (2..4); edge (4, 5) deleted
        assert_eq!(inst.pairs.len(), 2);
        assert_eq!(inst.graph.edge_count(), 4);
        for &(q, r) in inst.pairs.iter() {
            assert_eq!(inst.graph.shortest_distance(q, r).unwrap(), Some(2));
        }
        // segment starts at v0 and v2 in layer 0
        assert_eq!(inst.pairs.pairs()[0].0, 0);
        assert_eq!(inst.pairs.pairs()[1].0, 2);
        assert!(validate_inner(&inst).unwrap().is_empty());
    }

    #[test]
    fn regularize_distance_two_pair() {
        let g = Graph::unweighted(3, false, vec![(0, 1), (1, 2)]).unwrap();
        let pairs = PairSet::new(&g, vec![(0, 2)]).unwrap();
        let inst = layered_regularize(&g, &pairs).unwrap();
        assert_eq!(inst.layering.as_ref().unwrap().num_layers, 2);
        assert_eq!(inst.pairs.len(), 2);
        for &(q, r) in inst.pairs.iter() {
            assert_eq!(inst.graph.shortest_distance(q, r).unwrap(), Some(1));
        }
        assert!(validate_inner(&inst).unwrap().is_empty());
    }

    #[test]
    fn regularize_three_paths_of_four() {
        let base = gen_inner(3, 4, false);
        let inst = layered_regularize(&base.graph, &base.pairs).unwrap();
        assert_eq!(inst.pairs.len(), 6);
        assert_eq!(inst.layering.as_ref().unwrap().num_layers, 3);
        for &(q, r) in inst.pairs.iter() {
            assert_eq!(inst.graph.shortest_distance(q, r).unwrap(), Some(2));
        }
        assert!(validate_inner(&inst).unwrap().is_empty());
    }

    #[test]
    fn regularize_rejects_bad_systems() {
        let cycle = Graph::unweighted(4, false, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let pairs = PairSet::new(&cycle, vec![(0, 2)]).unwrap();
        assert!(matches!(
            layered_regularize(&cycle, &pairs),
            Err(LowerBoundError::NotDisjointSystem(_))
        ));
        let edge = Graph::unweighted(2, false, vec![(0, 1)]).unwrap();
        let pairs = PairSet::new(&edge, vec![(0, 1)]).unwrap();
        assert!(matches!(
            layered_regularize(&edge, &pairs),
            Err(LowerBoundError::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn weighted_product_documented_example() {
        let outer = gen_outer(1, 2, true).unwrap();
        let inst = obstacle_product(
            &outer,
            |_| gen_inner(1, 2, false),
            ProductMode::Weighted,
            100,
        )
        .unwrap();
        assert_eq!(inst.scale, 4);
        let (c, z) = inst.demanded.pairs()[0];
        assert_eq!(inst.graph.shortest_distance(c, z).unwrap(), Some(10));
        assert!(check_path_structure(&inst, 100).unwrap().is_empty());
        // node count: first + last outer layers plus the inner copy
        assert_eq!(inst.graph.node_count(), 2 + 3);
        assert_eq!(inst.subset.len(), 2);
    }

    #[test]
    fn unweighted_product_single_edge_inner() {
        let outer = gen_outer(1, 2, false).unwrap();
        let inst = obstacle_product(
            &outer,
            |_| gen_inner(1, 1, true),
            ProductMode::Unweighted,
            100,
        )
        .unwrap();
        assert_eq!(inst.scale, 1);
        let (c, z) = inst.demanded.pairs()[0];
        assert_eq!(inst.graph.shortest_distance(c, z).unwrap(), Some(3));
        let paths = inst.graph.enumerate_shortest_paths(c, z, 10).unwrap();
        assert_eq!(paths.len(), 1);
        assert!(check_path_structure(&inst, 100).unwrap().is_empty());
    }

    #[test]
    fn unweighted_product_layered_inner() {
        let outer = gen_outer(2, 4, false).unwrap();
        let inst = obstacle_product(
            &outer,
            |_| gen_inner(2, 3, true),
            ProductMode::Unweighted,
            1000,
        )
        .unwrap();
        assert_eq!(inst.demanded.len(), 4);
        assert!(check_path_structure(&inst, 1000).unwrap().is_empty());
    }

    #[test]
    fn product_rejects_pair_count_and_layer_mismatches() {
        let outer = gen_outer(1, 4, true).unwrap();
        assert!(matches!(
            obstacle_product(
                &outer,
                |_| gen_inner(1, 2, false),
                ProductMode::Weighted,
                100
            ),
            Err(LowerBoundError::PairCountMismatch {
                got: 1,
                want: 2,
                ..
            })
        ));
        let outer = gen_outer(1, 2, false).unwrap();
        assert!(matches!(
            obstacle_product(
                &outer,
                |_| gen_inner(1, 2, false),
                ProductMode::Unweighted,
                100
            ),
            Err(LowerBoundError::LayerMismatch(_))
        ));
        let outer = gen_outer(2, 2, false).unwrap();
        let result = obstacle_product(
            &outer,
            |v| {
                let len = if v == outer.middle_layer[0] { 2 } else { 3 };
                gen_inner(1, len, true)
            },
            ProductMode::Unweighted,
            100,
        );
        assert!(matches!(result, Err(LowerBoundError::LayerMismatch(_))));
    }

    /// The documented negative control: scale forced to 1 and a cross edge
    /// creating a cheaper nonconforming route.
    fn corrupted_weighted_instance() -> ObstacleInstance {
        let outer = gen_outer(1, 2, true).unwrap();
        let mut inst = obstacle_product(
            &outer,
            |_| gen_inner(1, 2, false),
            ProductMode::Weighted,
            100,
        )
        .unwrap();
        // rebuild with the outer edges unscaled and a (c, m) shortcut
        let rep = inst.replacement.values().next().unwrap().clone();
        let entry = rep.entries[0].clone();
        let (c, z) = entry.outer_pair;
        let (q, r) = entry.inner_pair;
        let m = q + 1; // middle node of the inner path q - m - r
        let edges = vec![(c, q, 1), (q, m, 1), (m, r, 1), (r, z, 1), (c, m, 1)];
        inst.graph = Graph::new(inst.graph.node_count(), false, true, edges).unwrap();
        inst.demanded = PairSet::new(&inst.graph, vec![(c, z)]).unwrap();
        inst.scale = 1;
        inst
    }

    #[test]
    fn structure_checker_flags_negative_control() {
        let inst = corrupted_weighted_instance();
        let violations = check_path_structure(&inst, 100).unwrap();
        assert!(!violations.is_empty());
        assert!(violations[0].reason.contains("first hop"));
    }

    #[test]
    fn forced_counts_on_documented_instances() {
        let outer = gen_outer(1, 2, true).unwrap();
        let inst = obstacle_product(
            &outer,
            |_| gen_inner(1, 2, false),
            ProductMode::Weighted,
            100,
        )
        .unwrap();
        assert_eq!(forced_edge_count(&inst, 100).unwrap(), 4);

        let outer = gen_outer(2, 4, true).unwrap();
        let inst = obstacle_product(
            &outer,
            |_| gen_inner(2, 3, false),
            ProductMode::Weighted,
            1000,
        )
        .unwrap();
        assert_eq!(forced_edge_count(&inst, 1000).unwrap(), 20);
    }

    #[test]
    fn forced_edges_are_all_necessary() {
        for (n_mid, degree, len) in [(1, 2, 2), (2, 4, 3)] {
            let outer = gen_outer(n_mid, degree, true).unwrap();
            let inst = obstacle_product(
                &outer,
                |_| gen_inner(degree as usize / 2, len, false),
                ProductMode::Weighted,
                1000,
            )
            .unwrap();
            let forced = forced_edge_set(&inst, 1000).unwrap();
            let baseline: Vec<Option<u64>> = inst
                .demanded
                .iter()
                .map(|&(s, t)| inst.graph.shortest_distance(s, t).unwrap())
                .collect();
            for &(a, b) in &forced {
                let edges: Vec<_> = inst
                    .graph
                    .edges()
                    .iter()
                    .filter(|e| (e.u, e.v) != (a, b))
                    .map(|e| (e.u, e.v, e.weight))
                    .collect();
                let pruned = Graph::new(inst.graph.node_count(), false, true, edges).unwrap();
                let changed = inst
                    .demanded
                    .iter()
                    .zip(&baseline)
                    .any(|(&(s, t), base)| pruned.shortest_distance(s, t).unwrap() != *base);
                assert!(changed, "deleting forced edge ({a}, {b}) changed nothing");
            }
        }
    }

    #[test]
    fn obstacle_instance_json_round_trip() {
        let outer = gen_outer(2, 4, false).unwrap();
        let inst = obstacle_product(
            &outer,
            |_| gen_inner(2, 3, true),
            ProductMode::Unweighted,
            1000,
        )
        .unwrap();
        let json = inst.to_json();
        let back = ObstacleInstance::from_json(&json).unwrap();
        assert_eq!(inst, back);
        assert_eq!(json, back.to_json());
    }
}
