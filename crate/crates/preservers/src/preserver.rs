//! Distance-preserver constructions and their size certificates.
//!
//! Two builders live here. The grouped consistent-tiebreaking construction
//! handles directed and/or weighted hosts and certifies its size through
//! branching-triple counting: within one group the oriented path union has
//! at most C(p, 3) branching triples, and any directed graph has at most 2n
//! more edges than branching triples. The undirected-unweighted construction
//! lifts the host to its bipartite double cover, runs the lazy scheme there,
//! contracts the tree union back down, and certifies structure by
//! partitioning the non-branching lifted edges into induced matchings.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId, PairSet};
use crate::tiebreak::{consistent_scheme, lazy_scheme, PathSystem, SourceTree, TiebreakError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PreserverError {
    #[error("host graph must be undirected and unweighted, got {0}")]
    UnsupportedHost(String),
    #[error("operation requires a directed graph")]
    NotDirected,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("edge ({0}, {1}) lies in no source tree")]
    OwnerNotFound(NodeId, NodeId),
    #[error(transparent)]
    Tiebreak(#[from] TiebreakError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A distance preserver: a subgraph of the host that realizes the host
/// distance of every demanded pair, with per-edge ownership recording which
/// pair's stored path contributed the edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preserver {
    subgraph: Graph,
    demanded: PairSet,
    provenance: BTreeMap<(NodeId, NodeId), (NodeId, NodeId)>,
}

impl Preserver {
    pub fn subgraph(&self) -> &Graph {
        &self.subgraph
    }

    pub fn demanded(&self) -> &PairSet {
        &self.demanded
    }

    /// Canonical edge -> owning demand pair.
    pub fn provenance(&self) -> &BTreeMap<(NodeId, NodeId), (NodeId, NodeId)> {
        &self.provenance
    }

    pub fn edge_count(&self) -> usize {
        self.subgraph.edge_count()
    }
}

/// `C(k, 3)` without intermediate overflow at the scales we run.
pub fn choose3(k: u64) -> u64 {
    if k < 3 {
        0
    } else {
        k * (k - 1) * (k - 2) / 6
    }
}

/// Smallest `g >= 1` with `g^3 >= n`; the group size for the grouped builder.
pub fn group_size(n: usize) -> usize {
    let mut g = 1usize;
    while g * g * g < n {
        g += 1;
    }
    g
}

/// Branching triples: sum over nodes of C(in-degree, 3). Three distinct
/// edges entering a common node form one triple.
pub fn count_branching_triples(h: &Graph) -> Result<u64, PreserverError> {
    if !h.is_directed() {
        return Err(PreserverError::NotDirected);
    }
    Ok((0..h.node_count())
        .map(|v| choose3(h.in_degree(v) as u64))
        .sum())
}

/// Orients every stored path away from its source and unions the resulting
/// directed edges. Weights are inherited from the host.
pub fn oriented_path_union(system: &PathSystem) -> Graph {
    let host = system.host();
    let mut directed_edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for path in system.entries().values() {
        for (a, b) in path.steps() {
            directed_edges.insert((a, b));
        }
    }
    let edges = directed_edges
        .into_iter()
        .map(|(a, b)| {
            let w = *host.edge_weight(a, b).expect("path edge exists in host");
            (a, b, w)
        })
        .collect();
    Graph::new(host.node_count(), true, host.is_weighted(), edges)
        .expect("oriented union is a valid directed graph")
}

/// Builds a preserver for a possibly directed and/or weighted host by
/// splitting the demand pairs into groups of size `ceil(n^(1/3))` and taking
/// the union of consistent-scheme paths per group. Each group union is
/// asserted against its certificate: at most C(group, 3) branching triples
/// and at most `2n + triples` oriented edges.
pub fn build_dw_preserver(g: &Graph, pairs: &PairSet) -> Result<Preserver, PreserverError> {
    let n = g.node_count();
    let gsize = group_size(n);
    let mut union: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut provenance: BTreeMap<(NodeId, NodeId), (NodeId, NodeId)> = BTreeMap::new();
    for chunk in pairs.pairs().chunks(gsize.max(1)) {
        let group = PairSet::new(g, chunk.to_vec())?;
        let system = consistent_scheme(g, &group)?;
        let oriented = oriented_path_union(&system);
        let triples = count_branching_triples(&oriented)?;
        assert!(
            triples <= choose3(chunk.len() as u64),
            "consistent group produced {triples} branching triples for {} pairs",
            chunk.len()
        );
        assert!(
            oriented.edge_count() as u64 <= 2 * n as u64 + triples,
            "group union exceeds the 2n + triples bound"
        );
        for &pair in chunk {
            let path = system.path(pair.0, pair.1).expect("stored path per pair");
            for (a, b) in path.steps() {
                let key = if g.is_directed() || a < b {
                    (a, b)
                } else {
                    (b, a)
                };
                union.insert(key);
                provenance.entry(key).or_insert(pair);
            }
        }
    }
    let edges = union
        .into_iter()
        .map(|(a, b)| {
            (
                a,
                b,
                *g.edge_weight(a, b).expect("union edge exists in host"),
            )
        })
        .collect();
    let subgraph = Graph::new(n, g.is_directed(), g.is_weighted(), edges)?;
    Ok(Preserver {
        subgraph,
        demanded: pairs.clone(),
        provenance,
    })
}

/// Distance parity of a demand pair, which decides how it lifts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// The bipartite double cover of a host together with the lifted demand
/// pairs. Node `u` appears as `u` (first copy) and `u + n` (second copy);
/// each host edge (u, v) lifts to (u, v+n) and (u+n, v). A pair at even
/// distance lifts within each copy, at odd distance across copies.
#[derive(Clone, Debug)]
pub struct LiftResult {
    lifted: Graph,
    lifted_pairs: PairSet,
    parity: BTreeMap<(NodeId, NodeId), Parity>,
    original_n: usize,
}

impl LiftResult {
    pub fn lifted(&self) -> &Graph {
        &self.lifted
    }

    pub fn lifted_pairs(&self) -> &PairSet {
        &self.lifted_pairs
    }

    pub fn parity(&self) -> &BTreeMap<(NodeId, NodeId), Parity> {
        &self.parity
    }

    pub fn original_n(&self) -> usize {
        self.original_n
    }

    /// The two lifted images of a demand pair, first-copy source first.
    pub fn images(&self, pair: (NodeId, NodeId)) -> Option<[(NodeId, NodeId); 2]> {
        let (s, t) = pair;
        let n = self.original_n;
        Some(match self.parity.get(&pair)? {
            Parity::Even => [(s, t), (s + n, t + n)],
            Parity::Odd => [(s, t + n), (s + n, t)],
        })
    }
}

/// Lifts an undirected unweighted host and its demand pairs to the bipartite
/// double cover. Every lifted pair realizes exactly its original distance.
pub fn bipartite_lift(g: &Graph, pairs: &PairSet) -> Result<LiftResult, PreserverError> {
    if g.is_directed() || g.is_weighted() {
        return Err(PreserverError::UnsupportedHost(format!(
            "directed={} weighted={}",
            g.is_directed(),
            g.is_weighted()
        )));
    }
    let n = g.node_count();
    let mut edges = Vec::with_capacity(2 * g.edge_count());
    for e in g.edges() {
        edges.push((e.u, e.v + n));
        edges.push((e.u + n, e.v));
    }
    let lifted = Graph::unweighted(2 * n, false, edges)?;
    let mut dist_cache: BTreeMap<NodeId, Vec<Option<u64>>> = BTreeMap::new();
    let mut lifted_list = Vec::with_capacity(2 * pairs.len());
    let mut parity = BTreeMap::new();
    for &(s, t) in pairs.iter() {
        let dist = dist_cache
            .entry(s)
            .or_insert_with(|| g.single_source_distances(s).expect("valid node"));
        let d = dist[t].ok_or(GraphError::Disconnected(s, t))?;
        let p = if d % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        };
        parity.insert((s, t), p);
        match p {
            Parity::Even => {
                lifted_list.push((s, t));
                lifted_list.push((s + n, t + n));
            }
            Parity::Odd => {
                lifted_list.push((s, t + n));
                lifted_list.push((s + n, t));
            }
        }
    }
    // construction fails loudly if a lifted pair were ever disconnected
    let lifted_pairs = PairSet::new(&lifted, lifted_list)?;
    Ok(LiftResult {
        lifted,
        lifted_pairs,
        parity,
        original_n: n,
    })
}

/// Collapses a subgraph of a lift back onto the original node set: edge
/// (u, v) survives iff (u, v+n) or (u+n, v) is present.
pub fn contract(h_lift: &Graph, lift: &LiftResult) -> Result<Graph, PreserverError> {
    match h_lift.is_subgraph_of(lift.lifted()) {
        Ok(true) => {}
        Ok(false) => {
            return Err(PreserverError::ShapeMismatch(
                "subgraph contains edges outside the lift".into(),
            ));
        }
        Err(e) => return Err(PreserverError::ShapeMismatch(e.to_string())),
    }
    let n = lift.original_n();
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for e in h_lift.edges() {
        // every lift edge joins the two sides
        let (low, high) = (e.u.min(e.v), e.u.max(e.v));
        debug_assert!(low < n && high >= n);
        let (u, v) = (low, high - n);
        edges.insert((u.min(v), u.max(v)));
    }
    Ok(Graph::unweighted(n, false, edges.into_iter().collect())?)
}

/// The induced-matching partition of a lifted preserver: non-branching tree
/// edges keyed by (owning source, source-distance residue mod 3), plus the
/// set of branching edges left out of the partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingPartition {
    pub classes: BTreeMap<(NodeId, u8), BTreeSet<(NodeId, NodeId)>>,
    pub leftover_branching: BTreeSet<(NodeId, NodeId)>,
}

impl MatchingPartition {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn partitioned_edge_count(&self) -> usize {
        self.classes.values().map(|c| c.len()).sum()
    }
}

/// Partitions the edges of `h_lift` (a union of lazy source trees) into the
/// matching classes: an edge branching in any tree goes to the leftover
/// set, every other edge is owned by the smallest source whose tree uses it
/// and keyed by the distance of its near endpoint mod 3.
pub fn matching_partition(
    trees: &BTreeMap<NodeId, SourceTree>,
    h_lift: &Graph,
) -> Result<MatchingPartition, PreserverError> {
    let mut branching_union: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for tree in trees.values() {
        for &(a, b) in tree.branching() {
            branching_union.insert((a.min(b), a.max(b)));
        }
    }
    let mut classes: BTreeMap<(NodeId, u8), BTreeSet<(NodeId, NodeId)>> = BTreeMap::new();
    let mut leftover = BTreeSet::new();
    for e in h_lift.edges() {
        let key = (e.u.min(e.v), e.u.max(e.v));
        if branching_union.contains(&key) {
            leftover.insert(key);
            continue;
        }
        let mut assigned = false;
        for (&s, tree) in trees {
            // oriented membership: one of the two orientations is the tree edge
            let oriented = if tree.edges().contains(&(e.u, e.v)) {
                Some((e.u, e.v))
            } else if tree.edges().contains(&(e.v, e.u)) {
                Some((e.v, e.u))
            } else {
                None
            };
            if let Some((near, _)) = oriented {
                let layer = tree.layer(near).expect("tree node has a layer");
                let residue = (layer % 3) as u8;
                classes.entry((s, residue)).or_default().insert(key);
                assigned = true;
                break;
            }
        }
        if !assigned {
            return Err(PreserverError::OwnerNotFound(e.u, e.v));
        }
    }
    Ok(MatchingPartition {
        classes,
        leftover_branching: leftover,
    })
}

/// True iff `edges` is a matching in `gb` and the subgraph induced on its
/// endpoints contains exactly these edges.
pub fn check_induced_matching(gb: &Graph, edges: &BTreeSet<(NodeId, NodeId)>) -> bool {
    let mut endpoints: BTreeSet<NodeId> = BTreeSet::new();
    for &(a, b) in edges {
        if !gb.has_edge(a, b) {
            return false;
        }
        if !endpoints.insert(a) || !endpoints.insert(b) {
            return false;
        }
    }
    for e in gb.edges() {
        if endpoints.contains(&e.u) && endpoints.contains(&e.v) {
            let key = (e.u.min(e.v), e.u.max(e.v));
            if !edges.contains(&key) {
                return false;
            }
        }
    }
    true
}

/// Builds a preserver for an undirected unweighted host through the
/// bipartite lift: lazy trees on the lifted instance, tree-union contraction
/// back to the host, plus the induced-matching partition of the lifted
/// union. Certifies that the branching edges number at most twice the
/// lifted pair count.
pub fn build_uu_preserver(
    g: &Graph,
    pairs: &PairSet,
) -> Result<(Preserver, MatchingPartition), PreserverError> {
    let (preserver, partition, _) = build_uu_preserver_full(g, pairs)?;
    Ok((preserver, partition))
}

/// As `build_uu_preserver`, additionally exposing the lift and the lazy
/// trees so callers can audit the lifted structure.
pub fn build_uu_preserver_full(
    g: &Graph,
    pairs: &PairSet,
) -> Result<(Preserver, MatchingPartition, UuArtifacts), PreserverError> {
    let lift = bipartite_lift(g, pairs)?;
    let trees = lazy_scheme(lift.lifted(), lift.lifted_pairs())?;
    let mut lifted_edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for tree in trees.values() {
        for &(a, b) in tree.edges() {
            lifted_edges.insert((a.min(b), a.max(b)));
        }
    }
    let h_lift = Graph::unweighted(
        lift.lifted().node_count(),
        false,
        lifted_edges.into_iter().collect(),
    )?;
    let partition = matching_partition(&trees, &h_lift)?;
    let total_branching: usize = trees.values().map(|t| t.branching().len()).sum();
    assert!(
        total_branching <= 2 * lift.lifted_pairs().len(),
        "branching edges exceed twice the lifted pair count"
    );
    let subgraph = contract(&h_lift, &lift)?;
    let mut provenance: BTreeMap<(NodeId, NodeId), (NodeId, NodeId)> = BTreeMap::new();
    for &pair in pairs.iter() {
        for (ls, lt) in lift.images(pair).expect("every pair has images") {
            let tree = trees.get(&ls).expect("every lifted source has a tree");
            let lifted_path = tree.path_to(lt).expect("lifted target in tree");
            for ab in lifted_path.windows(2) {
                let (low, high) = (ab[0].min(ab[1]), ab[0].max(ab[1]));
                let (u, v) = (low, high - lift.original_n());
                provenance.entry((u.min(v), u.max(v))).or_insert(pair);
            }
        }
    }
    let preserver = Preserver {
        subgraph,
        demanded: pairs.clone(),
        provenance,
    };
    Ok((
        preserver,
        partition,
        UuArtifacts {
            lift,
            trees,
            h_lift,
        },
    ))
}

/// Intermediate artifacts from the undirected-unweighted pipeline.
#[derive(Clone, Debug)]
pub struct UuArtifacts {
    pub lift: LiftResult,
    pub trees: BTreeMap<NodeId, SourceTree>,
    pub h_lift: Graph,
}

/// One demanded distance the candidate subgraph fails to realize.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairViolation {
    pub s: NodeId,
    pub t: NodeId,
    pub host_distance: Option<u64>,
    pub sub_distance: Option<u64>,
}

/// Outcome of verifying a candidate preserver. Empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PreserverReport {
    /// Host/subgraph node count or flag disagreement, fatal for the rest.
    pub shape_mismatch: Option<String>,
    /// Edges of the candidate that are absent (or reweighted) in the host.
    pub foreign_edges: Vec<(NodeId, NodeId)>,
    /// Demanded pairs whose distance differs between host and candidate.
    pub broken_pairs: Vec<PairViolation>,
}

impl PreserverReport {
    pub fn is_empty(&self) -> bool {
        self.shape_mismatch.is_none()
            && self.foreign_edges.is_empty()
            && self.broken_pairs.is_empty()
    }
}

/// Verifies that `h` is a preserver of `(g, pairs)`: it must be a subgraph
/// of `g` and realize every demanded distance exactly.
pub fn verify_preserver(g: &Graph, h: &Graph, pairs: &PairSet) -> PreserverReport {
    let mut report = PreserverReport::default();
    if g.node_count() != h.node_count()
        || g.is_directed() != h.is_directed()
        || g.is_weighted() != h.is_weighted()
    {
        report.shape_mismatch = Some(format!(
            "host (n={}, directed={}, weighted={}) vs candidate (n={}, directed={}, weighted={})",
            g.node_count(),
            g.is_directed(),
            g.is_weighted(),
            h.node_count(),
            h.is_directed(),
            h.is_weighted()
        ));
        return report;
    }
    for e in h.edges() {
        if g.edge_weight(e.u, e.v) != Some(&e.weight) {
            report.foreign_edges.push((e.u, e.v));
        }
    }
    let mut host_cache: BTreeMap<NodeId, Vec<Option<u64>>> = BTreeMap::new();
    let mut sub_cache: BTreeMap<NodeId, Vec<Option<u64>>> = BTreeMap::new();
    for &(s, t) in pairs.iter() {
        let dg = host_cache
            .entry(s)
            .or_insert_with(|| g.single_source_distances(s).expect("valid node"))[t];
        let dh = sub_cache
            .entry(s)
            .or_insert_with(|| h.single_source_distances(s).expect("valid node"))[t];
        if dg != dh {
            report.broken_pairs.push(PairViolation {
                s,
                t,
                host_distance: dg,
                sub_distance: dh,
            });
        }
    }
    report
}
