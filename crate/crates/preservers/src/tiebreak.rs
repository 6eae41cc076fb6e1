//! Shortest-path tiebreaking schemes and their checkers.
//!
//! Two schemes are produced here. The *consistent* scheme fixes one shortest
//! path per ordered pair such that any sub-segment between two demanded
//! nodes is itself the chosen path for those nodes; it is realized by a
//! deterministic weight perturbation that makes all shortest paths unique.
//! The *lazy* scheme builds per-source shortest-path trees in bipartite
//! unweighted graphs and repairs them until no two same-layer non-branching
//! tree edges admit a crossing graph edge, which delays branching as deep
//! as possible.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId, PairSet, Path};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TiebreakError {
    #[error("graph is not bipartite")]
    NotBipartite,
    #[error("pair ({0}, {1}) is not connected")]
    Disconnected(NodeId, NodeId),
    #[error("host graph must be undirected and unweighted, got {0}")]
    UnsupportedHost(String),
    #[error("stored path for ({s}, {t}) is not a shortest path (length {got}, distance {want})")]
    NotShortest {
        s: NodeId,
        t: NodeId,
        got: u64,
        want: u64,
    },
    #[error("stored path for ({s}, {t}) has endpoints ({ps}, {pt})")]
    EndpointMismatch {
        s: NodeId,
        t: NodeId,
        ps: NodeId,
        pt: NodeId,
    },
    #[error("edge ({0}, {1}) does not exist in the host graph")]
    EdgeNotInHost(NodeId, NodeId),
    #[error("edge ({0}, {1}) does not join consecutive layers from the source")]
    NotLayerEdge(NodeId, NodeId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// An explicit tiebreaking scheme: one stored shortest path per demanded
/// ordered pair. The domain of `entries` is exactly the demanded pair set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSystem {
    host: Graph,
    entries: BTreeMap<(NodeId, NodeId), Path>,
}

impl PathSystem {
    /// Validates that every stored path is a shortest path in `host` between
    /// the endpoints given by its key.
    pub fn from_entries(
        host: &Graph,
        entries: BTreeMap<(NodeId, NodeId), Path>,
    ) -> Result<Self, TiebreakError> {
        let mut dist_cache: HashMap<NodeId, Vec<Option<u64>>> = HashMap::new();
        for (&(s, t), path) in &entries {
            if path.source() != s || path.target() != t {
                return Err(TiebreakError::EndpointMismatch {
                    s,
                    t,
                    ps: path.source(),
                    pt: path.target(),
                });
            }
            // re-validate against the host (paths may come from elsewhere)
            let checked = Path::new(host, path.nodes().to_vec())?;
            let dist = dist_cache
                .entry(s)
                .or_insert_with(|| host.single_source_distances(s).expect("valid node"));
            match &dist[t] {
                Some(d) if *checked.length() == *d => {}
                Some(d) => {
                    return Err(TiebreakError::NotShortest {
                        s,
                        t,
                        got: *checked.length(),
                        want: *d,
                    });
                }
                None => return Err(TiebreakError::Disconnected(s, t)),
            }
        }
        Ok(PathSystem {
            host: host.clone(),
            entries,
        })
    }

    /// Stores entries without any shortest-path validation. Intended for
    /// feeding adversarial inputs to `check_consistency`; the paths must
    /// still be valid simple paths in `host`.
    pub fn from_entries_unchecked(host: &Graph, entries: BTreeMap<(NodeId, NodeId), Path>) -> Self {
        PathSystem {
            host: host.clone(),
            entries,
        }
    }

    pub fn host(&self) -> &Graph {
        &self.host
    }

    pub fn entries(&self) -> &BTreeMap<(NodeId, NodeId), Path> {
        &self.entries
    }

    pub fn path(&self, s: NodeId, t: NodeId) -> Option<&Path> {
        self.entries.get(&(s, t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Union of stored path edges, canonicalized for the host.
    pub fn edge_union(&self) -> BTreeSet<(NodeId, NodeId)> {
        let mut set = BTreeSet::new();
        for path in self.entries.values() {
            for (a, b) in path.steps() {
                let key = if self.host.is_directed() || a < b {
                    (a, b)
                } else {
                    (b, a)
                };
                set.insert(key);
            }
        }
        set
    }
}

/// Replaces edge weights so that shortest paths become unique while every
/// perturbed-shortest path stays shortest under the original weights.
///
/// Edge `i` of `m` gets weight `w * 2^m + 2^i`. Modulo `2^m` the weight of a
/// path is the characteristic vector of its edge set, so two distinct simple
/// paths can never tie; the high part dominates, so an original weight gap
/// of one or more can never be overcome by the low bits.
pub fn perturb_weights(g: &Graph) -> Graph<BigUint> {
    let m = g.edge_count();
    let edges = g
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let w = (BigUint::from(e.weight) << m) + (BigUint::from(1u8) << i);
            (e.u, e.v, w)
        })
        .collect();
    Graph::new(g.node_count(), g.is_directed(), true, edges)
        .expect("perturbed weights preserve graph invariants")
}

/// Builds the consistent tiebreaking scheme for `pairs`: each entry is the
/// unique shortest path of the perturbed graph. Deterministic; the result
/// does not depend on pair order.
pub fn consistent_scheme(g: &Graph, pairs: &PairSet) -> Result<PathSystem, TiebreakError> {
    let gstar = perturb_weights(g);
    let mut entries = BTreeMap::new();
    for (&s, group) in &pairs.by_source() {
        let (dist_star, parent) = gstar.single_source_with_parents(s)?;
        let dist_g = g.single_source_distances(s)?;
        for &(_, t) in group {
            if dist_star[t].is_none() {
                return Err(TiebreakError::Disconnected(s, t));
            }
            let mut nodes = vec![t];
            let mut cur = t;
            while cur != s {
                cur = parent[cur].expect("reachable node has a parent");
                nodes.push(cur);
            }
            nodes.reverse();
            let path = Path::new(g, nodes)?;
            // a perturbed-shortest path must be shortest under original weights
            assert_eq!(
                Some(*path.length()),
                dist_g[t],
                "perturbed shortest path for ({s}, {t}) is not host-shortest"
            );
            entries.insert((s, t), path);
        }
    }
    Ok(PathSystem::from_entries_unchecked(g, entries))
}

/// A consistency violation: the `inner` pair is demanded, both its endpoints
/// lie on the stored path of `outer`, but the stored segment differs from
/// the stored path of `inner`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyViolation {
    pub outer: (NodeId, NodeId),
    pub inner: (NodeId, NodeId),
}

/// Checks the consistency property over the stored pairs: for every stored
/// path pi(w, z) and every stored pair (x, y) with both nodes on it and
/// dist(w, x) < dist(w, y), the x..y segment of pi(w, z) must equal
/// pi(x, y). Distances are true host distances, so corrupted systems with
/// non-shortest paths are still judged correctly.
pub fn check_consistency(system: &PathSystem) -> Vec<ConsistencyViolation> {
    let host = system.host();
    let mut dist_cache: HashMap<NodeId, Vec<Option<u64>>> = HashMap::new();
    let mut violations = Vec::new();
    for (&(w, z), outer_path) in system.entries() {
        let dist_w = dist_cache
            .entry(w)
            .or_insert_with(|| host.single_source_distances(w).expect("valid node"));
        for (&(x, y), inner_path) in system.entries() {
            if (x, y) == (w, z) {
                continue;
            }
            let on_path = |a: NodeId| outer_path.nodes().contains(&a);
            if !(on_path(x) && on_path(y)) {
                continue;
            }
            let (Some(dx), Some(dy)) = (&dist_w[x], &dist_w[y]) else {
                continue;
            };
            if dx >= dy {
                continue;
            }
            let matches = outer_path
                .segment(x, y)
                .is_some_and(|seg| seg == inner_path.nodes());
            if !matches {
                violations.push(ConsistencyViolation {
                    outer: (w, z),
                    inner: (x, y),
                });
            }
        }
    }
    violations
}

/// A per-source tree realizing one shortest path per pair in `P_s`, with
/// layer annotations (graph distance from the source) and branching-edge
/// markings (edges leaving a node of out-degree >= 2 when the tree is
/// oriented away from the source).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceTree {
    source: NodeId,
    /// Oriented (parent, child) pairs; child is one layer deeper.
    edges: BTreeSet<(NodeId, NodeId)>,
    layer: BTreeMap<NodeId, u64>,
    branching: BTreeSet<(NodeId, NodeId)>,
}

impl SourceTree {
    /// Orients `edges` away from `source` by BFS layer and computes the
    /// branching set. Edges must exist in `gb` and join consecutive layers;
    /// structural tree-ness is *not* enforced here, `check_lazy` flags it.
    pub fn new(
        gb: &Graph,
        source: NodeId,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, TiebreakError> {
        let layers = gb.bfs_layers(source)?;
        let mut oriented = BTreeSet::new();
        let mut layer = BTreeMap::new();
        layer.insert(source, 0);
        for (a, b) in edges {
            if !gb.has_edge(a, b) {
                return Err(TiebreakError::EdgeNotInHost(a, b));
            }
            let (Some(la), Some(lb)) = (layers[a], layers[b]) else {
                return Err(TiebreakError::NotLayerEdge(a, b));
            };
            let (x, y) = if lb == la + 1 {
                (a, b)
            } else if la == lb + 1 {
                (b, a)
            } else {
                return Err(TiebreakError::NotLayerEdge(a, b));
            };
            oriented.insert((x, y));
            layer.insert(x, layers[x].unwrap());
            layer.insert(y, layers[y].unwrap());
        }
        let branching = compute_branching(&oriented);
        Ok(SourceTree {
            source,
            edges: oriented,
            layer,
            branching,
        })
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    /// Oriented (parent, child) edges.
    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Graph distance from the source, for nodes present in the tree.
    pub fn layer(&self, node: NodeId) -> Option<u64> {
        self.layer.get(&node).copied()
    }

    pub fn branching(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.branching
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        let mut set: BTreeSet<NodeId> = self.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        set.insert(self.source);
        set
    }

    /// Unique parent of `node`, when it has exactly one.
    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        let mut found = None;
        for &(a, b) in &self.edges {
            if b == node {
                if found.is_some() {
                    return None;
                }
                found = Some(a);
            }
        }
        found
    }

    /// Tree path from the source to `target`, following unique parents.
    pub fn path_to(&self, target: NodeId) -> Option<Vec<NodeId>> {
        let mut nodes = vec![target];
        let mut cur = target;
        let mut steps = 0;
        while cur != self.source {
            cur = self.parent(cur)?;
            nodes.push(cur);
            steps += 1;
            if steps > self.edges.len() + 1 {
                return None;
            }
        }
        nodes.reverse();
        Some(nodes)
    }

    /// Leaves of the tree under the away-from-source orientation.
    pub fn leaves(&self) -> BTreeSet<NodeId> {
        let mut out_deg: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &(a, b) in &self.edges {
            *out_deg.entry(a).or_default() += 1;
            out_deg.entry(b).or_default();
        }
        out_deg
            .into_iter()
            .filter_map(|(node, d)| (d == 0 && node != self.source).then_some(node))
            .collect()
    }
}

fn compute_branching(oriented: &BTreeSet<(NodeId, NodeId)>) -> BTreeSet<(NodeId, NodeId)> {
    let mut out_deg: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &(a, _) in oriented {
        *out_deg.entry(a).or_default() += 1;
    }
    oriented
        .iter()
        .filter(|(a, _)| out_deg[a] >= 2)
        .copied()
        .collect()
}

/// Counters from a lazy-scheme run; the repair loop has no known worst-case
/// iteration bound, so tests watch this empirically.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LazyStats {
    pub reroutes: u64,
}

/// Builds a lazy tiebreaking scheme: one source tree per demand source.
///
/// For each source, starts from the breadth-first tree with minimum-id
/// parents pruned to ancestors of the targets, then repeatedly reroutes:
/// while distinct non-branching same-layer tree edges (x, y), (x', y') exist
/// with (x, y') a graph edge, every path through (x', y') is redirected to
/// run source -> x, cross (x, y'), and continue on its old suffix; edges no
/// longer on any path are pruned. Each reroute strictly increases the
/// descending branching-depth list, so the loop terminates.
pub fn lazy_scheme(
    gb: &Graph,
    pairs: &PairSet,
) -> Result<BTreeMap<NodeId, SourceTree>, TiebreakError> {
    lazy_scheme_with_stats(gb, pairs).map(|(trees, _)| trees)
}

pub fn lazy_scheme_with_stats(
    gb: &Graph,
    pairs: &PairSet,
) -> Result<(BTreeMap<NodeId, SourceTree>, LazyStats), TiebreakError> {
    if gb.is_directed() || gb.is_weighted() {
        return Err(TiebreakError::UnsupportedHost(format!(
            "directed={} weighted={}",
            gb.is_directed(),
            gb.is_weighted()
        )));
    }
    if gb.bipartition().is_none() {
        return Err(TiebreakError::NotBipartite);
    }
    let mut trees = BTreeMap::new();
    let mut stats = LazyStats::default();
    for (&source, group) in &pairs.by_source() {
        let targets: Vec<NodeId> = group.iter().map(|&(_, t)| t).collect();
        let tree = build_lazy_tree(gb, source, &targets, &mut stats)?;
        trees.insert(source, tree);
    }
    Ok((trees, stats))
}

fn build_lazy_tree(
    gb: &Graph,
    source: NodeId,
    targets: &[NodeId],
    stats: &mut LazyStats,
) -> Result<SourceTree, TiebreakError> {
    let layers = gb.bfs_layers(source)?;
    // initial parents: minimum-id neighbor one layer up (adjacency is sorted)
    let mut parent: Vec<Option<NodeId>> = vec![None; gb.node_count()];
    for v in 0..gb.node_count() {
        let Some(lv) = layers[v] else { continue };
        if v == source {
            continue;
        }
        parent[v] = gb
            .neighbors(v)
            .iter()
            .map(|&(u, _)| u)
            .find(|&u| layers[u] == Some(lv - 1));
    }
    for &t in targets {
        if layers[t].is_none() {
            return Err(TiebreakError::Disconnected(source, t));
        }
    }

    let used_edges = |parent: &[Option<NodeId>]| -> BTreeSet<(NodeId, NodeId)> {
        let mut used = BTreeSet::new();
        for &t in targets {
            let mut cur = t;
            while cur != source {
                let p = parent[cur].expect("target ancestors have parents");
                used.insert((p, cur));
                cur = p;
            }
        }
        used
    };

    // Repair loop. Each reroute strictly increases the tree in the paper's
    // partial order over branching-depth lists, so this terminates; the
    // budget turns an unexpected failure of that argument into a loud stop.
    let budget = 16 + gb.node_count() as u64 * gb.edge_count() as u64;
    let mut iterations = 0u64;
    loop {
        let used = used_edges(&parent);
        let branching = compute_branching(&used);
        let plain: Vec<(NodeId, NodeId)> = used
            .iter()
            .filter(|e| !branching.contains(e))
            .copied()
            .collect();
        // candidate reroute: ordered pair ((x, y), (x', y')) of distinct
        // non-branching tree edges on the same layer with (x, y') in E
        let mut best: Option<(u64, NodeId, NodeId, NodeId, NodeId)> = None;
        for &(x, y) in &plain {
            for &(xp, yp) in &plain {
                if (x, y) == (xp, yp) || layers[y] != layers[yp] {
                    continue;
                }
                if !gb.has_edge(x, yp) {
                    continue;
                }
                // deepest violation first, ties by smallest ids
                let depth = layers[yp].unwrap();
                let key = (depth, xp, yp, x, y);
                let better = match best {
                    None => true,
                    Some((bd, bxp, byp, bx, by)) => {
                        (std::cmp::Reverse(depth), xp, yp, x, y)
                            < (std::cmp::Reverse(bd), bxp, byp, bx, by)
                    }
                };
                if better {
                    best = Some(key);
                }
            }
        }
        let Some((_, _, yp, x, _)) = best else {
            break;
        };
        parent[yp] = Some(x);
        stats.reroutes += 1;
        iterations += 1;
        assert!(
            iterations <= budget,
            "lazy repair exceeded its iteration budget for source {source}"
        );
    }

    let used = used_edges(&parent);
    let tree = SourceTree::new(gb, source, used)?;
    // structural certificates: a tree on |P_s| targets has at most |P_s|
    // leaves and at most 2 |P_s| branching edges
    assert!(tree.leaves().len() <= targets.len());
    assert!(tree.branching().len() <= 2 * targets.len());
    Ok(tree)
}

/// A violation of the lazy-scheme contract.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LazyViolation {
    /// A source with demanded pairs has no tree.
    MissingTree { source: NodeId },
    /// The supplied edge set is not a tree rooted at the source.
    BrokenTree { source: NodeId, detail: String },
    /// The tree does not realize the demanded source-target distance.
    PairNotPreserved { source: NodeId, target: NodeId },
    /// Two same-layer non-branching tree edges admit a crossing graph edge.
    CrossingEdges {
        source: NodeId,
        first: (NodeId, NodeId),
        second: (NodeId, NodeId),
        cross: (NodeId, NodeId),
    },
}

/// Checks both lazy properties for every tree: (1) each supplied edge set is
/// a tree rooted at its source that preserves all of that source's demanded
/// distances, and (2) no two distinct same-layer non-branching edges of one
/// tree admit a crossing edge of `gb`. Layers are recomputed from `gb`;
/// nothing stored in the trees is trusted.
pub fn check_lazy(
    trees: &BTreeMap<NodeId, SourceTree>,
    gb: &Graph,
    pairs: &PairSet,
) -> Vec<LazyViolation> {
    let mut violations = Vec::new();
    let by_source = pairs.by_source();
    for &source in by_source.keys() {
        if !trees.contains_key(&source) {
            violations.push(LazyViolation::MissingTree { source });
        }
    }
    for (&source, tree) in trees {
        let layers = match gb.bfs_layers(source) {
            Ok(l) => l,
            Err(e) => {
                violations.push(LazyViolation::BrokenTree {
                    source,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let mut structurally_ok = true;
        let mut in_deg: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &(a, b) in tree.edges() {
            *in_deg.entry(b).or_default() += 1;
            if !gb.has_edge(a, b) {
                violations.push(LazyViolation::BrokenTree {
                    source,
                    detail: format!("({a}, {b}) is not a graph edge"),
                });
                structurally_ok = false;
            }
            match (layers[a], layers[b]) {
                (Some(la), Some(lb)) if lb == la + 1 => {}
                _ => {
                    violations.push(LazyViolation::BrokenTree {
                        source,
                        detail: format!("({a}, {b}) does not advance one layer from the source"),
                    });
                    structurally_ok = false;
                }
            }
        }
        if let Some((&node, &d)) = in_deg.iter().find(|&(_, &d)| d > 1) {
            violations.push(LazyViolation::BrokenTree {
                source,
                detail: format!("node {node} has {d} parents"),
            });
            structurally_ok = false;
        }
        if in_deg.contains_key(&source) {
            violations.push(LazyViolation::BrokenTree {
                source,
                detail: "source has a parent".into(),
            });
            structurally_ok = false;
        }
        // every tree node must hang below the source
        if structurally_ok {
            for node in tree.nodes() {
                if node != source && tree.path_to(node).is_none() {
                    violations.push(LazyViolation::BrokenTree {
                        source,
                        detail: format!("node {node} is not reachable from the source"),
                    });
                    structurally_ok = false;
                }
            }
        }
        if let Some(group) = by_source.get(&source) {
            for &(_, t) in group {
                let preserved = structurally_ok
                    && tree
                        .path_to(t)
                        .is_some_and(|p| Some((p.len() - 1) as u64) == layers[t]);
                if !preserved {
                    violations.push(LazyViolation::PairNotPreserved { source, target: t });
                }
            }
        }
        // property 2: crossing edges between same-layer non-branching edges
        let plain: Vec<(NodeId, NodeId)> = tree
            .edges()
            .iter()
            .filter(|e| !tree.branching().contains(e))
            .copied()
            .collect();
        let mut reported = BTreeSet::new();
        for (i, &(x, y)) in plain.iter().enumerate() {
            for &(xp, yp) in plain.iter().skip(i + 1) {
                if layers[y] != layers[yp] || layers[y].is_none() {
                    continue;
                }
                for cross in [(x, yp), (xp, y)] {
                    if gb.has_edge(cross.0, cross.1) && reported.insert(((x, y), (xp, yp), cross)) {
                        violations.push(LazyViolation::CrossingEdges {
                            source,
                            first: (x, y),
                            second: (xp, yp),
                            cross,
                        });
                    }
                }
            }
        }
    }
    violations
}

/// Serializes a path system deterministically, for byte-identity checks and
/// provenance dumps.
pub fn render_path_system(system: &PathSystem) -> String {
    let mut out = String::new();
    for ((s, t), path) in system.entries() {
        let nodes: Vec<String> = path.nodes().iter().map(|x| x.to_string()).collect();
        out.push_str(&format!(
            "{s} {t}: {} ({})\n",
            nodes.join("-"),
            path.length()
        ));
    }
    out
}
