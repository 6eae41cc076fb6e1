//! Exact-arithmetic graphs, demand pairs, and shortest-path machinery.
//!
//! Every construction and checker in this crate runs on these types. Weights
//! are exact integers (`u64` by default, `BigUint` for perturbed graphs), so
//! every length comparison is reproducible. Unreachable is `None`, never a
//! sentinel value. All types are immutable after construction and all
//! operations are pure, so values can be shared freely across threads.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;

use num_traits::{CheckedAdd, One, Zero};
use thiserror::Error;

/// Node identifier; always in `0..n` for its graph.
pub type NodeId = usize;

/// Per-node distances plus shortest-path-tree parents from one source.
pub type DistancesWithParents<W> = (Vec<Option<W>>, Vec<Option<NodeId>>);

/// Bounds an edge-weight type must satisfy. `u64` covers ordinary graphs;
/// the tiebreak module instantiates `BigUint` for perturbed weights.
pub trait EdgeWeight: Clone + Ord + fmt::Debug + fmt::Display + Zero + One + CheckedAdd {}

impl<T> EdgeWeight for T where T: Clone + Ord + fmt::Debug + fmt::Display + Zero + One + CheckedAdd {}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node id {id} out of range for a graph on {n} nodes")]
    InvalidNode { id: NodeId, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("invalid weight on edge ({u}, {v}): {detail}")]
    InvalidWeight {
        u: NodeId,
        v: NodeId,
        detail: String,
    },
    #[error("graph shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("more than {cap} shortest paths exist")]
    CapExceeded { cap: usize },
    #[error("operation requires a directed graph")]
    NotDirected,
    #[error("node sequence is not a path: {0}")]
    NotAPath(String),
    #[error("pair ({0}, {0}) has equal endpoints")]
    PairEndpointsEqual(NodeId),
    #[error("duplicate pair ({0}, {1})")]
    DuplicatePair(NodeId, NodeId),
    #[error("pair ({0}, {1}) is not connected in the host graph")]
    Disconnected(NodeId, NodeId),
}

/// A single edge. Undirected edges are stored canonically with `u < v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge<W> {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: W,
}

/// A finite graph with exact non-negative integer weights.
///
/// Invariants enforced at construction: node ids in `0..n`, no self-loops,
/// no duplicate edges, weights `>= 1` when weighted and exactly `1` when
/// unweighted. Edge insertion order is preserved, which downstream code
/// relies on for reproducibility.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph<W = u64> {
    n: usize,
    directed: bool,
    weighted: bool,
    edges: Vec<Edge<W>>,
    /// Out-neighbors as (neighbor, edge index), sorted by neighbor id.
    adj: Vec<Vec<(NodeId, usize)>>,
    /// In-neighbors; mirrors `adj` for undirected graphs.
    radj: Vec<Vec<(NodeId, usize)>>,
    index: HashMap<(NodeId, NodeId), usize>,
}

impl<W: EdgeWeight> Graph<W> {
    pub fn new(
        n: usize,
        directed: bool,
        weighted: bool,
        edge_list: Vec<(NodeId, NodeId, W)>,
    ) -> Result<Self, GraphError> {
        let mut edges: Vec<Edge<W>> = Vec::with_capacity(edge_list.len());
        let mut index = HashMap::with_capacity(edge_list.len());
        for (u, v, w) in edge_list {
            if u >= n {
                return Err(GraphError::InvalidNode { id: u, n });
            }
            if v >= n {
                return Err(GraphError::InvalidNode { id: v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if weighted {
                if w < W::one() {
                    return Err(GraphError::InvalidWeight {
                        u,
                        v,
                        detail: format!("weight {w} must be >= 1"),
                    });
                }
            } else if w != W::one() {
                return Err(GraphError::InvalidWeight {
                    u,
                    v,
                    detail: format!("unweighted graphs carry weight 1, got {w}"),
                });
            }
            let (a, b) = if directed || u < v { (u, v) } else { (v, u) };
            match index.entry((a, b)) {
                Entry::Occupied(_) => return Err(GraphError::DuplicateEdge(a, b)),
                Entry::Vacant(slot) => {
                    slot.insert(edges.len());
                }
            }
            edges.push(Edge {
                u: a,
                v: b,
                weight: w,
            });
        }
        let mut adj = vec![Vec::new(); n];
        let mut radj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, i));
            radj[e.v].push((e.u, i));
            if !directed {
                adj[e.v].push((e.u, i));
                radj[e.u].push((e.v, i));
            }
        }
        for list in adj.iter_mut().chain(radj.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            directed,
            weighted,
            edges,
            adj,
            radj,
            index,
        })
    }

    /// Unweighted constructor; every edge carries weight 1.
    pub fn unweighted(
        n: usize,
        directed: bool,
        edge_list: Vec<(NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let list = edge_list
            .into_iter()
            .map(|(u, v)| (u, v, W::one()))
            .collect();
        Self::new(n, directed, false, list)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn edges(&self) -> &[Edge<W>] {
        &self.edges
    }

    /// Out-neighbors of `u` as (neighbor, edge index), sorted by neighbor id.
    pub fn neighbors(&self, u: NodeId) -> &[(NodeId, usize)] {
        &self.adj[u]
    }

    pub fn in_neighbors(&self, u: NodeId) -> &[(NodeId, usize)] {
        &self.radj[u]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.adj[u].len()
    }

    pub fn in_degree(&self, u: NodeId) -> usize {
        self.radj[u].len()
    }

    fn canonical(&self, u: NodeId, v: NodeId) -> (NodeId, NodeId) {
        if self.directed || u < v {
            (u, v)
        } else {
            (v, u)
        }
    }

    /// Index of the edge between `u` and `v`, honoring direction.
    pub fn edge_index(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.index.get(&self.canonical(u, v)).copied()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edge_index(u, v).is_some()
    }

    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> Option<&W> {
        self.edge_index(u, v).map(|i| &self.edges[i].weight)
    }

    /// Edges as a canonical set, for order-insensitive comparison.
    pub fn edge_set(&self) -> BTreeSet<(NodeId, NodeId, W)> {
        self.edges
            .iter()
            .map(|e| (e.u, e.v, e.weight.clone()))
            .collect()
    }

    fn check_node(&self, id: NodeId) -> Result<(), GraphError> {
        if id >= self.n {
            Err(GraphError::InvalidNode { id, n: self.n })
        } else {
            Ok(())
        }
    }

    fn dijkstra(&self, source: NodeId, reverse: bool) -> (Vec<Option<W>>, Vec<Option<NodeId>>) {
        let lists = if reverse { &self.radj } else { &self.adj };
        let mut dist: Vec<Option<W>> = vec![None; self.n];
        let mut parent: Vec<Option<NodeId>> = vec![None; self.n];
        let mut heap = BinaryHeap::new();
        dist[source] = Some(W::zero());
        heap.push(Reverse((W::zero(), source)));
        while let Some(Reverse((d, x))) = heap.pop() {
            if dist[x].as_ref() != Some(&d) {
                continue;
            }
            for &(y, ei) in &lists[x] {
                let nd = d
                    .checked_add(&self.edges[ei].weight)
                    .expect("distance arithmetic overflow");
                let improves = match &dist[y] {
                    None => true,
                    Some(cur) => nd < *cur,
                };
                if improves {
                    dist[y] = Some(nd.clone());
                    parent[y] = Some(x);
                    heap.push(Reverse((nd, y)));
                }
            }
        }
        (dist, parent)
    }

    /// Exact distances from `source` to every node; `None` means unreachable.
    pub fn single_source_distances(&self, source: NodeId) -> Result<Vec<Option<W>>, GraphError> {
        self.check_node(source)?;
        Ok(self.dijkstra(source, false).0)
    }

    /// Distances plus shortest-path tree parents. When shortest paths are
    /// unique (e.g. on a perturbed graph) the parents are forced and the
    /// extracted paths do not depend on traversal order.
    pub fn single_source_with_parents(
        &self,
        source: NodeId,
    ) -> Result<DistancesWithParents<W>, GraphError> {
        self.check_node(source)?;
        Ok(self.dijkstra(source, false))
    }

    /// Exact distances from every node *to* `target`.
    pub fn distances_to(&self, target: NodeId) -> Result<Vec<Option<W>>, GraphError> {
        self.check_node(target)?;
        Ok(self.dijkstra(target, true).0)
    }

    /// Exact shortest-path weight between `u` and `v`.
    pub fn shortest_distance(&self, u: NodeId, v: NodeId) -> Result<Option<W>, GraphError> {
        self.check_node(v)?;
        let dist = self.single_source_distances(u)?;
        Ok(dist[v].clone())
    }

    /// Full distance matrix; `D[u][v]` is `shortest_distance(u, v)`.
    pub fn all_pairs_distances(&self) -> Vec<Vec<Option<W>>> {
        (0..self.n).map(|u| self.dijkstra(u, false).0).collect()
    }

    /// Nodes reachable from `source` (ignoring weights).
    pub fn reachable_from(&self, source: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::new();
        seen[source] = true;
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    /// BFS layers from `source`: number of edges on a shortest path, ignoring
    /// weights. Used for tree layering on unweighted graphs.
    pub fn bfs_layers(&self, source: NodeId) -> Result<Vec<Option<u64>>, GraphError> {
        self.check_node(source)?;
        let mut layer: Vec<Option<u64>> = vec![None; self.n];
        let mut queue = VecDeque::new();
        layer[source] = Some(0);
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let next = layer[x].unwrap() + 1;
            for &(y, _) in &self.adj[x] {
                if layer[y].is_none() {
                    layer[y] = Some(next);
                    queue.push_back(y);
                }
            }
        }
        Ok(layer)
    }

    /// Two-colors the graph; `None` if some component contains an odd cycle.
    pub fn bipartition(&self) -> Option<Vec<bool>> {
        let mut color: Vec<Option<bool>> = vec![None; self.n];
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            queue.push_back(start);
            while let Some(x) = queue.pop_front() {
                let cx = color[x].unwrap();
                for &(y, _) in &self.adj[x] {
                    match color[y] {
                        None => {
                            color[y] = Some(!cx);
                            queue.push_back(y);
                        }
                        Some(cy) if cy == cx => return None,
                        Some(_) => {}
                    }
                }
                // directed graphs still two-color over the underlying
                // undirected structure
                for &(y, _) in &self.radj[x] {
                    match color[y] {
                        None => {
                            color[y] = Some(!cx);
                            queue.push_back(y);
                        }
                        Some(cy) if cy == cx => return None,
                        Some(_) => {}
                    }
                }
            }
        }
        Some(color.into_iter().map(|c| c.unwrap()).collect())
    }

    /// All distinct shortest `u -> v` paths, up to `cap` of them.
    ///
    /// DFS over the shortest-path DAG (distances precomputed from both
    /// endpoints). Errors with `CapExceeded` when more than `cap` paths
    /// exist, which signals the instance is too large for exhaustive
    /// structure checks. Paths come out in lexicographic node order.
    pub fn enumerate_shortest_paths(
        &self,
        u: NodeId,
        v: NodeId,
        cap: usize,
    ) -> Result<Vec<Path<W>>, GraphError> {
        self.check_node(u)?;
        self.check_node(v)?;
        let dist_from = self.single_source_distances(u)?;
        let total = match &dist_from[v] {
            Some(d) => d.clone(),
            None => return Ok(Vec::new()),
        };
        let dist_to = self.distances_to(v)?;
        let mut out = Vec::new();
        let mut stack = vec![u];
        self.enumerate_dfs(
            u, v, &total, &dist_from, &dist_to, &mut stack, &mut out, cap,
        )?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_dfs(
        &self,
        x: NodeId,
        v: NodeId,
        total: &W,
        dist_from: &[Option<W>],
        dist_to: &[Option<W>],
        stack: &mut Vec<NodeId>,
        out: &mut Vec<Path<W>>,
        cap: usize,
    ) -> Result<(), GraphError> {
        if x == v {
            if out.len() >= cap {
                return Err(GraphError::CapExceeded { cap });
            }
            out.push(Path {
                nodes: stack.clone(),
                length: total.clone(),
            });
            return Ok(());
        }
        let dx = dist_from[x].as_ref().expect("node on a shortest path");
        for &(y, ei) in &self.adj[x] {
            let (Some(_), Some(dy)) = (&dist_from[y], &dist_to[y]) else {
                continue;
            };
            let through = dx
                .checked_add(&self.edges[ei].weight)
                .and_then(|s| s.checked_add(dy))
                .expect("distance arithmetic overflow");
            if through == *total {
                stack.push(y);
                self.enumerate_dfs(y, v, total, dist_from, dist_to, stack, out, cap)?;
                stack.pop();
            }
        }
        Ok(())
    }

    /// True iff every edge of `self` appears in `g` with identical weight.
    pub fn is_subgraph_of(&self, g: &Graph<W>) -> Result<bool, GraphError> {
        if self.n != g.n || self.directed != g.directed || self.weighted != g.weighted {
            return Err(GraphError::ShapeMismatch(format!(
                "subgraph has (n={}, directed={}, weighted={}), host has (n={}, directed={}, weighted={})",
                self.n, self.directed, self.weighted, g.n, g.directed, g.weighted
            )));
        }
        Ok(self
            .edges
            .iter()
            .all(|e| g.edge_weight(e.u, e.v) == Some(&e.weight)))
    }
}

/// A simple path: consecutive nodes joined by host edges, no repeated nodes,
/// `length` equal to the sum of traversed edge weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path<W = u64> {
    nodes: Vec<NodeId>,
    length: W,
}

impl<W: EdgeWeight> Path<W> {
    /// Validates `nodes` against `host` and computes the total weight.
    pub fn new(host: &Graph<W>, nodes: Vec<NodeId>) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::NotAPath("empty node sequence".into()));
        }
        let mut seen = HashSet::with_capacity(nodes.len());
        for &x in &nodes {
            if x >= host.node_count() {
                return Err(GraphError::InvalidNode {
                    id: x,
                    n: host.node_count(),
                });
            }
            if !seen.insert(x) {
                return Err(GraphError::NotAPath(format!("node {x} repeats")));
            }
        }
        let mut length = W::zero();
        for pair in nodes.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            match host.edge_weight(a, b) {
                Some(w) => {
                    length = length.checked_add(w).expect("path weight overflow");
                }
                None => {
                    return Err(GraphError::NotAPath(format!("({a}, {b}) is not an edge")));
                }
            }
        }
        Ok(Path { nodes, length })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn length(&self) -> &W {
        &self.length
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    /// Number of edges.
    pub fn edge_len(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Edges in traversal order, as (from, to).
    pub fn steps(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    /// The contiguous segment from `x` to `y`, when both lie on the path
    /// with `x` no later than `y`.
    pub fn segment(&self, x: NodeId, y: NodeId) -> Option<&[NodeId]> {
        let px = self.nodes.iter().position(|&a| a == x)?;
        let py = self.nodes.iter().position(|&a| a == y)?;
        if px <= py {
            Some(&self.nodes[px..=py])
        } else {
            None
        }
    }
}

/// Ordered demand pairs whose distances must be preserved.
///
/// Invariants: `s != t`, no duplicate ordered pairs, all endpoints valid in
/// the host, and every pair connected in the host (checked at construction).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSet {
    pairs: Vec<(NodeId, NodeId)>,
}

impl PairSet {
    pub fn new<W: EdgeWeight>(
        host: &Graph<W>,
        pairs: Vec<(NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let n = host.node_count();
        let mut seen = HashSet::with_capacity(pairs.len());
        for &(s, t) in &pairs {
            if s >= n {
                return Err(GraphError::InvalidNode { id: s, n });
            }
            if t >= n {
                return Err(GraphError::InvalidNode { id: t, n });
            }
            if s == t {
                return Err(GraphError::PairEndpointsEqual(s));
            }
            if !seen.insert((s, t)) {
                return Err(GraphError::DuplicatePair(s, t));
            }
        }
        let mut reach: HashMap<NodeId, Vec<bool>> = HashMap::new();
        for &(s, t) in &pairs {
            let r = reach.entry(s).or_insert_with(|| host.reachable_from(s));
            if !r[t] {
                return Err(GraphError::Disconnected(s, t));
            }
        }
        Ok(PairSet { pairs })
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(NodeId, NodeId)> {
        self.pairs.iter()
    }

    pub fn contains(&self, pair: (NodeId, NodeId)) -> bool {
        self.pairs.contains(&pair)
    }

    /// Partition into per-source demand sets, preserving pair order.
    pub fn by_source(&self) -> std::collections::BTreeMap<NodeId, Vec<(NodeId, NodeId)>> {
        let mut map: std::collections::BTreeMap<NodeId, Vec<(NodeId, NodeId)>> =
            std::collections::BTreeMap::new();
        for &(s, t) in &self.pairs {
            map.entry(s).or_default().push((s, t));
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn path_graph(n: usize) -> Graph {
        Graph::unweighted(n, false, (0..n - 1).map(|i| (i, i + 1)).collect()).unwrap()
    }

    /// Independent oracle: full Bellman-Ford style relaxation, no heap, no
    /// adjacency lists. Shares nothing with the Dijkstra implementation.
    fn relaxation_oracle(g: &Graph, source: NodeId) -> Vec<Option<u64>> {
        let n = g.node_count();
        let mut dist: Vec<Option<u64>> = vec![None; n];
        dist[source] = Some(0);
        for _ in 0..n {
            let mut changed = false;
            for e in g.edges() {
                let relax = |dist: &mut Vec<Option<u64>>, a: usize, b: usize, w: u64| {
                    if let Some(da) = dist[a] {
                        let cand = da + w;
                        if dist[b].is_none_or(|db| cand < db) {
                            dist[b] = Some(cand);
                            return true;
                        }
                    }
                    false
                };
                changed |= relax(&mut dist, e.u, e.v, e.weight);
                if !g.is_directed() {
                    changed |= relax(&mut dist, e.v, e.u, e.weight);
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    fn random_graph(rng: &mut StdRng, n: usize, m: usize, directed: bool, weighted: bool) -> Graph {
        let mut edges = Vec::new();
        let mut used = HashSet::new();
        let mut attempts = 0;
        while edges.len() < m && attempts < 50 * m {
            attempts += 1;
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v {
                continue;
            }
            let key = if directed || u < v { (u, v) } else { (v, u) };
            if used.insert(key) {
                let w = if weighted {
                    rng.random_range(1..=10)
                } else {
                    1
                };
                edges.push((key.0, key.1, w));
            }
        }
        Graph::new(n, directed, weighted, edges).unwrap()
    }

    #[test]
    fn unit_path_distance() {
        let g = path_graph(3);
        assert_eq!(g.shortest_distance(0, 2).unwrap(), Some(2));
    }

    #[test]
    fn detour_beats_direct_edge() {
        let g = Graph::new(3, false, true, vec![(0, 1, 5), (1, 2, 5), (0, 2, 12)]).unwrap();
        assert_eq!(g.shortest_distance(0, 2).unwrap(), Some(10));
    }

    #[test]
    fn invalid_node_rejected() {
        let g = path_graph(3);
        assert!(matches!(
            g.shortest_distance(0, 7),
            Err(GraphError::InvalidNode { id: 7, n: 3 })
        ));
    }

    #[test]
    fn all_pairs_empty_graph() {
        let g: Graph = Graph::unweighted(3, false, vec![]).unwrap();
        let d = g.all_pairs_distances();
        for u in 0..3 {
            for v in 0..3 {
                if u == v {
                    assert_eq!(d[u][v], Some(0));
                } else {
                    assert_eq!(d[u][v], None);
                }
            }
        }
    }

    #[test]
    fn all_pairs_path_symmetric() {
        let g = path_graph(3);
        let d = g.all_pairs_distances();
        assert_eq!(d[0][2], Some(2));
        for u in 0..3 {
            for v in 0..3 {
                assert_eq!(d[u][v], d[v][u]);
            }
        }
    }

    #[test]
    fn dijkstra_agrees_with_relaxation_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        let g = random_graph(&mut rng, 50, 200, false, true);
        for u in 0..g.node_count() {
            let got = g.single_source_distances(u).unwrap();
            let want = relaxation_oracle(&g, u);
            assert_eq!(got, want, "source {u}");
        }
    }

    #[test]
    fn all_pairs_matches_single_source_runs() {
        let mut rng = StdRng::seed_from_u64(11);
        let g = random_graph(&mut rng, 40, 120, true, true);
        let d = g.all_pairs_distances();
        for u in 0..g.node_count() {
            assert_eq!(d[u], g.single_source_distances(u).unwrap());
        }
    }

    #[test]
    fn oracle_agreement_and_metric_properties_small_graphs() {
        let mut rng = StdRng::seed_from_u64(23);
        for case in 0..12 {
            let n = rng.random_range(2..=60);
            let m = rng.random_range(0..=n * 2);
            let directed = case % 2 == 0;
            let weighted = case % 3 != 0;
            let g = random_graph(&mut rng, n, m, directed, weighted);
            let d = g.all_pairs_distances();
            for u in 0..n {
                assert_eq!(d[u], relaxation_oracle(&g, u));
                assert_eq!(d[u][u], Some(0));
            }
            // triangle inequality over finite entries
            for u in 0..n {
                for v in 0..n {
                    for w in 0..n {
                        if let (Some(a), Some(b)) = (d[u][v], d[v][w]) {
                            if let Some(c) = d[u][w] {
                                assert!(c <= a + b, "triangle violated at {u},{v},{w}");
                            } else {
                                panic!("reachable through {v} but D[{u}][{w}] unreachable");
                            }
                        }
                    }
                }
            }
            if !directed {
                for u in 0..n {
                    for v in 0..n {
                        assert_eq!(d[u][v], d[v][u]);
                    }
                }
            }
        }
    }

    #[test]
    fn enumerate_single_path() {
        let g = path_graph(3);
        let ps = g.enumerate_shortest_paths(0, 2, 10).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].nodes(), &[0, 1, 2]);
        assert_eq!(*ps[0].length(), 2);
    }

    #[test]
    fn enumerate_four_cycle_two_paths() {
        let g: Graph = Graph::unweighted(4, false, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let ps = g.enumerate_shortest_paths(0, 2, 10).unwrap();
        let nodes: Vec<_> = ps.iter().map(|p| p.nodes().to_vec()).collect();
        assert_eq!(nodes, vec![vec![0, 1, 2], vec![0, 3, 2]]);
    }

    #[test]
    fn enumerate_grid_count_matches_dag_oracle() {
        // 2x3 grid, opposite corners. Node (r, c) -> r*3 + c.
        let mut edges = Vec::new();
        for r in 0..2 {
            for c in 0..3 {
                let id = r * 3 + c;
                if c + 1 < 3 {
                    edges.push((id, id + 1));
                }
                if r + 1 < 2 {
                    edges.push((id, id + 3));
                }
            }
        }
        let g: Graph = Graph::unweighted(6, false, edges).unwrap();
        let ps = g.enumerate_shortest_paths(0, 5, 100).unwrap();

        // Independent count: DP over the shortest-path DAG.
        let from = g.single_source_distances(0).unwrap();
        let to = g.distances_to(5).unwrap();
        let total = from[5].unwrap();
        let mut order: Vec<NodeId> = (0..6).filter(|&x| from[x].is_some()).collect();
        order.sort_by_key(|&x| from[x].unwrap());
        let mut ways = vec![0u64; 6];
        ways[0] = 1;
        for &x in &order {
            for &(y, ei) in g.neighbors(x) {
                if let (Some(fx), Some(ty)) = (from[x], to[y]) {
                    if fx + g.edges()[ei].weight + ty == total && from[y] == Some(fx + 1) {
                        ways[y] += ways[x];
                    }
                }
            }
        }
        assert_eq!(ps.len() as u64, ways[5]);
        for p in &ps {
            assert_eq!(*p.length(), total);
        }
    }

    #[test]
    fn enumerate_cap_exceeded() {
        let g: Graph = Graph::unweighted(4, false, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(matches!(
            g.enumerate_shortest_paths(0, 2, 1),
            Err(GraphError::CapExceeded { cap: 1 })
        ));
    }

    #[test]
    fn enumerate_paths_are_simple_and_shortest() {
        let mut rng = StdRng::seed_from_u64(31);
        let g = random_graph(&mut rng, 20, 45, false, false);
        for s in 0..20 {
            for t in 0..20 {
                if s == t {
                    continue;
                }
                let Ok(ps) = g.enumerate_shortest_paths(s, t, 5000) else {
                    continue;
                };
                let d = g.shortest_distance(s, t).unwrap();
                for p in &ps {
                    let mut set = HashSet::new();
                    assert!(p.nodes().iter().all(|&x| set.insert(x)));
                    assert_eq!(Some(*p.length()), d);
                }
            }
        }
    }

    #[test]
    fn subgraph_checks() {
        let g = Graph::new(3, false, true, vec![(0, 1, 2), (1, 2, 3), (0, 2, 9)]).unwrap();
        assert!(g.is_subgraph_of(&g).unwrap());
        let h = Graph::new(3, false, true, vec![(0, 1, 2), (1, 2, 3)]).unwrap();
        assert!(h.is_subgraph_of(&g).unwrap());
        let rw = Graph::new(3, false, true, vec![(0, 1, 2), (1, 2, 4)]).unwrap();
        assert!(!rw.is_subgraph_of(&g).unwrap());
        let other_n = Graph::new(4, false, true, vec![(0, 1, 2)]).unwrap();
        assert!(matches!(
            other_n.is_subgraph_of(&g),
            Err(GraphError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert!(matches!(
            Graph::<u64>::unweighted(3, false, vec![(0, 0)]),
            Err(GraphError::SelfLoop(0))
        ));
        assert!(matches!(
            Graph::<u64>::unweighted(3, false, vec![(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            Graph::new(3, false, true, vec![(0, 1, 0)]),
            Err(GraphError::InvalidWeight { .. })
        ));
        assert!(matches!(
            Graph::new(3, false, false, vec![(0, 1, 2)]),
            Err(GraphError::InvalidWeight { .. })
        ));
        assert!(matches!(
            Graph::<u64>::unweighted(2, false, vec![(0, 5)]),
            Err(GraphError::InvalidNode { id: 5, n: 2 })
        ));
    }

    #[test]
    fn path_validation() {
        let g = path_graph(4);
        let p = Path::new(&g, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(*p.length(), 3);
        assert_eq!(p.segment(1, 2), Some(&[1, 2][..]));
        assert_eq!(p.segment(2, 1), None);
        assert!(Path::new(&g, vec![0, 2]).is_err());
        assert!(Path::new(&g, vec![0, 1, 0]).is_err());
        let d: Graph = Graph::unweighted(3, true, vec![(0, 1), (1, 2)]).unwrap();
        assert!(Path::new(&d, vec![2, 1]).is_err());
        assert!(Path::new(&d, vec![0, 1, 2]).is_ok());
    }

    #[test]
    fn core_types_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Graph>();
        assert_send_sync::<Graph<num_bigint::BigUint>>();
        assert_send_sync::<PairSet>();
        assert_send_sync::<Path>();
    }

    #[test]
    fn pair_set_validation() {
        let g = path_graph(4);
        let p = PairSet::new(&g, vec![(0, 3), (3, 0), (1, 2)]).unwrap();
        assert_eq!(p.len(), 3);
        let by = p.by_source();
        assert_eq!(by[&0], vec![(0, 3)]);
        assert!(matches!(
            PairSet::new(&g, vec![(1, 1)]),
            Err(GraphError::PairEndpointsEqual(1))
        ));
        assert!(matches!(
            PairSet::new(&g, vec![(0, 1), (0, 1)]),
            Err(GraphError::DuplicatePair(0, 1))
        ));
        let split = Graph::<u64>::unweighted(4, false, vec![(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            PairSet::new(&split, vec![(0, 3)]),
            Err(GraphError::Disconnected(0, 3))
        ));
    }
}
