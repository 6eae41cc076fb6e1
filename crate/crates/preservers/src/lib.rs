//! Pairwise distance preservers: constructions, certificates, and
//! lower-bound instances.
//!
//! A distance preserver of a graph `G` and demand pairs `P` is a subgraph
//! realizing every demanded distance exactly. This crate builds preservers
//! two ways — grouped consistent tiebreaking for directed/weighted hosts,
//! and a bipartite lift with lazy tiebreaking for undirected unweighted
//! hosts — and certifies their structure through branching-triple counts
//! and induced-matching partitions. It also constructs and verifies
//! obstacle-product instances whose demanded distances provably force a
//! known number of edges into any preserver.
//!
//! Everything runs on exact integer arithmetic; brute-force enumeration
//! backs every structural claim at test scale.

pub mod fileio;
pub mod graph;
pub mod lowerbound;
pub mod preserver;
pub mod report;
pub mod tiebreak;

pub use graph::{Edge, EdgeWeight, Graph, GraphError, NodeId, PairSet, Path};
pub use preserver::{Preserver, PreserverError, PreserverReport};
pub use tiebreak::{PathSystem, SourceTree, TiebreakError};
