//! Command-line front end: file ingestion, report emission, and dispatch.
//!
//! Exit status: 0 when the emitted report passes, 1 when it fails, 2 on
//! usage or input errors. All outputs are deterministic for fixed inputs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use preservers::fileio::{
    parse_graph, parse_pairs, serialize_graph, serialize_preserver, ParsedInstance,
};
use preservers::graph::{Graph, NodeId, PairSet};
use preservers::lowerbound::{
    check_path_structure, forced_edge_count, gen_inner, gen_outer, obstacle_product,
    validate_inner, InnerInstance, ObstacleInstance, OuterInstance, ProductMode,
};
use preservers::preserver::{
    build_dw_preserver, build_uu_preserver_full, choose3, count_branching_triples, group_size,
    verify_preserver, Preserver, PreserverReport,
};
use preservers::report::{emit_report, Report, ReportFormat};

#[derive(Parser)]
#[command(
    name = "preservers",
    version,
    about = "Distance preserver toolkit: builders, verifiers, and lower-bound instances"
)]
struct Cli {
    /// Report output format
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Cap on shortest-path enumeration during structure checks
    #[arg(long, global = true, default_value_t = 10_000)]
    cap: usize,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PreserveMode {
    /// Grouped consistent tiebreaking; any directed/weighted host
    Dw,
    /// Bipartite lift plus lazy tiebreaking; undirected unweighted hosts
    Uu,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LbMode {
    Weighted,
    Unweighted,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Random,
    Outer,
    Inner,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a distance preserver and verify it
    Preserve {
        #[arg(long, value_enum)]
        mode: PreserveMode,
        #[arg(short = 'g', long)]
        graph: PathBuf,
        #[arg(short = 'p', long)]
        pairs: Option<PathBuf>,
        /// Output file for the preserver (graph + pairs + ownership comments)
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Check that a subgraph preserves all demanded distances
    Verify {
        #[arg(short = 'g', long)]
        graph: PathBuf,
        #[arg(short = 'p', long)]
        pairs: Option<PathBuf>,
        #[arg(short = 'H', long)]
        subgraph: PathBuf,
    },
    /// Lift an instance to its bipartite double cover
    Lift {
        #[arg(short = 'g', long)]
        graph: PathBuf,
        #[arg(short = 'p', long)]
        pairs: Option<PathBuf>,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Contract a lifted subgraph back onto the original node set
    Contract {
        #[arg(short = 'g', long)]
        graph: PathBuf,
        #[arg(short = 'p', long)]
        pairs: Option<PathBuf>,
        /// Subgraph of the lift, in the lifted id space
        #[arg(short = 'H', long)]
        subgraph: PathBuf,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Count branching triples of a directed graph
    Triples {
        #[arg(short = 'g', long)]
        graph: PathBuf,
    },
    /// Compose an obstacle-product lower-bound instance
    LowerboundBuild {
        #[arg(long, value_enum)]
        mode: LbMode,
        /// Middle-layer node count of the generated outer instance
        #[arg(long, default_value_t = 2)]
        nmid: usize,
        /// Even middle-layer degree of the generated outer instance
        #[arg(long = "D", default_value_t = 4)]
        degree: u64,
        /// Path length of each generated inner instance
        #[arg(long, default_value_t = 3)]
        inner_len: usize,
        /// Outer instance file (layer labels 0/1/2) instead of a generated one
        #[arg(long)]
        outer: Option<PathBuf>,
        /// Inner instance file, reused for every middle node
        #[arg(long)]
        inner: Option<PathBuf>,
        /// Output prefix; writes <prefix>.graph.txt and <prefix>.instance.json
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Re-check a built obstacle instance from its JSON file
    LowerboundCheck {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Generate instances (random graphs, outer/inner lower-bound pieces)
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        nodes: usize,
        #[arg(long, default_value_t = 40)]
        edges: usize,
        #[arg(long, default_value_t = 5)]
        pair_count: usize,
        #[arg(long, default_value_t = false)]
        directed: bool,
        #[arg(long, default_value_t = false)]
        weighted: bool,
        #[arg(long, default_value_t = 10)]
        max_weight: u64,
        #[arg(long, default_value_t = 2)]
        nmid: usize,
        #[arg(long = "D", default_value_t = 4)]
        degree: u64,
        #[arg(long, default_value_t = 3)]
        inner_len: usize,
        #[arg(long, default_value_t = 2)]
        inner_pairs: usize,
        #[arg(long, default_value_t = false)]
        layered: bool,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Print instance statistics and structural certificates
    Stats {
        #[arg(short = 'g', long)]
        graph: PathBuf,
        #[arg(short = 'p', long)]
        pairs: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Text => ReportFormat::Text,
    };
    match run(cli.command, cli.cap) {
        Ok(report) => {
            print!("{}", emit_report(&report, format));
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn digest(text: &str) -> String {
    let hash = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in hash {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn read_input(path: &Path) -> Result<(String, String), String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let d = digest(&text);
    Ok((text, d))
}

fn write_output(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads a graph file plus an optional separate pairs file (which replaces
/// any inline pairs), recording digests into the report.
fn load_instance(
    graph_path: &Path,
    pairs_path: Option<&Path>,
    report: &mut Report,
) -> Result<ParsedInstance, String> {
    let (text, d) = read_input(graph_path)?;
    report.input(file_name(graph_path), d);
    let mut inst = parse_graph(&text).map_err(|e| e.to_string())?;
    if let Some(pp) = pairs_path {
        let (ptext, pd) = read_input(pp)?;
        report.input(file_name(pp), pd);
        inst.pairs = parse_pairs(&ptext, &inst.graph).map_err(|e| e.to_string())?;
    }
    Ok(inst)
}

fn base_metrics(report: &mut Report, g: &Graph, pairs: &PairSet) {
    report.metric("node_count", g.node_count() as u64);
    report.metric("edge_count", g.edge_count() as u64);
    report.metric("pair_count", pairs.len() as u64);
}

fn record_verification(report: &mut Report, outcome: &PreserverReport) {
    if let Some(detail) = &outcome.shape_mismatch {
        report.violation("shape-mismatch", detail.clone());
    }
    for &(u, v) in &outcome.foreign_edges {
        report.violation("foreign-edge", format!("({u}, {v}) is not a host edge"));
    }
    for bp in &outcome.broken_pairs {
        report.violation(
            "broken-pair",
            format!(
                "({}, {}): host {:?}, candidate {:?}",
                bp.s, bp.t, bp.host_distance, bp.sub_distance
            ),
        );
    }
}

fn run(command: Cmd, cap: usize) -> Result<Report, String> {
    match command {
        Cmd::Preserve {
            mode,
            graph,
            pairs,
            out,
        } => {
            let mut report = Report::new("preserve");
            let inst = load_instance(&graph, pairs.as_deref(), &mut report)?;
            base_metrics(&mut report, &inst.graph, &inst.pairs);
            let preserver: Preserver = match mode {
                PreserveMode::Dw => {
                    let p =
                        build_dw_preserver(&inst.graph, &inst.pairs).map_err(|e| e.to_string())?;
                    let n = inst.graph.node_count() as u64;
                    let g = group_size(inst.graph.node_count()) as u64;
                    let groups = inst.pairs.len().div_ceil(g.max(1) as usize) as u64;
                    report.metric("group_size", g);
                    report.metric("group_count", groups);
                    report.metric("size_bound", groups * (2 * n + choose3(g)));
                    p
                }
                PreserveMode::Uu => {
                    let (p, partition, artifacts) =
                        build_uu_preserver_full(&inst.graph, &inst.pairs)
                            .map_err(|e| e.to_string())?;
                    report.metric(
                        "lifted_pair_count",
                        artifacts.lift.lifted_pairs().len() as u64,
                    );
                    report.metric(
                        "branching_edge_count",
                        partition.leftover_branching.len() as u64,
                    );
                    report.metric("matching_class_count", partition.class_count() as u64);
                    report.metric(
                        "partitioned_edge_count",
                        partition.partitioned_edge_count() as u64,
                    );
                    p
                }
            };
            report.metric("preserver_edge_count", preserver.edge_count() as u64);
            let outcome = verify_preserver(&inst.graph, preserver.subgraph(), &inst.pairs);
            record_verification(&mut report, &outcome);
            if let Some(out) = out {
                write_output(&out, &serialize_preserver(&preserver))?;
            }
            Ok(report)
        }
        Cmd::Verify {
            graph,
            pairs,
            subgraph,
        } => {
            let mut report = Report::new("verify");
            let inst = load_instance(&graph, pairs.as_deref(), &mut report)?;
            let (htext, hd) = read_input(&subgraph)?;
            report.input(file_name(&subgraph), hd);
            let hinst = parse_graph(&htext).map_err(|e| e.to_string())?;
            base_metrics(&mut report, &inst.graph, &inst.pairs);
            report.metric("subgraph_edge_count", hinst.graph.edge_count() as u64);
            let outcome = verify_preserver(&inst.graph, &hinst.graph, &inst.pairs);
            record_verification(&mut report, &outcome);
            Ok(report)
        }
        Cmd::Lift { graph, pairs, out } => {
            let mut report = Report::new("lift");
            let inst = load_instance(&graph, pairs.as_deref(), &mut report)?;
            base_metrics(&mut report, &inst.graph, &inst.pairs);
            let lift = preservers::preserver::bipartite_lift(&inst.graph, &inst.pairs)
                .map_err(|e| e.to_string())?;
            report.metric("lifted_node_count", lift.lifted().node_count() as u64);
            report.metric("lifted_edge_count", lift.lifted().edge_count() as u64);
            report.metric("lifted_pair_count", lift.lifted_pairs().len() as u64);
            if let Some(out) = out {
                write_output(
                    &out,
                    &serialize_graph(lift.lifted(), Some(lift.lifted_pairs()), None),
                )?;
            }
            Ok(report)
        }
        Cmd::Contract {
            graph,
            pairs,
            subgraph,
            out,
        } => {
            let mut report = Report::new("contract");
            let inst = load_instance(&graph, pairs.as_deref(), &mut report)?;
            let (htext, hd) = read_input(&subgraph)?;
            report.input(file_name(&subgraph), hd);
            let hinst = parse_graph(&htext).map_err(|e| e.to_string())?;
            base_metrics(&mut report, &inst.graph, &inst.pairs);
            let lift = preservers::preserver::bipartite_lift(&inst.graph, &inst.pairs)
                .map_err(|e| e.to_string())?;
            let contracted =
                preservers::preserver::contract(&hinst.graph, &lift).map_err(|e| e.to_string())?;
            report.metric(
                "lifted_subgraph_edge_count",
                hinst.graph.edge_count() as u64,
            );
            report.metric("contracted_edge_count", contracted.edge_count() as u64);
            // a preserver of the lift must contract to a preserver of the host
            let lifted_ok = verify_preserver(lift.lifted(), &hinst.graph, lift.lifted_pairs());
            if lifted_ok.is_empty() {
                let outcome = verify_preserver(&inst.graph, &contracted, &inst.pairs);
                record_verification(&mut report, &outcome);
            } else {
                report.violation(
                    "lifted-subgraph",
                    "input does not preserve the lifted demand pairs".to_string(),
                );
            }
            if let Some(out) = out {
                write_output(&out, &serialize_graph(&contracted, Some(&inst.pairs), None))?;
            }
            Ok(report)
        }
        Cmd::Triples { graph } => {
            let mut report = Report::new("triples");
            let (text, d) = read_input(&graph)?;
            report.input(file_name(&graph), d);
            let inst = parse_graph(&text).map_err(|e| e.to_string())?;
            base_metrics(&mut report, &inst.graph, &inst.pairs);
            let triples = count_branching_triples(&inst.graph).map_err(|e| e.to_string())?;
            report.metric("branching_triples", triples);
            report.metric(
                "edge_bound_2n_plus_triples",
                2 * inst.graph.node_count() as u64 + triples,
            );
            Ok(report)
        }
        Cmd::LowerboundBuild {
            mode,
            nmid,
            degree,
            inner_len,
            outer,
            inner,
            out,
        } => {
            if nmid == 0 {
                return Err("--nmid must be at least 1".into());
            }
            if inner_len == 0 {
                return Err("--inner-len must be at least 1".into());
            }
            let mut report = Report::new("lowerbound-build");
            let weighted = mode == LbMode::Weighted;
            let pmode = match mode {
                LbMode::Weighted => ProductMode::Weighted,
                LbMode::Unweighted => ProductMode::Unweighted,
            };
            let outer_inst = match outer {
                Some(path) => {
                    let (text, d) = read_input(&path)?;
                    report.input(file_name(&path), d);
                    let parsed = parse_graph(&text).map_err(|e| e.to_string())?;
                    let layers = parsed
                        .layers
                        .ok_or("outer instance files need layer labels 0/1/2")?;
                    OuterInstance::from_layered(parsed.graph, parsed.pairs, &layers)
                        .map_err(|e| e.to_string())?
                }
                None => gen_outer(nmid, degree, weighted).map_err(|e| e.to_string())?,
            };
            let inner_inst = match inner {
                Some(path) => {
                    let (text, d) = read_input(&path)?;
                    report.input(file_name(&path), d);
                    let parsed = parse_graph(&text).map_err(|e| e.to_string())?;
                    let built =
                        InnerInstance::from_parts(parsed.graph, parsed.pairs, parsed.layers)
                            .map_err(|e| e.to_string())?;
                    let flaws = validate_inner(&built).map_err(|e| e.to_string())?;
                    if let Some(flaw) = flaws.first() {
                        return Err(format!("inner instance invalid: {flaw}"));
                    }
                    Some(built)
                }
                None => None,
            };
            let half = (outer_inst.degree / 2) as usize;
            let layered = pmode == ProductMode::Unweighted;
            let inst = obstacle_product(
                &outer_inst,
                |_| match &inner_inst {
                    Some(inner) => inner.clone(),
                    None => gen_inner(half, inner_len, layered),
                },
                pmode,
                cap,
            )
            .map_err(|e| e.to_string())?;
            base_metrics(&mut report, &inst.graph, &inst.demanded);
            report.metric("scale", inst.scale);
            report.metric("subset_size", inst.subset.len() as u64);
            let violations = check_path_structure(&inst, cap).map_err(|e| e.to_string())?;
            for v in &violations {
                report.violation(
                    "structure",
                    format!(
                        "pair ({}, {}) via {:?}: {}",
                        v.pair.0, v.pair.1, v.path, v.reason
                    ),
                );
            }
            if violations.is_empty() {
                let forced = forced_edge_count(&inst, cap).map_err(|e| e.to_string())?;
                report.metric("forced_edge_count", forced);
            }
            if let Some(prefix) = out {
                let graph_path = prefix.with_extension("graph.txt");
                write_output(
                    &graph_path,
                    &serialize_graph(&inst.graph, Some(&inst.demanded), None),
                )?;
                let json_path = prefix.with_extension("instance.json");
                write_output(&json_path, &inst.to_json())?;
            }
            Ok(report)
        }
        Cmd::LowerboundCheck { instance } => {
            let mut report = Report::new("lowerbound-check");
            let (text, d) = read_input(&instance)?;
            report.input(file_name(&instance), d);
            let inst = ObstacleInstance::from_json(&text).map_err(|e| e.to_string())?;
            base_metrics(&mut report, &inst.graph, &inst.demanded);
            report.metric("scale", inst.scale);
            report.metric("subset_size", inst.subset.len() as u64);
            let violations = check_path_structure(&inst, cap).map_err(|e| e.to_string())?;
            for v in &violations {
                report.violation(
                    "structure",
                    format!(
                        "pair ({}, {}) via {:?}: {}",
                        v.pair.0, v.pair.1, v.path, v.reason
                    ),
                );
            }
            if violations.is_empty() {
                let forced = forced_edge_count(&inst, cap).map_err(|e| e.to_string())?;
                report.metric("forced_edge_count", forced);
            }
            Ok(report)
        }
        Cmd::Gen {
            kind,
            seed,
            nodes,
            edges,
            pair_count,
            directed,
            weighted,
            max_weight,
            nmid,
            degree,
            inner_len,
            inner_pairs,
            layered,
            out,
        } => {
            let mut report = Report::new("gen");
            let (text, g, pairs) = match kind {
                GenKind::Random => {
                    if nodes < 2 {
                        return Err("--nodes must be at least 2".into());
                    }
                    let (g, pairs) = gen_random_instance(
                        seed, nodes, edges, pair_count, directed, weighted, max_weight,
                    )?;
                    (serialize_graph(&g, Some(&pairs), None), g, pairs)
                }
                GenKind::Outer => {
                    let outer = gen_outer(nmid, degree, weighted).map_err(|e| e.to_string())?;
                    let mut layers = vec![0usize; outer.graph.node_count()];
                    for &v in &outer.middle_layer {
                        layers[v] = 1;
                    }
                    for &v in &outer.last_layer {
                        layers[v] = 2;
                    }
                    (
                        serialize_graph(&outer.graph, Some(&outer.pairs), Some(&layers)),
                        outer.graph,
                        outer.pairs,
                    )
                }
                GenKind::Inner => {
                    if inner_pairs == 0 || inner_len == 0 {
                        return Err("--inner-pairs and --inner-len must be at least 1".into());
                    }
                    let inner = gen_inner(inner_pairs, inner_len, layered);
                    let layers = inner.layering.as_ref().map(|l| l.layer_of.clone());
                    (
                        serialize_graph(&inner.graph, Some(&inner.pairs), layers.as_deref()),
                        inner.graph,
                        inner.pairs,
                    )
                }
            };
            base_metrics(&mut report, &g, &pairs);
            report.metric("seed", seed);
            if let Some(out) = out {
                write_output(&out, &text)?;
            }
            Ok(report)
        }
        Cmd::Stats { graph, pairs } => {
            let mut report = Report::new("stats");
            let inst = load_instance(&graph, pairs.as_deref(), &mut report)?;
            base_metrics(&mut report, &inst.graph, &inst.pairs);
            if inst.graph.is_directed() {
                let triples = count_branching_triples(&inst.graph).map_err(|e| e.to_string())?;
                report.metric("branching_triples", triples);
            }
            if !inst.pairs.is_empty() {
                // branching-triple certificate of the consistent path union
                let system = preservers::tiebreak::consistent_scheme(&inst.graph, &inst.pairs)
                    .map_err(|e| e.to_string())?;
                let oriented = preservers::preserver::oriented_path_union(&system);
                let triples = count_branching_triples(&oriented).map_err(|e| e.to_string())?;
                report.metric("consistent_union_triples", triples);
                report.metric("consistent_union_edges", oriented.edge_count() as u64);
            }
            if !inst.pairs.is_empty() && !inst.graph.is_directed() && !inst.graph.is_weighted() {
                let (p, partition, _) =
                    build_uu_preserver_full(&inst.graph, &inst.pairs).map_err(|e| e.to_string())?;
                report.metric("preserver_edge_count", p.edge_count() as u64);
                report.metric(
                    "branching_edge_count",
                    partition.leftover_branching.len() as u64,
                );
                report.metric("matching_class_count", partition.class_count() as u64);
                for ((source, residue), class) in &partition.classes {
                    report.metric(format!("class_{source}_{residue}"), class.len() as u64);
                }
            }
            Ok(report)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn gen_random_instance(
    seed: u64,
    nodes: usize,
    edges: usize,
    pair_count: usize,
    directed: bool,
    weighted: bool,
    max_weight: u64,
) -> Result<(Graph, PairSet), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edge_list = Vec::new();
    let mut used: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut attempts = 0;
    while edge_list.len() < edges && attempts < 100 * edges.max(1) {
        attempts += 1;
        let u = rng.random_range(0..nodes);
        let v = rng.random_range(0..nodes);
        if u == v {
            continue;
        }
        let key = if directed || u < v { (u, v) } else { (v, u) };
        if used.insert(key) {
            let w = if weighted {
                rng.random_range(1..=max_weight.max(1))
            } else {
                1
            };
            edge_list.push((key.0, key.1, w));
        }
    }
    let g = Graph::new(nodes, directed, weighted, edge_list).map_err(|e| e.to_string())?;
    let mut pair_list = Vec::new();
    let mut attempts = 0;
    while pair_list.len() < pair_count && attempts < 200 * pair_count.max(1) {
        attempts += 1;
        let s = rng.random_range(0..nodes);
        let t = rng.random_range(0..nodes);
        if s != t
            && !pair_list.contains(&(s, t))
            && g.shortest_distance(s, t)
                .map_err(|e| e.to_string())?
                .is_some()
        {
            pair_list.push((s, t));
        }
    }
    let pairs = PairSet::new(&g, pair_list).map_err(|e| e.to_string())?;
    Ok((g, pairs))
}
