//! End-to-end checks of the command-line interface: round trips, exit
//! codes, and byte-identical outputs across repeated runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_preservers")
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 output")
}

#[test]
fn gen_preserve_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(
        &[
            "gen",
            "--kind",
            "random",
            "--seed",
            "11",
            "--nodes",
            "20",
            "--edges",
            "50",
            "--pair-count",
            "6",
            "--weighted",
            "--directed",
            "-o",
            "g.txt",
        ],
        d,
    );
    assert!(out.status.success(), "gen failed: {}", stdout(&out));

    let out = run(
        &["preserve", "--mode", "dw", "-g", "g.txt", "-o", "h.txt"],
        d,
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("\"status\": \"pass\""));
    assert!(fs::read_to_string(d.join("h.txt"))
        .unwrap()
        .contains("# owner"));

    let out = run(&["verify", "-g", "g.txt", "-H", "h.txt"], d);
    assert!(out.status.success());
    assert_eq!(out.status.code(), Some(0));

    // dropping every edge breaks the demanded pairs: exit code 1
    fs::write(d.join("empty.txt"), "n=20 directed=1 weighted=1\n").unwrap();
    let out = run(&["verify", "-g", "g.txt", "-H", "empty.txt"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("\"status\": \"fail\""));
    assert!(stdout(&out).contains("broken-pair"));
}

#[test]
fn separate_pairs_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("g.txt"),
        "n=4 directed=0 weighted=0\n0 1\n1 2\n2 3\n",
    )
    .unwrap();
    fs::write(d.join("p.txt"), "0 3\n").unwrap();
    let out = run(
        &[
            "preserve", "--mode", "uu", "-g", "g.txt", "-p", "p.txt", "-o", "h.txt",
        ],
        d,
    );
    assert!(out.status.success(), "{}", stdout(&out));
    let out = run(&["verify", "-g", "g.txt", "-p", "p.txt", "-H", "h.txt"], d);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(
        &[
            "gen",
            "--kind",
            "random",
            "--seed",
            "5",
            "--nodes",
            "18",
            "--edges",
            "40",
            "--pair-count",
            "8",
            "-o",
            "g.txt",
        ],
        d,
    );
    let r1 = run(
        &["preserve", "--mode", "uu", "-g", "g.txt", "-o", "h1.txt"],
        d,
    );
    let r2 = run(
        &["preserve", "--mode", "uu", "-g", "g.txt", "-o", "h2.txt"],
        d,
    );
    assert_eq!(stdout(&r1), stdout(&r2));
    assert_eq!(
        fs::read(d.join("h1.txt")).unwrap(),
        fs::read(d.join("h2.txt")).unwrap()
    );
    let b1 = run(
        &[
            "lowerbound-build",
            "--mode",
            "unweighted",
            "--nmid",
            "2",
            "--D",
            "4",
            "--inner-len",
            "3",
            "-o",
            "lb1",
        ],
        d,
    );
    let b2 = run(
        &[
            "lowerbound-build",
            "--mode",
            "unweighted",
            "--nmid",
            "2",
            "--D",
            "4",
            "--inner-len",
            "3",
            "-o",
            "lb2",
        ],
        d,
    );
    assert_eq!(stdout(&b1), stdout(&b2));
    assert_eq!(
        fs::read(d.join("lb1.instance.json")).unwrap(),
        fs::read(d.join("lb2.instance.json")).unwrap()
    );
    assert_eq!(
        fs::read(d.join("lb1.graph.txt")).unwrap(),
        fs::read(d.join("lb2.graph.txt")).unwrap()
    );
}

#[test]
fn lift_contract_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(
        &[
            "gen",
            "--kind",
            "random",
            "--seed",
            "2",
            "--nodes",
            "14",
            "--edges",
            "26",
            "--pair-count",
            "4",
            "-o",
            "g.txt",
        ],
        d,
    );
    let out = run(&["lift", "-g", "g.txt", "-o", "lifted.txt"], d);
    assert!(out.status.success());
    let out = run(
        &[
            "preserve",
            "--mode",
            "dw",
            "-g",
            "lifted.txt",
            "-o",
            "hl.txt",
        ],
        d,
    );
    assert!(out.status.success());
    let out = run(
        &["contract", "-g", "g.txt", "-H", "hl.txt", "-o", "h.txt"],
        d,
    );
    assert!(out.status.success(), "{}", stdout(&out));
    let out = run(&["verify", "-g", "g.txt", "-H", "h.txt"], d);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn lowerbound_build_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(
        &[
            "lowerbound-build",
            "--mode",
            "weighted",
            "--nmid",
            "1",
            "--D",
            "2",
            "--inner-len",
            "2",
            "-o",
            "lb",
        ],
        d,
    );
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("\"forced_edge_count\": 4"));
    let out = run(&["lowerbound-check", "--instance", "lb.instance.json"], d);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"forced_edge_count\": 4"));
}

#[test]
fn lowerbound_build_from_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(
        &[
            "gen",
            "--kind",
            "outer",
            "--nmid",
            "2",
            "--D",
            "4",
            "-o",
            "outer.txt",
        ],
        d,
    );
    assert!(out.status.success());
    let out = run(
        &[
            "gen",
            "--kind",
            "inner",
            "--inner-pairs",
            "2",
            "--inner-len",
            "3",
            "--layered",
            "-o",
            "inner.txt",
        ],
        d,
    );
    assert!(out.status.success());
    let out = run(
        &[
            "lowerbound-build",
            "--mode",
            "unweighted",
            "--outer",
            "outer.txt",
            "--inner",
            "inner.txt",
            "-o",
            "lb",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("\"forced_edge_count\": 20"));
    // an unlayered inner cannot serve the unweighted product
    let out = run(
        &[
            "gen",
            "--kind",
            "inner",
            "--inner-pairs",
            "2",
            "--inner-len",
            "3",
            "-o",
            "flat.txt",
        ],
        d,
    );
    assert!(out.status.success());
    let out = run(
        &[
            "lowerbound-build",
            "--mode",
            "unweighted",
            "--outer",
            "outer.txt",
            "--inner",
            "flat.txt",
            "-o",
            "lb2",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(&["triples", "-g", "missing.txt"], d);
    assert_eq!(out.status.code(), Some(2));
    fs::write(d.join("und.txt"), "n=2 directed=0 weighted=0\n0 1\n").unwrap();
    let out = run(&["triples", "-g", "und.txt"], d);
    assert_eq!(out.status.code(), Some(2));
    fs::write(d.join("bad.txt"), "n=2 directed=0 weighted=0\n0 1\n1 0\n").unwrap();
    let out = run(&["stats", "-g", "bad.txt"], d);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("duplicate edge"));
}

#[test]
fn text_format_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("g.txt"),
        "n=3 directed=0 weighted=0\n0 1\n1 2\npair 0 2\n",
    )
    .unwrap();
    let out = run(&["stats", "-g", "g.txt", "--format", "text"], d);
    let text = stdout(&out);
    assert!(text.starts_with("command: stats\nstatus: pass\n"));
    assert!(text.contains("metric node_count: 3\n"));
}
