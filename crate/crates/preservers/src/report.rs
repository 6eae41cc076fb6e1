//! Structured run reports with deterministic serialization.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;

/// One reported violation: a short machine-readable kind plus free detail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReportViolation {
    pub kind: String,
    pub detail: String,
}

/// Outcome of one command: input digests, integer metrics, and violations.
/// Status is pass exactly when the violation list is empty. Metrics always
/// carry `node_count`, `edge_count`, and `pair_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, u64>,
    pub violations: Vec<ReportViolation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            inputs: BTreeMap::new(),
            metrics: BTreeMap::new(),
            violations: Vec::new(),
        }
    }

    pub fn input(&mut self, name: impl Into<String>, digest: impl Into<String>) -> &mut Self {
        self.inputs.insert(name.into(), digest.into());
        self
    }

    pub fn metric(&mut self, name: impl Into<String>, value: u64) -> &mut Self {
        self.metrics.insert(name.into(), value);
        self
    }

    pub fn violation(&mut self, kind: impl Into<String>, detail: impl Into<String>) -> &mut Self {
        self.violations.push(ReportViolation {
            kind: kind.into(),
            detail: detail.into(),
        });
        self
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn status(&self) -> &'static str {
        if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }
}

/// Renders a report. Maps are ordered and violations keep insertion order,
/// so equal reports produce byte-identical text.
pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let value = json!({
                "command": report.command,
                "inputs": report.inputs,
                "metrics": report.metrics,
                "status": report.status(),
                "violations": report.violations,
            });
            let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
            text.push('\n');
            text
        }
        ReportFormat::Text => {
            let mut out = String::new();
            out.push_str(&format!("command: {}\n", report.command));
            out.push_str(&format!("status: {}\n", report.status()));
            for (name, digest) in &report.inputs {
                out.push_str(&format!("input {name}: {digest}\n"));
            }
            for (name, value) in &report.metrics {
                out.push_str(&format!("metric {name}: {value}\n"));
            }
            for v in &report.violations {
                out.push_str(&format!("violation {}: {}\n", v.kind, v.detail));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mirrors_violations() {
        let mut r = Report::new("verify");
        r.metric("node_count", 3)
            .metric("edge_count", 2)
            .metric("pair_count", 1);
        assert_eq!(r.status(), "pass");
        r.violation("broken-pair", "(0, 2): host 2, candidate unreachable");
        assert_eq!(r.status(), "fail");
    }

    #[test]
    fn emission_is_deterministic() {
        let mut r = Report::new("stats");
        r.metric("edge_count", 5)
            .metric("node_count", 4)
            .metric("pair_count", 0);
        r.input("g.txt", "abc123");
        let a = emit_report(&r, ReportFormat::Json);
        let b = emit_report(&r, ReportFormat::Json);
        assert_eq!(a, b);
        assert!(a.contains("\"status\": \"pass\""));
        let t = emit_report(&r, ReportFormat::Text);
        assert!(t.starts_with("command: stats\nstatus: pass\n"));
        assert!(t.contains("metric edge_count: 5\n"));
    }
}
