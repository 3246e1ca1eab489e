//! Report records. A check stores its value, tolerance, and comparison so
//! the verdict can be recomputed from the stored data alone; reports sort
//! their checks by name so assembly order never leaks into the output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOp {
    /// Passes when `value <= tolerance`.
    Leq,
    /// Passes when `value >= tolerance`.
    Geq,
    /// Passes when `value` is finite; `tolerance` is ignored.
    IsFinite,
    /// Passes when `value == 1`; encodes a boolean.
    IsTrue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub op: CheckOp,
    pub passed: bool,
}

impl CheckRecord {
    fn evaluate(name: impl Into<String>, value: f64, tolerance: f64, op: CheckOp) -> Self {
        let passed = match op {
            CheckOp::Leq => value <= tolerance,
            CheckOp::Geq => value >= tolerance,
            CheckOp::IsFinite => value.is_finite(),
            CheckOp::IsTrue => value == 1.0,
        };
        Self {
            name: name.into(),
            value,
            tolerance,
            op,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub inputs_digest: String,
    pub checks: Vec<CheckRecord>,
    pub provenance: BTreeMap<String, serde_json::Value>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, inputs_digest: String) -> Self {
        Self {
            experiment: experiment.into(),
            inputs_digest,
            checks: Vec::new(),
            provenance: BTreeMap::new(),
            passed: true,
        }
    }

    pub fn check_leq(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.push(CheckRecord::evaluate(name, value, tolerance, CheckOp::Leq));
    }

    pub fn check_geq(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.push(CheckRecord::evaluate(name, value, tolerance, CheckOp::Geq));
    }

    pub fn check_finite(&mut self, name: impl Into<String>, value: f64) {
        self.push(CheckRecord::evaluate(name, value, 0.0, CheckOp::IsFinite));
    }

    pub fn check_true(&mut self, name: impl Into<String>, flag: bool) {
        self.push(CheckRecord::evaluate(
            name,
            if flag { 1.0 } else { 0.0 },
            0.0,
            CheckOp::IsTrue,
        ));
    }

    fn push(&mut self, record: CheckRecord) {
        self.passed &= record.passed;
        self.checks.push(record);
    }

    pub fn record(&mut self, key: impl Into<String>, value: impl Into<serde_json::Value>) {
        self.provenance.insert(key.into(), value.into());
    }

    /// Sorts checks by name; call once after the last check is pushed.
    pub fn finalize(mut self) -> Self {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
        self
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Hex SHA-256 of the canonical JSON encoding of the suite inputs.
pub fn digest_inputs<T: Serialize>(inputs: &T) -> String {
    let encoded = serde_json::to_string(inputs).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(encoded.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_sorted_and_verdict_aggregated() {
        let mut report = ExperimentReport::new("demo", digest_inputs(&"x"));
        report.check_leq("z residual", 1e-12, 1e-10);
        report.check_true("a flag", true);
        report.check_finite("m value", 3.0);
        let report = report.finalize();
        assert!(report.passed);
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["a flag", "m value", "z residual"]);
    }

    #[test]
    fn failing_check_fails_report() {
        let mut report = ExperimentReport::new("demo", digest_inputs(&0));
        report.check_leq("residual", 1.0, 1e-10);
        let report = report.finalize();
        assert!(!report.passed);
        assert_eq!(report.failed_checks().count(), 1);
    }

    #[test]
    fn verdicts_recomputable_from_stored_fields() {
        let mut report = ExperimentReport::new("demo", String::new());
        report.check_geq("mass", 1.0, 1.0 - 1e-12);
        report.check_finite("infinite", f64::INFINITY);
        for check in &report.checks {
            let recomputed = match check.op {
                CheckOp::Leq => check.value <= check.tolerance,
                CheckOp::Geq => check.value >= check.tolerance,
                CheckOp::IsFinite => check.value.is_finite(),
                CheckOp::IsTrue => check.value == 1.0,
            };
            assert_eq!(recomputed, check.passed);
        }
    }

    #[test]
    fn digest_is_stable() {
        let a = digest_inputs(&vec![1.0, 2.0]);
        let b = digest_inputs(&vec![1.0, 2.0]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert_ne!(a, digest_inputs(&vec![1.0, 2.5]));
    }
}
