//! Verification records: one JSON object per line plus a plain-text summary.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    /// The property being checked, as a short stable tag.
    pub anchor: String,
    pub status: Status,
    /// Worst slack observed; negative means violated. Exact margins are
    /// rational strings, floating ones decimal.
    pub margin: Option<String>,
    /// Point where the worst margin occurred.
    pub witness: Option<Vec<String>>,
    pub checked: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub plan: Value,
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new(plan: Value) -> Self {
        Self { plan, records: Vec::new() }
    }

    pub fn push(&mut self, record: CheckRecord) {
        debug_assert!(self.records.iter().all(|r| r.id != record.id), "duplicate check {}", record.id);
        self.records.push(record);
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for r in &self.records {
            match r.status {
                Status::Pass => s.passed += 1,
                Status::Fail => s.failed += 1,
                Status::Skipped => s.skipped += 1,
            }
        }
        s
    }

    pub fn all_passed(&self) -> bool {
        self.summary().failed == 0
    }

    /// Plan echo, then one line per check, then the summary counts.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let head = serde_json::json!({ "kind": "plan", "plan": self.plan });
        writeln!(out, "{head}").unwrap();
        for r in &self.records {
            let mut v = serde_json::to_value(r).expect("record serializes");
            v.as_object_mut().unwrap().insert("kind".into(), Value::from("check"));
            writeln!(out, "{v}").unwrap();
        }
        let tail = serde_json::json!({ "kind": "summary", "summary": self.summary() });
        writeln!(out, "{tail}").unwrap();
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let width = self.records.iter().map(|r| r.id.len()).max().unwrap_or(0);
        for r in &self.records {
            let tag = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            let margin = r.margin.as_deref().map(|m| format!("  margin {m}")).unwrap_or_default();
            writeln!(out, "{tag}  {:width$}  n={}{margin}  {}", r.id, r.checked, r.detail).unwrap();
        }
        let s = self.summary();
        writeln!(out, "{} passed, {} failed, {} skipped", s.passed, s.failed, s.skipped).unwrap();
        out
    }
}

/// Tracks the smallest margin seen and where.
#[derive(Debug, Clone)]
pub struct Worst<T> {
    pub margin: Option<T>,
    pub witness: Option<Vec<String>>,
    pub count: usize,
}

impl<T: PartialOrd + Clone> Default for Worst<T> {
    fn default() -> Self {
        Self { margin: None, witness: None, count: 0 }
    }
}

impl<T: PartialOrd + Clone> Worst<T> {
    pub fn see(&mut self, margin: T, witness: impl FnOnce() -> Vec<String>) {
        self.count += 1;
        if self.margin.as_ref().map_or(true, |m| margin < *m) {
            self.margin = Some(margin);
            self.witness = Some(witness());
        }
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn fmt_vec_f64(v: &[f64]) -> Vec<String> {
    v.iter().map(|t| format!("{t:.17e}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_has_plan_records_and_summary() {
        let mut r = VerificationReport::new(serde_json::json!({ "levels": 1 }));
        r.push(CheckRecord {
            id: "a".into(),
            anchor: "x".into(),
            status: Status::Pass,
            margin: Some("0".into()),
            witness: None,
            checked: 3,
            detail: String::new(),
        });
        let text = r.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("\"kind\":\"check\""));
        assert!(r.all_passed());
    }

    #[test]
    fn worst_keeps_minimum() {
        let mut w = Worst::default();
        w.see(3.0, || vec!["a".into()]);
        w.see(1.0, || vec!["b".into()]);
        w.see(2.0, || vec!["c".into()]);
        assert_eq!(w.margin, Some(1.0));
        assert_eq!(w.witness, Some(vec!["b".to_string()]));
        assert_eq!(w.count, 3);
    }
}
