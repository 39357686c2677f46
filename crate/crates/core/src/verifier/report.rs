use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of one numerical check: the verdict, the measured quantities it
/// was derived from, the tolerance used, and the estimate it instantiates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub pass: bool,
    pub measured: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub paper_anchor: String,
}

impl Report {
    pub fn new(check: &str, anchor: &str, tolerance: f64) -> Self {
        Report {
            check: check.to_string(),
            pass: false,
            measured: BTreeMap::new(),
            tolerance,
            paper_anchor: anchor.to_string(),
        }
    }

    pub fn measure(mut self, name: &str, value: f64) -> Self {
        self.measured.insert(name.to_string(), value);
        self
    }

    pub fn record(&mut self, name: &str, value: f64) {
        self.measured.insert(name.to_string(), value);
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    /// Measured value by name; panics if it was never recorded.
    pub fn get(&self, name: &str) -> f64 {
        match self.measured.get(name) {
            Some(v) => *v,
            None => panic!("report `{}` has no measurement `{name}`", self.check),
        }
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let fields: Vec<String> = self
            .measured
            .iter()
            .map(|(k, v)| format!("{k}={v:.6e}"))
            .collect();
        format!(
            "{} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            fields.join(" ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_names() {
        let r = Report::new("mass", "mass conservation", 1e-12)
            .measure("deviation", 0.0)
            .with_pass(true);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["check", "pass", "measured", "tolerance", "paper_anchor"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: Report = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        assert!(r.summary().starts_with("PASS mass"));
    }
}
