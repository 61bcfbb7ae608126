//! Named pass/fail checks shared by every experiment.

use serde::Serialize;
use serde_json::{Map, Value};
use straddle_core::stats::KsReport;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub values: Map<String, Value>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            pass,
            values: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.values.insert(key.to_string(), value.into());
        self
    }

    /// A KS test as a check; extra conditions can be folded in later.
    pub fn ks(name: impl Into<String>, ks: &KsReport) -> Self {
        Check::new(name, ks.pass)
            .with("statistic", ks.statistic)
            .with("threshold", ks.threshold)
            .with("n_effective", ks.n_effective as u64)
            .with("alpha", ks.alpha)
    }

    /// An informational entry that never fails.
    pub fn info(name: impl Into<String>) -> Self {
        Check::new(name, true)
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
