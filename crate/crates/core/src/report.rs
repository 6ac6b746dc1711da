//! Verification reports shared by the identity checks.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::stats::Estimate;

/// One checked identity or inequality, `lhs` against `rhs`.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub lhs: f64,
    pub rhs: f64,
    pub se_lhs: f64,
    pub se_rhs: f64,
    pub n: u64,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, Value>,
    pub holds: bool,
}

impl IdentityReport {
    /// `lhs = rhs` within `k` combined standard errors.
    pub fn equality(identity: impl Into<String>, lhs: Estimate, rhs: Estimate, k: f64) -> Self {
        Self::build(identity, lhs, rhs, lhs.agrees_with(&rhs, k))
    }

    /// `lhs <= rhs` within `k` combined standard errors.
    pub fn inequality(identity: impl Into<String>, lhs: Estimate, rhs: Estimate, k: f64) -> Self {
        Self::build(identity, lhs, rhs, lhs.at_most(&rhs, k))
    }

    /// Exact comparison with an absolute tolerance.
    pub fn exact(identity: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let holds = (lhs - rhs).abs() <= tol;
        Self::build(identity, Estimate::exact(lhs), Estimate::exact(rhs), holds)
    }

    fn build(identity: impl Into<String>, lhs: Estimate, rhs: Estimate, holds: bool) -> Self {
        Self {
            identity: identity.into(),
            lhs: lhs.value,
            rhs: rhs.value,
            se_lhs: lhs.stderr,
            se_rhs: rhs.stderr,
            n: lhs.n.max(rhs.n),
            seed: None,
            params: BTreeMap::new(),
            holds,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// `|lhs - rhs|` in units of the combined standard error.
    pub fn z(&self) -> f64 {
        let se = self.se_lhs.hypot(self.se_rhs);
        let d = (self.lhs - self.rhs).abs();
        if se > 0.0 {
            d / se
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}
