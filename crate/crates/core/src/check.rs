//! Residual bookkeeping shared by all verifiers.
//!
//! A [`Check`] records one measured identity: the residual, the threshold it
//! was compared against, and whether a failure is fatal ([`Tier::Hard`]) or
//! only reported ([`Tier::Warning`]).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Hard,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Human-readable label of the identity being checked.
    pub anchor: String,
    pub residual: f64,
    pub threshold: f64,
    pub tier: Tier,
    pub status: Status,
    /// Measured quantity when it differs from the residual (eigenvalue, rank, bound).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
}

impl Check {
    /// Hard check passing when `residual <= threshold`.
    pub fn hard(name: impl Into<String>, anchor: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self::with_tier(name, anchor, residual, threshold, Tier::Hard)
    }

    /// Warning-tier check passing when `residual <= threshold`.
    pub fn warning(name: impl Into<String>, anchor: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self::with_tier(name, anchor, residual, threshold, Tier::Warning)
    }

    pub fn with_tier(
        name: impl Into<String>,
        anchor: impl Into<String>,
        residual: f64,
        threshold: f64,
        tier: Tier,
    ) -> Self {
        // NaN residuals never pass.
        let ok = residual <= threshold;
        let status = match (ok, tier) {
            (true, _) => Status::Pass,
            (false, Tier::Hard) => Status::Fail,
            (false, Tier::Warning) => Status::Warn,
        };
        Check {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            threshold,
            tier,
            status,
            value: None,
        }
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn is_hard_failure(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Ordered list of checks with max-residual helpers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckList {
    pub checks: Vec<Check>,
}

impl CheckList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: CheckList) {
        self.checks.extend(other.checks);
    }

    pub fn all_hard_pass(&self) -> bool {
        !self.checks.iter().any(Check::is_hard_failure)
    }

    pub fn first_hard_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| c.is_hard_failure())
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.get(name).map(|c| c.residual)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter()
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }
}

impl FromIterator<Check> for CheckList {
    fn from_iter<I: IntoIterator<Item = Check>>(iter: I) -> Self {
        CheckList { checks: iter.into_iter().collect() }
    }
}

/// Running maximum of a residual together with the index that produced it.
#[derive(Debug, Clone, Copy, Default)]
pub struct Worst {
    pub residual: f64,
    pub at: (usize, usize),
}

impl Worst {
    pub fn update(&mut self, residual: f64, at: (usize, usize)) {
        if residual > self.residual || residual.is_nan() {
            self.residual = residual;
            self.at = at;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_residual_fails() {
        let c = Check::hard("x", "x", f64::NAN, 1.0);
        assert_eq!(c.status, Status::Fail);
    }

    #[test]
    fn warning_does_not_fail_list() {
        let list: CheckList = vec![
            Check::hard("a", "a", 0.0, 1e-9),
            Check::warning("b", "b", 1.0, 1e-9),
        ]
        .into_iter()
        .collect();
        assert!(list.all_hard_pass());
        assert_eq!(list.get("b").unwrap().status, Status::Warn);
    }
}
