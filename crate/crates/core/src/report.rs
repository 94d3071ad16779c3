//! Named residual checks shared by the verification suite and the CLI.

use serde::Serialize;

/// Default tolerances by kind of identity.
pub mod tol {
    /// Exact algebraic identities, floating-point noise only.
    pub const STRUCTURAL: f64 = 1e-10;
    /// Operator identities on the protected Fock sector.
    pub const COMMUTATOR: f64 = 1e-9;
    /// Composite pipelines (several factorizations chained).
    pub const PIPELINE: f64 = 1e-8;
    /// Weyl operators and other truncation-limited quantities.
    pub const TRUNCATION: f64 = 1e-6;
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `residual <= tolerance` (NaN fails).
    pub fn at_most(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), residual, tolerance, pass: residual <= tolerance }
    }

    /// Records a boolean property as residual 0 (holds) or 1 (fails).
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    /// Passes when `value >= bound`; the residual is the shortfall.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let shortfall = (bound - value).max(0.0);
        Self { name: name.into(), residual: shortfall, tolerance: 0.0, pass: value >= bound }
    }

    /// Same check with a caller-supplied tolerance, keeping the residual.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.residual <= tolerance;
        self
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// True when the sequence never increases by more than `slack`.
pub fn nonincreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}

pub fn nondecreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] + slack >= w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_semantics() {
        assert!(Check::at_most("a", 1e-12, 1e-10).pass);
        assert!(!Check::at_most("a", f64::NAN, 1e-10).pass);
        assert!(!Check::at_least("b", 0.5, 1.0).pass);
        assert!(Check::holds("c", true).pass);
        assert!(!Check::at_most("d", 1e-9, 1e-10).with_tolerance(1e-10).pass);
        assert!(nonincreasing(&[3.0, 2.0, 2.0], 0.0));
        assert!(!nondecreasing(&[1.0, 0.5], 0.1));
    }
}
