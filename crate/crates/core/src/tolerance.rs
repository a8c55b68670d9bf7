use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound accepted for either slack value.
pub const MAX_TOLERANCE: f64 = 1e-3;

/// Numerical slack used by every comparison in the crate.
///
/// `eig_tol` bounds how negative an eigenvalue may be while a matrix still
/// counts as positive semidefinite. `residual_tol` bounds entrywise and
/// scalar equality checks. `sample_count` is the budget for sampled checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub eig_tol: f64,
    pub residual_tol: f64,
    pub sample_count: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eig_tol: 1e-9,
            residual_tol: 1e-9,
            sample_count: 1000,
        }
    }
}

impl ToleranceConfig {
    pub fn new(eig_tol: f64, residual_tol: f64, sample_count: usize) -> Result<Self> {
        let cfg = Self {
            eig_tol,
            residual_tol,
            sample_count,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eig_tol", self.eig_tol), ("residual_tol", self.residual_tol)] {
            if !(0.0..=MAX_TOLERANCE).contains(&v) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} = {v} outside [0, {MAX_TOLERANCE}]"
                )));
            }
        }
        if self.sample_count == 0 {
            return Err(Error::InvalidTolerance("sample_count must be positive".into()));
        }
        Ok(())
    }

    pub fn with_sample_count(mut self, sample_count: usize) -> Self {
        self.sample_count = sample_count;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let t = ToleranceConfig::default();
        assert_eq!(t.eig_tol, 1e-9);
        assert_eq!(t.residual_tol, 1e-9);
        assert_eq!(t.sample_count, 1000);
        t.validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ToleranceConfig::new(1e-2, 1e-9, 10).is_err());
        assert!(ToleranceConfig::new(1e-9, -1.0, 10).is_err());
        assert!(ToleranceConfig::new(1e-9, 1e-9, 0).is_err());
        assert!(ToleranceConfig::new(f64::NAN, 1e-9, 1).is_err());
        assert!(ToleranceConfig::new(0.0, 1e-3, 1).is_ok());
    }
}
