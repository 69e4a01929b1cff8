//! ODE integration, section location and root finding shared by every
//! construction in the crate.

mod chebyshev;
mod dopri;
mod newton;

pub use chebyshev::ChebyshevGrid;
pub use dopri::{
    integrate, integrate_to_section, integrate_to_section_with, integrate_with, Crossing, OdeOptions,
    SectionHit, SectionSpec, TimeDirection, Trajectory, TANGENT_RATE_MIN,
};
pub use newton::{
    bracketed_root, central_jacobian, condition_number, fd_jacobian, max_norm, newton_solve, NewtonReport,
    MAX_CONDITION,
};

use serde::{Deserialize, Serialize};

use crate::error::{CanardError, Result};

/// Tolerances shared by integration, event location and Newton solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub event_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { abs_tol: 1e-12, rel_tol: 1e-10, newton_tol: 1e-10, newton_max_iter: 50, event_tol: 1e-12 }
    }
}

impl Tolerances {
    /// Tighter preset used by the branch and Melnikov constructions.
    pub fn tight() -> Self {
        Tolerances { abs_tol: 1e-13, rel_tol: 1e-12, newton_tol: 1e-10, newton_max_iter: 50, event_tol: 1e-13 }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("newton_tol", self.newton_tol),
            ("event_tol", self.event_tol),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CanardError::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.newton_max_iter < 1 {
            return Err(CanardError::InvalidInput("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tolerances_validate() {
        Tolerances::default().validate().unwrap();
        let bad = Tolerances { rel_tol: 0.0, ..Tolerances::default() };
        assert!(bad.validate().is_err());
        let bad = Tolerances { newton_max_iter: 0, ..Tolerances::default() };
        assert!(bad.validate().is_err());
    }
}
