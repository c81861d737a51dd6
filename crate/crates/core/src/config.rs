//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

/// All tolerance constants in one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Algebraic identities (orthogonality of factors, skew symmetry, residuals).
    pub algebraic: f64,
    /// `‖XᵀX − I‖` allowed when a [`crate::StiefelPoint`] is constructed.
    pub orth_construct: f64,
    /// Accumulated drift allowed during integration before a forced retraction.
    pub runtime_drift: f64,
    /// Relative pivot size below which QR reports rank deficiency.
    pub rank: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances =
        Tolerances { algebraic: 1e-12, orth_construct: 1e-10, runtime_drift: 1e-8, rank: 1e-12 };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
