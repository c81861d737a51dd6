//! The sufficient framework `(F1)–(F4)` for separable weights and the
//! constants derived from it.

use serde::{Deserialize, Serialize};

use super::{ModelConfig, XiStats};
use crate::diagnostics::cubic_roots;
use crate::error::{Error, Result};
use crate::stiefel::{ensemble_diameter, EnsembleState};

/// Both sides of every framework inequality, evaluated as written.
///
/// `(F1) ξ_M² < 4ξ_mξ_c`, `(F2) D(ξ) < ξ_mξ_c/(3ξ_M)`,
/// `(F3) D(Ξ)/κ < (ξ_mξ_c − 3ξ_M D(ξ))·(2 − 1/(100p)) / (80ξ_M²p/ξ_m² + 2 − 1/(100p))`,
/// `(F4) D(𝒮^in) < (ξ_mξ_c − 3ξ_M D(ξ) − D(Ξ)/κ) / (10ξ_M²√p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkReport {
    pub f1_lhs: f64,
    pub f1_rhs: f64,
    pub f2_lhs: f64,
    pub f2_rhs: f64,
    pub f3_lhs: f64,
    pub f3_rhs: f64,
    /// Right side of (F4).
    pub f4_bound: f64,
    /// `D(𝒮^in)`.
    pub f4_actual: f64,
    pub satisfied: [bool; 4],
    /// Supremum bound on ε used for `delta_lower`.
    pub eps_sup: Option<f64>,
    /// Exponential rate δ, present when all four conditions hold.
    pub delta_lower: Option<f64>,
}

impl FrameworkReport {
    /// `rhs − lhs` for each condition; positive means satisfied.
    pub fn margins(&self) -> [f64; 4] {
        [
            self.f1_rhs - self.f1_lhs,
            self.f2_rhs - self.f2_lhs,
            self.f3_rhs - self.f3_lhs,
            self.f4_bound - self.f4_actual,
        ]
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&b| b)
    }
}

struct Params {
    stats: XiStats,
    kappa: f64,
    d_freq: f64,
    p: f64,
}

fn params(cfg: &ModelConfig) -> Result<Params> {
    let stats = cfg
        .topology
        .xi_stats()
        .ok_or_else(|| Error::Unsupported("the framework is stated for separable weights a_ik = ξ_i ξ_k".into()))?;
    Ok(Params { stats, kappa: cfg.kappa, d_freq: cfg.frequencies.heterogeneity(), p: cfg.p as f64 })
}

fn require_coupling(cfg: &ModelConfig) -> Result<()> {
    if cfg.kappa > 0.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("κ must be positive, got {}", cfg.kappa)))
    }
}

/// Right side of (F4), which is also the diameter bound of the invariant region.
pub fn f4_threshold(cfg: &ModelConfig) -> Result<f64> {
    require_coupling(cfg)?;
    let Params { stats: s, kappa, d_freq, p } = params(cfg)?;
    Ok((s.xi_min * s.xi_mean - 3.0 * s.xi_max * s.spread - d_freq / kappa) / (10.0 * s.xi_max * s.xi_max * p.sqrt()))
}

/// `ε = 5κξ_M²√p (D(𝒮) + D(𝒮̃)) + 3κξ_M D(ξ) + D(Ξ)`.
pub fn epsilon_of_t(cfg: &ModelConfig, diam: f64, diam_tilde: f64) -> Result<f64> {
    let Params { stats: s, kappa, d_freq, p } = params(cfg)?;
    if !(diam >= 0.0 && diam_tilde >= 0.0) {
        return Err(Error::InvalidParameter("diameters must be nonnegative".into()));
    }
    Ok(5.0 * kappa * s.xi_max * s.xi_max * p.sqrt() * (diam + diam_tilde) + 3.0 * kappa * s.xi_max * s.spread + d_freq)
}

/// `δ = min{4(κξ_mξ_c − ε_sup), κ(4ξ_mξ_c − ξ_M²)}`.
pub fn delta_rate(cfg: &ModelConfig, eps_sup: f64) -> Result<f64> {
    let Params { stats: s, kappa, .. } = params(cfg)?;
    if !(eps_sup >= 0.0) {
        return Err(Error::InvalidParameter(format!("ε bound must be ≥ 0, got {eps_sup}")));
    }
    let first = 4.0 * (kappa * s.xi_min * s.xi_mean - eps_sup);
    let second = kappa * (4.0 * s.xi_min * s.xi_mean - s.xi_max * s.xi_max);
    Ok(first.min(second))
}

/// Evaluates (F1)–(F4) for `cfg` and the initial ensemble.
///
/// When all four hold, the diameter stays below `max(D(𝒮^in), r₁)` where `r₁`
/// is the smaller positive root of the cubic `r³ − 2r + 8√p D(Ξ)/(κξ_m²)`:
/// the diameter decreases whenever it lies between `r₁` and the (F4) bound.
/// That supremum feeds ε and then δ.
pub fn check_framework(cfg: &ModelConfig, initial: &EnsembleState) -> Result<FrameworkReport> {
    cfg.check_state(initial)?;
    require_coupling(cfg)?;
    let Params { stats: s, kappa, d_freq, p } = params(cfg)?;

    let f1_lhs = s.xi_max * s.xi_max;
    let f1_rhs = 4.0 * s.xi_min * s.xi_mean;

    let f2_lhs = s.spread;
    let f2_rhs = s.xi_min * s.xi_mean / (3.0 * s.xi_max);

    let tail = 2.0 - 1.0 / (100.0 * p);
    let f3_lhs = d_freq / kappa;
    let f3_rhs = (s.xi_min * s.xi_mean - 3.0 * s.xi_max * s.spread) * tail
        / (80.0 * s.xi_max * s.xi_max * p / (s.xi_min * s.xi_min) + tail);

    let f4_bound = f4_threshold(cfg)?;
    let f4_actual = ensemble_diameter(initial);

    let satisfied = [f1_lhs < f1_rhs, f2_lhs < f2_rhs, f3_lhs < f3_rhs, f4_actual < f4_bound];

    let (eps_sup, delta_lower) = if satisfied.iter().all(|&b| b) {
        let c = 8.0 * p.sqrt() * d_freq / (kappa * s.xi_min * s.xi_min);
        let r1 = cubic_roots(c).first().copied().unwrap_or(0.0);
        let sup = f4_actual.max(r1);
        let eps = epsilon_of_t(cfg, sup, sup)?;
        (Some(eps), Some(delta_rate(cfg, eps)?))
    } else {
        (None, None)
    };

    Ok(FrameworkReport {
        f1_lhs,
        f1_rhs,
        f2_lhs,
        f2_rhs,
        f3_lhs,
        f3_rhs,
        f4_bound,
        f4_actual,
        satisfied,
        eps_sup,
        delta_lower,
    })
}
