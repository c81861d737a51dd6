//! The cubic `f(r) = r³ − 2r + c` governing the invariant diameter region,
//! the diameter monitor built on it, and the Hölder step of the ℓ_p estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::model::{check_framework, f4_threshold, ModelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicReport {
    /// `8√p D(Ξ)/(κξ_m²)`.
    pub c: f64,
    /// Roots of `f` in the open interval `(0, √2)`, ascending.
    pub roots: Vec<f64>,
    /// The diameter bound of (F4).
    pub threshold: f64,
    pub f_at_bound: f64,
    pub invariant_region_ok: bool,
}

fn f(c: f64, r: f64) -> f64 {
    r * r * r - 2.0 * r + c
}

fn root_in(c: f64, mut lo: f64, mut hi: f64) -> f64 {
    let rising = f(c, hi) > f(c, lo);
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if (f(c, mid) > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = 3.0 * r * r - 2.0;
        if d == 0.0 {
            break;
        }
        let next = r - f(c, r) / d;
        if !(next > lo - 1e-8 && next < hi + 1e-8) {
            break;
        }
        r = next;
    }
    r
}

/// Roots of `r³ − 2r + c` in `(0, √2)`: two when `0 < c < 4√2/(3√3)`, none otherwise.
pub fn cubic_roots(c: f64) -> Vec<f64> {
    let r_star = (2.0f64 / 3.0).sqrt();
    if !(c > 0.0) || f(c, r_star) >= 0.0 {
        return Vec::new();
    }
    vec![root_in(c, 0.0, r_star), root_in(c, r_star, 2f64.sqrt())]
}

/// Evaluates the cubic for `cfg` and tests the (F4) threshold against it.
pub fn cubic_analysis(cfg: &ModelConfig) -> Result<CubicReport> {
    let threshold = f4_threshold(cfg)?;
    let xi_m = cfg.topology.xi_stats().expect("f4_threshold checked separability").xi_min;
    let c = 8.0 * (cfg.p as f64).sqrt() * cfg.frequencies.heterogeneity() / (cfg.kappa * xi_m * xi_m);
    let roots = cubic_roots(c);
    let f_at_bound = f(c, threshold);
    let invariant_region_ok = threshold > 0.0 && f_at_bound < 0.0;
    Ok(CubicReport { c, roots, threshold, f_at_bound, invariant_region_ok })
}

/// Whether every recorded `D(𝒮)` stays strictly below the (F4) threshold.
pub fn lemma_3_3_monitor(traj: &Trajectory, cfg: &ModelConfig) -> Result<bool> {
    let first = traj.states.first().ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    let report = check_framework(cfg, first)?;
    if !report.all_satisfied() {
        return Err(Error::Precondition(format!("framework violated at t = 0: {:?}", report.satisfied)));
    }
    Ok(traj.diameters.iter().all(|&d| d < report.f4_bound))
}

/// `Σ_{i,k} ξ_iξ_k x_k x_i^{p−1} − Σ_{i,k} ξ_iξ_k x_i^p`, which Hölder makes `≤ 0`.
///
/// Evaluated pairwise as `Σ_{i<k} ξ_iξ_k (x_k − x_i)(x_i^{p−1} − x_k^{p−1})`, so
/// every term is `≤ 0` in floating point and the equality cases give exactly 0.
///
/// # Panics
/// When `xi` and `x` differ in length.
pub fn holder_step_check(xi: &[f64], x: &[f64], p_exp: f64) -> f64 {
    assert_eq!(xi.len(), x.len(), "weights and values must have equal length");
    let pow: Vec<f64> = x.iter().map(|v| v.powf(p_exp - 1.0)).collect();
    let mut total = 0.0;
    for i in 0..x.len() {
        for k in (i + 1)..x.len() {
            total += xi[i] * xi[k] * (x[k] - x[i]) * (pow[i] - pow[k]);
        }
    }
    total
}
