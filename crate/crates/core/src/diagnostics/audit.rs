//! Differential-inequality audits: a central-difference derivative of the
//! measured quantity against the right side of the bound, point by point.

use serde::{Deserialize, Serialize};

use super::correlation_diameter_series;
use crate::error::{Error, Result};
use crate::integrate::{dini_derivative, Trajectory};
use crate::model::{epsilon_of_t, ModelConfig, Topology};

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaId {
    /// Contraction of the correlation diameter `D(𝒜)`.
    L3_1,
    /// Differential inequality for the maximal diameter `D(𝒮)`.
    L3_2,
    /// Per-agent distance inequality between two solutions.
    L4_1,
}

/// Seeded corruptions of the right-hand sides, used to show each audit can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    #[default]
    None,
    /// ε with the leading factor 5 replaced by 1.
    EpsilonFactorOne,
    /// The `+κξ_m²D³/4` term removed.
    DropCubic,
    /// The `𝒵(t)` term removed.
    DropZTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaAudit {
    pub lemma_id: LemmaId,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `max(0, max_t (lhs − rhs))`.
    pub max_violation: f64,
    pub audit_tol: f64,
    /// Time of the largest `lhs − rhs`, if any point was audited.
    pub worst_time: Option<f64>,
    pub pass: bool,
}

impl LemmaAudit {
    fn build(lemma_id: LemmaId, times: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, audit_tol: f64) -> Self {
        let mut worst: Option<(f64, f64)> = None;
        for ((&t, &l), &r) in times.iter().zip(&lhs).zip(&rhs) {
            let gap = l - r;
            if worst.map_or(true, |(g, _)| gap > g || gap.is_nan()) {
                worst = Some((gap, t));
            }
        }
        let max_violation = match worst {
            Some((g, _)) if g.is_nan() => f64::NAN,
            Some((g, _)) => g.max(0.0),
            None => 0.0,
        };
        Self {
            lemma_id,
            times,
            lhs,
            rhs,
            max_violation,
            audit_tol,
            worst_time: worst.map(|w| w.1),
            pass: max_violation <= audit_tol,
        }
    }
}

/// `1e−6 + 10h²` for a grid of spacing `h`.
pub fn audit_tolerance(spacing: f64) -> f64 {
    1e-6 + 10.0 * spacing * spacing
}

fn grid_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::InsufficientData(format!("{} grid points; audits need at least 3", times.len())));
    }
    Ok(times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max))
}

fn check_len(times: &[f64], ys: &[f64], what: &str) -> Result<()> {
    if times.len() != ys.len() {
        return Err(Error::Dimension(format!("{what}: {} values for {} times", ys.len(), times.len())));
    }
    Ok(())
}

fn separable_constants(cfg: &ModelConfig) -> Result<(f64, f64, f64)> {
    let s = cfg
        .topology
        .xi_stats()
        .ok_or_else(|| Error::Unsupported("this bound is stated for separable weights".into()))?;
    Ok((s.xi_min, s.xi_max, s.xi_mean))
}

/// Audits `D'(t) ≤ −(κξ_m²/2)D + (κξ_m²/4)D³ + 2√p D(Ξ)` on a diameter series.
pub fn audit_series_3_2(times: &[f64], diam: &[f64], cfg: &ModelConfig, mutation: Mutation) -> Result<LemmaAudit> {
    check_len(times, diam, "diameters")?;
    let h = grid_spacing(times)?;
    let (xi_m, _, _) = separable_constants(cfg)?;
    let k = cfg.kappa * xi_m * xi_m;
    let forcing = 2.0 * (cfg.p as f64).sqrt() * cfg.frequencies.heterogeneity();
    let cubic = if mutation == Mutation::DropCubic { 0.0 } else { 0.25 };

    let interior = 1..times.len() - 1;
    let lhs = interior.clone().map(|i| dini_derivative(times, diam, i)).collect::<Result<Vec<_>>>()?;
    let rhs = interior.clone().map(|i| -0.5 * k * diam[i] + cubic * k * diam[i].powi(3) + forcing).collect();
    Ok(LemmaAudit::build(LemmaId::L3_2, times[interior].to_vec(), lhs, rhs, audit_tolerance(h)))
}

/// Audits `d/dt D(𝒜) ≤ −4(κξ_mξ_c − ε)X − κ(4ξ_mξ_c − ξ_M²)Y`, with `ε` taken
/// at the two recorded diameters and `D(𝒜) = X + Y`.
pub fn audit_series_3_1(
    times: &[f64],
    x: &[f64],
    y: &[f64],
    diam1: &[f64],
    diam2: &[f64],
    cfg: &ModelConfig,
    mutation: Mutation,
) -> Result<LemmaAudit> {
    for (s, what) in [(x, "X"), (y, "Y"), (diam1, "diameters"), (diam2, "diameters")] {
        check_len(times, s, what)?;
    }
    let h = grid_spacing(times)?;
    let (xi_m, xi_big, xi_c) = separable_constants(cfg)?;
    let kappa = cfg.kappa;
    let total: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let skew_coeff = kappa * (4.0 * xi_m * xi_c - xi_big * xi_big);

    let interior = 1..times.len() - 1;
    let lhs = interior.clone().map(|i| dini_derivative(times, &total, i)).collect::<Result<Vec<_>>>()?;
    let mut rhs = Vec::with_capacity(lhs.len());
    for i in interior.clone() {
        let mut eps = epsilon_of_t(cfg, diam1[i], diam2[i])?;
        if mutation == Mutation::EpsilonFactorOne {
            eps -= 4.0 * kappa * xi_big * xi_big * (cfg.p as f64).sqrt() * (diam1[i] + diam2[i]);
        }
        rhs.push(-4.0 * (kappa * xi_m * xi_c - eps) * x[i] - skew_coeff * y[i]);
    }
    Ok(LemmaAudit::build(LemmaId::L3_1, times[interior].to_vec(), lhs, rhs, audit_tolerance(h)))
}

/// Audits, for every agent `i`,
/// `x_i' ≤ (κ/N)Σ_k a_ik x_k − (κ/N)Σ_k a_ik x_i + (κ𝒵/N)Σ_k a_ik x_i`
/// with `x_i = ‖S_i − S̃_i‖` (`dists[i]`) and `𝒵 = max{D(𝒮), D(𝒮̃)}` (`z`).
///
/// Points where `x_i` is below `1e−12` at the stencil are skipped. The stored
/// `lhs`/`rhs` at each time are those of the worst agent.
pub fn audit_series_4_1(
    times: &[f64],
    dists: &[Vec<f64>],
    z: &[f64],
    topology: &Topology,
    kappa: f64,
    mutation: Mutation,
) -> Result<LemmaAudit> {
    check_len(times, z, "Z")?;
    if dists.len() != topology.agents() {
        return Err(Error::Dimension(format!("{} distance series for {} agents", dists.len(), topology.agents())));
    }
    for d in dists {
        check_len(times, d, "agent distances")?;
    }
    let h = grid_spacing(times)?;
    let n = dists.len();
    let c = kappa / n as f64;
    let degree: Vec<f64> = (0..n).map(|i| (0..n).map(|k| topology.weight(i, k)).sum()).collect();

    let (mut ts, mut lhs, mut rhs) = (Vec::new(), Vec::new(), Vec::new());
    for t in 1..times.len() - 1 {
        let mut worst: Option<(f64, f64)> = None;
        for i in 0..n {
            let xi = &dists[i];
            if xi[t - 1] < 1e-12 || xi[t] < 1e-12 || xi[t + 1] < 1e-12 {
                continue;
            }
            let l = dini_derivative(times, xi, t)?;
            let coupled: f64 = (0..n).map(|k| topology.weight(i, k) * dists[k][t]).sum();
            let z_term = if mutation == Mutation::DropZTerm { 0.0 } else { z[t] * degree[i] * xi[t] };
            let r = c * (coupled - degree[i] * xi[t] + z_term);
            if worst.map_or(true, |(wl, wr)| l - r > wl - wr) {
                worst = Some((l, r));
            }
        }
        if let Some((l, r)) = worst {
            ts.push(times[t]);
            lhs.push(l);
            rhs.push(r);
        }
    }
    Ok(LemmaAudit::build(LemmaId::L4_1, ts, lhs, rhs, audit_tolerance(h)))
}

fn check_pair(t1: &Trajectory, t2: &Trajectory) -> Result<()> {
    if t1.times != t2.times {
        return Err(Error::Dimension("trajectories are not on the same time grid".into()));
    }
    Ok(())
}

pub fn audit_lemma_3_2(traj: &Trajectory, cfg: &ModelConfig) -> Result<LemmaAudit> {
    audit_lemma_3_2_with(traj, cfg, Mutation::None)
}

pub fn audit_lemma_3_2_with(traj: &Trajectory, cfg: &ModelConfig, mutation: Mutation) -> Result<LemmaAudit> {
    audit_series_3_2(&traj.times, &traj.diameters, cfg, mutation)
}

pub fn audit_lemma_3_1(t1: &Trajectory, t2: &Trajectory, cfg: &ModelConfig) -> Result<LemmaAudit> {
    audit_lemma_3_1_with(t1, t2, cfg, Mutation::None)
}

pub fn audit_lemma_3_1_with(
    t1: &Trajectory,
    t2: &Trajectory,
    cfg: &ModelConfig,
    mutation: Mutation,
) -> Result<LemmaAudit> {
    check_pair(t1, t2)?;
    separable_constants(cfg)?;
    let (x, y): (Vec<f64>, Vec<f64>) = correlation_diameter_series(t1, t2)?.into_iter().unzip();
    audit_series_3_1(&t1.times, &x, &y, &t1.diameters, &t2.diameters, cfg, mutation)
}

pub fn audit_lemma_4_1(t1: &Trajectory, t2: &Trajectory, cfg: &ModelConfig) -> Result<LemmaAudit> {
    audit_lemma_4_1_with(t1, t2, cfg, Mutation::None)
}

pub fn audit_lemma_4_1_with(
    t1: &Trajectory,
    t2: &Trajectory,
    cfg: &ModelConfig,
    mutation: Mutation,
) -> Result<LemmaAudit> {
    check_pair(t1, t2)?;
    let n = cfg.agents();
    let dists: Vec<Vec<f64>> =
        (0..n).map(|i| t1.states.iter().zip(&t2.states).map(|(a, b)| a.agent(i).dist(b.agent(i))).collect()).collect();
    let z: Vec<f64> = t1.diameters.iter().zip(&t2.diameters).map(|(a, b)| a.max(*b)).collect();
    audit_series_4_1(&t1.times, &dists, &z, &cfg.topology, cfg.kappa, mutation)
}
