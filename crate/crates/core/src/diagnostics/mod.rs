//! Measured counterparts of the theory: correlation matrices, the correlation
//! diameter `D(𝒜)`, consensus detection, rate fitting and stability gains.

mod audit;
mod cubic;

pub use audit::{
    audit_lemma_3_1, audit_lemma_3_1_with, audit_lemma_3_2, audit_lemma_3_2_with, audit_lemma_4_1,
    audit_lemma_4_1_with, audit_series_3_1, audit_series_3_2, audit_series_4_1, audit_tolerance, LemmaAudit, LemmaId,
    Mutation,
};
pub use cubic::{cubic_analysis, cubic_roots, holder_step_check, lemma_3_3_monitor, CubicReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::matrix::Mat;
use crate::stiefel::{ensemble_lp_distance, EnsembleState};

/// All relative correlations `A_ji = S_jᵀS_i` of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    agents: usize,
    /// Row-major over `(j, i)`.
    mats: Vec<Mat>,
}

impl CorrelationSet {
    pub fn agents(&self) -> usize {
        self.agents
    }

    /// `A_ji = S_jᵀS_i`.
    pub fn get(&self, j: usize, i: usize) -> &Mat {
        &self.mats[j * self.agents + i]
    }

    /// `max_{i,j} ‖A_ij − I_p‖`.
    pub fn max_identity_gap(&self) -> f64 {
        let p = self.mats[0].rows();
        let id = Mat::identity(p);
        self.mats.iter().map(|a| a.dist(&id)).fold(0.0, f64::max)
    }

    /// `max_{i,j} ‖A_ij − B_ij‖`.
    pub fn max_dist(&self, other: &CorrelationSet) -> f64 {
        self.mats.iter().zip(&other.mats).map(|(a, b)| a.dist(b)).fold(0.0, f64::max)
    }
}

/// Computes every `A_ji`; the lower triangle is mirrored from the upper one.
pub fn correlations(state: &EnsembleState) -> CorrelationSet {
    let n = state.len();
    let p = state.p();
    let mut mats = vec![Mat::zeros(p, p); n * n];
    for j in 0..n {
        for i in j..n {
            let a = state.agent(j).tr_mul_unchecked(state.agent(i));
            if i != j {
                mats[i * n + j] = a.transpose();
            }
            mats[j * n + i] = a;
        }
    }
    CorrelationSet { agents: n, mats }
}

/// The two halves of `D(𝒜)`: `X = ⦀𝒜 − 𝒜̃⦀₂²` and `Y = ⦀(𝒜 − 𝒜ᵀ) − (𝒜̃ − 𝒜̃ᵀ)⦀₂²`.
pub fn correlation_diameter_parts(s1: &EnsembleState, s2: &EnsembleState) -> Result<(f64, f64)> {
    s1.same_shape(s2)?;
    let n = s1.len();
    let (mut x, mut y) = (0.0, 0.0);
    for j in 0..n {
        for i in (j + 1)..n {
            let a = s1.agent(j).tr_mul_unchecked(s1.agent(i));
            let b = s2.agent(j).tr_mul_unchecked(s2.agent(i));
            let d = &a - &b;
            let dt = d.transpose();
            // The (i, j) term is the transpose of the (j, i) term: same norms.
            x += 2.0 * d.frobenius_sq();
            y += 2.0 * (&d - &dt).frobenius_sq();
        }
    }
    Ok((x, y))
}

/// `D(𝒜) = X + Y`, a squared quantity.
pub fn correlation_diameter(s1: &EnsembleState, s2: &EnsembleState) -> Result<f64> {
    correlation_diameter_parts(s1, s2).map(|(x, y)| x + y)
}

fn check_aligned(t1: &Trajectory, t2: &Trajectory) -> Result<()> {
    if t1.times != t2.times {
        return Err(Error::Dimension("trajectories are not on the same time grid".into()));
    }
    Ok(())
}

/// `(X, Y)` at every recorded time of an aligned pair.
pub fn correlation_diameter_series(t1: &Trajectory, t2: &Trajectory) -> Result<Vec<(f64, f64)>> {
    check_aligned(t1, t2)?;
    t1.states.iter().zip(&t2.states).map(|(a, b)| correlation_diameter_parts(a, b)).collect()
}

/// `⦀𝒮(t) − 𝒮̃(t)⦀_q` at every recorded time of an aligned pair.
pub fn lp_distance_series(t1: &Trajectory, t2: &Trajectory, q: f64) -> Result<Vec<f64>> {
    check_aligned(t1, t2)?;
    t1.states.iter().zip(&t2.states).map(|(a, b)| ensemble_lp_distance(a, b, q)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConsensusStatus {
    Complete,
    /// Every `A_ij` settles, but not all to `I_p`; limits are trailing averages.
    Partial {
        limits: CorrelationSet,
    },
    None,
}

impl ConsensusStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ConsensusStatus::Complete => "complete",
            ConsensusStatus::Partial { .. } => "partial",
            ConsensusStatus::None => "none",
        }
    }

    /// Whether the correlations converge at all.
    pub fn reached(&self) -> bool {
        !matches!(self, ConsensusStatus::None)
    }
}

pub const DEFAULT_CONSENSUS_TOL: f64 = 1e-6;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;

fn trailing_window(traj: &Trajectory, window: f64) -> Result<usize> {
    let t_end = traj.t_end();
    if !(window > 0.0) || traj.len() < 2 || window > t_end - traj.times[0] {
        return Err(Error::InsufficientData(format!(
            "window {window} does not fit a trajectory covering [{}, {t_end}]",
            traj.times.first().copied().unwrap_or(0.0)
        )));
    }
    let start = traj.times.partition_point(|&t| t < t_end - window);
    if traj.len() - start < 2 {
        return Err(Error::InsufficientData("fewer than two snapshots in the window".into()));
    }
    Ok(start)
}

/// `max_{t in window} max_{i,j} ‖A_ij(t) − A_ij(t_end)‖`.
pub fn correlation_variation(traj: &Trajectory, window: f64) -> Result<f64> {
    let start = trailing_window(traj, window)?;
    let last = correlations(traj.last());
    Ok(traj.states[start..].iter().map(|s| correlations(s).max_dist(&last)).fold(0.0, f64::max))
}

/// Classifies the trailing `window` of a trajectory.
pub fn consensus_status(traj: &Trajectory, window: f64, tol: f64) -> Result<ConsensusStatus> {
    let start = trailing_window(traj, window)?;
    let sets: Vec<CorrelationSet> = traj.states[start..].iter().map(correlations).collect();
    if sets.iter().all(|c| c.max_identity_gap() <= tol) {
        return Ok(ConsensusStatus::Complete);
    }
    let last = sets.last().expect("window holds at least two snapshots");
    if sets.iter().any(|c| c.max_dist(last) > tol) {
        return Ok(ConsensusStatus::None);
    }
    let mut limits = last.clone();
    for m in limits.mats.iter_mut() {
        *m = Mat::zeros(m.rows(), m.cols());
    }
    let w = 1.0 / sets.len() as f64;
    for c in &sets {
        for (acc, a) in limits.mats.iter_mut().zip(&c.mats) {
            acc.axpy(w, a);
        }
    }
    Ok(ConsensusStatus::Partial { limits })
}

/// Least-squares fit of `log(values) ≈ a − rate·t` over `t ∈ [lo, hi]`.
///
/// Returns `(rate, r²)`; values are floored at `1e−300` before the logarithm.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<(f64, f64)> {
    if times.len() != values.len() {
        return Err(Error::Dimension(format!("{} times, {} values", times.len(), values.len())));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(&t, &v)| (t, v.max(1e-300).ln()))
        .collect();
    // Shift by the first log-value so a constant series gives exact zeros.
    let y0 = pts.first().map_or(0.0, |p| p.1);
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} points in the fit window", pts.len())));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1 - y0).sum::<f64>() / m;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &pts {
        let y = y - y0;
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    let slope = sty / stt;
    let r2 = if syy == 0.0 { 1.0 } else { (sty * sty) / (stt * syy) };
    Ok((-slope, r2))
}

/// `sup_t ⦀𝒮(t) − 𝒮̃(t)⦀_q / ⦀𝒮^in − 𝒮̃^in⦀_q` over the recorded grid.
pub fn stability_gain(t1: &Trajectory, t2: &Trajectory, p_exp: f64) -> Result<f64> {
    gain_of_series(&lp_distance_series(t1, t2, p_exp)?)
}

/// Gain of an already computed distance series.
pub fn gain_of_series(dist: &[f64]) -> Result<f64> {
    let d0 = *dist.first().ok_or_else(|| Error::InsufficientData("empty distance series".into()))?;
    if !(d0 > 0.0) {
        return Err(Error::UndefinedGain);
    }
    Ok(dist.iter().copied().fold(0.0, f64::max) / d0)
}
