//! Validated points of `St(p, n)`, ensembles of them, and the distance
//! functionals used throughout the diagnostics.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{polar_factor, qr_thin, Mat};

/// An `n × p` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat", into = "Mat")]
pub struct StiefelPoint {
    mat: Mat,
}

impl StiefelPoint {
    /// Validates orthonormality at the construction tolerance (`1e-10`).
    pub fn new(mat: Mat) -> Result<Self> {
        Self::with_tolerance(mat, Tolerances::DEFAULT.orth_construct)
    }

    pub fn with_tolerance(mat: Mat, tol: f64) -> Result<Self> {
        let (n, p) = mat.shape();
        if p > n {
            return Err(Error::Dimension(format!("St(p, n) needs p ≤ n, got p = {p}, n = {n}")));
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite("Stiefel point"));
        }
        let residual = mat.orthonormality_residual();
        // ‖X‖ = √p is implied, but checked on its own so a broken Gram
        // computation cannot slip through.
        let norm_gap = (mat.frobenius() - (p as f64).sqrt()).abs();
        if residual > tol || norm_gap > tol {
            return Err(Error::NotOnManifold { residual: residual.max(norm_gap), tol });
        }
        Ok(Self { mat })
    }

    /// Wraps integrator output whose drift is tracked by the caller.
    pub(crate) fn from_raw(mat: Mat) -> Self {
        Self { mat }
    }

    /// First `p` columns of the `n × n` identity.
    pub fn canonical(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::Dimension(format!("St(p, n) needs 1 ≤ p ≤ n, got p = {p}, n = {n}")));
        }
        Ok(Self { mat: Mat::eye(n, p) })
    }

    pub fn n(&self) -> usize {
        self.mat.rows()
    }

    pub fn p(&self) -> usize {
        self.mat.cols()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    /// `‖XᵀX − I_p‖`.
    pub fn drift(&self) -> f64 {
        self.mat.orthonormality_residual()
    }
}

impl TryFrom<Mat> for StiefelPoint {
    type Error = Error;
    fn try_from(m: Mat) -> Result<Self> {
        StiefelPoint::new(m)
    }
}

impl From<StiefelPoint> for Mat {
    fn from(s: StiefelPoint) -> Mat {
        s.mat
    }
}

/// Haar-distributed point of `St(p, n)`: the Q factor of an `n × p` Gaussian.
pub fn random_stiefel<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<StiefelPoint> {
    if p == 0 || p > n {
        return Err(Error::Dimension(format!("St(p, n) needs 1 ≤ p ≤ n, got p = {p}, n = {n}")));
    }
    loop {
        let g = Mat::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        match qr_thin(&g) {
            Ok((q, _)) => return StiefelPoint::new(q),
            // A rank-deficient Gaussian sample has probability zero; redraw.
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Polar retraction of a full-rank `n × p` matrix onto the manifold.
pub fn retract(x: &Mat) -> Result<StiefelPoint> {
    if x.cols() > x.rows() {
        return Err(Error::Dimension(format!("cannot retract a {}×{} matrix", x.rows(), x.cols())));
    }
    let u = polar_factor(x)?;
    StiefelPoint::new(u)
}

/// `‖sᵀv + vᵀs‖`, zero exactly when `v` is tangent at `s`.
pub fn tangent_residual(s: &StiefelPoint, v: &Mat) -> Result<f64> {
    if v.shape() != s.mat.shape() {
        return Err(Error::Dimension(format!("tangent vector is {:?}, point is {:?}", v.shape(), s.mat.shape())));
    }
    let m = s.mat.tr_mul_unchecked(v);
    Ok((&m + &m.transpose()).frobenius())
}

/// Orthogonal projection onto the tangent space at `s`: `v − s·sym(sᵀv)`.
pub fn tangent_project(s: &StiefelPoint, v: &Mat) -> Result<Mat> {
    if v.shape() != s.mat.shape() {
        return Err(Error::Dimension(format!("tangent vector is {:?}, point is {:?}", v.shape(), s.mat.shape())));
    }
    let sym = s.mat.tr_mul_unchecked(v).sym();
    Ok(v - &s.mat.mul_unchecked(&sym))
}

/// The ensemble `(S_1, …, S_N)`; agents are indexed, never permuted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<StiefelPoint>", into = "Vec<StiefelPoint>")]
pub struct EnsembleState {
    agents: Vec<StiefelPoint>,
}

impl EnsembleState {
    pub fn new(agents: Vec<StiefelPoint>) -> Result<Self> {
        let first = agents.first().ok_or_else(|| Error::Dimension("an ensemble needs at least one agent".into()))?;
        let shape = first.mat.shape();
        if let Some((i, a)) = agents.iter().enumerate().find(|(_, a)| a.mat.shape() != shape) {
            return Err(Error::Dimension(format!("agent {i} is {:?}, agent 0 is {shape:?}", a.mat.shape())));
        }
        Ok(Self { agents })
    }

    pub fn from_mats(mats: Vec<Mat>) -> Result<Self> {
        Self::new(mats.into_iter().map(StiefelPoint::new).collect::<Result<_>>()?)
    }

    pub(crate) fn from_raw(mats: Vec<Mat>) -> Self {
        Self { agents: mats.into_iter().map(StiefelPoint::from_raw).collect() }
    }

    /// Every agent equal to `point`.
    pub fn consensus(point: &StiefelPoint, agents: usize) -> Result<Self> {
        Self::new(vec![point.clone(); agents])
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn n(&self) -> usize {
        self.agents[0].n()
    }

    pub fn p(&self) -> usize {
        self.agents[0].p()
    }

    pub fn agents(&self) -> &[StiefelPoint] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &Mat {
        &self.agents[i].mat
    }

    pub fn mats(&self) -> impl ExactSizeIterator<Item = &Mat> + '_ {
        self.agents.iter().map(|a| &a.mat)
    }

    pub fn to_mats(&self) -> Vec<Mat> {
        self.mats().cloned().collect()
    }

    /// `max_i ‖S_iᵀS_i − I_p‖`.
    pub fn drift(&self) -> f64 {
        self.agents.iter().map(StiefelPoint::drift).fold(0.0, f64::max)
    }

    /// Right-multiplies every agent by the same `p × p` matrix (which must be
    /// orthogonal for the result to stay on the manifold).
    pub fn right_multiply(&self, r: &Mat) -> Result<Self> {
        if r.shape() != (self.p(), self.p()) {
            return Err(Error::Dimension(format!("right factor must be {0}×{0}", self.p())));
        }
        Self::from_mats(self.mats().map(|m| m.mul_unchecked(r)).collect())
    }

    /// Left-multiplies every agent by the same `n × n` matrix.
    pub fn left_multiply(&self, o: &Mat) -> Result<Self> {
        if o.shape() != (self.n(), self.n()) {
            return Err(Error::Dimension(format!("left factor must be {0}×{0}", self.n())));
        }
        Self::from_mats(self.mats().map(|m| o.mul_unchecked(m)).collect())
    }

    pub(crate) fn same_shape(&self, other: &EnsembleState) -> Result<()> {
        if self.len() != other.len() || self.n() != other.n() || self.p() != other.p() {
            return Err(Error::Dimension(format!(
                "ensembles differ: N = {} vs {}, (n, p) = ({}, {}) vs ({}, {})",
                self.len(),
                other.len(),
                self.n(),
                self.p(),
                other.n(),
                other.p()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<StiefelPoint>> for EnsembleState {
    type Error = Error;
    fn try_from(v: Vec<StiefelPoint>) -> Result<Self> {
        EnsembleState::new(v)
    }
}

impl From<EnsembleState> for Vec<StiefelPoint> {
    fn from(e: EnsembleState) -> Self {
        e.agents
    }
}

/// Maximal diameter `D(𝒮) = max_{i,j} ‖S_i − S_j‖`.
pub fn ensemble_diameter(e: &EnsembleState) -> f64 {
    diameter_of(&e.agents.iter().map(|a| &a.mat).collect::<Vec<_>>())
}

pub(crate) fn diameter_of(mats: &[&Mat]) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            best = best.max(mats[i].dist_sq(mats[j]));
        }
    }
    best.sqrt()
}

/// `(Σ_i ‖S_i − S̃_i‖^q)^{1/q}` for `q ≥ 1`.
pub fn ensemble_lp_distance(e1: &EnsembleState, e2: &EnsembleState, q: f64) -> Result<f64> {
    e1.same_shape(e2)?;
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("ℓ_p exponent must be ≥ 1, got {q}")));
    }
    Ok(lp_norm(e1.mats().zip(e2.mats()).map(|(a, b)| a.dist(b)), q))
}

pub(crate) fn lp_norm(xs: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q == 1.0 {
        xs.sum()
    } else if q == 2.0 {
        xs.map(|x| x * x).sum::<f64>().sqrt()
    } else {
        xs.map(|x| x.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}
