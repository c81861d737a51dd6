//! The dynamical system: network weights, natural frequencies, the vector
//! field, its potential, and the co-rotating frame.

mod framework;

pub use framework::{check_framework, delta_rate, epsilon_of_t, f4_threshold, FrameworkReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{expm_skew, Mat, SkewMat};
use crate::stiefel::EnsembleState;

/// How the weight matrix was specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyKind {
    /// `a_ik = ξ_i ξ_k` with every `ξ_i > 0`.
    Separable {
        xi: Vec<f64>,
    },
    General,
}

/// Symmetric, nonnegative, connected coupling weights `(a_ik)`.
///
/// The full `N × N` matrix is stored for both kinds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Topology {
    kind: TopologyKind,
    weights: Mat,
}

impl Topology {
    pub fn separable(xi: Vec<f64>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::Topology("ξ must have at least one entry".into()));
        }
        if let Some((i, x)) = xi.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::Topology(format!("ξ_{i} = {x} must be positive and finite")));
        }
        let n = xi.len();
        let weights = Mat::from_fn(n, n, |i, k| xi[i] * xi[k]);
        // ξ > 0 makes every weight positive, hence connected.
        Ok(Self { kind: TopologyKind::Separable { xi }, weights })
    }

    /// `a_ik ≡ 1`, i.e. separable with `ξ ≡ 1`.
    pub fn all_to_all(agents: usize) -> Result<Self> {
        Self::separable(vec![1.0; agents])
    }

    pub fn general(weights: Mat) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::Topology(format!("weights must be square, got {:?}", weights.shape())));
        }
        let n = weights.rows();
        let scale = weights.max_abs().max(1.0);
        for i in 0..n {
            for k in 0..n {
                let a = weights[(i, k)];
                if a < 0.0 {
                    return Err(Error::Topology(format!("a_{i}{k} = {a} is negative")));
                }
                if (a - weights[(k, i)]).abs() > 1e-14 * scale {
                    return Err(Error::Topology(format!(
                        "weights are not symmetric: a_{i}{k} = {a}, a_{k}{i} = {}",
                        weights[(k, i)]
                    )));
                }
            }
        }
        let weights = weights.sym();
        if !connected(&weights) {
            return Err(Error::Topology("positive-weight graph is not connected".into()));
        }
        Ok(Self { kind: TopologyKind::General, weights })
    }

    pub fn agents(&self) -> usize {
        self.weights.rows()
    }

    pub fn kind(&self) -> &TopologyKind {
        &self.kind
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize, k: usize) -> f64 {
        self.weights[(i, k)]
    }

    pub fn xi(&self) -> Option<&[f64]> {
        match &self.kind {
            TopologyKind::Separable { xi } => Some(xi),
            TopologyKind::General => None,
        }
    }

    pub fn is_separable(&self) -> bool {
        self.xi().is_some()
    }

    pub fn xi_stats(&self) -> Option<XiStats> {
        self.xi().map(XiStats::from_xi)
    }

    /// `a_M = max_{i,k} a_ik`.
    pub fn max_weight(&self) -> f64 {
        self.weights.max_abs()
    }
}

fn connected(w: &Mat) -> bool {
    let n = w.rows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for i in 0..n {
        for k in (i + 1)..n {
            if w[(i, k)] > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, k));
                if a != b {
                    parent[a] = b;
                    components -= 1;
                }
            }
        }
    }
    components <= 1
}

/// Summary statistics of the separable weights `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiStats {
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_mean: f64,
    /// `ξ_M − ξ_m`.
    pub spread: f64,
}

impl XiStats {
    pub fn from_xi(xi: &[f64]) -> Self {
        let xi_min = xi.iter().copied().fold(f64::INFINITY, f64::min);
        let xi_max = xi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let xi_mean = xi.iter().sum::<f64>() / xi.len() as f64;
        Self { xi_min, xi_max, xi_mean, spread: xi_max - xi_min }
    }
}

/// Natural frequencies `Ξ_1, …, Ξ_N` and their heterogeneity `D(Ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencySet {
    freqs: Vec<SkewMat>,
    heterogeneity: f64,
}

impl FrequencySet {
    pub fn new(freqs: Vec<SkewMat>) -> Result<Self> {
        let p = freqs.first().ok_or_else(|| Error::Dimension("frequency set is empty".into()))?.dim();
        if freqs.iter().any(|f| f.dim() != p) {
            return Err(Error::Dimension("frequencies have mixed sizes".into()));
        }
        let heterogeneity = Self::diameter(&freqs);
        Ok(Self { freqs, heterogeneity })
    }

    pub fn zero(agents: usize, p: usize) -> Self {
        Self { freqs: vec![SkewMat::zeros(p); agents], heterogeneity: 0.0 }
    }

    /// Homogeneous set `Ξ_i ≡ Ξ`.
    pub fn common(agents: usize, xi: SkewMat) -> Self {
        Self { freqs: vec![xi; agents], heterogeneity: 0.0 }
    }

    fn diameter(freqs: &[SkewMat]) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..freqs.len() {
            for j in (i + 1)..freqs.len() {
                best = best.max(freqs[i].as_mat().dist(freqs[j].as_mat()));
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn p(&self) -> usize {
        self.freqs[0].dim()
    }

    pub fn get(&self, i: usize) -> &SkewMat {
        &self.freqs[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &SkewMat> {
        self.freqs.iter()
    }

    /// `D(Ξ) = max_{i,j} ‖Ξ_i − Ξ_j‖`.
    pub fn heterogeneity(&self) -> f64 {
        self.heterogeneity
    }

    /// `Ξ_i − Ξ` for every agent.
    pub fn shifted(&self, common: &SkewMat) -> Result<Self> {
        if common.dim() != self.p() {
            return Err(Error::Dimension("shift has the wrong size".into()));
        }
        Self::new(self.freqs.iter().map(|f| f.sub(common)).collect())
    }
}

/// Physical parameters of one model instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    pub kappa: f64,
    pub topology: Topology,
    pub frequencies: FrequencySet,
    pub n: usize,
    pub p: usize,
}

impl ModelConfig {
    pub fn new(kappa: f64, topology: Topology, frequencies: FrequencySet, n: usize) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("κ must be finite and ≥ 0, got {kappa}")));
        }
        if topology.agents() != frequencies.len() {
            return Err(Error::Dimension(format!(
                "topology has {} agents, frequencies {}",
                topology.agents(),
                frequencies.len()
            )));
        }
        let p = frequencies.p();
        if p == 0 || p > n {
            return Err(Error::Dimension(format!("need 1 ≤ p ≤ n, got p = {p}, n = {n}")));
        }
        Ok(Self { kappa, topology, frequencies, n, p })
    }

    pub fn agents(&self) -> usize {
        self.topology.agents()
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(kappa, self.topology.clone(), self.frequencies.clone(), self.n)
    }

    pub fn with_frequencies(&self, frequencies: FrequencySet) -> Result<Self> {
        Self::new(self.kappa, self.topology.clone(), frequencies, self.n)
    }

    pub(crate) fn check_state(&self, state: &EnsembleState) -> Result<()> {
        if state.len() != self.agents() || state.n() != self.n || state.p() != self.p {
            return Err(Error::Dimension(format!(
                "state has N = {}, (n, p) = ({}, {}); model expects N = {}, (n, p) = ({}, {})",
                state.len(),
                state.n(),
                state.p(),
                self.agents(),
                self.n,
                self.p
            )));
        }
        Ok(())
    }
}

/// Velocities `dS_i/dt` of the ensemble under `cfg`.
pub fn rhs(state: &EnsembleState, cfg: &ModelConfig) -> Result<Vec<Mat>> {
    cfg.check_state(state)?;
    let mats: Vec<Mat> = state.to_mats();
    let mut out = Vec::with_capacity(mats.len());
    rhs_into(&mats, cfg, &mut out);
    Ok(out)
}

/// Shape-unchecked vector field on raw matrices, reusing `out`'s storage.
///
/// With `M = S_iᵀ S_ic`, the coupling `S_ic − ½(S_i S_iᵀ S_ic + S_i S_icᵀ S_i)`
/// equals `S_ic − S_i · sym(M)`; its tangency follows from `S_iᵀS_i = I`.
pub(crate) fn rhs_into(mats: &[Mat], cfg: &ModelConfig, out: &mut Vec<Mat>) {
    let agents = mats.len();
    let (n, p) = mats[0].shape();
    out.resize_with(agents, || Mat::zeros(n, p));
    let inv_n = 1.0 / agents as f64;
    let w = cfg.topology.weights();
    for (i, (si, vi)) in mats.iter().zip(out.iter_mut()).enumerate() {
        let mut centroid = Mat::zeros(n, p);
        // Summation order fixed by agent index.
        for (k, sk) in mats.iter().enumerate() {
            let a = w[(i, k)];
            if a != 0.0 {
                centroid.axpy(a * inv_n, sk);
            }
        }
        let m = si.tr_mul_unchecked(&centroid);
        let mut v = si.mul_unchecked(cfg.frequencies.get(i).as_mat());
        if cfg.kappa != 0.0 {
            let correction = si.mul_unchecked(&m.sym());
            v.axpy(cfg.kappa, &centroid);
            v.axpy(-cfg.kappa, &correction);
        }
        *vi = v;
    }
}

/// `𝒱(𝒮) = (1/N) Σ_{i,k} a_ik ‖S_i − S_k‖²`.
pub fn potential(state: &EnsembleState, topo: &Topology) -> Result<f64> {
    if state.len() != topo.agents() {
        return Err(Error::Dimension(format!("state has {} agents, topology {}", state.len(), topo.agents())));
    }
    let agents = state.len();
    let mut sum = 0.0;
    for i in 0..agents {
        for k in 0..agents {
            let a = topo.weight(i, k);
            if a != 0.0 {
                sum += a * state.agent(i).dist_sq(state.agent(k));
            }
        }
    }
    Ok(sum / agents as f64)
}

/// `S̃_i = S_i exp(−tΞ)` for every agent.
pub fn moving_frame(state: &EnsembleState, common: &SkewMat, t: f64) -> Result<EnsembleState> {
    if common.dim() != state.p() {
        return Err(Error::Dimension(format!(
            "frame generator is {0}×{0}, agents have p = {1}",
            common.dim(),
            state.p()
        )));
    }
    if t == 0.0 || common.norm() == 0.0 {
        return Ok(state.clone());
    }
    state.right_multiply(&expm_skew(&common.scale(-t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiefel::{random_stiefel, tangent_residual};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_skew(rng: &mut ChaCha8Rng, p: usize, scale: f64) -> SkewMat {
        let g = Mat::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        SkewMat::from_skew_part(&g).scale(scale)
    }

    fn random_config(rng: &mut ChaCha8Rng, n: usize, p: usize, agents: usize) -> ModelConfig {
        let xi: Vec<f64> = (0..agents).map(|_| rng.gen_range(0.5..1.5)).collect();
        let freqs = (0..agents)
            .map(|_| {
                let mag = rng.gen_range(0.0..2.0);
                random_skew(rng, p, mag)
            })
            .collect();
        ModelConfig::new(
            rng.gen_range(0.0..5.0),
            Topology::separable(xi).unwrap(),
            FrequencySet::new(freqs).unwrap(),
            n,
        )
        .unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize, p: usize, agents: usize) -> EnsembleState {
        EnsembleState::new((0..agents).map(|_| random_stiefel(n, p, rng).unwrap()).collect()).unwrap()
    }

    #[test]
    fn topology_validation() {
        assert!(Topology::separable(vec![1.0, 0.0]).is_err());
        assert!(Topology::separable(vec![]).is_err());
        let asym = Mat::from_rows(&[[0.0, 1.0], [2.0, 0.0]]).unwrap();
        assert!(Topology::general(asym).is_err());
        let neg = Mat::from_rows(&[[0.0, -1.0], [-1.0, 0.0]]).unwrap();
        assert!(Topology::general(neg).is_err());
        let split = Mat::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 5.0]]).unwrap();
        assert!(matches!(Topology::general(split), Err(Error::Topology(_))));
        let path = Mat::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 2.0], [0.0, 2.0, 0.0]]).unwrap();
        let t = Topology::general(path).unwrap();
        assert!(!t.is_separable());
        assert!(t.xi_stats().is_none());
        assert!(Topology::general(Mat::zeros(1, 1)).is_ok());
    }

    #[test]
    fn separable_weights_are_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xi: Vec<f64> = (0..9).map(|_| rng.gen_range(0.1..3.0)).collect();
        let t = Topology::separable(xi.clone()).unwrap();
        for i in 0..9 {
            for k in 0..9 {
                assert!((t.weight(i, k) - xi[i] * xi[k]).abs() <= 1e-14);
                assert_eq!(t.weight(i, k), t.weight(k, i));
            }
        }
        let s = t.xi_stats().unwrap();
        assert!(s.xi_min <= s.xi_mean && s.xi_mean <= s.xi_max);
        assert_eq!(s.spread, s.xi_max - s.xi_min);
    }

    #[test]
    fn frequency_heterogeneity_is_recomputable() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let freqs: Vec<SkewMat> = (0..6).map(|_| random_skew(&mut rng, 3, 1.0)).collect();
        let set = FrequencySet::new(freqs.clone()).unwrap();
        let mut brute = 0.0_f64;
        for a in &freqs {
            for b in &freqs {
                brute = brute.max((a.as_mat() - b.as_mat()).frobenius());
            }
        }
        assert_eq!(set.heterogeneity(), brute);
        assert_eq!(FrequencySet::common(4, freqs[0].clone()).heterogeneity(), 0.0);
    }

    #[test]
    fn config_validation() {
        let t = Topology::all_to_all(3).unwrap();
        assert!(ModelConfig::new(-1.0, t.clone(), FrequencySet::zero(3, 2), 4).is_err());
        assert!(ModelConfig::new(1.0, t.clone(), FrequencySet::zero(2, 2), 4).is_err());
        assert!(ModelConfig::new(1.0, t.clone(), FrequencySet::zero(3, 5), 4).is_err());
        assert!(ModelConfig::new(0.0, t, FrequencySet::zero(3, 2), 4).is_ok());
    }

    #[test]
    fn consensus_is_an_equilibrium() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let cfg = random_config(&mut rng, 5, 3, 6).with_frequencies(FrequencySet::zero(6, 3)).unwrap();
            let s = random_stiefel(5, 3, &mut rng).unwrap();
            let v = rhs(&EnsembleState::consensus(&s, 6).unwrap(), &cfg).unwrap();
            assert!(v.iter().all(|m| m.frobenius() <= 1e-12));
        }
    }

    #[test]
    fn zero_coupling_is_free_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = random_config(&mut rng, 4, 2, 5).with_kappa(0.0).unwrap();
        let state = random_state(&mut rng, 4, 2, 5);
        let v = rhs(&state, &cfg).unwrap();
        for (i, vi) in v.iter().enumerate() {
            assert_eq!(*vi, state.agent(i) * cfg.frequencies.get(i).as_mat());
        }
    }

    #[test]
    fn circle_reduces_to_scalar_kuramoto() {
        let kappa = 1.7;
        let cfg = ModelConfig::new(kappa, Topology::all_to_all(2).unwrap(), FrequencySet::zero(2, 1), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let th: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let state =
                EnsembleState::from_mats(th.iter().map(|t| Mat::from_rows(&[[t.cos()], [t.sin()]]).unwrap()).collect())
                    .unwrap();
            let v = rhs(&state, &cfg).unwrap();
            for i in 0..2 {
                let dtheta: f64 = (0..2).map(|k| (th[k] - th[i]).sin()).sum::<f64>() * kappa / 2.0;
                let want = [-th[i].sin() * dtheta, th[i].cos() * dtheta];
                assert!((v[i][(0, 0)] - want[0]).abs() < 1e-14);
                assert!((v[i][(1, 0)] - want[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn potential_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_stiefel(4, 2, &mut rng).unwrap();
        let t = Topology::all_to_all(5).unwrap();
        assert_eq!(potential(&EnsembleState::consensus(&s, 5).unwrap(), &t).unwrap(), 0.0);

        let pair = random_state(&mut rng, 4, 2, 2);
        let d = pair.agent(0).dist(pair.agent(1));
        let v = potential(&pair, &Topology::all_to_all(2).unwrap()).unwrap();
        assert!((v - d * d).abs() < 1e-14);

        let cfg = random_config(&mut rng, 4, 2, 7);
        let state = random_state(&mut rng, 4, 2, 7);
        let mut brute = 0.0;
        for i in 0..7 {
            for k in 0..7 {
                brute += cfg.topology.weight(i, k) * (state.agent(i) - state.agent(k)).frobenius_sq();
            }
        }
        assert!((potential(&state, &cfg.topology).unwrap() - brute / 7.0).abs() < 1e-12);
    }

    #[test]
    fn moving_frame_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let state = random_state(&mut rng, 5, 3, 4);
        let xi = random_skew(&mut rng, 3, 1.0);
        assert_eq!(moving_frame(&state, &xi, 0.0).unwrap(), state);
        assert_eq!(moving_frame(&state, &SkewMat::zeros(3), 4.2).unwrap(), state);
        let moved = moving_frame(&state, &xi, 2.5).unwrap();
        assert!(moved.drift() <= 1e-12);
        assert!(moving_frame(&state, &SkewMat::zeros(2), 1.0).is_err());
    }

    #[test]
    fn frame_equivariance_of_the_vector_field() {
        // With Ξ_i = Ξ + Ω_i and every Ω_i commuting with Ξ (here: multiples of
        // Ξ itself), the transported velocity V_i R − S̃_i Ξ equals the
        // velocity of the shifted system at S̃ = S R, R = exp(−tΞ).
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let base = random_skew(&mut rng, 3, 1.0);
            let freqs: Vec<SkewMat> = (0..5).map(|_| base.scale(rng.gen_range(0.5..1.5))).collect();
            let cfg = random_config(&mut rng, 6, 3, 5).with_frequencies(FrequencySet::new(freqs).unwrap()).unwrap();
            let state = random_state(&mut rng, 6, 3, 5);
            let t = rng.gen_range(0.0..3.0);
            let r = expm_skew(&base.scale(-t));
            let moved = moving_frame(&state, &base, t).unwrap();
            let shifted = cfg.with_frequencies(cfg.frequencies.shifted(&base).unwrap()).unwrap();
            let v = rhs(&state, &cfg).unwrap();
            let v_tilde = rhs(&moved, &shifted).unwrap();
            for i in 0..5 {
                let transported = &(&v[i] * &r) - &(moved.agent(i) * base.as_mat());
                assert!(transported.dist(&v_tilde[i]) <= 1e-10);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn velocities_are_tangent(seed in 0u64..2000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..7);
            let p = rng.gen_range(1..=n);
            let agents = rng.gen_range(1..8);
            let cfg = random_config(&mut rng, n, p, agents);
            let state = random_state(&mut rng, n, p, agents);
            for (a, v) in state.agents().iter().zip(rhs(&state, &cfg).unwrap()) {
                proptest::prop_assert!(tangent_residual(a, &v).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn rhs_shape_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = random_config(&mut rng, 4, 2, 3);
        let wrong = random_state(&mut rng, 5, 2, 3);
        assert!(matches!(rhs(&wrong, &cfg), Err(Error::Dimension(_))));
    }
}
