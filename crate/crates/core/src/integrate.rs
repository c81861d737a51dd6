//! Fixed-step RK4 integration with post-step polar retraction.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{polar_factor, Mat};
use crate::model::{rhs_into, ModelConfig};
use crate::stiefel::{diameter_of, EnsembleState};

/// When the polar retraction is applied after a full RK4 step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetractionPolicy {
    EveryStep,
    /// Retract only once the drift exceeds the threshold (at most the runtime
    /// drift tolerance, `1e-8`).
    OnDrift(f64),
    /// Plain RK4 in the ambient space; used to measure raw integrator drift.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "IntegratorConfig::default_h")]
    pub h: f64,
    #[serde(default = "IntegratorConfig::default_t_end")]
    pub t_end: f64,
    #[serde(default = "IntegratorConfig::default_retraction")]
    pub retraction: RetractionPolicy,
    /// Keep a snapshot every `record_stride` steps (the final step is always kept).
    #[serde(default = "IntegratorConfig::default_stride")]
    pub record_stride: usize,
}

impl IntegratorConfig {
    fn default_h() -> f64 {
        1e-3
    }
    fn default_t_end() -> f64 {
        50.0
    }
    fn default_retraction() -> RetractionPolicy {
        RetractionPolicy::EveryStep
    }
    fn default_stride() -> usize {
        10
    }

    pub fn new(h: f64, t_end: f64) -> Result<Self> {
        let c = Self { h, t_end, ..Self::default() };
        c.validate()?;
        Ok(c)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_retraction(mut self, policy: RetractionPolicy) -> Self {
        self.retraction = policy;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {}", self.h)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be ≥ 0, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record stride must be positive".into()));
        }
        if let RetractionPolicy::OnDrift(th) = self.retraction {
            if !(th > 0.0 && th <= Tolerances::DEFAULT.runtime_drift) {
                return Err(Error::InvalidParameter(format!(
                    "drift threshold must lie in (0, {:e}], got {th}",
                    Tolerances::DEFAULT.runtime_drift
                )));
            }
        }
        Ok(())
    }

    /// Number of steps; the horizon is rounded to the nearest multiple of `h`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            h: Self::default_h(),
            t_end: Self::default_t_end(),
            retraction: Self::default_retraction(),
            record_stride: Self::default_stride(),
        }
    }
}

/// Snapshots of one solution on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<EnsembleState>,
    /// `max_i ‖S_iᵀS_i − I_p‖` at each snapshot.
    pub drift: Vec<f64>,
    /// `D(𝒮)` at each snapshot.
    pub diameters: Vec<f64>,
    /// Largest drift seen after any step, recorded or not.
    pub max_step_drift: f64,
    pub step: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &EnsembleState {
        self.states.last().expect("trajectories hold at least the initial state")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Spacing of the recorded grid.
    pub fn spacing(&self) -> f64 {
        if self.times.len() < 2 {
            self.step
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.iter().copied().fold(0.0, f64::max)
    }
}

struct Rk4Workspace {
    k: [Vec<Mat>; 4],
    stage: Vec<Mat>,
}

impl Rk4Workspace {
    fn new(agents: usize, n: usize, p: usize) -> Self {
        let blank = || vec![Mat::zeros(n, p); agents];
        Self { k: [blank(), blank(), blank(), blank()], stage: blank() }
    }

    fn step(&mut self, state: &mut [Mat], cfg: &ModelConfig, h: f64) {
        let Self { k, stage } = self;
        rhs_into(state, cfg, &mut k[0]);
        for (c, dt) in [(1, 0.5 * h), (2, 0.5 * h), (3, h)] {
            for ((s, x), kk) in stage.iter_mut().zip(state.iter()).zip(&k[c - 1]) {
                s.as_mut_slice().copy_from_slice(x.as_slice());
                s.axpy(dt, kk);
            }
            let (done, rest) = k.split_at_mut(c);
            let _ = done;
            rhs_into(stage, cfg, &mut rest[0]);
        }
        for (i, x) in state.iter_mut().enumerate() {
            x.axpy(h / 6.0, &k[0][i]);
            x.axpy(h / 3.0, &k[1][i]);
            x.axpy(h / 3.0, &k[2][i]);
            x.axpy(h / 6.0, &k[3][i]);
        }
    }
}

fn max_drift(mats: &[Mat]) -> f64 {
    mats.iter().map(Mat::orthonormality_residual).fold(0.0, f64::max)
}

/// Integrates the model from `initial` over `[0, t_end]`.
pub fn integrate(initial: &EnsembleState, cfg: &ModelConfig, icfg: &IntegratorConfig) -> Result<Trajectory> {
    icfg.validate()?;
    cfg.check_state(initial)?;
    let steps = icfg.steps();
    let mut state = initial.to_mats();
    let mut ws = Rk4Workspace::new(state.len(), cfg.n, cfg.p);

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps / icfg.record_stride + 2),
        states: Vec::new(),
        drift: Vec::new(),
        diameters: Vec::new(),
        max_step_drift: initial.drift(),
        step: icfg.h,
    };
    let record = |traj: &mut Trajectory, t: f64, mats: &[Mat], drift: f64| {
        traj.times.push(t);
        traj.diameters.push(diameter_of(&mats.iter().collect::<Vec<_>>()));
        traj.drift.push(drift);
        traj.states.push(EnsembleState::from_raw(mats.to_vec()));
    };
    let d0 = traj.max_step_drift;
    record(&mut traj, 0.0, &state, d0);

    for k in 1..=steps {
        ws.step(&mut state, cfg, icfg.h);
        let last_good_time = (k - 1) as f64 * icfg.h;
        if state.iter().any(|m| !m.is_finite()) {
            return Err(Error::Divergence { last_good_time });
        }
        let retract_all = match icfg.retraction {
            RetractionPolicy::EveryStep => true,
            RetractionPolicy::OnDrift(th) => max_drift(&state) > th,
            RetractionPolicy::Disabled => false,
        };
        if retract_all {
            for m in state.iter_mut() {
                *m = polar_factor(m).map_err(|_| Error::Divergence { last_good_time })?;
            }
        }
        let drift = max_drift(&state);
        traj.max_step_drift = traj.max_step_drift.max(drift);
        if k % icfg.record_stride == 0 || k == steps {
            record(&mut traj, k as f64 * icfg.h, &state, drift);
        }
    }
    Ok(traj)
}

/// Integrates two solutions of the same model on an identical time grid.
pub fn integrate_pair(
    init1: &EnsembleState,
    init2: &EnsembleState,
    cfg: &ModelConfig,
    icfg: &IntegratorConfig,
) -> Result<(Trajectory, Trajectory)> {
    init1.same_shape(init2)?;
    Ok((integrate(init1, cfg, icfg)?, integrate(init2, cfg, icfg)?))
}

/// Finite-difference derivative of a uniformly sampled series.
///
/// Central difference at interior points, one-sided at the two ends.
pub fn dini_derivative(times: &[f64], ys: &[f64], index: usize) -> Result<f64> {
    if times.len() != ys.len() {
        return Err(Error::Dimension(format!("{} times, {} values", times.len(), ys.len())));
    }
    let len = times.len();
    if len < 2 || index >= len {
        return Err(Error::InsufficientData(format!("index {index} outside a series of length {len}")));
    }
    Ok(if index == 0 {
        (ys[1] - ys[0]) / (times[1] - times[0])
    } else if index == len - 1 {
        (ys[len - 1] - ys[len - 2]) / (times[len - 1] - times[len - 2])
    } else {
        (ys[index + 1] - ys[index - 1]) / (times[index + 1] - times[index - 1])
    })
}
