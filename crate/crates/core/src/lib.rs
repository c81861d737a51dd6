//! Simulation and verification toolkit for the heterogeneous high-dimensional
//! Kuramoto (consensus) model on Stiefel manifolds.
//!
//! Each agent `S_i` lives on `St(p, n) = { X ∈ ℝ^{n×p} : XᵀX = I_p }` and follows
//!
//! ```text
//! dS_i/dt = S_i Ξ_i + κ ( S_ic − ½ (S_i S_iᵀ S_ic + S_i S_icᵀ S_i) ),
//! S_ic    = (1/N) Σ_k a_ik S_k,
//! ```
//!
//! with skew-symmetric natural frequencies `Ξ_i` and a symmetric, connected
//! weight matrix `(a_ik)`.
//!
//! The crate is layered bottom-up:
//!
//! * [`matrix`]: dense matrices, QR, polar factor, skew exponential.
//! * [`stiefel`]: validated manifold points, sampling, retraction, diameters.
//! * [`model`]: topology, frequencies, the vector field, the potential, the
//!   moving frame and the sufficient framework `(F1)–(F4)`.
//! * [`integrate`]: fixed-step RK4 with polar retraction and trajectories.
//! * [`diagnostics`]: correlation matrices, consensus detection, decay fits,
//!   stability gains, differential-inequality audits and the cubic analysis.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod integrate;
pub mod matrix;
pub mod model;
pub mod stiefel;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use integrate::{integrate, integrate_pair, IntegratorConfig, RetractionPolicy, Trajectory};
pub use matrix::{Mat, SkewMat};
pub use model::{FrameworkReport, FrequencySet, ModelConfig, Topology, TopologyKind, XiStats};
pub use stiefel::{EnsembleState, StiefelPoint};
