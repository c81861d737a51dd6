//! Scenario files: the JSON schema and its translation into a model, an
//! initial ensemble and (optionally) a perturbed companion ensemble.
//!
//! Physical parameters (`dims`, `kappa`, topology, frequencies, initial data)
//! have no defaults. Only numerics (`integrator`) and analysis options do.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use stiefel_sync::diagnostics::{LemmaId, Mutation};
use stiefel_sync::stiefel::{random_stiefel, retract, tangent_project};
use stiefel_sync::{EnsembleState, FrequencySet, IntegratorConfig, Mat, ModelConfig, SkewMat, StiefelPoint, Topology};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dims: Dims,
    pub kappa: f64,
    pub topology: TopologySpec,
    pub frequencies: FrequencySpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub n: usize,
    pub p: usize,
    pub agents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySpec {
    /// `a_ik ≡ 1`.
    AllToAll,
    Separable {
        xi: Vec<f64>,
    },
    /// `ξ_i` uniform in `[low, high]`.
    SeparableRandom {
        low: f64,
        high: f64,
        seed: u64,
    },
    General {
        weights: Mat,
    },
    /// A ring (for connectivity) plus each other edge with probability
    /// `density`; weights uniform in `[low, high]`.
    GeneralRandom {
        density: f64,
        low: f64,
        high: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencySpec {
    Zero,
    Common {
        skew: Mat,
    },
    /// Random `Ξ_i`, rescaled so that `D(Ξ)` equals `magnitude` exactly,
    /// optionally offset by a common skew matrix.
    Random {
        magnitude: f64,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        common: Option<Mat>,
    },
    Explicit {
        skews: Vec<Mat>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    /// Independent Haar-like samples.
    Random {
        seed: u64,
    },
    /// A common random point, each agent displaced by a tangent vector of
    /// norm `radius` in a random direction, then retracted.
    NearConsensus {
        radius: f64,
        seed: u64,
    },
    /// JSON file holding a list of `n × p` matrices (rows of rows), relative
    /// to the scenario file.
    Explicit {
        path: PathBuf,
    },
    Inline {
        agents: Vec<Mat>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusExpectation {
    Complete,
    Partial,
    /// Complete or partial.
    Reached,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    Framework,
    Consensus {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<ConsensusExpectation>,
        /// Trailing window as a fraction of the horizon (default 0.2).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window_fraction: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Exponential fit of `D(𝒜)`; needs a `stability` pair.
    DecayFit {
        /// Fit interval; defaults to the trailing half of the horizon.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 2]>,
    },
    /// Integrates a second solution from a perturbed copy of the initial data.
    Stability {
        perturbation: f64,
        #[serde(default = "default_p_exp")]
        p_exp: Vec<f64>,
        seed: u64,
    },
    Audits {
        /// Defaults to every lemma the scenario supports.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lemmas: Option<Vec<LemmaId>>,
        #[serde(default, skip_serializing_if = "is_no_mutation")]
        mutation: Mutation,
    },
    Cubic,
}

fn default_p_exp() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn is_no_mutation(m: &Mutation) -> bool {
    *m == Mutation::None
}

impl Analysis {
    pub fn label(&self) -> &'static str {
        match self {
            Analysis::Framework => "framework",
            Analysis::Consensus { .. } => "consensus",
            Analysis::DecayFit { .. } => "decay_fit",
            Analysis::Stability { .. } => "stability",
            Analysis::Audits { .. } => "audits",
            Analysis::Cubic => "cubic",
        }
    }
}

/// Everything needed to integrate a scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub cfg: ModelConfig,
    pub initial: EnsembleState,
    /// Perturbed initial data when a `stability` analysis is requested.
    pub companion: Option<EnsembleState>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl Scenario {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse { path: path.to_owned(), msg: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenarios serialize");
        s.push('\n');
        s
    }

    pub fn stability(&self) -> Option<(f64, &[f64], u64)> {
        self.analyses.iter().find_map(|a| match a {
            Analysis::Stability { perturbation, p_exp, seed } => Some((*perturbation, p_exp.as_slice(), *seed)),
            _ => None,
        })
    }

    pub fn wants(&self, label: &str) -> bool {
        self.analyses.iter().any(|a| a.label() == label)
    }

    /// Builds the model alone (no initial data).
    pub fn model(&self) -> Result<ModelConfig> {
        let Dims { n, p, agents } = self.dims;
        if agents == 0 || p == 0 || p > n {
            return Err(invalid(format!("dims need 1 ≤ p ≤ n and agents ≥ 1, got {:?}", self.dims)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(invalid(format!("kappa must be finite and ≥ 0, got {}", self.kappa)));
        }
        let topology = build_topology(&self.topology, agents)?;
        let frequencies = build_frequencies(&self.frequencies, agents, p)?;
        Ok(ModelConfig::new(self.kappa, topology, frequencies, n)?)
    }

    /// Validates the scenario and builds model and initial data.
    pub fn prepare(&self, base_dir: &Path) -> Result<Prepared> {
        self.integrator.validate()?;
        let cfg = self.model()?;
        self.check_analyses(&cfg)?;
        let Dims { n, p, agents } = self.dims;
        let initial = build_initial(&self.initial, n, p, agents, base_dir)?;
        let companion = match self.stability() {
            Some((perturbation, _, seed)) => Some(perturb(&initial, perturbation, seed)?),
            None => None,
        };
        Ok(Prepared { cfg, initial, companion })
    }

    fn check_analyses(&self, cfg: &ModelConfig) -> Result<()> {
        let separable = cfg.topology.is_separable();
        let mut stability = 0;
        for a in &self.analyses {
            match a {
                Analysis::Framework | Analysis::Cubic if !separable => {
                    return Err(invalid(format!("`{}` needs a separable topology", a.label())));
                }
                Analysis::Framework | Analysis::Cubic if cfg.kappa <= 0.0 => {
                    return Err(invalid(format!("`{}` needs kappa > 0", a.label())));
                }
                Analysis::Consensus { window_fraction, tol, .. } => {
                    if let Some(w) = window_fraction {
                        if !(*w > 0.0 && *w <= 1.0) {
                            return Err(invalid(format!("window_fraction must lie in (0, 1], got {w}")));
                        }
                    }
                    if let Some(t) = tol {
                        if !(*t > 0.0) {
                            return Err(invalid(format!("consensus tol must be positive, got {t}")));
                        }
                    }
                }
                Analysis::DecayFit { window } => {
                    if self.stability().is_none() {
                        return Err(invalid("`decay_fit` needs a `stability` analysis"));
                    }
                    if let Some([lo, hi]) = window {
                        if !(lo < hi) {
                            return Err(invalid(format!("decay_fit window [{lo}, {hi}] is empty")));
                        }
                    }
                }
                Analysis::Stability { perturbation, p_exp, .. } => {
                    stability += 1;
                    if !(*perturbation > 0.0 && perturbation.is_finite()) {
                        return Err(invalid(format!("perturbation must be positive, got {perturbation}")));
                    }
                    if p_exp.is_empty() || p_exp.iter().any(|q| !(*q >= 1.0 && q.is_finite())) {
                        return Err(invalid(format!("p_exp values must be finite and ≥ 1, got {p_exp:?}")));
                    }
                }
                Analysis::Audits { lemmas: Some(ls), .. } => {
                    for l in ls {
                        if !separable && matches!(l, LemmaId::L3_1 | LemmaId::L3_2) {
                            return Err(invalid(format!("{l:?} audit needs a separable topology")));
                        }
                        if self.stability().is_none() && matches!(l, LemmaId::L3_1 | LemmaId::L4_1) {
                            return Err(invalid(format!("{l:?} audit needs a `stability` pair")));
                        }
                    }
                }
                _ => {}
            }
        }
        if stability > 1 {
            return Err(invalid("at most one `stability` analysis per scenario"));
        }
        Ok(())
    }
}

fn build_topology(spec: &TopologySpec, agents: usize) -> Result<Topology> {
    let check_len = |len: usize| {
        if len != agents {
            Err(invalid(format!("topology describes {len} agents, dims say {agents}")))
        } else {
            Ok(())
        }
    };
    Ok(match spec {
        TopologySpec::AllToAll => Topology::all_to_all(agents)?,
        TopologySpec::Separable { xi } => {
            check_len(xi.len())?;
            Topology::separable(xi.clone())?
        }
        TopologySpec::SeparableRandom { low, high, seed } => {
            if !(*low > 0.0 && low <= high && high.is_finite()) {
                return Err(invalid(format!("need 0 < low ≤ high, got [{low}, {high}]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let xi = (0..agents).map(|_| if low == high { *low } else { rng.gen_range(*low..*high) }).collect();
            Topology::separable(xi)?
        }
        TopologySpec::General { weights } => {
            check_len(weights.rows())?;
            Topology::general(weights.clone())?
        }
        TopologySpec::GeneralRandom { density, low, high, seed } => {
            if !(*low > 0.0 && low <= high && (0.0..=1.0).contains(density)) {
                return Err(invalid("general_random needs 0 < low ≤ high and density in [0, 1]"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut w = Mat::zeros(agents, agents);
            for i in 0..agents {
                for k in (i + 1)..agents {
                    let ring = k == i + 1 || (i == 0 && k == agents - 1);
                    let draw: f64 = rng.gen();
                    let weight = if low == high { *low } else { rng.gen_range(*low..*high) };
                    if ring || draw < *density {
                        w[(i, k)] = weight;
                        w[(k, i)] = weight;
                    }
                }
            }
            Topology::general(w)?
        }
    })
}

fn random_skew(rng: &mut ChaCha8Rng, p: usize) -> SkewMat {
    let upper: Vec<f64> = (0..p * (p - 1) / 2).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    SkewMat::from_upper(p, &upper).expect("upper triangle has p(p−1)/2 entries")
}

fn build_frequencies(spec: &FrequencySpec, agents: usize, p: usize) -> Result<FrequencySet> {
    let check_p = |m: &Mat| {
        if m.shape() != (p, p) {
            Err(invalid(format!("frequency is {:?}, expected {p}×{p}", m.shape())))
        } else {
            Ok(())
        }
    };
    Ok(match spec {
        FrequencySpec::Zero => FrequencySet::zero(agents, p),
        FrequencySpec::Common { skew } => {
            check_p(skew)?;
            FrequencySet::common(agents, SkewMat::new(skew.clone())?)
        }
        FrequencySpec::Random { magnitude, seed, common } => {
            if !(*magnitude >= 0.0 && magnitude.is_finite()) {
                return Err(invalid(format!("frequency magnitude must be ≥ 0, got {magnitude}")));
            }
            let base = match common {
                Some(c) => {
                    check_p(c)?;
                    SkewMat::new(c.clone())?
                }
                None => SkewMat::zeros(p),
            };
            if *magnitude == 0.0 || agents == 1 {
                FrequencySet::common(agents, base)
            } else {
                if p == 1 {
                    return Err(invalid("p = 1 admits no nonzero skew-symmetric frequencies"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let raw = FrequencySet::new((0..agents).map(|_| random_skew(&mut rng, p)).collect())?;
                let s = magnitude / raw.heterogeneity();
                let scaled = raw
                    .iter()
                    .map(|x| SkewMat::new(base.as_mat() + &x.scale(s).into_mat()))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                FrequencySet::new(scaled)?
            }
        }
        FrequencySpec::Explicit { skews } => {
            if skews.len() != agents {
                return Err(invalid(format!("{} frequencies for {agents} agents", skews.len())));
            }
            for s in skews {
                check_p(s)?;
            }
            FrequencySet::new(skews.iter().map(|m| SkewMat::new(m.clone())).collect::<std::result::Result<_, _>>()?)?
        }
    })
}

/// A random unit tangent vector at `s`.
fn unit_tangent(s: &StiefelPoint, rng: &mut ChaCha8Rng) -> Result<Mat> {
    let (n, p) = (s.n(), s.p());
    for _ in 0..100 {
        let g = Mat::from_fn(n, p, |_, _| rng.sample(rand_distr::StandardNormal));
        let v = tangent_project(s, &g)?;
        let norm = v.frobenius();
        if norm > 1e-8 {
            return Ok(v.scale(1.0 / norm));
        }
    }
    Err(invalid(format!("St({p}, {n}) has no tangent directions to perturb along")))
}

fn displaced(s: &StiefelPoint, radius: f64, rng: &mut ChaCha8Rng) -> Result<StiefelPoint> {
    let v = unit_tangent(s, rng)?;
    Ok(retract(&(s.as_mat() + &v.scale(radius)))?)
}

fn build_initial(spec: &InitialSpec, n: usize, p: usize, agents: usize, base_dir: &Path) -> Result<EnsembleState> {
    let state = match spec {
        InitialSpec::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            EnsembleState::new(
                (0..agents).map(|_| random_stiefel(n, p, &mut rng)).collect::<std::result::Result<_, _>>()?,
            )?
        }
        InitialSpec::NearConsensus { radius, seed } => {
            if !(*radius >= 0.0 && radius.is_finite()) {
                return Err(invalid(format!("radius must be ≥ 0, got {radius}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let base = random_stiefel(n, p, &mut rng)?;
            let agents = (0..agents).map(|_| displaced(&base, *radius, &mut rng)).collect::<Result<Vec<_>>>()?;
            EnsembleState::new(agents)?
        }
        InitialSpec::Explicit { path } => {
            let full = base_dir.join(path);
            let text = fs::read_to_string(&full).map_err(|e| CliError::io(&full, e))?;
            let mats: Vec<Mat> =
                serde_json::from_str(&text).map_err(|e| CliError::Parse { path: full.clone(), msg: e.to_string() })?;
            EnsembleState::new(mats.into_iter().map(StiefelPoint::new).collect::<std::result::Result<_, _>>()?)?
        }
        InitialSpec::Inline { agents } => {
            EnsembleState::new(agents.iter().cloned().map(StiefelPoint::new).collect::<std::result::Result<_, _>>()?)?
        }
    };
    if state.len() != agents || state.n() != n || state.p() != p {
        return Err(invalid(format!(
            "initial data is {} agents on St({}, {}), dims say {agents} on St({p}, {n})",
            state.len(),
            state.p(),
            state.n()
        )));
    }
    Ok(state)
}

/// Moves every agent by a tangent step of norm `radius` in a seeded random
/// direction and retracts.
pub fn perturb(state: &EnsembleState, radius: f64, seed: u64) -> Result<EnsembleState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = state.agents().iter().map(|s| displaced(s, radius, &mut rng)).collect::<Result<Vec<_>>>()?;
    Ok(EnsembleState::new(agents)?)
}
