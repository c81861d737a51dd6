//! Scenario templates.
//!
//! The framework templates pick `ξ`, then set `D(Ξ)` so that (F3) holds with
//! the requested margin, then tune the near-consensus radius until the initial
//! diameter sits at `diameter_fraction` of the (F4) bound.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stiefel_sync::model::check_framework;
use stiefel_sync::stiefel::ensemble_diameter;
use stiefel_sync::{IntegratorConfig, XiStats};

use crate::error::{CliError, Result};
use crate::scenario::{Analysis, ConsensusExpectation, Dims, FrequencySpec, InitialSpec, Scenario, TopologySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    Homogeneous,
    HeterogeneousFramework,
    StabilityPair,
    KuramotoCircle,
}

impl Template {
    pub const ALL: [Template; 4] =
        [Template::Homogeneous, Template::HeterogeneousFramework, Template::StabilityPair, Template::KuramotoCircle];

    pub fn name(self) -> &'static str {
        match self {
            Template::Homogeneous => "homogeneous",
            Template::HeterogeneousFramework => "heterogeneous-framework",
            Template::StabilityPair => "stability-pair",
            Template::KuramotoCircle => "kuramoto-circle",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Template::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            let names: Vec<_> = Template::ALL.iter().map(|t| t.name()).collect();
            CliError::Generation(format!("unknown template `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// Template knobs; every field can be overridden with `--set key=value`.
#[derive(Debug, Clone)]
struct Knobs {
    name: Option<String>,
    n: usize,
    p: usize,
    agents: usize,
    kappa: f64,
    h: f64,
    t_end: f64,
    record_stride: usize,
    /// Near-consensus radius (homogeneous template).
    radius: f64,
    /// `ξ_i` range for the framework templates.
    xi_low: f64,
    xi_high: f64,
    /// Relative margin left in (F3).
    margin: f64,
    /// Target `D(𝒮^in)` as a fraction of the (F4) bound.
    diameter_fraction: f64,
    /// Companion perturbation as a fraction of the target diameter.
    perturbation_fraction: f64,
}

impl Knobs {
    fn defaults(t: Template) -> Self {
        let base = Knobs {
            name: None,
            n: 5,
            p: 2,
            agents: 6,
            kappa: 0.5,
            h: 1e-3,
            t_end: 50.0,
            record_stride: 10,
            radius: 0.3,
            xi_low: 0.95,
            xi_high: 1.05,
            margin: 0.1,
            diameter_fraction: 0.6,
            perturbation_fraction: 0.1,
        };
        match t {
            Template::Homogeneous => Knobs { n: 4, kappa: 1.0, ..base },
            // Audits differentiate the recorded series, so keep every step.
            Template::HeterogeneousFramework | Template::StabilityPair => Knobs { record_stride: 1, ..base },
            Template::KuramotoCircle => {
                Knobs { n: 2, p: 1, agents: 3, kappa: 1.0, h: 1e-4, t_end: 10.0, record_stride: 100, ..base }
            }
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| CliError::Generation(format!("cannot parse `{value}` for `{key}`")))
        }
        match key {
            "name" => self.name = Some(value.to_owned()),
            "n" => self.n = parse(key, value)?,
            "p" => self.p = parse(key, value)?,
            "agents" => self.agents = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "h" => self.h = parse(key, value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "record_stride" => self.record_stride = parse(key, value)?,
            "radius" => self.radius = parse(key, value)?,
            "xi_low" => self.xi_low = parse(key, value)?,
            "xi_high" => self.xi_high = parse(key, value)?,
            "margin" => self.margin = parse(key, value)?,
            "diameter_fraction" => self.diameter_fraction = parse(key, value)?,
            "perturbation_fraction" => self.perturbation_fraction = parse(key, value)?,
            _ => return Err(CliError::Generation(format!("unknown override `{key}`"))),
        }
        Ok(())
    }
}

/// Independent sub-seeds derived from the user seed.
fn sub_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k.wrapping_mul(0xBF58_476D_1CE4_E5B9)) ^ k
}

fn gen_err(msg: impl Into<String>) -> CliError {
    CliError::Generation(msg.into())
}

/// Builds a scenario from a template; `overrides` are `key=value` pairs.
pub fn generate_scenario(template: Template, seed: u64, overrides: &[(String, String)]) -> Result<Scenario> {
    let mut k = Knobs::defaults(template);
    for (key, value) in overrides {
        k.set(key, value)?;
    }
    let integrator =
        IntegratorConfig::new(k.h, k.t_end).map_err(|e| gen_err(e.to_string()))?.with_stride(k.record_stride);
    integrator.validate().map_err(|e| gen_err(e.to_string()))?;
    let name = k.name.clone().unwrap_or_else(|| format!("{template}-{seed}"));
    let dims = Dims { n: k.n, p: k.p, agents: k.agents };

    let scn = match template {
        Template::Homogeneous => Scenario {
            name,
            dims,
            kappa: k.kappa,
            topology: TopologySpec::AllToAll,
            frequencies: FrequencySpec::Zero,
            initial: InitialSpec::NearConsensus { radius: k.radius, seed: sub_seed(seed, 2) },
            integrator,
            analyses: vec![
                Analysis::Framework,
                Analysis::Consensus { expect: Some(ConsensusExpectation::Complete), window_fraction: None, tol: None },
                Analysis::Audits { lemmas: None, mutation: Default::default() },
                Analysis::Cubic,
            ],
        },
        Template::KuramotoCircle => {
            if k.p != 1 {
                return Err(gen_err("the kuramoto-circle template needs p = 1"));
            }
            Scenario {
                name,
                dims,
                kappa: k.kappa,
                topology: TopologySpec::AllToAll,
                frequencies: FrequencySpec::Zero,
                initial: InitialSpec::Random { seed: sub_seed(seed, 2) },
                integrator,
                analyses: vec![Analysis::Consensus { expect: None, window_fraction: None, tol: None }],
            }
        }
        Template::HeterogeneousFramework | Template::StabilityPair => {
            framework_scenario(template, &k, seed, name, dims, integrator)?
        }
    };
    let prep = scn.prepare(Path::new(".")).map_err(|e| gen_err(e.to_string()))?;
    if matches!(template, Template::HeterogeneousFramework | Template::StabilityPair) {
        for (what, state) in [("initial data", Some(&prep.initial)), ("perturbed copy", prep.companion.as_ref())] {
            let state = state.expect("framework templates request a stability pair");
            let rep = check_framework(&prep.cfg, state)?;
            if !rep.all_satisfied() {
                return Err(gen_err(format!("{what} violates the framework: {:?}", rep.satisfied)));
            }
        }
    }
    Ok(scn)
}

fn framework_scenario(
    template: Template,
    k: &Knobs,
    seed: u64,
    name: String,
    dims: Dims,
    integrator: IntegratorConfig,
) -> Result<Scenario> {
    if !(k.kappa > 0.0) {
        return Err(gen_err(format!("the framework needs kappa > 0, got {}", k.kappa)));
    }
    if k.p < 2 {
        return Err(gen_err("heterogeneous frequencies need p ≥ 2"));
    }
    if !(0.0 < k.margin && k.margin < 1.0) || !(0.0 < k.diameter_fraction && k.diameter_fraction < 1.0) {
        return Err(gen_err("margin and diameter_fraction must lie in (0, 1)"));
    }
    if !(0.0 < k.xi_low && k.xi_low <= k.xi_high) {
        return Err(gen_err(format!("need 0 < xi_low ≤ xi_high, got [{}, {}]", k.xi_low, k.xi_high)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 0));
    let xi: Vec<f64> = (0..k.agents)
        .map(|_| if k.xi_low == k.xi_high { k.xi_low } else { rng.gen_range(k.xi_low..k.xi_high) })
        .collect();
    let s = XiStats::from_xi(&xi);
    let p = k.p as f64;
    if s.xi_max * s.xi_max >= 4.0 * s.xi_min * s.xi_mean {
        return Err(gen_err("ξ range violates (F1)"));
    }
    let core = s.xi_min * s.xi_mean - 3.0 * s.xi_max * s.spread;
    if core <= 0.0 {
        return Err(gen_err("ξ range violates (F2)"));
    }
    let tail = 2.0 - 1.0 / (100.0 * p);
    let f3_rhs = core * tail / (80.0 * s.xi_max * s.xi_max * p / (s.xi_min * s.xi_min) + tail);
    let d_freq = (1.0 - k.margin) * f3_rhs * k.kappa;
    let f4_bound = (core - d_freq / k.kappa) / (10.0 * s.xi_max * s.xi_max * p.sqrt());
    let target = k.diameter_fraction * f4_bound;
    let perturbation = k.perturbation_fraction * target;

    let analyses = match template {
        Template::StabilityPair => vec![
            Analysis::Framework,
            Analysis::Stability { perturbation, p_exp: vec![1.0, 2.0, 4.0], seed: sub_seed(seed, 3) },
            Analysis::Consensus { expect: Some(ConsensusExpectation::Reached), window_fraction: None, tol: None },
        ],
        _ => vec![
            Analysis::Framework,
            Analysis::Stability { perturbation, p_exp: vec![1.0, 2.0, 4.0], seed: sub_seed(seed, 3) },
            Analysis::Consensus { expect: Some(ConsensusExpectation::Reached), window_fraction: None, tol: None },
            Analysis::DecayFit { window: None },
            Analysis::Audits { lemmas: None, mutation: Default::default() },
            Analysis::Cubic,
        ],
    };
    let mut scn = Scenario {
        name,
        dims,
        kappa: k.kappa,
        topology: TopologySpec::Separable { xi },
        frequencies: FrequencySpec::Random { magnitude: d_freq, seed: sub_seed(seed, 1), common: None },
        initial: InitialSpec::NearConsensus { radius: 0.5 * target, seed: sub_seed(seed, 2) },
        integrator,
        analyses,
    };
    // The diameter is close to linear in the radius; a few secant-free
    // rescalings land on the target.
    for _ in 0..20 {
        let prep = scn.prepare(Path::new(".")).map_err(|e| gen_err(e.to_string()))?;
        let d = ensemble_diameter(&prep.initial);
        let InitialSpec::NearConsensus { radius, .. } = &mut scn.initial else { unreachable!() };
        if d == 0.0 {
            return Err(gen_err("near-consensus sampling collapsed to a point"));
        }
        if (d - target).abs() <= 1e-6 * target {
            break;
        }
        *radius *= target / d;
    }
    Ok(scn)
}
