//! Executes a scenario: integration, requested analyses, series and report.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use stiefel_sync::diagnostics::{
    audit_lemma_3_1_with, audit_lemma_3_2_with, audit_lemma_4_1_with, consensus_status, correlation_diameter_series,
    correlation_variation, cubic_analysis, fit_decay_rate, gain_of_series, lemma_3_3_monitor, lp_distance_series,
    ConsensusStatus, CubicReport, LemmaAudit, LemmaId, Mutation, DEFAULT_CONSENSUS_TOL, DEFAULT_WINDOW_FRACTION,
};
use stiefel_sync::model::{check_framework, delta_rate, epsilon_of_t, potential};
use stiefel_sync::{integrate, FrameworkReport, ModelConfig, Trajectory};

use crate::error::{exit, CliError, Result};
use crate::scenario::{Analysis, ConsensusExpectation, Scenario};
use crate::series::{emit_series, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSummary {
    pub h: f64,
    pub t_end: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub max_step_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub companion_max_step_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusSummary {
    pub status: String,
    pub window: f64,
    pub tol: f64,
    /// `max_{t in window} max_{i,j} ‖A_ij(t) − A_ij(t_end)‖`.
    pub variation: f64,
    /// `max_{i,j} ‖A_ij(t_end) − I_p‖`.
    pub identity_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<ConsensusExpectation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub met: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub window: [f64; 2],
    pub rate: f64,
    pub r_squared: f64,
    /// δ with ε bounded through the measured supremum diameters of both runs.
    pub delta_lower: Option<f64>,
    pub eps_sup: Option<f64>,
    /// δ as reported by the framework check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_framework: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainEntry {
    pub p_exp: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub lemma: LemmaId,
    #[serde(skip_serializing_if = "is_no_mutation")]
    #[serde(default)]
    pub mutation: Mutation,
    pub max_violation: f64,
    pub audit_tol: f64,
    pub points: usize,
    pub worst_time: Option<f64>,
    pub pass: bool,
}

fn is_no_mutation(m: &Mutation) -> bool {
    *m == Mutation::None
}

impl AuditSummary {
    pub fn of(a: &LemmaAudit, mutation: Mutation) -> Self {
        Self {
            lemma: a.lemma_id,
            mutation,
            max_violation: a.max_violation,
            audit_tol: a.audit_tol,
            points: a.times.len(),
            worst_time: a.worst_time,
            pass: a.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSummary {
    #[serde(flatten)]
    pub report: CubicReport,
    /// Whether the recorded `D(𝒮)` stayed below the threshold (framework runs only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter_below_threshold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub analysis: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub audits_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expectation_met: Option<bool>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub integration: IntegrationSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub framework: Option<FrameworkReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub framework_companion: Option<FrameworkReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consensus: Option<ConsensusSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecaySummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub gain: Vec<GainEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub audits: Vec<AuditSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cubic: Option<CubicSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub skipped: Vec<Skip>,
    #[serde(default)]
    pub artifacts: Vec<String>,
    pub outcome: Outcome,
}

/// In-memory result of a scenario run.
#[derive(Debug, Clone)]
pub struct Execution {
    pub report: RunReport,
    pub series: Series,
    pub cfg: ModelConfig,
    pub primary: Trajectory,
    pub companion: Option<Trajectory>,
}

fn q_label(q: f64) -> String {
    format!("dist_l{q}")
}

fn build_series(cfg: &ModelConfig, a: &Trajectory, b: Option<&Trajectory>, p_exp: &[f64]) -> Result<Series> {
    let mut s = Series::new();
    s.push("t", a.times.clone());
    s.push("drift", a.drift.clone());
    s.push("diam_S", a.diameters.clone());
    let parts = match b {
        Some(b) => Some(correlation_diameter_series(a, b)?),
        None => None,
    };
    if let Some(parts) = &parts {
        s.push("diam_A", parts.iter().map(|(x, y)| x + y).collect());
    }
    s.push("V", a.states.iter().map(|st| potential(st, &cfg.topology)).collect::<std::result::Result<_, _>>()?);
    if let (Some(b), Some(parts)) = (b, &parts) {
        for &q in p_exp {
            s.push(q_label(q), lp_distance_series(a, b, q)?);
        }
        s.push("diam_S_tilde", b.diameters.clone());
        s.push("drift_tilde", b.drift.clone());
        s.push("diam_A_x", parts.iter().map(|p| p.0).collect());
        s.push("diam_A_y", parts.iter().map(|p| p.1).collect());
        for i in 0..cfg.agents() {
            s.push(
                format!("dist_agent_{i}"),
                a.states.iter().zip(&b.states).map(|(x, y)| x.agent(i).dist(y.agent(i))).collect(),
            );
        }
    }
    Ok(s)
}

fn expectation_met(expect: ConsensusExpectation, status: &ConsensusStatus) -> bool {
    match (expect, status) {
        (ConsensusExpectation::Complete, ConsensusStatus::Complete) => true,
        (ConsensusExpectation::Partial, ConsensusStatus::Partial { .. }) => true,
        (ConsensusExpectation::Reached, s) => s.reached(),
        (ConsensusExpectation::None, ConsensusStatus::None) => true,
        _ => false,
    }
}

/// Integrates and analyses a scenario without touching the file system
/// (beyond reading explicit initial data relative to `base_dir`).
pub fn execute(scn: &Scenario, base_dir: &Path) -> Result<Execution> {
    let prep = scn.prepare(base_dir)?;
    let cfg = prep.cfg;
    let icfg = scn.integrator;
    let primary = integrate(&prep.initial, &cfg, &icfg)?;
    let companion = match &prep.companion {
        Some(c) => Some(integrate(c, &cfg, &icfg)?),
        None => None,
    };
    let p_exp: Vec<f64> = scn.stability().map(|(_, q, _)| q.to_vec()).unwrap_or_default();
    let series = build_series(&cfg, &primary, companion.as_ref(), &p_exp)?;

    let mut report = RunReport {
        scenario: scn.name.clone(),
        integration: IntegrationSummary {
            h: icfg.h,
            t_end: primary.t_end(),
            steps: icfg.steps(),
            snapshots: primary.len(),
            max_step_drift: primary.max_step_drift,
            companion_max_step_drift: companion.as_ref().map(|c| c.max_step_drift),
        },
        framework: None,
        framework_companion: None,
        consensus: None,
        decay: None,
        gain: Vec::new(),
        audits: Vec::new(),
        cubic: None,
        skipped: Vec::new(),
        artifacts: Vec::new(),
        outcome: Outcome { audits_pass: true, expectation_met: None, exit_code: exit::OK },
    };
    let skip = |report: &mut RunReport, analysis: &str, reason: String| {
        report.skipped.push(Skip { analysis: analysis.to_owned(), reason });
    };

    for analysis in &scn.analyses {
        match analysis {
            Analysis::Framework => {
                report.framework = Some(check_framework(&cfg, &prep.initial)?);
                if let Some(c) = &prep.companion {
                    report.framework_companion = Some(check_framework(&cfg, c)?);
                }
            }
            Analysis::Consensus { expect, window_fraction, tol } => {
                let window = window_fraction.unwrap_or(DEFAULT_WINDOW_FRACTION) * primary.t_end();
                let tol = tol.unwrap_or(DEFAULT_CONSENSUS_TOL);
                match consensus_status(&primary, window, tol) {
                    Ok(status) => {
                        let met = expect.map(|e| expectation_met(e, &status));
                        report.consensus = Some(ConsensusSummary {
                            status: status.label().to_owned(),
                            window,
                            tol,
                            variation: correlation_variation(&primary, window)?,
                            identity_gap: stiefel_sync::diagnostics::correlations(primary.last()).max_identity_gap(),
                            expected: *expect,
                            met,
                        });
                        if let Some(m) = met {
                            report.outcome.expectation_met = Some(m);
                        }
                    }
                    Err(e) => {
                        if expect.is_some() {
                            report.outcome.expectation_met = Some(false);
                        }
                        skip(&mut report, "consensus", e.to_string());
                    }
                }
            }
            Analysis::DecayFit { window } => {
                let b = companion.as_ref().expect("validated: decay_fit has a pair");
                let t_end = primary.t_end();
                let [lo, hi] = window.unwrap_or([0.5 * t_end, t_end]);
                let diam_a = series.column("diam_A").expect("pair runs record diam_A");
                match fit_decay_rate(&primary.times, diam_a, (lo, hi)) {
                    Ok((rate, r2)) => {
                        let (eps_sup, delta_lower) = if cfg.topology.is_separable() && cfg.kappa > 0.0 {
                            let sup1 = primary.diameters.iter().copied().fold(0.0, f64::max);
                            let sup2 = b.diameters.iter().copied().fold(0.0, f64::max);
                            let eps = epsilon_of_t(&cfg, sup1, sup2)?;
                            (Some(eps), Some(delta_rate(&cfg, eps)?))
                        } else {
                            (None, None)
                        };
                        let delta_framework = if cfg.topology.is_separable() && cfg.kappa > 0.0 {
                            check_framework(&cfg, &prep.initial)?.delta_lower
                        } else {
                            None
                        };
                        report.decay = Some(DecaySummary {
                            window: [lo, hi],
                            rate,
                            r_squared: r2,
                            delta_lower,
                            eps_sup,
                            delta_framework,
                        });
                    }
                    Err(e) => skip(&mut report, "decay_fit", e.to_string()),
                }
            }
            Analysis::Stability { p_exp, .. } => {
                for &q in p_exp {
                    let dist = series.column(&q_label(q)).expect("pair runs record every requested distance");
                    match gain_of_series(dist) {
                        Ok(gain) => report.gain.push(GainEntry { p_exp: q, gain }),
                        Err(e) => skip(&mut report, "stability", format!("p_exp = {q}: {e}")),
                    }
                }
            }
            Analysis::Audits { lemmas, mutation } => {
                let separable = cfg.topology.is_separable();
                let wanted: Vec<LemmaId> = match lemmas {
                    Some(ls) => ls.clone(),
                    None => {
                        let mut ls = Vec::new();
                        for (id, needs_sep, needs_pair) in
                            [(LemmaId::L3_1, true, true), (LemmaId::L3_2, true, false), (LemmaId::L4_1, false, true)]
                        {
                            if needs_sep && !separable {
                                skip(&mut report, "audits", format!("{id:?} needs a separable topology"));
                            } else if needs_pair && companion.is_none() {
                                skip(&mut report, "audits", format!("{id:?} needs a stability pair"));
                            } else {
                                ls.push(id);
                            }
                        }
                        ls
                    }
                };
                for id in wanted {
                    let audit = match id {
                        LemmaId::L3_2 => audit_lemma_3_2_with(&primary, &cfg, *mutation),
                        LemmaId::L3_1 => audit_lemma_3_1_with(&primary, companion.as_ref().unwrap(), &cfg, *mutation),
                        LemmaId::L4_1 => audit_lemma_4_1_with(&primary, companion.as_ref().unwrap(), &cfg, *mutation),
                    };
                    match audit {
                        Ok(a) => report.audits.push(AuditSummary::of(&a, *mutation)),
                        Err(e @ stiefel_sync::Error::InsufficientData(_)) => skip(&mut report, "audits", e.to_string()),
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            Analysis::Cubic => {
                let cubic = cubic_analysis(&cfg)?;
                let below = match lemma_3_3_monitor(&primary, &cfg) {
                    Ok(b) => Some(b),
                    Err(e) => {
                        skip(&mut report, "cubic", format!("diameter monitor: {e}"));
                        None
                    }
                };
                report.cubic = Some(CubicSummary { report: cubic, diameter_below_threshold: below });
            }
        }
    }

    report.outcome.audits_pass = report.audits.iter().all(|a| a.pass);
    report.outcome.exit_code = if !report.outcome.audits_pass {
        exit::AUDIT_FAILED
    } else if report.outcome.expectation_met == Some(false) {
        exit::EXPECTATION_UNMET
    } else {
        exit::OK
    };
    Ok(Execution { report, series, cfg, primary, companion })
}

fn file_stem(name: &str) -> String {
    let s: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
    if s.is_empty() {
        "scenario".into()
    } else {
        s
    }
}

/// Loads, executes and writes `<name>.csv` and `<name>.report.json` into `out_dir`.
pub fn run_scenario(path: &Path, out_dir: &Path) -> Result<RunReport> {
    let scn = Scenario::load(path)?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut exec = execute(&scn, base_dir)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let stem = file_stem(&scn.name);
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let json_path = out_dir.join(format!("{stem}.report.json"));
    emit_series(&exec.series, &csv_path)?;
    exec.report.artifacts = vec![csv_path.display().to_string(), json_path.display().to_string()];
    let mut json = serde_json::to_string_pretty(&exec.report).expect("reports serialize");
    json.push('\n');
    fs::write(&json_path, json).map_err(|e| CliError::io(&json_path, e))?;
    Ok(exec.report)
}

/// Threads for batch runs: `STIEFEL_SYNC_THREADS` if set and positive,
/// otherwise the machine's parallelism.
pub fn batch_threads() -> usize {
    std::env::var("STIEFEL_SYNC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs scenarios in parallel; results keep the input order.
pub fn run_batch(paths: &[PathBuf], out_dir: &Path, threads: usize) -> Vec<Result<RunReport>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool");
    pool.install(|| paths.par_iter().map(|p| run_scenario(p, out_dir)).collect())
}
