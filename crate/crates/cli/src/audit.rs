//! Lemma audits replayed from an emitted series file.

use std::path::Path;

use stiefel_sync::diagnostics::{audit_series_3_1, audit_series_3_2, audit_series_4_1, Mutation};

use crate::error::{CliError, Result};
use crate::run::{AuditSummary, Skip};
use crate::scenario::Scenario;
use crate::series::{read_series, Series};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CsvAudit {
    pub audits: Vec<AuditSummary>,
    pub skipped: Vec<Skip>,
}

impl CsvAudit {
    pub fn pass(&self) -> bool {
        self.audits.iter().all(|a| a.pass)
    }
}

fn need<'a>(s: &'a Series, name: &str) -> Result<&'a [f64]> {
    s.column(name).ok_or_else(|| CliError::Validation(format!("series has no `{name}` column")))
}

/// Runs every audit the columns of `series` support.
pub fn audit_series(series: &Series, scn: &Scenario, mutation: Mutation) -> Result<CsvAudit> {
    let cfg = scn.model()?;
    let t = need(series, "t")?;
    let diam = need(series, "diam_S")?;
    let mut out = CsvAudit { audits: Vec::new(), skipped: Vec::new() };
    let mut skipped = Vec::new();

    if cfg.topology.is_separable() {
        let a = audit_series_3_2(t, diam, &cfg, mutation)?;
        out.audits.push(AuditSummary::of(&a, mutation));
    } else {
        skipped.push(out_skip("L3_2", "needs a separable topology"));
    }

    let tilde = series.column("diam_S_tilde");
    match (series.column("diam_A_x"), series.column("diam_A_y"), tilde) {
        (Some(x), Some(y), Some(d2)) if cfg.topology.is_separable() => {
            let a = audit_series_3_1(t, x, y, diam, d2, &cfg, mutation)?;
            out.audits.push(AuditSummary::of(&a, mutation));
        }
        (Some(_), Some(_), Some(_)) => skipped.push(out_skip("L3_1", "needs a separable topology")),
        _ => skipped.push(out_skip("L3_1", "series has no correlation-diameter columns")),
    }

    let dists = series.indexed("dist_agent_");
    match tilde {
        Some(d2) if !dists.is_empty() => {
            let z: Vec<f64> = diam.iter().zip(d2).map(|(a, b)| a.max(*b)).collect();
            let dists: Vec<Vec<f64>> = dists.into_iter().map(<[f64]>::to_vec).collect();
            let a = audit_series_4_1(t, &dists, &z, &cfg.topology, cfg.kappa, mutation)?;
            out.audits.push(AuditSummary::of(&a, mutation));
        }
        _ => skipped.push(out_skip("L4_1", "series has no per-agent distance columns")),
    }
    out.skipped = skipped;
    Ok(out)
}

fn out_skip(what: &str, reason: &str) -> Skip {
    Skip { analysis: what.to_owned(), reason: reason.to_owned() }
}

pub fn audit_csv(csv: &Path, config: &Path) -> Result<CsvAudit> {
    let scn = Scenario::load(config)?;
    let series = read_series(csv)?;
    audit_series(&series, &scn, Mutation::None)
}
