use serde::{Deserialize, Serialize};

use crate::pips::PipTable;
use crate::types::{DetectionSet, ErrorRateSpec};

/// Relative optimality gap above which a detection set is flagged.
pub const DEFAULT_GAP_THRESHOLD: f64 = 0.01;
const TOL: f64 = 1e-9;

/// Flag set by the empirical FWER search; its budget comes from samples.
pub(crate) const FWER_EMPIRICAL: &str = "fwer_empirical";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub disjoint: bool,
    pub budget_used: f64,
    pub budget_ok: bool,
    /// Objective recomputed from the discoveries.
    pub objective: f64,
    pub objective_ok: bool,
    /// Objective does not exceed the relaxed bound.
    pub bound_ok: bool,
    pub gap: f64,
    pub gap_ok: bool,
    pub flags: Vec<String>,
}

impl CertificateReport {
    /// Hard validity checks; a large gap is only a warning.
    pub fn valid(&self) -> bool {
        self.disjoint && self.budget_ok && self.objective_ok && self.bound_ok
    }
}

/// Error-rate usage of a selection with the given PIPs: the posterior
/// expected FDP for FDR, the largest `1 - p` for local FDR and the expected
/// number of false discoveries for PFER and FWER.
pub fn error_budget_used<I: IntoIterator<Item = f64>>(spec: &ErrorRateSpec, pips: I) -> f64 {
    let miss: Vec<f64> = pips.into_iter().map(|p| 1.0 - p).collect();
    match spec {
        ErrorRateSpec::Fdr { .. } if miss.is_empty() => 0.0,
        ErrorRateSpec::Fdr { .. } => miss.iter().sum::<f64>() / miss.len() as f64,
        ErrorRateSpec::LocalFdr { .. } => miss.iter().copied().fold(0.0, f64::max),
        ErrorRateSpec::Pfer { .. } | ErrorRateSpec::Fwer { .. } => miss.iter().sum(),
    }
}

/// Rechecks a detection set: pairwise disjointness, error budget, objective
/// and the relative gap to the relaxed bound. PIPs are taken from `pips`
/// when given and from the discoveries otherwise.
pub fn certify(det: &DetectionSet, pips: Option<&PipTable>, gap_threshold: f64) -> CertificateReport {
    let mut flags = Vec::new();
    let mut disjoint = true;
    for (a, d) in det.discoveries.iter().enumerate() {
        for e in &det.discoveries[a + 1..] {
            if d.group.region.overlaps(&e.group.region).unwrap_or(true) {
                disjoint = false;
            }
        }
    }
    if !disjoint {
        flags.push("overlapping_discoveries".to_string());
    }

    let mut p = Vec::with_capacity(det.len());
    for d in &det.discoveries {
        match pips.map(|t| t.get(d.group.id)) {
            Some(Some(v)) => p.push(v),
            Some(None) => {
                flags.push(format!("pip_missing_for_{}", d.group.id));
                p.push(d.pip());
            }
            None => p.push(d.pip()),
        }
    }
    let empirical = det.stats.flags.iter().any(|f| f == FWER_EMPIRICAL);
    let (budget_used, budget_ok) = match det.error_spec {
        ErrorRateSpec::Fdr { q } | ErrorRateSpec::LocalFdr { q } => {
            let used = error_budget_used(&det.error_spec, p.iter().copied());
            (used, used <= q + TOL)
        }
        ErrorRateSpec::Pfer { v } => {
            let used = error_budget_used(&det.error_spec, p.iter().copied());
            (used, used <= v + TOL)
        }
        ErrorRateSpec::Fwer { q, .. } if empirical => (det.error_budget_used, det.error_budget_used <= q + TOL),
        ErrorRateSpec::Fwer { q, .. } => {
            let used = error_budget_used(&det.error_spec, p.iter().copied());
            (used, used <= q + TOL)
        }
    };
    if !budget_ok {
        flags.push("error_budget_exceeded".to_string());
    }

    let objective: f64 = det.discoveries.iter().zip(&p).map(|(d, &pi)| pi * d.weight()).sum();
    let objective_ok = (objective - det.objective).abs() <= TOL * det.objective.abs().max(1.0);
    if !objective_ok {
        flags.push("objective_mismatch".to_string());
    }
    let bound_ok = objective <= det.upper_bound + TOL * det.upper_bound.abs().max(1.0);
    if !bound_ok {
        flags.push("objective_above_bound".to_string());
    }
    let gap = (det.upper_bound - objective) / det.upper_bound.max(f64::EPSILON);
    let gap_ok = gap <= gap_threshold;
    if !gap_ok {
        flags.push("gap_exceeds_threshold".to_string());
    }
    CertificateReport { disjoint, budget_used, budget_ok, objective, objective_ok, bound_ok, gap, gap_ok, flags }
}
