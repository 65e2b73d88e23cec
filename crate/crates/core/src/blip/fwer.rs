use serde::{Deserialize, Serialize};

use super::certify::FWER_EMPIRICAL;
use super::{solve_spec, BlipOptions};
use crate::error::{invalid, Result};
use crate::pips::SampleSet;
use crate::types::{CandidateGroup, DetectionSet, ErrorRateSpec, Region, WeightFn};

/// How family-wise error control is enforced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FwerMode {
    /// Bound the expected number of false discoveries by `q`.
    #[default]
    Expectation,
    /// Search the largest PFER budget whose selection keeps the empirical
    /// probability of any false discovery at most `q`.
    Empirical,
}

/// Number of signals of one posterior draw inside `region`.
fn count_in(region: &Region, draw: DrawRef<'_>) -> usize {
    match (region, draw) {
        (Region::IndexSet { indices }, DrawRef::Discrete(d)) => {
            d.iter().filter(|j| indices.binary_search(j).is_ok()).count()
        }
        (_, DrawRef::Continuous(pts)) => pts.iter().filter(|x| region.contains_point(x)).count(),
        _ => 0,
    }
}

#[derive(Clone, Copy)]
enum DrawRef<'a> {
    Discrete(&'a [u32]),
    Continuous(&'a [Vec<f64>]),
}

/// Whether a group is a true discovery for one posterior draw: it holds a
/// signal, or for count intervals the signal count lies in the interval.
fn is_true(g: &CandidateGroup, draw: DrawRef<'_>) -> bool {
    let c = count_in(&g.region, draw);
    match g.count_interval {
        Some((lo, hi)) => c >= lo as usize && c <= hi as usize,
        None => c > 0,
    }
}

/// Fraction of posterior draws in which at least one selected group is false.
pub fn empirical_fwer(selection: &[CandidateGroup], samples: &SampleSet) -> Result<f64> {
    let draws: Vec<DrawRef<'_>> = match samples {
        SampleSet::Discrete(s) => {
            if selection.iter().any(|g| !g.region.is_discrete()) {
                return invalid("continuous groups with discrete samples");
            }
            s.draws().iter().map(|d| DrawRef::Discrete(d)).collect()
        }
        SampleSet::Continuous(s) => {
            if selection.iter().any(|g| g.region.is_discrete()) {
                return invalid("index-set groups with continuous samples");
            }
            s.draws().iter().map(|d| DrawRef::Continuous(d)).collect()
        }
    };
    if draws.is_empty() {
        return invalid("no posterior draws");
    }
    let bad = draws.iter().filter(|&&d| selection.iter().any(|g| !is_true(g, d))).count();
    Ok(bad as f64 / draws.len() as f64)
}

/// FWER control at level `q`. The expectation mode solves the PFER problem
/// with budget `q`; the empirical mode bisects the PFER budget over `[q, 1]`
/// to resolution `grid_tol`, verifying every probe on `samples`, and keeps
/// the largest verified one.
pub fn run_fwer(
    groups: &[CandidateGroup],
    weight_fn: &WeightFn,
    q: f64,
    grid_tol: f64,
    mode: FwerMode,
    samples: Option<&SampleSet>,
    opts: &BlipOptions,
) -> Result<DetectionSet> {
    let spec = ErrorRateSpec::Fwer { q, grid_tol };
    spec.validate()?;
    let samples = match (mode, samples) {
        (FwerMode::Expectation, _) => return solve_spec(groups, weight_fn, &spec, opts),
        (FwerMode::Empirical, None) => return invalid("empirical FWER control needs posterior samples"),
        (FwerMode::Empirical, Some(s)) => s,
    };
    let probe = |v: f64| -> Result<(DetectionSet, f64)> {
        let det = solve_spec(groups, weight_fn, &ErrorRateSpec::Pfer { v }, opts)?;
        let sel: Vec<CandidateGroup> = det.discoveries.iter().map(|d| d.group.clone()).collect();
        let fwer = empirical_fwer(&sel, samples)?;
        Ok((det, fwer))
    };
    let passes = |f: f64| f <= q + 1e-12;
    let mut best: Option<(f64, DetectionSet, f64)> = None;
    let (det, f) = probe(q)?;
    if passes(f) {
        best = Some((q, det, f));
    }
    let (det, f) = probe(1.0)?;
    if passes(f) {
        best = Some((1.0, det, f));
    } else {
        let (mut lo, mut hi) = (q, 1.0);
        while hi - lo >= grid_tol {
            let mid = 0.5 * (lo + hi);
            let (det, f) = probe(mid)?;
            if passes(f) {
                lo = mid;
                if best.as_ref().is_none_or(|b| mid > b.0) {
                    best = Some((mid, det, f));
                }
            } else {
                hi = mid;
            }
        }
    }
    let mut out = match best {
        Some((v, mut det, f)) => {
            det.error_budget_used = f;
            det.stats.flags.push(format!("fwer_pfer_budget={v}"));
            det
        }
        None => {
            let mut det = DetectionSet::empty(spec);
            det.stats.flags.push("fwer_no_verified_probe".into());
            det
        }
    };
    out.error_spec = spec;
    out.stats.flags.push(FWER_EMPIRICAL.into());
    Ok(out)
}
