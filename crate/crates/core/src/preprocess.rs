//! Adaptive pruning of candidate groups and locations before the LP.

use std::collections::{BTreeMap, HashMap};

use crate::error::{invalid, Error, Result};
use crate::types::{CandidateGroup, ErrorRateSpec, LocationSpace, WeightFn};

/// Default PIP threshold for dropping groups under FDR control.
pub const DEFAULT_FDR_KAPPA: f64 = 0.5;
/// Default marginal-PIP threshold for keeping locations.
pub const DEFAULT_LOCATION_KAPPA: f64 = 0.001;

/// Drops groups that cannot (or are unlikely to) be discovered. Under local
/// FDR, FWER and PFER the floor is the exact validity limit; under FDR it is
/// `kappa` (inclusive).
pub fn prefilter_groups(groups: Vec<CandidateGroup>, spec: &ErrorRateSpec, kappa: f64) -> Result<Vec<CandidateGroup>> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&kappa) {
        return invalid(format!("kappa = {kappa} must lie in [0,1]"));
    }
    let floor = spec.pip_floor().unwrap_or(kappa);
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        if g.pip_or_err()? >= floor {
            out.push(g);
        }
    }
    Ok(out)
}

/// Locations whose marginal PIP is at least `kappa`.
pub fn prefilter_locations(space: &LocationSpace, marginals: &BTreeMap<u32, f64>, kappa: f64) -> Result<Vec<u32>> {
    if !space.is_discrete() {
        return Err(Error::Unsupported(
            "location pre-filtering is only defined for discrete location sets".into(),
        ));
    }
    if !(0.0..=1.0).contains(&kappa) {
        return invalid(format!("kappa = {kappa} must lie in [0,1]"));
    }
    Ok(marginals.iter().filter(|(_, &p)| p >= kappa).map(|(&j, _)| j).collect())
}

/// Drops every group `G2` that strictly contains some group `G1` with
/// `p1 * w1 >= p2 * w2`, `p1 >= 1 - alpha` and `w1 > w2`. Pairs where the
/// finer group does not carry the larger weight are left alone.
pub fn prenarrow(groups: Vec<CandidateGroup>, q: f64, alpha: f64, weight_fn: &WeightFn) -> Result<Vec<CandidateGroup>> {
    if !(alpha > 0.0 && alpha < q && q < 1.0) {
        return invalid(format!("pre-narrowing needs 0 < alpha < q < 1, got alpha = {alpha}, q = {q}"));
    }
    let mut score = Vec::with_capacity(groups.len());
    for g in &groups {
        let p = g.pip_or_err()?;
        let w = weight_fn.weight(g)?;
        score.push((p, w));
    }
    let discrete = groups.iter().all(|g| g.region.is_discrete());
    if !discrete && groups.iter().any(|g| g.region.is_discrete()) {
        return invalid("cannot mix discrete and continuous groups");
    }
    let n = groups.len();
    let mut by_location: HashMap<u32, Vec<usize>> = HashMap::new();
    if discrete {
        for (i, g) in groups.iter().enumerate() {
            for &j in g.region.index_slice().unwrap() {
                by_location.entry(j).or_default().push(i);
            }
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let mut drop = vec![false; n];
    for (i, g1) in groups.iter().enumerate() {
        let (p1, w1) = score[i];
        if p1 < 1.0 - alpha {
            continue;
        }
        // every strict superset of an index set contains its first location
        let candidates = match g1.region.index_slice() {
            Some(ix) => &by_location[&ix[0]],
            None => &all,
        };
        for &k in candidates {
            if k == i || drop[k] {
                continue;
            }
            let g2 = &groups[k];
            let (p2, w2) = score[k];
            if w1 > w2
                && p1 * w1 >= p2 * w2
                && g2.region != g1.region
                && g1.region.is_subset_of(&g2.region) == Some(true)
            {
                drop[k] = true;
            }
        }
    }
    Ok(groups.into_iter().zip(drop).filter(|(_, d)| !d).map(|(g, _)| g).collect())
}
