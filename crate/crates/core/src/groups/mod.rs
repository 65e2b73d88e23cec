//! Candidate-group generation.
//!
//! Every generator returns [`CandidateGroup`]s whose ids are digests of the
//! canonical region key, so the union of several generators can be merged
//! with [`dedupe`].

mod cluster;
mod lattice;
mod recipe;

use std::collections::HashMap;

pub use cluster::{correlation_matrix, dissimilarity_from_corr, hierarchical_groups, hierarchical_groups_labeled, DissimilarityKind, Linkage};
pub use lattice::{lattice_regions, log_spaced, LatticeFamily, LatticeShape, LatticeWarning};
pub use recipe::{default_regression_groups, RegressionGroupConfig, DEFAULT_KAPPA_GRID};

use crate::error::{invalid, Result};
use crate::types::{CandidateGroup, Region};

/// Default maximum group size.
pub const DEFAULT_MAX_SIZE: usize = 25;

/// All windows of at most `max_size` consecutive entries of `locations`.
///
/// Contiguity is taken in the order of the (possibly filtered) list, so
/// `[4, 9, 17]` with `max_size = 3` yields `{4, 9, 17}`.
pub fn contiguous_groups(locations: &[u32], max_size: usize) -> Result<Vec<CandidateGroup>> {
    if max_size == 0 {
        return invalid("max_size must be at least 1");
    }
    if locations.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("locations must be sorted and unique");
    }
    let n = locations.len();
    let mut out = Vec::with_capacity(n * max_size.min(n));
    for size in 1..=max_size.min(n) {
        for start in 0..=(n - size) {
            let region = Region::IndexSet { indices: locations[start..start + size].to_vec() };
            out.push(CandidateGroup::new(region));
        }
    }
    Ok(out)
}

/// Exact number of groups produced by [`contiguous_groups`].
pub fn contiguous_count(n_locations: usize, max_size: usize) -> usize {
    (1..=max_size).map(|s| (n_locations + 1).saturating_sub(s)).sum()
}

/// Keeps one group per canonical region (and count interval), sorted by key.
/// The survivor keeps the id of the first occurrence.
pub fn dedupe(groups: Vec<CandidateGroup>) -> Vec<CandidateGroup> {
    dedupe_with_scale(groups, 1.0)
}

/// [`dedupe`] with continuous coordinates quantized relative to `scale`
/// (normally the extent of the location box).
pub fn dedupe_with_scale(groups: Vec<CandidateGroup>, scale: f64) -> Vec<CandidateGroup> {
    let mut seen = HashMap::with_capacity(groups.len());
    let mut keyed = Vec::with_capacity(groups.len());
    for g in groups {
        let key = g.region.canonical_key(g.count_interval, scale);
        if seen.insert(key.clone(), ()).is_none() {
            keyed.push((key, g));
        }
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, g)| g).collect()
}
