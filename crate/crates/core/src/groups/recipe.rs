use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cluster::{correlation_matrix, dissimilarity_from_corr, hierarchical_groups_labeled, DissimilarityKind, Linkage};
use super::{contiguous_groups, dedupe, DEFAULT_MAX_SIZE};
use crate::error::{invalid, Result};
use crate::pips::DiscreteSamples;
use crate::types::CandidateGroup;

pub const DEFAULT_KAPPA_GRID: [f64; 7] = [0.0, 0.01, 0.02, 0.03, 0.05, 0.1, 0.2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionGroupConfig {
    pub kappas: Vec<f64>,
    pub max_size: usize,
    pub linkages: Vec<Linkage>,
}

impl Default for RegressionGroupConfig {
    fn default() -> Self {
        RegressionGroupConfig {
            kappas: DEFAULT_KAPPA_GRID.to_vec(),
            max_size: DEFAULT_MAX_SIZE,
            linkages: Linkage::ALL.to_vec(),
        }
    }
}

/// Correlation between the inclusion indicators of every pair of locations
/// across the draws.
pub fn indicator_correlation(samples: &DiscreteSamples) -> DMatrix<f64> {
    let p = samples.p();
    let n = samples.len().max(1) as f64;
    let mut co = DMatrix::<f64>::zeros(p, p);
    for d in samples.draws() {
        for (a, &i) in d.iter().enumerate() {
            for &j in &d[a..] {
                co[(i as usize, j as usize)] += 1.0;
            }
        }
    }
    let mean: Vec<f64> = (0..p).map(|i| co[(i, i)] / n).collect();
    let sd: Vec<f64> = mean.iter().map(|m| (m * (1.0 - m)).max(0.0).sqrt()).collect();
    DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            return 1.0;
        }
        let (a, b) = (i.min(j), i.max(j));
        if sd[a] == 0.0 || sd[b] == 0.0 {
            return 0.0;
        }
        ((co[(a, b)] / n - mean[a] * mean[b]) / (sd[a] * sd[b])).clamp(-1.0, 1.0)
    })
}

fn restrict(m: &DMatrix<f64>, keep: &[u32]) -> DMatrix<f64> {
    DMatrix::from_fn(keep.len(), keep.len(), |a, b| m[(keep[a] as usize, keep[b] as usize)])
}

/// Candidate groups for sparse regression: for every threshold `kappa` in the
/// grid, the locations with marginal PIP at least `kappa` are grouped by
/// contiguity, by clustering on `|1 - corr(X)|` (when `x` is given) and by
/// clustering on `1 + corr` of the inclusion indicators. The union is
/// deduplicated.
pub fn default_regression_groups(
    samples: &DiscreteSamples,
    x: Option<&DMatrix<f64>>,
    config: &RegressionGroupConfig,
) -> Result<Vec<CandidateGroup>> {
    if config.kappas.iter().any(|k| !(0.0..=1.0).contains(k)) {
        return invalid("kappa values must lie in [0,1]");
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let p = samples.p();
    if let Some(x) = x {
        if x.ncols() != p {
            return invalid(format!("design has {} columns, samples have p = {p}", x.ncols()));
        }
    }
    let marginals = samples.marginals();
    let d1 = match x {
        Some(x) => Some(dissimilarity_from_corr(&correlation_matrix(x), DissimilarityKind::AbsOneMinus)?),
        None => None,
    };
    let d2 = dissimilarity_from_corr(&indicator_correlation(samples), DissimilarityKind::OnePlus)?;

    let mut all = Vec::new();
    let mut last: Option<Vec<u32>> = None;
    for &kappa in &config.kappas {
        let keep: Vec<u32> = (0..p as u32).filter(|&j| marginals[j as usize] >= kappa).collect();
        if keep.is_empty() || last.as_ref() == Some(&keep) {
            continue;
        }
        all.extend(contiguous_groups(&keep, config.max_size)?);
        for d in d1.iter().chain(std::iter::once(&d2)) {
            let sub = restrict(d, &keep);
            for &linkage in &config.linkages {
                all.extend(hierarchical_groups_labeled(&sub, &keep, linkage, config.max_size)?);
            }
        }
        last = Some(keep);
    }
    Ok(dedupe(all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn indicator_correlation_of_exclusive_pair() {
        let s = DiscreteSamples::new(3, vec![vec![0], vec![1], vec![0], vec![1]], None).unwrap();
        let c = indicator_correlation(&s);
        assert!((c[(0, 1)] + 1.0).abs() < 1e-12);
        assert_eq!(c[(0, 2)], 0.0);
        let d = dissimilarity_from_corr(&c, DissimilarityKind::OnePlus).unwrap();
        assert!(d[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn recipe_covers_contiguous_and_has_no_duplicates() {
        let draws = vec![vec![0, 5], vec![1, 5], vec![0, 6], vec![1, 6], vec![3]];
        let s = DiscreteSamples::new(8, draws, None).unwrap();
        let g = default_regression_groups(&s, None, &RegressionGroupConfig::default()).unwrap();
        let sets: Vec<Vec<u32>> = g.iter().map(|g| g.region.index_slice().unwrap().to_vec()).collect();
        let unique: HashSet<&Vec<u32>> = sets.iter().collect();
        assert_eq!(unique.len(), sets.len());
        let ids: HashSet<_> = g.iter().map(|g| g.id).collect();
        assert_eq!(ids.len(), g.len());
        // all singletons from the kappa = 0 pass
        for j in 0..8 {
            assert!(sets.contains(&vec![j]));
        }
        // filtered contiguity at a higher threshold: locations {0,1,3,5,6}
        assert!(sets.contains(&vec![1, 3]));
        // exclusive pairs are clustered together
        assert!(sets.contains(&vec![0, 1]));
        assert!(sets.contains(&vec![5, 6]));
        assert!(g.iter().all(|g| g.region.size().unwrap() <= DEFAULT_MAX_SIZE));
    }

    #[test]
    fn recipe_with_design() {
        let x = DMatrix::from_fn(30, 6, |i, j| ((i * 7 + j * 3) % 11) as f64 + if j == 4 { i as f64 } else { 0.0 });
        let s = DiscreteSamples::new(6, vec![vec![0, 4], vec![2]], None).unwrap();
        let g = default_regression_groups(&s, Some(&x), &RegressionGroupConfig::default()).unwrap();
        assert!(!g.is_empty());
        let bad = DMatrix::<f64>::zeros(30, 5);
        assert!(default_regression_groups(&s, Some(&bad), &RegressionGroupConfig::default()).is_err());
        let empty = DiscreteSamples::new(6, vec![], None).unwrap();
        assert!(default_regression_groups(&empty, None, &RegressionGroupConfig::default()).unwrap().is_empty());
    }
}
