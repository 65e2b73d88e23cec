use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_spec, BlipOptions};
use crate::error::{invalid, Result};
use crate::types::{CandidateGroup, DetectionSet, ErrorRateSpec, WeightFn};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Result {
    pub q: f64,
    pub f1: f64,
    pub detections: DetectionSet,
    /// `(q, F1)` for every grid point, in increasing `q`.
    pub path: Vec<(f64, f64)>,
}

/// Posterior expected F1 proxy of a detection set:
/// `2 / (1 / (1 - FDR) + 1 / (1 - FNR))` with `FDR` the posterior expected
/// FDP and `1 - FNR` the expected power over the expected number of signals.
pub fn f1_score(det: &DetectionSet, expected_signals: f64) -> f64 {
    if det.is_empty() || !(expected_signals > 0.0) {
        return 0.0;
    }
    let r = det.len() as f64;
    let fdr = det.discoveries.iter().map(|d| 1.0 - d.pip()).sum::<f64>() / r;
    let recall = det.discoveries.iter().map(|d| d.pip() * d.weight()).sum::<f64>() / expected_signals;
    if fdr >= 1.0 || recall <= 0.0 {
        return 0.0;
    }
    2.0 / (1.0 / (1.0 - fdr) + 1.0 / recall)
}

/// Solves FDR control for every level in `q_grid` and returns the level
/// with the largest F1 score (ties go to the smallest level).
/// `expected_signals` is the sum of the location marginal PIPs.
pub fn maximize_f1(
    groups: &[CandidateGroup],
    weight_fn: &WeightFn,
    q_grid: &[f64],
    expected_signals: f64,
    opts: &BlipOptions,
) -> Result<F1Result> {
    if q_grid.is_empty() {
        return invalid("q grid is empty");
    }
    if let Some(q) = q_grid.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
        return invalid(format!("grid level {q} outside (0,1)"));
    }
    let mut grid = q_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if !(expected_signals > 0.0) {
        return Ok(F1Result {
            q: grid[0],
            f1: 0.0,
            detections: DetectionSet::empty(ErrorRateSpec::Fdr { q: grid[0] }),
            path: grid.iter().map(|&q| (q, 0.0)).collect(),
        });
    }
    let runs: Vec<(f64, DetectionSet)> = grid
        .par_iter()
        .map(|&q| {
            let det = solve_spec(groups, weight_fn, &ErrorRateSpec::Fdr { q }, opts)?;
            Ok((f1_score(&det, expected_signals), det))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.0 > runs[best].0 {
            best = i;
        }
    }
    let path = grid.iter().zip(&runs).map(|(&q, r)| (q, r.0)).collect();
    let (f1, detections) = runs.into_iter().nth(best).unwrap();
    Ok(F1Result { q: grid[best], f1, detections, path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blip::testutil::{brute_force_fdr, random_index_groups};
    use crate::types::Discovery;

    #[test]
    fn perfect_single_group() {
        let mut g = CandidateGroup::from_indices([0]).unwrap();
        g.pip = Some(1.0);
        let r = maximize_f1(&[g], &WeightFn::Constant { c: 1.0 }, &[0.05, 0.1, 0.3], 1.0, &BlipOptions::exact()).unwrap();
        assert_eq!(r.f1, 1.0);
        assert_eq!(r.q, 0.05);
        assert_eq!(r.detections.len(), 1);
    }

    #[test]
    fn no_groups() {
        let r = maximize_f1(&[], &WeightFn::InverseSize, &[0.1], 1.0, &BlipOptions::exact()).unwrap();
        assert_eq!(r.f1, 0.0);
        let r = maximize_f1(&[], &WeightFn::InverseSize, &[0.1], 0.0, &BlipOptions::exact()).unwrap();
        assert!(r.detections.is_empty());
        assert!(maximize_f1(&[], &WeightFn::InverseSize, &[], 1.0, &BlipOptions::exact()).is_err());
    }

    #[test]
    fn grid_maximizer_matches_enumeration() {
        let grid: Vec<f64> = (1..=50).map(|k| k as f64 / 100.0).collect();
        for seed in 0..5 {
            let gs = random_index_groups(10, 8, 300 + seed);
            let wf = WeightFn::InverseSize;
            let expected = 3.0;
            let r = maximize_f1(&gs, &wf, &grid, expected, &BlipOptions::exact()).unwrap();
            let mut best = (grid[0], -1.0);
            for &q in &grid {
                let (_, sel) = brute_force_fdr(&gs, &wf, q);
                let mut det = DetectionSet::empty(ErrorRateSpec::Fdr { q });
                det.discoveries = sel
                    .iter()
                    .map(|&j| {
                        let mut g = gs[j].clone();
                        g.weight = Some(wf.weight(&g).unwrap());
                        Discovery { group: g, selection_prob: 1.0 }
                    })
                    .collect();
                let f = f1_score(&det, expected);
                if f > best.1 + 1e-12 {
                    best = (q, f);
                }
            }
            assert!((r.f1 - best.1).abs() < 1e-9, "seed {seed}: {} vs {}", r.f1, best.1);
            assert_eq!(r.q, best.0, "seed {seed}");
        }
    }
}
