use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::types::{CandidateGroup, GroupId, LocationSpace, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeShape {
    Sphere,
    Cube,
}

/// A radius that was skipped while building a lattice family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeWarning {
    pub radius: f64,
    pub message: String,
}

/// Regions of each radius `r` centered at the lattice points `r * z` inside
/// the box, plus one region of each radius around every extra center.
///
/// The family can be materialized with [`LatticeFamily::regions`] or queried
/// point by point with [`LatticeFamily::locate`] without ever listing it.
#[derive(Clone, Debug)]
pub struct LatticeFamily {
    bounds: Vec<(f64, f64)>,
    scale: f64,
    radii: Vec<f64>,
    shape: LatticeShape,
    extras: Vec<Vec<f64>>,
    // per radius: cell coordinates -> indices into `extras`
    buckets: Vec<HashMap<Vec<i64>, Vec<usize>>>,
}

impl LatticeFamily {
    pub fn new(
        space: &LocationSpace,
        radii: &[f64],
        shape: LatticeShape,
        extra_centers: &[Vec<f64>],
    ) -> Result<(Self, Vec<LatticeWarning>)> {
        space.validate()?;
        let bounds = match space {
            LocationSpace::Continuous { bounds } => bounds.clone(),
            LocationSpace::Discrete { .. } => {
                return Err(Error::Unsupported("lattice regions need a continuous space".into()))
            }
        };
        let extent = space.extent();
        let mut kept = Vec::new();
        let mut warnings = Vec::new();
        for &r in radii {
            if !(r.is_finite() && r > 0.0) {
                return invalid(format!("lattice radius must be positive, got {r}"));
            }
            if r > extent {
                warnings.push(LatticeWarning {
                    radius: r,
                    message: format!("radius {r} exceeds the box extent {extent}; skipped"),
                });
            } else {
                kept.push(r);
            }
        }
        for c in extra_centers {
            if !space.contains_point(c) {
                return invalid(format!("extra center {c:?} lies outside the box"));
            }
        }
        let buckets = kept
            .iter()
            .map(|&r| {
                let mut map: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
                for (i, c) in extra_centers.iter().enumerate() {
                    map.entry(cell_of(c, r)).or_default().push(i);
                }
                map
            })
            .collect();
        let family = LatticeFamily {
            bounds,
            scale: extent,
            radii: kept,
            shape,
            extras: extra_centers.to_vec(),
            buckets,
        };
        Ok((family, warnings))
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Scale used to quantize centers for group ids.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn region(&self, center: Vec<f64>, r: f64) -> Region {
        match self.shape {
            LatticeShape::Sphere => Region::Sphere { center, radius: r },
            LatticeShape::Cube => Region::Cube { center, halfwidth: r },
        }
    }

    /// Candidate group for a region, with its id quantized at the family scale.
    pub fn group(&self, region: Region) -> CandidateGroup {
        CandidateGroup::with_scale(region, None, self.scale)
    }

    /// Inclusive range of lattice coordinates whose centers lie in the box.
    fn z_range(&self, axis: usize, r: f64) -> (i64, i64) {
        let (lo, hi) = self.bounds[axis];
        let tol = 1e-9;
        ((lo / r - tol).ceil() as i64, (hi / r + tol).floor() as i64)
    }

    /// Number of lattice (non-extra) regions in the family.
    pub fn lattice_len(&self) -> u128 {
        self.radii
            .iter()
            .map(|&r| {
                (0..self.dim())
                    .map(|a| {
                        let (lo, hi) = self.z_range(a, r);
                        (hi - lo + 1).max(0) as u128
                    })
                    .product::<u128>()
            })
            .sum()
    }

    /// Every region of the family, deduplicated, in canonical-key order.
    pub fn regions(&self) -> Vec<CandidateGroup> {
        let per_radius: Vec<Vec<CandidateGroup>> = self
            .radii
            .par_iter()
            .map(|&r| {
                let ranges: Vec<(i64, i64)> = (0..self.dim()).map(|a| self.z_range(a, r)).collect();
                let mut out = Vec::new();
                for_each_cell(&ranges, |z| {
                    let center: Vec<f64> = z.iter().map(|&zi| zi as f64 * r).collect();
                    out.push(self.group(self.region(center, r)));
                });
                for c in &self.extras {
                    out.push(self.group(self.region(c.clone(), r)));
                }
                out
            })
            .collect();
        super::dedupe_with_scale(per_radius.into_iter().flatten().collect(), self.scale)
    }

    /// Appends every family member containing `x` (closed containment); each
    /// id is reported once.
    pub fn locate(&self, x: &[f64], out: &mut Vec<(GroupId, Region)>) {
        let start = out.len();
        for (ri, &r) in self.radii.iter().enumerate() {
            let ranges: Vec<(i64, i64)> = (0..self.dim())
                .map(|a| {
                    let (lo, hi) = self.z_range(a, r);
                    let u = x[a] / r;
                    (((u - 1.0 - 1e-9).ceil() as i64).max(lo), ((u + 1.0 + 1e-9).floor() as i64).min(hi))
                })
                .collect();
            for_each_cell(&ranges, |z| {
                let center: Vec<f64> = z.iter().map(|&zi| zi as f64 * r).collect();
                let region = self.region(center, r);
                if region.contains_point(x) {
                    out.push((region.canonical_key(None, self.scale).digest(), region));
                }
            });
            if self.extras.is_empty() {
                continue;
            }
            let home = cell_of(x, r);
            let ranges: Vec<(i64, i64)> = home.iter().map(|&h| (h - 1, h + 1)).collect();
            for_each_cell(&ranges, |cell| {
                if let Some(ix) = self.buckets[ri].get(cell) {
                    for &i in ix {
                        let region = self.region(self.extras[i].clone(), r);
                        if region.contains_point(x) {
                            out.push((region.canonical_key(None, self.scale).digest(), region));
                        }
                    }
                }
            });
        }
        let mut tail = out.split_off(start);
        tail.sort_by_key(|h| h.0);
        tail.dedup_by_key(|h| h.0);
        out.extend(tail);
    }
}

fn cell_of(x: &[f64], r: f64) -> Vec<i64> {
    x.iter().map(|&v| (v / r).floor() as i64).collect()
}

/// Calls `f` on every integer vector in the box given by inclusive ranges.
fn for_each_cell(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64])) {
    if ranges.iter().any(|&(lo, hi)| lo > hi) {
        return;
    }
    let mut z: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&z);
        let mut axis = 0;
        loop {
            if axis == z.len() {
                return;
            }
            if z[axis] < ranges[axis].1 {
                z[axis] += 1;
                break;
            }
            z[axis] = ranges[axis].0;
            axis += 1;
        }
    }
}

/// Materialized lattice family; see [`LatticeFamily`].
pub fn lattice_regions(
    space: &LocationSpace,
    radii: &[f64],
    shape: LatticeShape,
    extra_centers: Option<&[Vec<f64>]>,
) -> Result<(Vec<CandidateGroup>, Vec<LatticeWarning>)> {
    let (family, warnings) = LatticeFamily::new(space, radii, shape, extra_centers.unwrap_or(&[]))?;
    Ok((family.regions(), warnings))
}

/// `n` radii evenly spaced on the log scale between `a` and `b` (inclusive).
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}
