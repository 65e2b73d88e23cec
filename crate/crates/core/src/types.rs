//! Domain types shared by every stage of the pipeline: locations, regions,
//! candidate groups, weight functions, error-rate targets and detection sets.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative quantization step used when hashing continuous coordinates.
pub const CANONICAL_QUANTUM: f64 = 1e-9;

/// Stable identifier of a candidate group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub u64);

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The set of possible signal locations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocationSpace {
    /// Locations `0..p`.
    Discrete { p: usize },
    /// An axis-aligned box in `R^d`, one `(lo, hi)` pair per dimension.
    Continuous { bounds: Vec<(f64, f64)> },
}

impl LocationSpace {
    pub fn discrete(p: usize) -> Result<Self> {
        let space = LocationSpace::Discrete { p };
        space.validate()?;
        Ok(space)
    }

    pub fn continuous(bounds: Vec<(f64, f64)>) -> Result<Self> {
        let space = LocationSpace::Continuous { bounds };
        space.validate()?;
        Ok(space)
    }

    /// The unit cube `[0,1]^d`.
    pub fn unit_cube(d: usize) -> Result<Self> {
        Self::continuous(vec![(0.0, 1.0); d])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LocationSpace::Discrete { p } => {
                if *p == 0 {
                    return invalid("discrete location space needs p >= 1");
                }
            }
            LocationSpace::Continuous { bounds } => {
                if bounds.is_empty() {
                    return invalid("continuous location space needs d >= 1");
                }
                for (i, &(lo, hi)) in bounds.iter().enumerate() {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return invalid(format!("bad bounds ({lo}, {hi}) on axis {i}"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, LocationSpace::Discrete { .. })
    }

    pub fn dim(&self) -> usize {
        match self {
            LocationSpace::Discrete { .. } => 1,
            LocationSpace::Continuous { bounds } => bounds.len(),
        }
    }

    /// Largest side length of the box (1 for discrete spaces).
    pub fn extent(&self) -> f64 {
        match self {
            LocationSpace::Discrete { .. } => 1.0,
            LocationSpace::Continuous { bounds } => bounds
                .iter()
                .map(|&(lo, hi)| hi - lo)
                .fold(0.0, f64::max),
        }
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        match self {
            LocationSpace::Discrete { .. } => false,
            LocationSpace::Continuous { bounds } => {
                x.len() == bounds.len()
                    && x.iter().zip(bounds).all(|(&v, &(lo, hi))| v >= lo && v <= hi)
            }
        }
    }
}

/// A region of the location space that may be reported as a discovery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    IndexSet { indices: Vec<u32> },
    Sphere { center: Vec<f64>, radius: f64 },
    Cube { center: Vec<f64>, halfwidth: f64 },
}

impl Region {
    /// Builds an index-set region, sorting and removing duplicates.
    pub fn indices<I: IntoIterator<Item = u32>>(it: I) -> Result<Self> {
        let mut indices: Vec<u32> = it.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return invalid("index-set region must be nonempty");
        }
        Ok(Region::IndexSet { indices })
    }

    pub fn sphere(center: Vec<f64>, radius: f64) -> Result<Self> {
        let r = Region::Sphere { center, radius };
        r.check_shape()?;
        Ok(r)
    }

    pub fn cube(center: Vec<f64>, halfwidth: f64) -> Result<Self> {
        let r = Region::Cube { center, halfwidth };
        r.check_shape()?;
        Ok(r)
    }

    fn check_shape(&self) -> Result<()> {
        match self {
            Region::IndexSet { indices } => {
                if indices.is_empty() {
                    return invalid("index-set region must be nonempty");
                }
                if indices.windows(2).any(|w| w[0] >= w[1]) {
                    return invalid("index-set region must be sorted and duplicate-free");
                }
            }
            Region::Sphere { center, radius: size } | Region::Cube { center, halfwidth: size } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return invalid("region center must be a finite nonempty point");
                }
                if !(size.is_finite() && *size > 0.0) {
                    return invalid(format!("region size must be positive, got {size}"));
                }
            }
        }
        Ok(())
    }

    /// Checks the region invariants against a location space.
    pub fn validate(&self, space: &LocationSpace) -> Result<()> {
        self.check_shape()?;
        match (self, space) {
            (Region::IndexSet { indices }, LocationSpace::Discrete { p }) => {
                if let Some(&last) = indices.last() {
                    if last as usize >= *p {
                        return invalid(format!("index {last} out of range for p = {p}"));
                    }
                }
                Ok(())
            }
            (Region::Sphere { center, .. } | Region::Cube { center, .. }, LocationSpace::Continuous { bounds }) => {
                if center.len() != bounds.len() {
                    return invalid(format!(
                        "region dimension {} does not match space dimension {}",
                        center.len(),
                        bounds.len()
                    ));
                }
                Ok(())
            }
            _ => invalid("region kind does not match the location space"),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Region::IndexSet { .. })
    }

    pub fn index_slice(&self) -> Option<&[u32]> {
        match self {
            Region::IndexSet { indices } => Some(indices),
            _ => None,
        }
    }

    /// Number of locations for index sets; `None` for continuous regions.
    pub fn size(&self) -> Option<usize> {
        self.index_slice().map(<[u32]>::len)
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Region::IndexSet { .. } => None,
            Region::Sphere { center, .. } | Region::Cube { center, .. } => Some(center.len()),
        }
    }

    /// Closed containment of a point (boundary points are inside).
    pub fn contains_point(&self, x: &[f64]) -> bool {
        match self {
            Region::IndexSet { .. } => false,
            Region::Sphere { center, radius } => sq_dist(center, x) <= radius * radius,
            Region::Cube { center, halfwidth } => {
                center.iter().zip(x).all(|(c, v)| (c - v).abs() <= *halfwidth)
            }
        }
    }

    pub fn contains_index(&self, j: u32) -> bool {
        match self {
            Region::IndexSet { indices } => indices.binary_search(&j).is_ok(),
            _ => false,
        }
    }

    /// Euclidean distance from `x` to the region (zero inside).
    pub fn distance_to_point(&self, x: &[f64]) -> f64 {
        match self {
            Region::IndexSet { .. } => f64::INFINITY,
            Region::Sphere { center, radius } => (sq_dist(center, x).sqrt() - radius).max(0.0),
            Region::Cube { center, halfwidth } => center
                .iter()
                .zip(x)
                .map(|(c, v)| ((c - v).abs() - halfwidth).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Whether two regions share a set of positive measure. Index sets overlap
    /// iff they share a location; tangent shapes do not overlap.
    pub fn overlaps(&self, other: &Region) -> Result<bool> {
        use Region::*;
        match (self, other) {
            (IndexSet { indices: a }, IndexSet { indices: b }) => Ok(sorted_intersect(a, b)),
            (IndexSet { .. }, _) | (_, IndexSet { .. }) => {
                invalid("cannot intersect discrete and continuous regions")
            }
            (Sphere { center: c1, radius: r1 }, Sphere { center: c2, radius: r2 }) => {
                check_dims(c1, c2)?;
                let s = r1 + r2;
                Ok(sq_dist(c1, c2) < s * s)
            }
            (Cube { center: c1, halfwidth: h1 }, Cube { center: c2, halfwidth: h2 }) => {
                check_dims(c1, c2)?;
                Ok(c1.iter().zip(c2).all(|(a, b)| (a - b).abs() < h1 + h2))
            }
            (Sphere { center: cs, radius }, Cube { center: cc, halfwidth })
            | (Cube { center: cc, halfwidth }, Sphere { center: cs, radius }) => {
                check_dims(cs, cc)?;
                // closest point of the cube to the sphere center
                let d2: f64 = cs
                    .iter()
                    .zip(cc)
                    .map(|(s, c)| ((s - c).abs() - halfwidth).max(0.0).powi(2))
                    .sum();
                Ok(d2 < radius * radius)
            }
        }
    }

    /// Whether `self` is a subset of `other`. Returns `None` when the regions
    /// live in different kinds of location space.
    pub fn is_subset_of(&self, other: &Region) -> Option<bool> {
        use Region::*;
        match (self, other) {
            (IndexSet { indices: a }, IndexSet { indices: b }) => Some(sorted_subset(a, b)),
            (IndexSet { .. }, _) | (_, IndexSet { .. }) => None,
            (Sphere { center: c1, radius: r1 }, Sphere { center: c2, radius: r2 }) => {
                Some(sq_dist(c1, c2).sqrt() + r1 <= *r2)
            }
            (Cube { center: c1, halfwidth: h1 }, Cube { center: c2, halfwidth: h2 }) => {
                Some(c1.iter().zip(c2).all(|(a, b)| (a - b).abs() + h1 <= *h2))
            }
            (Sphere { center: cs, radius }, Cube { center: cc, halfwidth }) => {
                Some(cs.iter().zip(cc).all(|(s, c)| (s - c).abs() + radius <= *halfwidth))
            }
            (Cube { center: cc, halfwidth }, Sphere { center: cs, radius }) => {
                // farthest corner of the cube from the sphere center
                let d2: f64 = cc
                    .iter()
                    .zip(cs)
                    .map(|(c, s)| ((c - s).abs() + halfwidth).powi(2))
                    .sum();
                Some(d2 <= radius * radius)
            }
        }
    }

    /// Hashable key identifying the region up to float noise. Continuous
    /// coordinates are rounded to `CANONICAL_QUANTUM * scale`.
    pub fn canonical_key(&self, count_interval: Option<(u32, u32)>, scale: f64) -> CanonicalKey {
        let step = CANONICAL_QUANTUM * scale;
        let quant = |v: f64| (v / step).round() as i64;
        let shape = match self {
            Region::IndexSet { indices } => KeyShape::Indices(indices.clone()),
            Region::Sphere { center, radius } => {
                KeyShape::Sphere(center.iter().map(|&c| quant(c)).collect(), quant(*radius))
            }
            Region::Cube { center, halfwidth } => {
                KeyShape::Cube(center.iter().map(|&c| quant(c)).collect(), quant(*halfwidth))
            }
        };
        CanonicalKey { shape, count_interval }
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return invalid("regions have different dimensions");
    }
    Ok(())
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sorted_intersect(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

fn sorted_subset(a: &[u32], b: &[u32]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyShape {
    Indices(Vec<u32>),
    Sphere(Vec<i64>, i64),
    Cube(Vec<i64>, i64),
}

/// Canonical identity of a candidate group: its quantized region plus the
/// optional count interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    pub shape: KeyShape,
    pub count_interval: Option<(u32, u32)>,
}

impl CanonicalKey {
    /// Deterministic 64-bit FNV-1a digest of the key.
    pub fn digest(&self) -> GroupId {
        let mut h = Fnv::new();
        match &self.shape {
            KeyShape::Indices(ix) => {
                h.byte(1);
                for &i in ix {
                    h.bytes(&i.to_le_bytes());
                }
            }
            KeyShape::Sphere(c, r) | KeyShape::Cube(c, r) => {
                h.byte(if matches!(self.shape, KeyShape::Sphere(..)) { 2 } else { 3 });
                for &v in c {
                    h.bytes(&v.to_le_bytes());
                }
                h.bytes(&r.to_le_bytes());
            }
        }
        if let Some((lo, hi)) = self.count_interval {
            h.byte(4);
            h.bytes(&lo.to_le_bytes());
            h.bytes(&hi.to_le_bytes());
        }
        GroupId(h.0)
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn byte(&mut self, b: u8) {
        self.0 ^= b as u64;
        self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
    }
    fn bytes(&mut self, bs: &[u8]) {
        for &b in bs {
            self.byte(b);
        }
    }
}

/// A region eligible for discovery; one LP variable per group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateGroup {
    pub id: GroupId,
    pub region: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_interval: Option<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pip: Option<f64>,
}

impl CandidateGroup {
    /// A group whose id is derived from its canonical region key.
    pub fn new(region: Region) -> Self {
        Self::with_interval(region, None)
    }

    pub fn with_interval(region: Region, count_interval: Option<(u32, u32)>) -> Self {
        Self::with_scale(region, count_interval, 1.0)
    }

    /// Like [`CandidateGroup::with_interval`] but quantizing continuous
    /// coordinates relative to `scale`.
    pub fn with_scale(region: Region, count_interval: Option<(u32, u32)>, scale: f64) -> Self {
        let id = region.canonical_key(count_interval, scale).digest();
        CandidateGroup { id, region, count_interval, weight: None, pip: None }
    }

    pub fn from_indices<I: IntoIterator<Item = u32>>(it: I) -> Result<Self> {
        Ok(Self::new(Region::indices(it)?))
    }

    pub fn validate(&self) -> Result<()> {
        self.region.check_shape()?;
        if let Some((lo, hi)) = self.count_interval {
            if lo < 1 || hi < lo {
                return invalid(format!("group {}: bad count interval ({lo}, {hi})", self.id));
            }
        }
        if let Some(w) = self.weight {
            if !(w.is_finite() && w >= 0.0) {
                return invalid(format!("group {}: weight must be nonnegative, got {w}", self.id));
            }
        }
        if let Some(p) = self.pip {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("group {}: pip {p} outside [0,1]", self.id));
            }
        }
        Ok(())
    }

    pub fn pip_or_err(&self) -> Result<f64> {
        self.pip
            .ok_or_else(|| Error::Validation(format!("group {} has no pip", self.id)))
    }
}

/// Maps a candidate group to its resolution weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFn {
    /// `1 / |G|` for index sets.
    InverseSize,
    /// `1 / r` for spheres (halfwidth for cubes).
    InverseRadius,
    /// `1 / |J|` for a count interval `J`.
    InverseCountInterval,
    /// `1 / (1 + log2 |G|)`.
    LogInverseSize,
    Constant { c: f64 },
    Custom { table: BTreeMap<GroupId, f64> },
}

impl WeightFn {
    pub fn weight(&self, group: &CandidateGroup) -> Result<f64> {
        let w = match self {
            WeightFn::InverseSize => 1.0 / self.size_of(group)? as f64,
            WeightFn::LogInverseSize => 1.0 / (1.0 + (self.size_of(group)? as f64).log2()),
            WeightFn::InverseRadius => match &group.region {
                Region::Sphere { radius: r, .. } | Region::Cube { halfwidth: r, .. } => 1.0 / r,
                Region::IndexSet { .. } => {
                    return Err(Error::Unsupported("inverse-radius weight on an index set".into()))
                }
            },
            WeightFn::InverseCountInterval => match group.count_interval {
                Some((lo, hi)) if hi >= lo => 1.0 / f64::from(hi - lo + 1),
                _ => return invalid(format!("group {} has no count interval", group.id)),
            },
            WeightFn::Constant { c } => *c,
            WeightFn::Custom { table } => *table
                .get(&group.id)
                .ok_or_else(|| Error::Validation(format!("no weight for group {}", group.id)))?,
        };
        if !(w.is_finite() && w > 0.0) {
            return invalid(format!("weight for group {} is {w}; must be positive", group.id));
        }
        Ok(w)
    }

    fn size_of(&self, group: &CandidateGroup) -> Result<usize> {
        group
            .region
            .size()
            .ok_or_else(|| Error::Unsupported("size-based weight on a continuous region".into()))
    }

    /// Table built from the `weight` fields stored on the groups.
    pub fn from_stored(groups: &[CandidateGroup]) -> Result<Self> {
        let mut table = BTreeMap::new();
        for g in groups {
            let w = g
                .weight
                .ok_or_else(|| Error::Validation(format!("group {} has no stored weight", g.id)))?;
            table.insert(g.id, w);
        }
        Ok(WeightFn::Custom { table })
    }
}

/// Evaluates `wf` on every group and stores the result in `weight`.
pub fn assign_weights(groups: &mut [CandidateGroup], wf: &WeightFn) -> Result<()> {
    for g in groups.iter_mut() {
        g.weight = Some(wf.weight(g)?);
    }
    Ok(())
}

/// The Bayesian error rate to control.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorRateSpec {
    Fdr { q: f64 },
    LocalFdr { q: f64 },
    Pfer { v: f64 },
    Fwer { q: f64, grid_tol: f64 },
}

impl ErrorRateSpec {
    pub fn fwer(q: f64) -> Self {
        ErrorRateSpec::Fwer { q, grid_tol: 1e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        let level_ok = |q: f64| q > 0.0 && q < 1.0;
        match *self {
            ErrorRateSpec::Fdr { q } | ErrorRateSpec::LocalFdr { q } if !level_ok(q) => {
                invalid(format!("level q = {q} must lie in (0,1)"))
            }
            ErrorRateSpec::Pfer { v } if !(v > 0.0 && v.is_finite()) => {
                invalid(format!("PFER budget v = {v} must be positive"))
            }
            ErrorRateSpec::Fwer { q, grid_tol } if !level_ok(q) || !(grid_tol > 0.0) => {
                invalid(format!("FWER needs q in (0,1) and grid_tol > 0, got {q}, {grid_tol}"))
            }
            _ => Ok(()),
        }
    }

    /// The PIP floor below which a group can never be discovered on its own.
    pub fn pip_floor(&self) -> Option<f64> {
        match *self {
            ErrorRateSpec::Fdr { .. } => None,
            ErrorRateSpec::LocalFdr { q } | ErrorRateSpec::Fwer { q, .. } => Some(1.0 - q),
            ErrorRateSpec::Pfer { v } => Some((1.0 - v).max(0.0)),
        }
    }
}

/// One reported region and the probability with which it is selected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub group: CandidateGroup,
    pub selection_prob: f64,
}

impl Discovery {
    pub fn pip(&self) -> f64 {
        self.group.pip.unwrap_or(0.0)
    }
    pub fn weight(&self) -> f64 {
        self.group.weight.unwrap_or(0.0)
    }
}

/// How the integer solution was obtained from the relaxed one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairMethod {
    /// The relaxed solution was already integral.
    None,
    Enumeration,
    BranchAndBound,
    RandomizedRounding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub n_groups: usize,
    pub n_rows: usize,
    pub n_nonintegers: usize,
    pub backtracks: usize,
    pub repair: RepairMethod,
    pub flags: Vec<String>,
}

impl Default for SolveStats {
    fn default() -> Self {
        SolveStats {
            n_groups: 0,
            n_rows: 0,
            n_nonintegers: 0,
            backtracks: 0,
            repair: RepairMethod::None,
            flags: Vec::new(),
        }
    }
}

/// The final disjoint discoveries together with their certificate fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet {
    pub discoveries: Vec<Discovery>,
    /// Achieved expected resolution-adjusted power.
    pub objective: f64,
    /// Optimum of the relaxed LP.
    pub upper_bound: f64,
    pub error_budget_used: f64,
    pub error_spec: ErrorRateSpec,
    /// Nonzero entries of the relaxed LP solution.
    pub relaxed: Vec<(GroupId, f64)>,
    pub stats: SolveStats,
}

impl DetectionSet {
    pub fn empty(error_spec: ErrorRateSpec) -> Self {
        DetectionSet {
            discoveries: Vec::new(),
            objective: 0.0,
            upper_bound: 0.0,
            error_budget_used: 0.0,
            error_spec,
            relaxed: Vec::new(),
            stats: SolveStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.discoveries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.discoveries.is_empty()
    }

    pub fn ids(&self) -> Vec<GroupId> {
        self.discoveries.iter().map(|d| d.group.id).collect()
    }

    /// Relative gap between the relaxed bound and the achieved objective.
    pub fn relative_gap(&self) -> f64 {
        (self.upper_bound - self.objective) / self.upper_bound.max(f64::EPSILON)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(ix: &[u32]) -> CandidateGroup {
        CandidateGroup::from_indices(ix.iter().copied()).unwrap()
    }

    #[test]
    fn inverse_size_weights() {
        assert_eq!(WeightFn::InverseSize.weight(&g(&[3])).unwrap(), 1.0);
        assert_eq!(WeightFn::InverseSize.weight(&g(&[1, 2, 3, 4])).unwrap(), 0.25);
        let w = WeightFn::LogInverseSize.weight(&g(&[1, 2, 3, 4])).unwrap();
        assert!((w - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn radius_and_interval_weights() {
        let s = CandidateGroup::new(Region::sphere(vec![0.0, 0.0], 0.25).unwrap());
        assert_eq!(WeightFn::InverseRadius.weight(&s).unwrap(), 4.0);
        let c = CandidateGroup::with_interval(Region::sphere(vec![0.0, 0.0], 0.25).unwrap(), Some((1, 2)));
        assert_eq!(WeightFn::InverseCountInterval.weight(&c).unwrap(), 0.5);
        assert!(WeightFn::InverseSize.weight(&s).is_err());
        assert!(WeightFn::Constant { c: 0.0 }.weight(&s).is_err());
    }

    #[test]
    fn tangent_spheres_are_disjoint() {
        let a = Region::sphere(vec![0.0, 0.0], 1.0).unwrap();
        let b = Region::sphere(vec![2.0, 0.0], 1.0).unwrap();
        let c = Region::sphere(vec![0.0, 0.0], 0.5).unwrap();
        assert!(!a.overlaps(&b).unwrap());
        assert!(a.overlaps(&c).unwrap());
        assert_eq!(c.is_subset_of(&a), Some(true));
        assert_eq!(a.is_subset_of(&c), Some(false));
    }

    #[test]
    fn sphere_cube_overlap_uses_closest_point() {
        let cube = Region::cube(vec![0.0, 0.0], 1.0).unwrap();
        let near = Region::sphere(vec![1.5, 1.5], 0.8).unwrap(); // corner distance ~0.707
        let far = Region::sphere(vec![1.5, 1.5], 0.7).unwrap();
        assert!(cube.overlaps(&near).unwrap());
        assert!(!cube.overlaps(&far).unwrap());
        assert!(cube.overlaps(&Region::indices([1]).unwrap()).is_err());
    }

    #[test]
    fn index_regions_are_canonicalized() {
        let r = Region::indices([3, 1, 3, 2]).unwrap();
        assert_eq!(r.index_slice().unwrap(), &[1, 2, 3]);
        assert!(Region::indices([]).is_err());
        assert!(r.validate(&LocationSpace::Discrete { p: 3 }).is_err());
        assert!(r.validate(&LocationSpace::Discrete { p: 4 }).is_ok());
    }

    #[test]
    fn ids_follow_canonical_keys() {
        let a = CandidateGroup::new(Region::sphere(vec![0.5, 0.5], 0.1).unwrap());
        let b = CandidateGroup::new(Region::sphere(vec![0.5 + 1e-13, 0.5], 0.1).unwrap());
        assert_eq!(a.id, b.id);
        let c = CandidateGroup::with_interval(a.region.clone(), Some((1, 1)));
        assert_ne!(a.id, c.id);
        assert_ne!(g(&[1, 2]).id, g(&[12]).id);
    }

    #[test]
    fn error_spec_validation() {
        assert!(ErrorRateSpec::Fdr { q: 0.1 }.validate().is_ok());
        assert!(ErrorRateSpec::Fdr { q: 1.0 }.validate().is_err());
        assert!(ErrorRateSpec::LocalFdr { q: 0.0 }.validate().is_err());
        assert!(ErrorRateSpec::Pfer { v: 0.0 }.validate().is_err());
        assert!(ErrorRateSpec::Fwer { q: 0.1, grid_tol: 0.0 }.validate().is_err());
        assert!(LocationSpace::continuous(vec![(1.0, 1.0)]).is_err());
        assert!(LocationSpace::discrete(0).is_err());
    }
}
