use std::collections::HashMap;

use crate::error::{invalid, Result};
use crate::groups::LatticeFamily;
use crate::types::{CandidateGroup, GroupId, Region};

/// Point query over a family of continuous candidate groups.
pub trait Locator: Sync {
    /// Appends the id of every candidate group containing `x`.
    fn locate(&self, x: &[f64], out: &mut Vec<GroupId>);
}

impl Locator for LatticeFamily {
    fn locate(&self, x: &[f64], out: &mut Vec<GroupId>) {
        let mut hits = Vec::new();
        LatticeFamily::locate(self, x, &mut hits);
        out.extend(hits.into_iter().map(|h| h.0));
    }
}

struct SizeClass {
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

/// Grid-bucket index over arbitrary spheres and cubes. Groups are split into
/// classes by the binary exponent of their radius; each class is bucketed on
/// a grid whose cell is at least as large as any radius in it, so a query
/// inspects `3^d` cells per class.
pub struct BucketLocator {
    regions: Vec<(GroupId, Region)>,
    classes: Vec<SizeClass>,
}

impl BucketLocator {
    pub fn new(groups: &[CandidateGroup]) -> Result<Self> {
        let mut by_exp: HashMap<i32, Vec<usize>> = HashMap::new();
        let mut dim = None;
        for (i, g) in groups.iter().enumerate() {
            let (center, r) = match &g.region {
                Region::Sphere { center, radius } => (center, *radius),
                Region::Cube { center, halfwidth } => (center, *halfwidth),
                Region::IndexSet { .. } => return invalid(format!("group {} is not a continuous region", g.id)),
            };
            if *dim.get_or_insert(center.len()) != center.len() {
                return invalid("groups have different dimensions");
            }
            by_exp.entry(r.log2().floor() as i32).or_default().push(i);
        }
        let mut exps: Vec<i32> = by_exp.keys().copied().collect();
        exps.sort_unstable();
        let classes = exps
            .into_iter()
            .map(|e| {
                let cell = 2f64.powi(e + 1);
                let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
                for &i in &by_exp[&e] {
                    let c = match &groups[i].region {
                        Region::Sphere { center, .. } | Region::Cube { center, .. } => center,
                        Region::IndexSet { .. } => unreachable!(),
                    };
                    cells.entry(cell_of(c, cell)).or_default().push(i);
                }
                SizeClass { cell, cells }
            })
            .collect();
        let regions = groups.iter().map(|g| (g.id, g.region.clone())).collect();
        Ok(BucketLocator { regions, classes })
    }
}

fn cell_of(x: &[f64], cell: f64) -> Vec<i64> {
    x.iter().map(|&v| (v / cell).floor() as i64).collect()
}

impl Locator for BucketLocator {
    fn locate(&self, x: &[f64], out: &mut Vec<GroupId>) {
        let start = out.len();
        let d = x.len();
        let mut offset = vec![-1i64; d];
        for class in &self.classes {
            let home = cell_of(x, class.cell);
            offset.iter_mut().for_each(|o| *o = -1);
            loop {
                let key: Vec<i64> = home.iter().zip(&offset).map(|(h, o)| h + o).collect();
                if let Some(ix) = class.cells.get(&key) {
                    for &i in ix {
                        let (id, region) = &self.regions[i];
                        if region.contains_point(x) {
                            out.push(*id);
                        }
                    }
                }
                let mut axis = 0;
                while axis < d && offset[axis] == 1 {
                    offset[axis] = -1;
                    axis += 1;
                }
                if axis == d {
                    break;
                }
                offset[axis] += 1;
            }
        }
        out[start..].sort_unstable();
        let mut tail = out.split_off(start);
        tail.dedup();
        out.extend(tail);
    }
}
