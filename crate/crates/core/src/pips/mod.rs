//! Posterior inclusion probabilities for candidate groups.

mod locator;
mod samples;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use locator::{BucketLocator, Locator};
pub use samples::{ContinuousSamples, DiscreteSamples, SampleSet, SusieAlphas};

use crate::error::{invalid, Error, Result};
use crate::groups::LatticeFamily;
use crate::types::{CandidateGroup, GroupId, Region};

/// Draws per parallel work unit; counts are merged in chunk order.
const CHUNK: usize = 256;

/// Group PIPs plus marginal PIPs of the locations that appear in any group.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipTable {
    pub pips: BTreeMap<GroupId, f64>,
    pub marginals: BTreeMap<u32, f64>,
    /// Number of posterior draws behind the estimate (0 when not sample based).
    pub n_samples: usize,
}

impl PipTable {
    pub fn get(&self, id: GroupId) -> Option<f64> {
        self.pips.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.pips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pips.is_empty()
    }

    /// Robust mode: `p <- max(0, p - delta)` for every group.
    pub fn lower_bound(&self, delta: f64) -> Result<PipTable> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return invalid(format!("lower-bound shift must be nonnegative, got {delta}"));
        }
        let mut out = self.clone();
        for p in out.pips.values_mut() {
            *p = (*p - delta).max(0.0);
        }
        Ok(out)
    }

    /// Copies PIPs onto `groups`. Groups absent from the table get 0 when
    /// `missing_as_zero` is set and are an error otherwise.
    pub fn apply(&self, groups: &mut [CandidateGroup], missing_as_zero: bool) -> Result<()> {
        for g in groups.iter_mut() {
            g.pip = match self.pips.get(&g.id) {
                Some(&p) => Some(p),
                None if missing_as_zero => Some(0.0),
                None => return invalid(format!("no pip for group {}", g.id)),
            };
        }
        Ok(())
    }
}

fn check_nonempty(n: usize) -> Result<()> {
    if n == 0 {
        return invalid("sample set is empty");
    }
    Ok(())
}

/// Sums per-chunk count vectors in chunk order.
fn reduce_counts(parts: Vec<Vec<u64>>, len: usize) -> Vec<u64> {
    let mut total = vec![0u64; len];
    for part in parts {
        for (t, c) in total.iter_mut().zip(part) {
            *t += c;
        }
    }
    total
}

/// `p_G` = fraction of draws intersecting `G`.
pub fn pips_from_samples(samples: &DiscreteSamples, groups: &[CandidateGroup]) -> Result<PipTable> {
    check_nonempty(samples.len())?;
    let p = samples.p();
    // location -> groups containing it, in CSR layout
    let mut degree = vec![0usize; p + 1];
    for g in groups {
        let ix = g.region.index_slice().ok_or_else(|| {
            Error::Validation(format!("group {} is not an index set", g.id))
        })?;
        for &j in ix {
            if j as usize >= p {
                return invalid(format!("group {}: index {j} out of range for p = {p}", g.id));
            }
            degree[j as usize + 1] += 1;
        }
    }
    for j in 0..p {
        degree[j + 1] += degree[j];
    }
    let offsets = degree;
    let mut members = vec![0u32; offsets[p]];
    let mut fill = offsets.clone();
    for (gi, g) in groups.iter().enumerate() {
        for &j in g.region.index_slice().unwrap() {
            members[fill[j as usize]] = gi as u32;
            fill[j as usize] += 1;
        }
    }

    let parts: Vec<Vec<u64>> = samples
        .draws()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut counts = vec![0u64; groups.len()];
            let mut stamp = vec![u32::MAX; groups.len()];
            for (t, draw) in chunk.iter().enumerate() {
                for &j in draw {
                    for &gi in &members[offsets[j as usize]..offsets[j as usize + 1]] {
                        let gi = gi as usize;
                        if stamp[gi] != t as u32 {
                            stamp[gi] = t as u32;
                            counts[gi] += 1;
                        }
                    }
                }
            }
            counts
        })
        .collect();
    let counts = reduce_counts(parts, groups.len());
    let n = samples.len() as f64;
    let all_marginals = samples.marginals();
    let mut table = PipTable { n_samples: samples.len(), ..Default::default() };
    for (g, c) in groups.iter().zip(counts) {
        table.pips.insert(g.id, c as f64 / n);
    }
    for j in 0..p {
        if offsets[j + 1] > offsets[j] {
            table.marginals.insert(j as u32, all_marginals[j]);
        }
    }
    Ok(table)
}

/// Continuous-space PIPs: every point of every draw is routed through
/// `locator`, which must report all candidate groups containing it.
pub fn pips_continuous(
    samples: &ContinuousSamples,
    groups: &[CandidateGroup],
    locator: &dyn Locator,
) -> Result<PipTable> {
    check_nonempty(samples.len())?;
    let mut index = HashMap::with_capacity(groups.len());
    for (i, g) in groups.iter().enumerate() {
        if g.region.is_discrete() {
            return invalid(format!("group {} is not a continuous region", g.id));
        }
        g.region.validate(samples.space())?;
        index.insert(g.id, i);
    }
    let parts: Vec<Result<Vec<u64>>> = samples
        .draws()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut counts = vec![0u64; groups.len()];
            let mut stamp = vec![u32::MAX; groups.len()];
            let mut hits = Vec::new();
            for (t, draw) in chunk.iter().enumerate() {
                for x in draw {
                    hits.clear();
                    locator.locate(x, &mut hits);
                    for id in &hits {
                        let &gi = index.get(id).ok_or_else(|| {
                            Error::Internal(format!("locator returned unknown group {id}"))
                        })?;
                        if stamp[gi] != t as u32 {
                            stamp[gi] = t as u32;
                            counts[gi] += 1;
                        }
                    }
                }
            }
            Ok(counts)
        })
        .collect();
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let counts = reduce_counts(parts, groups.len());
    let n = samples.len() as f64;
    let mut table = PipTable { n_samples: samples.len(), ..Default::default() };
    for (g, c) in groups.iter().zip(counts) {
        table.pips.insert(g.id, c as f64 / n);
    }
    Ok(table)
}

/// PIPs over a lattice family without materializing it. Only groups hit by
/// at least one point are returned (with `pip` set), in id order.
pub fn pips_lattice(samples: &ContinuousSamples, family: &LatticeFamily) -> Result<(Vec<CandidateGroup>, PipTable)> {
    check_nonempty(samples.len())?;
    if samples.space().dim() != family.dim() {
        return invalid("sample dimension does not match the lattice family");
    }
    let parts: Vec<HashMap<GroupId, (Region, u64)>> = samples
        .draws()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut counts: HashMap<GroupId, (Region, u64)> = HashMap::new();
            let mut hits = Vec::new();
            let mut seen = Vec::new();
            for draw in chunk {
                seen.clear();
                for x in draw {
                    hits.clear();
                    family.locate(x, &mut hits);
                    seen.append(&mut hits);
                }
                seen.sort_by_key(|h: &(GroupId, Region)| h.0);
                seen.dedup_by_key(|h| h.0);
                for (id, region) in seen.drain(..) {
                    counts.entry(id).or_insert((region, 0)).1 += 1;
                }
            }
            counts
        })
        .collect();
    let mut total: BTreeMap<GroupId, (Region, u64)> = BTreeMap::new();
    for part in parts {
        for (id, (region, c)) in part {
            total.entry(id).or_insert((region, 0)).1 += c;
        }
    }
    let n = samples.len() as f64;
    let mut table = PipTable { n_samples: samples.len(), ..Default::default() };
    let mut groups = Vec::with_capacity(total.len());
    for (id, (region, c)) in total {
        let p = c as f64 / n;
        table.pips.insert(id, p);
        let mut g = family.group(region);
        debug_assert_eq!(g.id, id);
        g.pip = Some(p);
        groups.push(g);
    }
    Ok((groups, table))
}

/// For every region and count interval `J`, the fraction of draws whose
/// number of points inside the region lies in `J`.
pub fn count_interval_pips(
    samples: &ContinuousSamples,
    regions: &[Region],
    intervals: &[(u32, u32)],
) -> Result<Vec<CandidateGroup>> {
    check_nonempty(samples.len())?;
    for &(lo, hi) in intervals {
        if lo < 1 || hi < lo {
            return invalid(format!("bad count interval ({lo}, {hi})"));
        }
    }
    for r in regions {
        r.validate(samples.space())?;
    }
    let scale = samples.space().extent();
    let n = samples.len() as f64;
    let per_region: Vec<Vec<CandidateGroup>> = regions
        .par_iter()
        .map(|region| {
            let counts: Vec<u32> = samples
                .draws()
                .iter()
                .map(|d| d.iter().filter(|x| region.contains_point(x)).count() as u32)
                .collect();
            intervals
                .iter()
                .map(|&(lo, hi)| {
                    let hit = counts.iter().filter(|&&c| c >= lo && c <= hi).count();
                    let mut g = CandidateGroup::with_scale(region.clone(), Some((lo, hi)), scale);
                    g.pip = Some(hit as f64 / n);
                    g
                })
                .collect()
        })
        .collect();
    Ok(per_region.into_iter().flatten().collect())
}

/// `p_G = 1 - prod_i (1 - min(1, sum_{j in G} alpha_ij))`.
pub fn pips_from_susie(alphas: &SusieAlphas, groups: &[CandidateGroup]) -> Result<PipTable> {
    let p = alphas.p();
    let pip_of = |ix: &[u32]| -> f64 {
        let mut miss = 1.0;
        for row in alphas.rows() {
            let s: f64 = ix.iter().map(|&j| row[j as usize]).sum();
            miss *= 1.0 - s.clamp(0.0, 1.0);
        }
        1.0 - miss
    };
    let mut table = PipTable::default();
    for g in groups {
        let ix = g.region.index_slice().ok_or_else(|| {
            Error::Validation(format!("group {} is not an index set", g.id))
        })?;
        if let Some(&last) = ix.last() {
            if last as usize >= p {
                return invalid(format!("group {}: index {last} out of range for p = {p}", g.id));
            }
        }
        table.pips.insert(g.id, pip_of(ix));
        for &j in ix {
            table.marginals.entry(j).or_insert_with(|| pip_of(&[j]));
        }
    }
    Ok(table)
}

/// How tables from chains of unequal length are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainWeighting {
    /// Every draw counts once, so longer chains weigh more.
    #[default]
    PerSample,
    /// Every chain counts once.
    PerChain,
}

/// Pools per-chain sample sets with equal per-draw weight.
pub fn merge_chains(per_chain: &[SampleSet]) -> Result<SampleSet> {
    match per_chain.first() {
        None => invalid("no chains to merge"),
        Some(SampleSet::Discrete(_)) => {
            let parts = per_chain
                .iter()
                .map(|s| match s {
                    SampleSet::Discrete(d) => Ok(d.clone()),
                    _ => invalid("cannot merge discrete and continuous chains"),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SampleSet::Discrete(DiscreteSamples::concat(&parts)?))
        }
        Some(SampleSet::Continuous(_)) => {
            let parts = per_chain
                .iter()
                .map(|s| match s {
                    SampleSet::Continuous(c) => Ok(c.clone()),
                    _ => invalid("cannot merge discrete and continuous chains"),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SampleSet::Continuous(ContinuousSamples::concat(&parts)?))
        }
    }
}

/// Combines per-chain PIP tables over a shared group universe.
pub fn merge_tables(tables: &[PipTable], weighting: ChainWeighting) -> Result<PipTable> {
    let Some(first) = tables.first() else {
        return invalid("no tables to merge");
    };
    for t in tables {
        if !t.pips.keys().eq(first.pips.keys()) || !t.marginals.keys().eq(first.marginals.keys()) {
            return invalid("chains do not share the candidate-group universe");
        }
    }
    let w: Vec<f64> = match weighting {
        ChainWeighting::PerSample => {
            if tables.iter().any(|t| t.n_samples == 0) {
                return invalid("per-sample pooling needs sample counts");
            }
            tables.iter().map(|t| t.n_samples as f64).collect()
        }
        ChainWeighting::PerChain => vec![1.0; tables.len()],
    };
    let wsum: f64 = w.iter().sum();
    let mix = |get: &dyn Fn(&PipTable) -> f64| -> f64 {
        (tables.iter().zip(&w).map(|(t, wi)| wi * get(t)).sum::<f64>() / wsum).clamp(0.0, 1.0)
    };
    let mut out = PipTable { n_samples: tables.iter().map(|t| t.n_samples).sum(), ..Default::default() };
    for &id in first.pips.keys() {
        out.pips.insert(id, mix(&|t| t.pips[&id]));
    }
    for &j in first.marginals.keys() {
        out.marginals.insert(j, mix(&|t| t.marginals[&j]));
    }
    Ok(out)
}
