use crate::error::{invalid, Result};
use crate::types::LocationSpace;

/// Posterior draws of signal index sets over locations `0..p`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSamples {
    p: usize,
    draws: Vec<Vec<u32>>,
    chains: Vec<Option<u32>>,
}

impl DiscreteSamples {
    /// Each draw is sorted and deduplicated. `chains`, when given, holds one
    /// entry per draw.
    pub fn new(p: usize, mut draws: Vec<Vec<u32>>, chains: Option<Vec<Option<u32>>>) -> Result<Self> {
        LocationSpace::discrete(p)?;
        for (i, d) in draws.iter_mut().enumerate() {
            d.sort_unstable();
            d.dedup();
            if let Some(&last) = d.last() {
                if last as usize >= p {
                    return invalid(format!("draw {i}: index {last} out of range for p = {p}"));
                }
            }
        }
        let chains = match chains {
            Some(c) if c.len() != draws.len() => {
                return invalid(format!("{} chain ids for {} draws", c.len(), draws.len()))
            }
            Some(c) => c,
            None => vec![None; draws.len()],
        };
        Ok(DiscreteSamples { p, draws, chains })
    }

    /// Draws tagged with a single chain id.
    pub fn from_chain(p: usize, draws: Vec<Vec<u32>>, chain: u32) -> Result<Self> {
        let n = draws.len();
        Self::new(p, draws, Some(vec![Some(chain); n]))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws(&self) -> &[Vec<u32>] {
        &self.draws
    }

    pub fn chains(&self) -> &[Option<u32>] {
        &self.chains
    }

    /// Fraction of draws containing each location.
    pub fn marginals(&self) -> Vec<f64> {
        let mut counts = vec![0u64; self.p];
        for d in &self.draws {
            for &j in d {
                counts[j as usize] += 1;
            }
        }
        let n = self.draws.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }

    /// Pools chains with equal per-draw weight.
    pub fn concat(parts: &[DiscreteSamples]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return invalid("no chains to merge");
        };
        if parts.iter().any(|s| s.p != first.p) {
            return invalid("chains disagree on the number of locations");
        }
        Ok(DiscreteSamples {
            p: first.p,
            draws: parts.iter().flat_map(|s| s.draws.iter().cloned()).collect(),
            chains: parts.iter().flat_map(|s| s.chains.iter().copied()).collect(),
        })
    }
}

/// Posterior draws of point sets inside a continuous box.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousSamples {
    space: LocationSpace,
    draws: Vec<Vec<Vec<f64>>>,
    chains: Vec<Option<u32>>,
}

impl ContinuousSamples {
    pub fn new(space: LocationSpace, draws: Vec<Vec<Vec<f64>>>, chains: Option<Vec<Option<u32>>>) -> Result<Self> {
        space.validate()?;
        if space.is_discrete() {
            return invalid("continuous samples need a continuous location space");
        }
        for (i, d) in draws.iter().enumerate() {
            for x in d {
                if !space.contains_point(x) {
                    return invalid(format!("draw {i}: point {x:?} outside the location box"));
                }
            }
        }
        let chains = match chains {
            Some(c) if c.len() != draws.len() => {
                return invalid(format!("{} chain ids for {} draws", c.len(), draws.len()))
            }
            Some(c) => c,
            None => vec![None; draws.len()],
        };
        Ok(ContinuousSamples { space, draws, chains })
    }

    pub fn space(&self) -> &LocationSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws(&self) -> &[Vec<Vec<f64>>] {
        &self.draws
    }

    pub fn chains(&self) -> &[Option<u32>] {
        &self.chains
    }

    pub fn concat(parts: &[ContinuousSamples]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return invalid("no chains to merge");
        };
        if parts.iter().any(|s| s.space != first.space) {
            return invalid("chains disagree on the location space");
        }
        Ok(ContinuousSamples {
            space: first.space.clone(),
            draws: parts.iter().flat_map(|s| s.draws.iter().cloned()).collect(),
            chains: parts.iter().flat_map(|s| s.chains.iter().copied()).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SampleSet {
    Discrete(DiscreteSamples),
    Continuous(ContinuousSamples),
}

impl SampleSet {
    pub fn len(&self) -> usize {
        match self {
            SampleSet::Discrete(s) => s.len(),
            SampleSet::Continuous(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-effect inclusion probabilities, one row per single effect.
#[derive(Clone, Debug, PartialEq)]
pub struct SusieAlphas {
    alpha: Vec<Vec<f64>>,
}

impl SusieAlphas {
    pub fn new(alpha: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = alpha.first() else {
            return invalid("alpha matrix has no rows");
        };
        let p = first.len();
        if p == 0 {
            return invalid("alpha matrix has no columns");
        }
        for (i, row) in alpha.iter().enumerate() {
            if row.len() != p {
                return invalid(format!("alpha row {i} has {} entries, expected {p}", row.len()));
            }
            if row.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return invalid(format!("alpha row {i} has entries outside [0,1]"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return invalid(format!("alpha row {i} sums to {s}"));
            }
        }
        Ok(SusieAlphas { alpha })
    }

    pub fn n_effects(&self) -> usize {
        self.alpha.len()
    }

    pub fn p(&self) -> usize {
        self.alpha[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.alpha
    }
}
