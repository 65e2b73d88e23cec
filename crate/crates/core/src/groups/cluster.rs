use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::{CandidateGroup, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Single,
    Average,
    Complete,
}

impl Linkage {
    pub const ALL: [Linkage; 3] = [Linkage::Single, Linkage::Average, Linkage::Complete];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissimilarityKind {
    /// `|1 - c_ij|`
    AbsOneMinus,
    /// `1 + c_ij`
    OnePlus,
}

fn check_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return invalid(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return invalid(format!("{what} has non-finite entries"));
    }
    Ok(())
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return invalid(format!("{what} is not symmetric at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

pub fn dissimilarity_from_corr(corr: &DMatrix<f64>, kind: DissimilarityKind) -> Result<DMatrix<f64>> {
    check_square(corr, "correlation matrix")?;
    check_symmetric(corr, "correlation matrix")?;
    let n = corr.nrows();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            match kind {
                DissimilarityKind::AbsOneMinus => (1.0 - corr[(i, j)]).abs(),
                DissimilarityKind::OnePlus => 1.0 + corr[(i, j)],
            }
        }
    }))
}

/// Pearson correlation between the columns of `x`. Constant columns get zero
/// correlation with everything else and a unit diagonal.
pub fn correlation_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let mut z = x.clone();
    let mut ok = vec![false; p];
    for j in 0..p {
        let mut col = z.column_mut(j);
        let mean = col.sum() / n.max(1) as f64;
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
            ok[j] = true;
        }
    }
    let mut c = z.transpose() * &z;
    for j in 0..p {
        c[(j, j)] = 1.0;
        if !ok[j] {
            for i in 0..p {
                if i != j {
                    c[(i, j)] = 0.0;
                    c[(j, i)] = 0.0;
                }
            }
        }
    }
    // symmetrize away rounding asymmetry from the product
    for i in 0..p {
        for j in (i + 1)..p {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v.clamp(-1.0, 1.0);
            c[(j, i)] = v.clamp(-1.0, 1.0);
        }
    }
    c
}

/// Agglomerative clustering on locations `0..n`; see
/// [`hierarchical_groups_labeled`].
pub fn hierarchical_groups(dissim: &DMatrix<f64>, linkage: Linkage, max_size: usize) -> Result<Vec<CandidateGroup>> {
    let labels: Vec<u32> = (0..dissim.nrows() as u32).collect();
    hierarchical_groups_labeled(dissim, &labels, linkage, max_size)
}

/// Runs agglomerative clustering on the rows of `dissim` and emits every node
/// of the merge tree (leaves included) with at most `max_size` members. Row
/// `i` stands for location `labels[i]`. Ties in the minimum dissimilarity go
/// to the lexicographically smallest pair of active cluster slots.
pub fn hierarchical_groups_labeled(
    dissim: &DMatrix<f64>,
    labels: &[u32],
    linkage: Linkage,
    max_size: usize,
) -> Result<Vec<CandidateGroup>> {
    check_square(dissim, "dissimilarity matrix")?;
    check_symmetric(dissim, "dissimilarity matrix")?;
    let n = dissim.nrows();
    if labels.len() != n {
        return invalid(format!("{} labels for a {n}x{n} matrix", labels.len()));
    }
    if max_size == 0 {
        return invalid("max_size must be at least 1");
    }
    for i in 0..n {
        if dissim[(i, i)] != 0.0 {
            return invalid(format!("dissimilarity diagonal must be zero (row {i})"));
        }
    }
    if dissim.iter().any(|&v| v < 0.0) {
        return invalid("dissimilarities must be nonnegative");
    }

    let mut out = Vec::new();
    let emit = |members: &[u32], out: &mut Vec<CandidateGroup>| -> Result<()> {
        out.push(CandidateGroup::new(Region::indices(members.iter().copied())?));
        Ok(())
    };
    let mut members: Vec<Vec<u32>> = labels.iter().map(|&l| vec![l]).collect();
    for m in &members {
        emit(m, &mut out)?;
    }
    let mut d = dissim.clone();
    let mut active = vec![true; n];
    for _ in 1..n {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && d[(i, j)] < best.0 {
                    best = (d[(i, j)], i, j);
                }
            }
        }
        let (_, a, b) = best;
        let (na, nb) = (members[a].len() as f64, members[b].len() as f64);
        for k in 0..n {
            if !active[k] || k == a || k == b {
                continue;
            }
            let (da, db) = (d[(a, k)], d[(b, k)]);
            let v = match linkage {
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
                Linkage::Average => (na * da + nb * db) / (na + nb),
            };
            d[(a, k)] = v;
            d[(k, a)] = v;
        }
        active[b] = false;
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        if members[a].len() <= max_size {
            emit(&members[a], &mut out)?;
        }
    }
    Ok(out)
}
