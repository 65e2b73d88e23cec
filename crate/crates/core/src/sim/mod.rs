//! Simulation designs, response generators and evaluation metrics.

mod experiment;

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

pub use experiment::{run_experiment, ExperimentConfig, Method, ResultRow, Scenario};

use crate::error::{invalid, Error, Result};
use crate::types::{DetectionSet, Region, WeightFn};

/// Rows are i.i.d. draws of a non-stationary AR(k) process across columns:
/// `X_j = rho_0 Z_j + sum_{l <= min(j-1, k)} rho_l X_{j-l}` with per-column
/// Dirichlet(0.2, 0.8/(k-1), ...) coefficients rescaled to `Var(X_j) = 1`.
/// With `k = 1` the columns are independent standard normals.
pub fn gen_ark_design(n: usize, p: usize, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    if k == 0 {
        return invalid("AR order k must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefs = ar_coefficients(p, k, &mut rng)?;
    let mut x = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        for (j, rho) in coefs.iter().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut v = rho[0] * z;
            for (l, r) in rho.iter().enumerate().skip(1) {
                v += r * x[(i, j - l)];
            }
            x[(i, j)] = v;
        }
    }
    Ok(x)
}

/// Per-column coefficient vectors `(rho_0, rho_1, ..., rho_m)`, scaled so the
/// population variance of every column is one.
fn ar_coefficients(p: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(p);
    // cov[j][d] = Cov(X_j, X_{j-d}) for d <= k
    let mut cov: Vec<Vec<f64>> = Vec::with_capacity(p);
    let c = |cov: &Vec<Vec<f64>>, a: usize, b: usize| {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if hi - lo > k {
            // never requested: lags stay within the band
            f64::NAN
        } else {
            cov[hi][hi - lo]
        }
    };
    for j in 0..p {
        let m = if k == 1 { 0 } else { j.min(k) };
        let mut rho = if m == 0 {
            vec![1.0]
        } else {
            let mut alpha = vec![0.2];
            alpha.extend(std::iter::repeat_n(0.8 / (k - 1) as f64, m));
            dirichlet(&alpha, rng)?
        };
        // Var(X_j) before rescaling
        let mut var = rho[0] * rho[0];
        for a in 1..=m {
            for b in 1..=m {
                var += rho[a] * rho[b] * c(&cov, j - a, j - b);
            }
        }
        let scale = 1.0 / var.sqrt();
        for r in rho.iter_mut() {
            *r *= scale;
        }
        let mut row = vec![1.0; k.min(j) + 1];
        for (d, slot) in row.iter_mut().enumerate().skip(1) {
            *slot = (1..=m).map(|l| rho[l] * c(&cov, j - l, j - d)).sum();
        }
        cov.push(row);
        out.push(rho);
    }
    Ok(out)
}

fn dirichlet(alpha: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let mut v = Vec::with_capacity(alpha.len());
    for &a in alpha {
        let g = Gamma::new(a, 1.0).map_err(|e| Error::Internal(format!("gamma({a}): {e}")))?;
        v.push(g.sample(rng));
    }
    let total: f64 = v.iter().sum();
    Ok(v.into_iter().map(|x| x / total).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    #[default]
    Gaussian,
    Probit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlmData {
    /// Continuous response (Gaussian link).
    pub y: Option<Vec<f64>>,
    /// Binary response (probit link).
    pub z: Option<Vec<u8>>,
    pub beta: Vec<f64>,
    /// Sorted indices of the nonzero coefficients.
    pub signals: Vec<u32>,
}

/// `ceil(s p)` random nonzero coefficients drawn from `N(0, tau2)` conditioned
/// on `|beta_j| > 0.1 tau`; `y ~ N(X beta, sigma2 I)`; probit returns
/// `z = 1(y >= 0)` instead.
pub fn gen_sparse_glm(x: &DMatrix<f64>, s: f64, tau2: f64, sigma2: f64, link: Link, seed: u64) -> Result<GlmData> {
    if !(s > 0.0 && s <= 1.0) {
        return invalid(format!("sparsity {s} outside (0, 1]"));
    }
    if !(tau2 > 0.0 && sigma2 >= 0.0) {
        return invalid("need tau2 > 0 and sigma2 >= 0");
    }
    let (n, p) = x.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_signals = ((s * p as f64).ceil() as usize).min(p);
    let mut signals: Vec<u32> = sample_indices(&mut rng, p, n_signals).into_iter().map(|j| j as u32).collect();
    signals.sort_unstable();
    let tau = tau2.sqrt();
    let mut beta = vec![0.0; p];
    for &j in &signals {
        beta[j as usize] = loop {
            let z: f64 = StandardNormal.sample(&mut rng);
            let b = tau * z;
            if b.abs() > 0.1 * tau {
                break b;
            }
        };
    }
    let sd = sigma2.sqrt();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mean: f64 = signals.iter().map(|&j| x[(i, j as usize)] * beta[j as usize]).sum();
            let e: f64 = StandardNormal.sample(&mut rng);
            mean + sd * e
        })
        .collect();
    Ok(match link {
        Link::Gaussian => GlmData { y: Some(y), z: None, beta, signals },
        Link::Probit => GlmData { y: None, z: Some(y.iter().map(|&v| u8::from(v >= 0.0)).collect()), beta, signals },
    })
}

/// Step basis: column `j` (1-based) is one in rows `j..=t`.
pub fn changepoint_design(t: usize) -> Result<DMatrix<f64>> {
    if t < 2 {
        return invalid("change-point design needs T >= 2");
    }
    Ok(DMatrix::from_fn(t, t, |i, j| if i >= j { 1.0 } else { 0.0 }))
}

/// Ground truth for evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    Indices(Vec<u32>),
    Points(Vec<Vec<f64>>),
}

impl Truth {
    pub fn len(&self) -> usize {
        match self {
            Truth::Indices(v) => v.len(),
            Truth::Points(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub power: f64,
    pub normalized_power: f64,
    pub fdp: f64,
    pub n_true: usize,
    pub n_false: usize,
}

/// Number of true signals in `region` (within `slack` for continuous regions).
fn hits(region: &Region, truth: &Truth, slack: f64) -> Result<usize> {
    match (truth, region) {
        (Truth::Indices(ix), Region::IndexSet { .. }) => Ok(ix.iter().filter(|&&j| region.contains_index(j)).count()),
        (Truth::Points(pts), Region::Sphere { .. } | Region::Cube { .. }) => {
            Ok(pts.iter().filter(|x| region.distance_to_point(x) <= slack).count())
        }
        _ => invalid("truth type does not match the region type"),
    }
}

/// Resolution-adjusted power and false discovery proportion of `det`.
/// A discovery is true when it contains a signal or, for count-interval
/// discoveries, when its signal count lies in the interval.
pub fn evaluate(det: &DetectionSet, truth: &Truth, weight_fn: &WeightFn, slack: f64) -> Result<Evaluation> {
    if !(slack >= 0.0) {
        return invalid("slack must be non-negative");
    }
    let mut ev = Evaluation::default();
    for d in &det.discoveries {
        let h = hits(&d.group.region, truth, slack)?;
        let ok = match d.group.count_interval {
            Some((lo, hi)) => (lo as usize..=hi as usize).contains(&h),
            None => h > 0,
        };
        if ok {
            ev.n_true += 1;
            ev.power += weight_fn.weight(&d.group)?;
        } else {
            ev.n_false += 1;
        }
    }
    ev.normalized_power = if truth.is_empty() { 0.0 } else { ev.power / truth.len() as f64 };
    ev.fdp = ev.n_false as f64 / det.len().max(1) as f64;
    Ok(ev)
}

fn index_sets(det: &DetectionSet) -> Result<Vec<&[u32]>> {
    det.discoveries
        .iter()
        .map(|d| d.group.region.index_slice().ok_or_else(|| Error::Validation("average Jaccard needs index sets".into())))
        .collect()
}

fn jaccard(a: &[u32], b: &[u32]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Average best-match Jaccard similarity between two detection sets.
pub fn avg_jaccard(a: &DetectionSet, b: &DetectionSet) -> Result<f64> {
    let (sa, sb) = (index_sets(a)?, index_sets(b)?);
    if sa.is_empty() && sb.is_empty() {
        return Ok(1.0);
    }
    let best = |x: &[u32], ys: &[&[u32]]| ys.iter().map(|y| jaccard(x, y)).fold(0.0, f64::max);
    let total: f64 = sa.iter().map(|x| best(x, &sb)).sum::<f64>() + sb.iter().map(|y| best(y, &sa)).sum::<f64>();
    Ok(total / (sa.len() + sb.len()) as f64)
}
