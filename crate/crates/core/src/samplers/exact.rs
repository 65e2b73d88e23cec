//! Exact posterior inclusion probabilities by enumerating all `2^p` models,
//! for small problems and as a reference for the samplers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};

/// Largest `p` accepted by the enumerators.
pub const MAX_EXACT_P: usize = 16;

fn models(p: usize) -> Result<usize> {
    if p == 0 || p > MAX_EXACT_P {
        return invalid(format!("exact enumeration needs 1 <= p <= {MAX_EXACT_P}, got {p}"));
    }
    Ok(1usize << p)
}

fn members(mask: usize, p: usize) -> Vec<usize> {
    (0..p).filter(|&j| mask >> j & 1 == 1).collect()
}

fn normalize(log_post: &[f64]) -> Vec<f64> {
    let top = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_post.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Inclusion probabilities under the linear model with fixed
/// hyperparameters: `y | gamma ~ N(0, sigma2 I + tau2 X_gamma X_gamma')`
/// and `P(gamma) = p0^(p - |gamma|) (1 - p0)^|gamma|`.
pub fn linear_inclusion(x: &DMatrix<f64>, y: &[f64], sigma2: f64, tau2: f64, p0: f64) -> Result<Vec<f64>> {
    let post = linear_model_posterior(x, y, sigma2, tau2, p0)?;
    Ok((0..x.ncols()).map(|j| set_inclusion(&post, &[j as u32])).collect())
}

/// Posterior probability of every model under the same prior as
/// [`linear_inclusion`], indexed by the bitmask of active columns.
pub fn linear_model_posterior(x: &DMatrix<f64>, y: &[f64], sigma2: f64, tau2: f64, p0: f64) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    let total = models(p)?;
    if y.len() != n {
        return invalid("response length does not match the design");
    }
    let y = DVector::from_column_slice(y);
    let mut log_post = Vec::with_capacity(total);
    for mask in 0..total {
        let a = members(mask, p);
        let mut cov = DMatrix::<f64>::identity(n, n) * sigma2;
        for &j in &a {
            let c = x.column(j);
            cov += c * c.transpose() * tau2;
        }
        let chol = match cov.cholesky() {
            Some(c) => c,
            None => return invalid("marginal covariance is not positive definite"),
        };
        let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let quad = y.dot(&chol.solve(&y));
        let s = a.len() as f64;
        log_post.push((p as f64 - s) * p0.ln() + s * (1.0 - p0).ln() - 0.5 * logdet - 0.5 * quad);
    }
    Ok(normalize(&log_post))
}

/// Probability that at least one of `set` is active, given model
/// probabilities indexed by bitmask.
pub fn set_inclusion(post: &[f64], set: &[u32]) -> f64 {
    let bits = set.iter().fold(0usize, |m, &j| m | 1 << j);
    post.iter().enumerate().filter(|(m, _)| m & bits != 0).map(|(_, v)| v).sum()
}

/// Gauss-Hermite nodes and weights for expectations under `N(0, 1)`.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = (k as f64 / 2.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| (eig.eigenvalues[i] * std::f64::consts::SQRT_2, eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Inclusion probabilities under the probit model with fixed
/// hyperparameters: `P(z_i = 1 | beta) = Phi(x_i' beta / sigma)`,
/// `beta_gamma ~ N(0, tau2 I)`. The integral over `beta_gamma` uses a
/// tensor Gauss-Hermite rule with `order` nodes per coordinate.
pub fn probit_inclusion(x: &DMatrix<f64>, z: &[u8], sigma2: f64, tau2: f64, p0: f64, order: usize) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    let total = models(p)?;
    if z.len() != n {
        return invalid("response length does not match the design");
    }
    if p > 4 {
        return invalid("tensor quadrature is limited to p <= 4");
    }
    let (nodes, weights) = gauss_hermite(order);
    let phi = Normal::standard();
    let (sd, tau) = (sigma2.sqrt(), tau2.sqrt());
    let mut log_post = Vec::with_capacity(total);
    for mask in 0..total {
        let a = members(mask, p);
        let s = a.len();
        let points = order.pow(s as u32);
        let mut terms = Vec::with_capacity(points);
        for mut idx in 0..points {
            let mut beta = vec![0.0; s];
            let mut lw = 0.0;
            for b in beta.iter_mut() {
                *b = tau * nodes[idx % order];
                lw += weights[idx % order].ln();
                idx /= order;
            }
            let mut ll = 0.0;
            for i in 0..n {
                let eta: f64 = a.iter().zip(&beta).map(|(&j, b)| x[(i, j)] * b).sum::<f64>() / sd;
                let sign = if z[i] == 1 { 1.0 } else { -1.0 };
                ll += phi.cdf(sign * eta).max(f64::MIN_POSITIVE).ln();
            }
            terms.push(lw + ll);
        }
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lik = top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln();
        log_post.push((p - s) as f64 * p0.ln() + s as f64 * (1.0 - p0).ln() + lik);
    }
    let post = normalize(&log_post);
    Ok((0..p).map(|j| set_inclusion(&post, &[j as u32])).collect())
}
