//! Conditional distributions of one block of coefficients given the rest,
//! in terms of the block Gram matrix `G = X_J' X_J` and `c = X_J' r`.

/// In-place Cholesky factorization of the `m x m` row-major matrix `a`
/// (lower triangle). Returns `false` if `a` is not positive definite.
pub(crate) fn cholesky(a: &mut [f64], m: usize) -> bool {
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= a[j * m + k] * a[j * m + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
    }
    true
}

/// Solves `L v = b` in place for lower-triangular `L`.
pub(crate) fn forward(l: &[f64], m: usize, b: &mut [f64]) {
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * m + k] * b[k];
        }
        b[i] = s / l[i * m + i];
    }
}

/// Solves `L' v = b` in place for lower-triangular `L`.
pub(crate) fn backward(l: &[f64], m: usize, b: &mut [f64]) {
    for i in (0..m).rev() {
        let mut s = b[i];
        for k in i + 1..m {
            s -= l[k * m + i] * b[k];
        }
        b[i] = s / l[i * m + i];
    }
}

fn members(mask: usize, m: usize) -> Vec<usize> {
    (0..m).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Unnormalized log probabilities of every active set `A` of the block,
/// indexed by bit mask:
/// `(m - |A|) ln p0 + |A| ln(1 - p0) - ln det(Q_A) / 2
///  + tau2 / (2 sigma2^2) c_A' Q_A^{-1} c_A` with
/// `Q_A = I + (tau2 / sigma2) G_A`.
pub fn subset_log_weights(gram: &[f64], xtr: &[f64], m: usize, sigma2: f64, tau2: f64, p0: f64) -> Vec<f64> {
    let ratio = tau2 / sigma2;
    let (lp0, lp1) = (p0.ln(), (1.0 - p0).ln());
    let mut out = Vec::with_capacity(1 << m);
    let mut q = Vec::with_capacity(m * m);
    let mut v = Vec::with_capacity(m);
    for mask in 0..1usize << m {
        let a = members(mask, m);
        let s = a.len();
        let prior = (m - s) as f64 * lp0 + s as f64 * lp1;
        if s == 0 {
            out.push(prior);
            continue;
        }
        q.clear();
        for &i in &a {
            for &j in &a {
                q.push(ratio * gram[i * m + j] + if i == j { 1.0 } else { 0.0 });
            }
        }
        if !cholesky(&mut q, s) {
            out.push(f64::NEG_INFINITY);
            continue;
        }
        v.clear();
        v.extend(a.iter().map(|&i| xtr[i]));
        forward(&q, s, &mut v);
        let quad: f64 = v.iter().map(|t| t * t).sum();
        let half_logdet: f64 = (0..s).map(|i| q[i * s + i].ln()).sum();
        out.push(prior - half_logdet + 0.5 * tau2 / (sigma2 * sigma2) * quad);
    }
    out
}

/// Normalized version of [`subset_log_weights`].
pub fn subset_probabilities(gram: &[f64], xtr: &[f64], m: usize, sigma2: f64, tau2: f64, p0: f64) -> Vec<f64> {
    let lw = subset_log_weights(gram, xtr, m, sigma2, tau2, p0);
    normalize_log(&lw)
}

pub(crate) fn normalize_log(lw: &[f64]) -> Vec<f64> {
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|&l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Posterior precision factor of `beta_A` given the active set: returns the
/// Cholesky factor `L` of `P = G_A / sigma2 + I / tau2` (row-major, lower)
/// and the mean `P^{-1} c_A / sigma2`.
pub(crate) fn conditional_factor(gram_a: &[f64], xtr_a: &[f64], s: usize, sigma2: f64, tau2: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut p: Vec<f64> = gram_a.iter().map(|g| g / sigma2).collect();
    for i in 0..s {
        p[i * s + i] += 1.0 / tau2;
    }
    if !cholesky(&mut p, s) {
        return None;
    }
    let mut mean: Vec<f64> = xtr_a.iter().map(|c| c / sigma2).collect();
    forward(&p, s, &mut mean);
    backward(&p, s, &mut mean);
    Some((p, mean))
}

/// Mean and covariance (row-major) of `beta_A` given the active set, the
/// residual without the block and the hyperparameters.
pub fn conditional_beta(gram_a: &[f64], xtr_a: &[f64], s: usize, sigma2: f64, tau2: f64) -> (Vec<f64>, Vec<f64>) {
    let (l, mean) = conditional_factor(gram_a, xtr_a, s, sigma2, tau2).expect("precision is positive definite");
    let mut cov = vec![0.0; s * s];
    for j in 0..s {
        let mut e = vec![0.0; s];
        e[j] = 1.0;
        forward(&l, s, &mut e);
        backward(&l, s, &mut e);
        for i in 0..s {
            cov[i * s + j] = e[i];
        }
    }
    (mean, cov)
}
