//! Blocked Gibbs samplers for spike-and-slab linear and probit regression.

mod block;
pub mod exact;
mod truncnorm;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta as BetaDist, ContinuousCDF};

pub use block::{conditional_beta, subset_log_weights, subset_probabilities};
pub use truncnorm::sample_truncated_normal;

use crate::error::{invalid, Error, Result};
use crate::pips::DiscreteSamples;

/// Attempts at rejection sampling the truncated Beta before switching to
/// inverse-CDF sampling.
const P0_REJECTION_CAP: usize = 10_000;
/// Iterations between exact recomputations of the residual.
const RESIDUAL_REFRESH: usize = 100;

/// Hyperparameters of the spike-and-slab prior: either fixed values or
/// hyperpriors `sigma2 ~ IG(a_sigma, b_sigma)`, `tau2 ~ IG(a_tau, b_tau)`
/// and `p0 ~ Beta(a0, b0)` truncated to `[p_min, 1]`. `p0` is the prior
/// probability that a coefficient is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyper {
    Fixed { sigma2: f64, tau2: f64, p0: f64 },
    Hierarchical { a_sigma: f64, b_sigma: f64, a_tau: f64, b_tau: f64, a0: f64, b0: f64, p_min: f64 },
}

impl Hyper {
    /// The uninformative hyperpriors (2, 1, 2, 1, 1, 1, 0.9).
    pub fn misspecified() -> Self {
        Hyper::Hierarchical { a_sigma: 2.0, b_sigma: 1.0, a_tau: 2.0, b_tau: 1.0, a0: 1.0, b0: 1.0, p_min: 0.9 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Hyper::Fixed { sigma2, tau2, p0 } => {
                if !(sigma2 > 0.0 && tau2 > 0.0 && sigma2.is_finite() && tau2.is_finite()) {
                    return invalid("sigma2 and tau2 must be positive");
                }
                if !(0.0..=1.0).contains(&p0) {
                    return invalid(format!("p0 = {p0} outside [0,1]"));
                }
            }
            Hyper::Hierarchical { a_sigma, b_sigma, a_tau, b_tau, a0, b0, p_min } => {
                if [a_sigma, b_sigma, a_tau, b_tau, a0, b0].iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return invalid("hyperprior parameters must be positive");
                }
                if !(0.0..1.0).contains(&p_min) {
                    return invalid(format!("p_min = {p_min} outside [0,1)"));
                }
            }
        }
        Ok(())
    }

    fn initial(&self) -> (f64, f64, f64) {
        match *self {
            Hyper::Fixed { sigma2, tau2, p0 } => (sigma2, tau2, p0),
            Hyper::Hierarchical { a_sigma, b_sigma, a_tau, b_tau, a0, b0, p_min } => {
                let ig_mean = |a: f64, b: f64| if a > 1.0 { b / (a - 1.0) } else { b };
                (ig_mean(a_sigma, b_sigma), ig_mean(a_tau, b_tau), truncated_beta_mean(a0, b0, p_min))
            }
        }
    }
}

fn truncated_beta_mean(a: f64, b: f64, lo: f64) -> f64 {
    // midpoint rule on the unnormalized density
    let n = 2000;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let t = lo + (1.0 - lo) * (i as f64 + 0.5) / n as f64;
        let w = ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln()).exp();
        num += t * w;
        den += w;
    }
    num / den
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LssConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub block_size: usize,
    pub chains: usize,
    pub seed: u64,
    pub hyper: Hyper,
    /// Start each chain from a random active set drawn from the prior.
    pub random_init: bool,
    /// Keep the full coefficient (and latent) trace.
    pub keep_trace: bool,
}

impl Default for LssConfig {
    fn default() -> Self {
        LssConfig {
            n_iter: 2000,
            burn_in: 200,
            block_size: 5,
            chains: 1,
            seed: 0,
            hyper: Hyper::misspecified(),
            random_init: false,
            keep_trace: false,
        }
    }
}

impl LssConfig {
    pub fn misspecified() -> Self {
        LssConfig::default()
    }

    /// Hyperparameters fixed at their true values.
    pub fn well_specified(sigma2: f64, tau2: f64, p0: f64) -> Self {
        LssConfig { hyper: Hyper::Fixed { sigma2, tau2, p0 }, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.burn_in >= self.n_iter {
            return invalid(format!("need 0 <= burn_in < n_iter, got {} and {}", self.burn_in, self.n_iter));
        }
        if self.block_size == 0 || self.block_size > 16 {
            return invalid("block size must lie in 1..=16");
        }
        if self.chains == 0 {
            return invalid("need at least one chain");
        }
        self.hyper.validate()
    }
}

#[derive(Clone, Debug)]
pub struct GibbsOutput {
    /// Post-burn-in supports `{j : beta_j != 0}`, chains concatenated in order.
    pub samples: DiscreteSamples,
    /// Post-burn-in coefficient vectors (only with `keep_trace`).
    pub beta: Vec<Vec<f64>>,
    /// Post-burn-in latent responses of the probit sampler (only with `keep_trace`).
    pub latent: Vec<Vec<f64>>,
    pub sigma2: Vec<f64>,
    pub tau2: Vec<f64>,
    pub p0: Vec<f64>,
    /// Largest residual drift seen at the periodic exact recomputations.
    pub max_residual_drift: f64,
}

enum Response<'a> {
    Linear(&'a [f64]),
    Probit(&'a [bool]),
}

fn check_design(x: &DMatrix<f64>, n_resp: usize) -> Result<()> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return invalid("design must have at least one row and one column");
    }
    if n != n_resp {
        return invalid(format!("design has {n} rows but the response has {n_resp} entries"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("design has non-finite entries");
    }
    Ok(())
}

/// Linear spike-and-slab sampler.
pub fn lss_gibbs(x: &DMatrix<f64>, y: &[f64], config: &LssConfig) -> Result<GibbsOutput> {
    config.validate()?;
    check_design(x, y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return invalid("response has non-finite entries");
    }
    run_chains(x, Response::Linear(y), config)
}

/// Probit spike-and-slab sampler with latent Gaussian responses.
pub fn pss_gibbs(x: &DMatrix<f64>, z: &[u8], config: &LssConfig) -> Result<GibbsOutput> {
    config.validate()?;
    check_design(x, z.len())?;
    if z.iter().any(|&v| v > 1) {
        return invalid("binary response must be 0 or 1");
    }
    let z: Vec<bool> = z.iter().map(|&v| v == 1).collect();
    run_chains(x, Response::Probit(&z), config)
}

fn run_chains(x: &DMatrix<f64>, resp: Response<'_>, config: &LssConfig) -> Result<GibbsOutput> {
    let chains: Vec<Result<ChainOut>> = (0..config.chains)
        .into_par_iter()
        .map(|c| Chain::new(x, &resp, config, c as u64).run())
        .collect();
    let mut out = GibbsOutput {
        samples: DiscreteSamples::new(x.ncols(), Vec::new(), None)?,
        beta: Vec::new(),
        latent: Vec::new(),
        sigma2: Vec::new(),
        tau2: Vec::new(),
        p0: Vec::new(),
        max_residual_drift: 0.0,
    };
    let mut draws = Vec::new();
    let mut labels = Vec::new();
    for (c, ch) in chains.into_iter().enumerate() {
        let ch = ch?;
        labels.extend(std::iter::repeat_n(Some(c as u32), ch.support.len()));
        draws.extend(ch.support);
        out.beta.extend(ch.beta);
        out.latent.extend(ch.latent);
        out.sigma2.extend(ch.sigma2);
        out.tau2.extend(ch.tau2);
        out.p0.extend(ch.p0);
        out.max_residual_drift = out.max_residual_drift.max(ch.drift);
    }
    out.samples = DiscreteSamples::new(x.ncols(), draws, Some(labels))?;
    Ok(out)
}

#[derive(Default)]
struct ChainOut {
    support: Vec<Vec<u32>>,
    beta: Vec<Vec<f64>>,
    latent: Vec<Vec<f64>>,
    sigma2: Vec<f64>,
    tau2: Vec<f64>,
    p0: Vec<f64>,
    drift: f64,
}

struct Chain<'a> {
    x: &'a DMatrix<f64>,
    resp: &'a Response<'a>,
    cfg: &'a LssConfig,
    rng: ChaCha8Rng,
    n: usize,
    p: usize,
    k: usize,
    /// `band[j * k + d] = X_j' X_{j + d}`
    band: Vec<f64>,
    y: Vec<f64>,
    r: Vec<f64>,
    beta: Vec<f64>,
    sigma2: f64,
    tau2: f64,
    p0: f64,
}

impl<'a> Chain<'a> {
    fn new(x: &'a DMatrix<f64>, resp: &'a Response<'a>, cfg: &'a LssConfig, chain: u64) -> Self {
        let (n, p) = x.shape();
        let k = cfg.block_size.min(p);
        let mut band = vec![0.0; p * k];
        for j in 0..p {
            for d in 0..k.min(p - j) {
                band[j * k + d] = x.column(j).dot(&x.column(j + d));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(chain);
        let y = match resp {
            Response::Linear(y) => y.to_vec(),
            Response::Probit(z) => z.iter().map(|&b| if b { 0.5 } else { -0.5 }).collect(),
        };
        let (sigma2, tau2, p0) = cfg.hyper.initial();
        Chain { x, resp, cfg, rng, n, p, k, band, r: y.clone(), y, beta: vec![0.0; p], sigma2, tau2, p0 }
    }

    fn gram(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.band[a * self.k + (b - a)]
    }

    fn col_dot_r(&self, j: usize) -> f64 {
        let col = &self.x.as_slice()[j * self.n..(j + 1) * self.n];
        col.iter().zip(&self.r).map(|(a, b)| a * b).sum()
    }

    fn add_col(&mut self, j: usize, scale: f64) {
        if scale == 0.0 {
            return;
        }
        let col = &self.x.as_slice()[j * self.n..(j + 1) * self.n];
        for (ri, &xi) in self.r.iter_mut().zip(col) {
            *ri += scale * xi;
        }
    }

    fn exact_residual(&self) -> Vec<f64> {
        let mut r = self.y.clone();
        for j in 0..self.p {
            if self.beta[j] != 0.0 {
                let col = &self.x.as_slice()[j * self.n..(j + 1) * self.n];
                for (ri, &xi) in r.iter_mut().zip(col) {
                    *ri -= self.beta[j] * xi;
                }
            }
        }
        r
    }

    fn resample_latent(&mut self, z: &[bool]) -> Result<()> {
        for i in 0..self.n {
            let mu = self.y[i] - self.r[i];
            let (lo, hi) = if z[i] { (0.0, f64::INFINITY) } else { (f64::NEG_INFINITY, 0.0) };
            let v = sample_truncated_normal(mu, self.sigma2, lo, hi, &mut self.rng)?;
            self.r[i] += v - self.y[i];
            self.y[i] = v;
        }
        Ok(())
    }

    fn update_block(&mut self, start: usize, end: usize) -> Result<()> {
        if let Response::Probit(z) = self.resp {
            self.resample_latent(z)?;
        }
        let m = end - start;
        for j in start..end {
            self.add_col(j, self.beta[j]);
        }
        let xtr: Vec<f64> = (start..end).map(|j| self.col_dot_r(j)).collect();
        let mut gram = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                gram[a * m + b] = self.gram(start + a, start + b);
            }
        }
        let probs = subset_probabilities(&gram, &xtr, m, self.sigma2, self.tau2, self.p0);
        let u: f64 = self.rng.random();
        let mut mask = probs.len() - 1;
        let mut acc = 0.0;
        for (i, &pr) in probs.iter().enumerate() {
            acc += pr;
            if u < acc {
                mask = i;
                break;
            }
        }
        let active: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        for j in start..end {
            self.beta[j] = 0.0;
        }
        if !active.is_empty() {
            let s = active.len();
            let ga: Vec<f64> = active.iter().flat_map(|&a| active.iter().map(move |&b| (a, b))).map(|(a, b)| gram[a * m + b]).collect();
            let ca: Vec<f64> = active.iter().map(|&a| xtr[a]).collect();
            let (l, mean) = block::conditional_factor(&ga, &ca, s, self.sigma2, self.tau2)
                .ok_or_else(|| Error::Internal("block posterior precision is not positive definite".into()))?;
            let mut e: Vec<f64> = (0..s).map(|_| StandardNormal.sample(&mut self.rng)).collect();
            block::backward(&l, s, &mut e);
            for (t, &a) in active.iter().enumerate() {
                self.beta[start + a] = mean[t] + e[t];
            }
        }
        for j in start..end {
            self.add_col(j, -self.beta[j]);
        }
        Ok(())
    }

    fn update_hyper(&mut self) -> Result<()> {
        let Hyper::Hierarchical { a_sigma, b_sigma, a_tau, b_tau, a0, b0, p_min } = self.cfg.hyper else {
            return Ok(());
        };
        let active = self.beta.iter().filter(|b| **b != 0.0).count();
        let ss: f64 = self.beta.iter().map(|b| b * b).sum();
        self.tau2 = inv_gamma(active as f64 / 2.0 + a_tau, 0.5 * ss + b_tau, &mut self.rng)?;
        let rr: f64 = self.r.iter().map(|v| v * v).sum();
        self.sigma2 = inv_gamma(self.n as f64 / 2.0 + a_sigma, 0.5 * rr + b_sigma, &mut self.rng)?;
        self.p0 = truncated_beta(a0 + (self.p - active) as f64, b0 + active as f64, p_min, &mut self.rng)?;
        Ok(())
    }

    fn run(mut self) -> Result<ChainOut> {
        let cfg = self.cfg;
        let mut out = ChainOut::default();
        if cfg.random_init {
            for j in 0..self.p {
                if self.rng.random::<f64>() >= self.p0 {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    self.beta[j] = z * self.tau2.sqrt();
                    self.add_col(j, -self.beta[j]);
                }
            }
        }
        for iter in 0..cfg.n_iter {
            let shift = self.rng.random_range(0..self.k);
            let mut start = 0;
            let mut end = if shift == 0 { self.k } else { shift };
            while start < self.p {
                let e = end.min(self.p);
                self.update_block(start, e)?;
                start = e;
                end = start + self.k;
            }
            self.update_hyper()?;
            if (iter + 1) % RESIDUAL_REFRESH == 0 {
                let exact = self.exact_residual();
                let drift = exact.iter().zip(&self.r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                out.drift = out.drift.max(drift);
                self.r = exact;
            }
            if iter >= cfg.burn_in {
                out.support.push((0..self.p as u32).filter(|&j| self.beta[j as usize] != 0.0).collect());
                out.sigma2.push(self.sigma2);
                out.tau2.push(self.tau2);
                out.p0.push(self.p0);
                if cfg.keep_trace {
                    out.beta.push(self.beta.clone());
                    if matches!(self.resp, Response::Probit(_)) {
                        out.latent.push(self.y.clone());
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Draw from the inverse-Gamma distribution with shape `a` and scale `b`.
pub fn inv_gamma<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(a, 1.0 / b).map_err(|e| Error::Validation(format!("inverse gamma ({a}, {b}): {e}")))?;
    Ok(1.0 / g.sample(rng))
}

/// Draw from `Beta(a, b)` truncated to `[lo, 1]`: rejection first, then
/// inverse-CDF sampling.
pub fn truncated_beta<R: Rng + ?Sized>(a: f64, b: f64, lo: f64, rng: &mut R) -> Result<f64> {
    let beta = Beta::new(a, b).map_err(|e| Error::Validation(format!("beta ({a}, {b}): {e}")))?;
    for _ in 0..P0_REJECTION_CAP {
        let v = beta.sample(rng);
        if v >= lo {
            return Ok(v);
        }
    }
    // 1 - v ~ Beta(b, a) truncated to [0, 1 - lo]; the lower tail keeps precision
    let dist = BetaDist::new(b, a).map_err(|e| Error::Validation(format!("beta ({b}, {a}): {e}")))?;
    let top = dist.cdf(1.0 - lo);
    let u = top * rng.random::<f64>();
    Ok((1.0 - dist.inverse_cdf(u)).clamp(lo, 1.0))
}

#[cfg(test)]
mod tests;
