use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{invalid, Result};

/// One draw from `N(mu, sigma2)` restricted to `(lo, hi)`; either bound may
/// be infinite.
///
/// Standardized bounds `a < b` pick the proposal: plain normal rejection
/// when the interval contains 0 and is wide, a uniform proposal on narrow
/// intervals, and a translated exponential proposal with rate
/// `(a + sqrt(a^2 + 4)) / 2` in the tails.
pub fn sample_truncated_normal<R: Rng + ?Sized>(mu: f64, sigma2: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) || !mu.is_finite() {
        return invalid(format!("need finite mu and sigma2 > 0, got {mu}, {sigma2}"));
    }
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return invalid(format!("truncation interval ({lo}, {hi}) is empty"));
    }
    let sd = sigma2.sqrt();
    let a = (lo - mu) / sd;
    let b = (hi - mu) / sd;
    if a >= b {
        return invalid(format!("truncation interval ({lo}, {hi}) is empty at this scale"));
    }
    Ok(mu + sd * standard(a, b, rng))
}

fn standard<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a > 0.0 {
        positive_side(a, b, rng)
    } else if b < 0.0 {
        -positive_side(-b, -a, rng)
    } else if b - a >= 2.0 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z > a && z < b {
                return z;
            }
        }
    } else {
        uniform(a, b, 0.0, rng)
    }
}

/// `0 < a < b <= inf`.
fn positive_side<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    if b - a < 1.0 / lambda {
        return uniform(a, b, a * a, rng);
    }
    loop {
        let e: f64 = Exp1.sample(rng);
        let z = a + e / lambda;
        if z >= b {
            continue;
        }
        let u: f64 = rng.random();
        if u.ln() <= -0.5 * (z - lambda) * (z - lambda) {
            return z;
        }
    }
}

/// Uniform proposal on `(a, b)`; `rho` is the minimum of `z^2` over the interval.
fn uniform<R: Rng + ?Sized>(a: f64, b: f64, rho: f64, rng: &mut R) -> f64 {
    loop {
        let z = a + (b - a) * rng.random::<f64>();
        let u: f64 = rng.random();
        if u.ln() <= 0.5 * (rho - z * z) {
            return z;
        }
    }
}
