//! Shared fixtures for the benchmarks.

use blip_core::groups::{default_regression_groups, RegressionGroupConfig};
use blip_core::pips::{pips_from_samples, DiscreteSamples};
use blip_core::samplers::{lss_gibbs, LssConfig};
use blip_core::sim::{gen_ark_design, gen_sparse_glm, Link};
use blip_core::CandidateGroup;
use nalgebra::DMatrix;

pub struct RegressionFixture {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub samples: DiscreteSamples,
    /// Default regression groups with PIPs attached.
    pub groups: Vec<CandidateGroup>,
}

/// AR(5) design with 5% signals, sampled with the misspecified prior.
pub fn regression_fixture(n: usize, p: usize, n_iter: usize, seed: u64) -> RegressionFixture {
    let x = gen_ark_design(n, p, 5, seed).unwrap();
    let y = gen_sparse_glm(&x, 0.05, 1.0, 1.0, Link::Gaussian, seed + 1).unwrap().y.unwrap();
    let cfg = LssConfig { n_iter, burn_in: n_iter / 10, chains: 1, seed, ..LssConfig::misspecified() };
    let samples = lss_gibbs(&x, &y, &cfg).unwrap().samples;
    let mut groups = default_regression_groups(&samples, Some(&x), &RegressionGroupConfig::default()).unwrap();
    pips_from_samples(&samples, &groups).unwrap().apply(&mut groups, false).unwrap();
    RegressionFixture { x, y, samples, groups }
}
