use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, gen_ark_design, gen_sparse_glm, Link, Truth};
use crate::blip::{run_blip, BlipOptions};
use crate::error::{invalid, Error, Result};
use crate::groups::{contiguous_groups, default_regression_groups, RegressionGroupConfig};
use crate::pips::{pips_from_samples, DiscreteSamples};
use crate::samplers::{lss_gibbs, pss_gibbs, Hyper, LssConfig};
use crate::types::{ErrorRateSpec, WeightFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Sampler with the true hyperparameters, default regression groups.
    Blip,
    /// Sampler with the uninformative hyperpriors, default regression groups.
    BlipMisspec,
    /// True hyperparameters, singleton groups only.
    Singletons,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Blip => "blip",
            Method::BlipMisspec => "blip_misspec",
            Method::Singletons => "singletons",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Fdr,
    LocalFdr,
    Pfer,
    Fwer,
}

impl ErrorKind {
    fn spec(self, q: f64, v: f64) -> ErrorRateSpec {
        match self {
            ErrorKind::Fdr => ErrorRateSpec::Fdr { q },
            ErrorKind::LocalFdr => ErrorRateSpec::LocalFdr { q },
            ErrorKind::Pfer => ErrorRateSpec::Pfer { v },
            ErrorKind::Fwer => ErrorRateSpec::fwer(q),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ErrorKind::Fdr => "fdr",
            ErrorKind::LocalFdr => "local_fdr",
            ErrorKind::Pfer => "pfer",
            ErrorKind::Fwer => "fwer",
        }
    }
}

fn default_k() -> usize {
    5
}
fn default_one() -> f64 {
    1.0
}
fn default_q() -> f64 {
    0.1
}
fn default_iters() -> usize {
    1000
}
fn default_chains() -> usize {
    2
}
fn default_errors() -> Vec<ErrorKind> {
    vec![ErrorKind::Fdr]
}
fn default_methods() -> Vec<Method> {
    vec![Method::Blip, Method::Singletons]
}

/// One point of the scenario grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub p: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    pub s: f64,
    #[serde(default = "default_one")]
    pub tau2: f64,
    #[serde(default = "default_one")]
    pub sigma2: f64,
    #[serde(default)]
    pub link: Link,
    #[serde(default = "default_q")]
    pub q: f64,
    /// PFER budget.
    #[serde(default = "default_one")]
    pub v: f64,
    #[serde(default = "default_errors")]
    pub errors: Vec<ErrorKind>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_iters")]
    pub n_iter: usize,
    /// Defaults to a tenth of `n_iter`.
    pub burn_in: Option<usize>,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_k")]
    pub block_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub replicates: usize,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Validation(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return invalid("need at least one replicate");
        }
        for sc in &self.scenarios {
            if sc.n == 0 || sc.p == 0 {
                return invalid(format!("scenario {}: n and p must be positive", sc.name));
            }
            if sc.methods.is_empty() || sc.errors.is_empty() {
                return invalid(format!("scenario {}: no methods or error rates", sc.name));
            }
            for e in &sc.errors {
                e.spec(sc.q, sc.v).validate()?;
            }
            sampler_config(sc, Method::Blip, 0)?.validate()?;
        }
        Ok(())
    }
}

/// One CSV record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub replicate: usize,
    pub method: String,
    pub error: String,
    pub power: f64,
    pub normalized_power: f64,
    pub fdp: f64,
    pub n_discoveries: usize,
    pub runtime_ms: u64,
}

fn sampler_config(sc: &Scenario, method: Method, seed: u64) -> Result<LssConfig> {
    let hyper = match method {
        Method::BlipMisspec => Hyper::misspecified(),
        Method::Blip | Method::Singletons => {
            let signals = (sc.s * sc.p as f64).ceil().min(sc.p as f64);
            Hyper::Fixed { sigma2: sc.sigma2, tau2: sc.tau2, p0: 1.0 - signals / sc.p as f64 }
        }
    };
    Ok(LssConfig {
        n_iter: sc.n_iter,
        burn_in: sc.burn_in.unwrap_or(sc.n_iter / 10),
        block_size: sc.block_size,
        chains: sc.chains,
        seed,
        hyper,
        random_init: false,
        keep_trace: false,
    })
}

/// Runs every scenario for `replicates` seeded replicates. Rows come out in
/// (scenario, replicate, method, error) order regardless of scheduling. With
/// `record_runtime` unset the runtime column is zero, so output depends only
/// on the seed.
pub fn run_experiment(cfg: &ExperimentConfig, record_runtime: bool) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (si, sc) in cfg.scenarios.iter().enumerate() {
        let reps: Vec<Result<Vec<ResultRow>>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((si as u64) << 32) | r as u64);
                run_replicate(sc, r, &mut rng, record_runtime)
            })
            .collect();
        for rep in reps {
            rows.extend(rep?);
        }
    }
    Ok(rows)
}

fn run_replicate(sc: &Scenario, rep: usize, rng: &mut ChaCha8Rng, record_runtime: bool) -> Result<Vec<ResultRow>> {
    let (design_seed, data_seed, sampler_seed): (u64, u64, u64) = (rng.random(), rng.random(), rng.random());
    let x = gen_ark_design(sc.n, sc.p, sc.k, design_seed)?;
    let data = gen_sparse_glm(&x, sc.s, sc.tau2, sc.sigma2, sc.link, data_seed)?;
    let truth = Truth::Indices(data.signals.clone());
    let wf = WeightFn::InverseSize;
    let opts = BlipOptions::default();

    let mut well: Option<(DiscreteSamples, u128)> = None;
    let mut rows = Vec::new();
    for &method in &sc.methods {
        let cfg = sampler_config(sc, method, sampler_seed)?;
        let start = Instant::now();
        let draw = || -> Result<DiscreteSamples> {
            let out = match sc.link {
                Link::Gaussian => lss_gibbs(&x, data.y.as_deref().unwrap_or_default(), &cfg)?,
                Link::Probit => pss_gibbs(&x, data.z.as_deref().unwrap_or_default(), &cfg)?,
            };
            Ok(out.samples)
        };
        let (samples, sample_ms) = match method {
            Method::BlipMisspec => (draw()?, start.elapsed().as_millis()),
            Method::Blip | Method::Singletons => {
                if well.is_none() {
                    well = Some((draw()?, start.elapsed().as_millis()));
                }
                well.clone().expect("sampled above")
            }
        };
        let t_groups = Instant::now();
        let mut groups = match method {
            Method::Singletons => {
                let all: Vec<u32> = (0..sc.p as u32).collect();
                contiguous_groups(&all, 1)?
            }
            _ => default_regression_groups(&samples, Some(&x), &RegressionGroupConfig::default())?,
        };
        pips_from_samples(&samples, &groups)?.apply(&mut groups, false)?;
        let prep_ms = t_groups.elapsed().as_millis();
        for &err in &sc.errors {
            let t = Instant::now();
            let det = run_blip(&groups, &wf, &err.spec(sc.q, sc.v), &opts)?;
            let ev = evaluate(&det, &truth, &wf, 0.0)?;
            let runtime = sample_ms + prep_ms + t.elapsed().as_millis();
            rows.push(ResultRow {
                scenario: sc.name.clone(),
                replicate: rep,
                method: method.name().to_string(),
                error: err.name().to_string(),
                power: ev.power,
                normalized_power: ev.normalized_power,
                fdp: ev.fdp,
                n_discoveries: det.len(),
                runtime_ms: if record_runtime { runtime as u64 } else { 0 },
            });
        }
    }
    Ok(rows)
}
