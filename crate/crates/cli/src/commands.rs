use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use blip_core::blip::{run_blip, run_fwer, BlipOptions, FwerMode};
use blip_core::groups::{
    contiguous_groups, correlation_matrix, default_regression_groups, dissimilarity_from_corr, hierarchical_groups,
    lattice_regions, log_spaced, DissimilarityKind, LatticeFamily, LatticeShape, Linkage, RegressionGroupConfig,
};
use blip_core::io;
use blip_core::pips::{pips_continuous, pips_from_samples, pips_from_susie, pips_lattice, BucketLocator, SampleSet};
use blip_core::samplers::{lss_gibbs, pss_gibbs, Hyper, LssConfig};
use blip_core::sim::{evaluate, gen_ark_design, gen_sparse_glm, run_experiment, ExperimentConfig, Link, Truth};
use blip_core::{CandidateGroup, ErrorRateSpec, LocationSpace, WeightFn};
use log::info;
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn finish(mut w: Box<dyn Write>) -> Result<()> {
    w.flush().map_err(blip_core::Error::from)?;
    Ok(())
}

fn parse_locations(s: &str) -> Result<Vec<u32>> {
    let bad = || CliError::Usage(format!("cannot parse locations {s:?}"));
    let mut out: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if b < a {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn parse_floats(s: &str, sep: char) -> Result<Vec<f64>> {
    s.split(sep)
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("cannot parse number {t:?}"))))
        .collect()
}

/// Lattice family description written by `groups lattice`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeSpec {
    space: LocationSpace,
    radii: Vec<f64>,
    shape: LatticeShape,
}

pub fn groups(cmd: GroupsCmd) -> Result<()> {
    match cmd {
        GroupsCmd::Contiguous { locations, p, max_size, out } => {
            let locs = match (locations, p) {
                (Some(s), _) => parse_locations(&s)?,
                (None, Some(p)) => (0..p as u32).collect(),
                (None, None) => return Err(CliError::Usage("give --locations or --p".into())),
            };
            let mut w = create(&out)?;
            io::write_groups(&mut w, &contiguous_groups(&locs, max_size)?)?;
            finish(w)
        }
        GroupsCmd::Cluster { design, linkage, max_size, out } => {
            let x = io::read_matrix_csv(open(&design)?)?;
            let d = dissimilarity_from_corr(&correlation_matrix(&x), DissimilarityKind::AbsOneMinus)?;
            let linkage = match linkage {
                LinkageArg::Single => Linkage::Single,
                LinkageArg::Average => Linkage::Average,
                LinkageArg::Complete => Linkage::Complete,
            };
            let mut w = create(&out)?;
            io::write_groups(&mut w, &hierarchical_groups(&d, linkage, max_size)?)?;
            finish(w)
        }
        GroupsCmd::Lattice { radii_log, radii, dim, bounds, shape, materialize, out } => {
            let radii = match (radii_log, radii) {
                (Some(s), _) => {
                    let parts = parse_floats(&s, ':')?;
                    if parts.len() != 3 || parts[2] < 1.0 || parts[2].fract() != 0.0 {
                        return Err(CliError::Usage("--radii-log takes min:max:count".into()));
                    }
                    log_spaced(parts[0], parts[1], parts[2] as usize)
                }
                (None, Some(s)) => parse_floats(&s, ',')?,
                (None, None) => return Err(CliError::Usage("give --radii-log or --radii".into())),
            };
            let b = parse_floats(&bounds, ':')?;
            if b.len() != 2 {
                return Err(CliError::Usage("--bounds takes lo:hi".into()));
            }
            let space = LocationSpace::continuous(vec![(b[0], b[1]); dim])?;
            let shape = match shape {
                ShapeArg::Sphere => LatticeShape::Sphere,
                ShapeArg::Cube => LatticeShape::Cube,
            };
            let mut w = create(&out)?;
            if materialize {
                let (groups, warnings) = lattice_regions(&space, &radii, shape, None)?;
                for warn in warnings {
                    log::warn!("{}", warn.message);
                }
                io::write_groups(&mut w, &groups)?;
            } else {
                let (family, warnings) = LatticeFamily::new(&space, &radii, shape, &[])?;
                for warn in warnings {
                    log::warn!("{}", warn.message);
                }
                let spec = LatticeSpec { space, radii: family.radii().to_vec(), shape };
                serde_json::to_writer(&mut w, &spec).map_err(|e| blip_core::Error::Internal(e.to_string()))?;
                writeln!(w).map_err(blip_core::Error::from)?;
            }
            finish(w)
        }
        GroupsCmd::DefaultRegression { samples, design, data, max_size, out } => {
            let SampleSet::Discrete(s) = io::read_samples(open(&samples)?, None)? else {
                return Err(blip_core::Error::Validation("default regression groups need discrete samples".into()).into());
            };
            let x = match (design, data) {
                (Some(d), _) => Some(io::read_matrix_csv(open(&d)?)?),
                (None, Some(d)) => Some(io::read_regression_csv(open(&d)?)?.1),
                (None, None) => None,
            };
            let cfg = RegressionGroupConfig { max_size, ..Default::default() };
            let groups = default_regression_groups(&s, x.as_ref(), &cfg)?;
            let mut w = create(&out)?;
            io::write_groups(&mut w, &groups)?;
            finish(w)
        }
    }
}

pub fn pips(args: PipsArgs) -> Result<()> {
    if let Some(lattice) = &args.lattice {
        let spec: LatticeSpec = serde_json::from_str(&read_to_string(lattice)?)
            .map_err(|e| blip_core::Error::Parse { line: e.line(), msg: e.to_string() })?;
        let (family, _) = LatticeFamily::new(&spec.space, &spec.radii, spec.shape, &[])?;
        let path = args.samples.as_ref().expect("clap requires --samples");
        let SampleSet::Continuous(s) = io::read_samples(open(path)?, None)? else {
            return Err(blip_core::Error::Validation("lattice PIPs need continuous samples".into()).into());
        };
        let (groups, table) = pips_lattice(&s, &family)?;
        let table = table.lower_bound(args.lower_bound)?;
        if args.out_groups.is_some() {
            let mut w = create(&args.out_groups)?;
            io::write_groups(&mut w, &groups)?;
            finish(w)?;
        }
        let mut w = create(&args.out)?;
        io::write_pips(&mut w, &table)?;
        return finish(w);
    }
    let groups = io::read_groups(open(args.groups.as_ref().expect("clap requires --groups"))?)?;
    let table = match (&args.samples, &args.susie_alphas) {
        (Some(path), None) => match io::read_samples(open(path)?, None)? {
            SampleSet::Discrete(s) => pips_from_samples(&s, &groups)?,
            SampleSet::Continuous(s) => {
                if groups.iter().any(|g| g.count_interval.is_some()) {
                    return Err(CliError::Usage("count-interval groups are not supported here".into()));
                }
                pips_continuous(&s, &groups, &BucketLocator::new(&groups)?)?
            }
        },
        (None, Some(path)) => pips_from_susie(&io::read_susie_csv(open(path)?)?, &groups)?,
        _ => return Err(CliError::Usage("give exactly one of --samples and --susie-alphas".into())),
    };
    let table = table.lower_bound(args.lower_bound)?;
    let mut w = create(&args.out)?;
    io::write_pips(&mut w, &table)?;
    finish(w)
}

fn weight_fn(arg: WeightArg, groups: &[CandidateGroup]) -> Result<WeightFn> {
    Ok(match arg {
        WeightArg::InverseSize => WeightFn::InverseSize,
        WeightArg::InverseRadius => WeightFn::InverseRadius,
        WeightArg::InverseCountInterval => WeightFn::InverseCountInterval,
        WeightArg::LogInverseSize => WeightFn::LogInverseSize,
        WeightArg::Constant => WeightFn::Constant { c: 1.0 },
        WeightArg::Stored => WeightFn::from_stored(groups)?,
    })
}

pub fn solve(args: SolveArgs) -> Result<()> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| CliError::Usage(format!("--error needs {flag}")));
    let spec = match args.error {
        ErrorArg::Fdr => ErrorRateSpec::Fdr { q: need(args.q, "--q")? },
        ErrorArg::LocalFdr => ErrorRateSpec::LocalFdr { q: need(args.q, "--q")? },
        ErrorArg::Pfer => ErrorRateSpec::Pfer { v: need(args.v, "--v")? },
        ErrorArg::Fwer => ErrorRateSpec::Fwer { q: need(args.q, "--q")?, grid_tol: args.grid_tol },
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if args.fwer_samples.is_some() && args.error != ErrorArg::Fwer {
        return Err(CliError::Usage("--fwer-samples only applies to --error fwer".into()));
    }
    let mut groups = io::read_groups(open(&args.groups)?)?;
    if let Some(p) = &args.pips {
        io::read_pips(open(p)?)?.apply(&mut groups, false)?;
    }
    let wf = weight_fn(args.weight, &groups)?;
    let mut opts = BlipOptions { seed: args.seed.unwrap_or(0), ..Default::default() };
    if args.no_prefilter {
        opts.prefilter = false;
        opts.kappa_group = 0.0;
    }
    if args.no_prenarrow {
        opts.prenarrow = false;
    }
    let det = match (&spec, &args.fwer_samples) {
        (ErrorRateSpec::Fwer { q, grid_tol }, Some(path)) => {
            let samples = io::read_samples(open(path)?, None)?;
            run_fwer(&groups, &wf, *q, *grid_tol, FwerMode::Empirical, Some(&samples), &opts)?
        }
        _ => run_blip(&groups, &wf, &spec, &opts)?,
    };
    eprintln!(
        "discoveries {}  objective {:.6}  upper bound {:.6}  gap {:.3e}  budget {:.6}",
        det.len(),
        det.objective,
        det.upper_bound,
        det.relative_gap(),
        det.error_budget_used
    );
    let mut w = create(&args.out)?;
    io::write_detections(&mut w, &det)?;
    finish(w)
}

pub fn sample(cmd: SampleCmd) -> Result<()> {
    let (probit, args) = match cmd {
        SampleCmd::Lss(a) => (false, a),
        SampleCmd::Pss(a) => (true, a),
    };
    let (y, x) = io::read_regression_csv(open(&args.data)?)?;
    let hyper = match args.preset {
        PresetArg::Misspec => Hyper::misspecified(),
        PresetArg::Well => Hyper::Fixed { sigma2: args.sigma2, tau2: args.tau2, p0: args.p0 },
    };
    let cfg = LssConfig {
        n_iter: args.iters,
        burn_in: args.burnin.unwrap_or(args.iters / 10),
        block_size: args.block_size,
        chains: args.chains,
        seed: args.seed,
        hyper,
        random_init: args.random_init,
        keep_trace: args.trace.is_some(),
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let out = if probit {
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(blip_core::Error::Validation("probit response must be 0 or 1".into()).into());
        }
        let z: Vec<u8> = y.iter().map(|&v| v as u8).collect();
        pss_gibbs(&x, &z, &cfg)?
    } else {
        lss_gibbs(&x, &y, &cfg)?
    };
    info!("max residual drift {:e}", out.max_residual_drift);
    if args.trace.is_some() {
        let m = nalgebra::DMatrix::from_fn(out.beta.len(), x.ncols(), |i, j| out.beta[i][j]);
        let mut w = create(&args.trace)?;
        io::write_matrix_csv(&mut w, &m)?;
        finish(w)?;
    }
    let mut w = create(&args.out)?;
    io::write_samples(&mut w, &SampleSet::Discrete(out.samples))?;
    finish(w)
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let x = gen_ark_design(args.n, args.p, args.k, args.seed)?;
    let link = if args.probit { Link::Probit } else { Link::Gaussian };
    let data = gen_sparse_glm(&x, args.s, args.tau2, args.sigma2, link, args.seed.wrapping_add(1))?;
    let resp: Vec<f64> = match (&data.y, &data.z) {
        (Some(y), _) => y.clone(),
        (None, Some(z)) => z.iter().map(|&v| f64::from(v)).collect(),
        (None, None) => unreachable!("generator returns a response"),
    };
    let m = nalgebra::DMatrix::from_fn(args.n, args.p + 1, |i, j| if j == 0 { resp[i] } else { x[(i, j - 1)] });
    let mut w = create(&Some(args.out))?;
    io::write_matrix_csv(&mut w, &m)?;
    finish(w)?;
    if args.truth.is_some() {
        let mut w = create(&args.truth)?;
        serde_json::to_writer(&mut w, &Truth::Indices(data.signals)).map_err(|e| blip_core::Error::Internal(e.to_string()))?;
        writeln!(w).map_err(blip_core::Error::from)?;
        finish(w)?;
    }
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_toml(&read_to_string(&args.config)?)?;
    let rows = run_experiment(&cfg, !args.no_runtime)?;
    let w = create(&args.out)?;
    let mut wtr = csv::Writer::from_writer(w);
    for r in &rows {
        wtr.serialize(r).map_err(|e| blip_core::Error::Internal(e.to_string()))?;
    }
    wtr.flush().map_err(blip_core::Error::from)?;
    Ok(())
}

#[derive(Serialize)]
struct EvalRow {
    power: f64,
    normalized_power: f64,
    fdp: f64,
    n_true: usize,
    n_false: usize,
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let det = io::read_detections(open(&args.detections)?)?.to_detection_set();
    let truth: Truth = serde_json::from_str(&read_to_string(&args.truth)?)
        .map_err(|e| blip_core::Error::Parse { line: e.line(), msg: e.to_string() })?;
    let groups: Vec<CandidateGroup> = det.discoveries.iter().map(|d| d.group.clone()).collect();
    let wf = weight_fn(args.weight, &groups)?;
    let ev = evaluate(&det, &truth, &wf, args.slack)?;
    let w = create(&args.out)?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.serialize(EvalRow {
        power: ev.power,
        normalized_power: ev.normalized_power,
        fdp: ev.fdp,
        n_true: ev.n_true,
        n_false: ev.n_false,
    })
    .map_err(|e| blip_core::Error::Internal(e.to_string()))?;
    wtr.flush().map_err(blip_core::Error::from)?;
    Ok(())
}
