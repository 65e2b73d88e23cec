//! Resolution-adaptive selection: assembles the discovery LP from candidate
//! groups, solves its relaxation, repairs the few non-integer variables and
//! reports a certified set of disjoint discoveries.

mod certify;
mod f1;
mod fwer;

use std::collections::{BTreeMap, HashSet};

use log::debug;
use serde::{Deserialize, Serialize};

pub use certify::{certify, error_budget_used, CertificateReport, DEFAULT_GAP_THRESHOLD};
pub use f1::{f1_score, maximize_f1, F1Result};
pub use fwer::{empirical_fwer, run_fwer, FwerMode};

use crate::ecc::{build_intersection_graph, clique_constraints, edge_clique_cover};
use crate::error::{invalid, Error, Result};
use crate::lp::{
    improve_integer, is_integral, overlap_neighborhood, randomized_rounding, solve_relaxed, solve_residual_integer,
    LpProblem, LpRow, LpStatus, BRANCH_AND_BOUND_CAP, DEFAULT_N_SAMPLE,
};
use crate::preprocess::{prefilter_groups, prenarrow, DEFAULT_FDR_KAPPA};
use crate::types::{CandidateGroup, DetectionSet, Discovery, ErrorRateSpec, RepairMethod, SolveStats, WeightFn};

/// Default size limit for the exact refinement pass.
pub const DEFAULT_REFINE_MAX_VARS: usize = 64;
/// Default node budget for the neighbourhood search.
pub const DEFAULT_NEIGHBORHOOD_NODES: usize = 2000;
/// Groups whose rows overlap a selected or relaxed-support group at least
/// this much (Jaccard) join the neighbourhood search.
const NEIGHBORHOOD_JACCARD: f64 = 0.5;

/// How disjointness between selected groups is encoded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disjointness {
    /// Per-location rows for index sets, clique rows for continuous regions.
    #[default]
    Auto,
    PerLocation,
    Clique,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlipOptions {
    /// Drop groups below the PIP floor of the error rate (always applied
    /// under local FDR, where the floor defines the constraint).
    pub prefilter: bool,
    /// PIP threshold for dropping groups under FDR control.
    pub kappa_group: f64,
    /// Apply pre-narrowing under FDR and local FDR.
    pub prenarrow: bool,
    /// Pre-narrowing level; `None` means `q / 2`.
    pub prenarrow_alpha: Option<f64>,
    pub disjointness: Disjointness,
    /// Seed for the randomized rounding fallback.
    pub seed: u64,
    pub n_sample: usize,
    pub gap_threshold: f64,
    /// Problems with at most this many variables that finish with a gap
    /// are re-solved by exact integer search over all variables.
    pub refine_max_vars: usize,
    /// Node budget for the neighbourhood search run on larger problems that
    /// finish with a gap; 0 disables it.
    #[serde(default = "default_neighborhood_nodes")]
    pub neighborhood_nodes: usize,
}

fn default_neighborhood_nodes() -> usize {
    DEFAULT_NEIGHBORHOOD_NODES
}

impl Default for BlipOptions {
    fn default() -> Self {
        BlipOptions {
            prefilter: true,
            kappa_group: DEFAULT_FDR_KAPPA,
            prenarrow: true,
            prenarrow_alpha: None,
            disjointness: Disjointness::Auto,
            seed: 0,
            n_sample: DEFAULT_N_SAMPLE,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            refine_max_vars: DEFAULT_REFINE_MAX_VARS,
            neighborhood_nodes: DEFAULT_NEIGHBORHOOD_NODES,
        }
    }
}

impl BlipOptions {
    /// No data-dependent pruning: the LP sees every candidate group.
    pub fn exact() -> Self {
        BlipOptions { prefilter: false, kappa_group: 0.0, prenarrow: false, ..Default::default() }
    }
}

/// Disjointness rows over `groups` (variables indexed by position).
pub fn disjointness_rows(groups: &[CandidateGroup], mode: Disjointness) -> Result<Vec<LpRow>> {
    if groups.is_empty() {
        return Ok(Vec::new());
    }
    let discrete = groups[0].region.is_discrete();
    if groups.iter().any(|g| g.region.is_discrete() != discrete) {
        return invalid("cannot mix discrete and continuous groups");
    }
    let per_location = match mode {
        Disjointness::Auto => discrete,
        Disjointness::PerLocation if !discrete => {
            return Err(Error::Unsupported("per-location rows need index-set groups".into()))
        }
        Disjointness::PerLocation => true,
        Disjointness::Clique => false,
    };
    if per_location {
        let mut by_location: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, g) in groups.iter().enumerate() {
            for &j in g.region.index_slice().unwrap() {
                by_location.entry(j).or_default().push(i);
            }
        }
        Ok(by_location
            .into_values()
            .filter(|v| v.len() >= 2)
            .map(|v| LpRow::new(v.into_iter().map(|i| (i, 1.0)).collect(), 1.0))
            .collect())
    } else {
        let graph = build_intersection_graph(groups)?;
        let cover = edge_clique_cover(&graph);
        debug!("clique cover: {} cliques, {} operations", cover.cliques.len(), cover.operations);
        clique_constraints(&cover.cliques, groups)
    }
}

/// The discovery LP: maximize `sum p_G w(G) x_G` subject to the error-rate
/// row and the disjointness rows. Variables follow the order of `groups`.
pub fn assemble_problem(
    groups: &[CandidateGroup],
    weight_fn: &WeightFn,
    spec: &ErrorRateSpec,
    mode: Disjointness,
) -> Result<LpProblem> {
    spec.validate()?;
    let mut pips = Vec::with_capacity(groups.len());
    let mut objective = Vec::with_capacity(groups.len());
    for g in groups {
        let p = g.pip_or_err()?;
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("pip {p} of group {} outside [0,1]", g.id));
        }
        pips.push(p);
        objective.push(p * weight_fn.weight(g)?);
    }
    let mut lp = LpProblem::new(objective);
    lp.names = groups.iter().map(|g| format!("g{}", g.id)).collect();
    match *spec {
        ErrorRateSpec::Fdr { q } => {
            lp.add_row(pips.iter().enumerate().map(|(j, &p)| (j, (1.0 - q) - p)).collect(), 0.0);
        }
        ErrorRateSpec::Pfer { v } => {
            lp.add_row(pips.iter().enumerate().map(|(j, &p)| (j, 1.0 - p)).collect(), v);
        }
        ErrorRateSpec::Fwer { q, .. } => {
            lp.add_row(pips.iter().enumerate().map(|(j, &p)| (j, 1.0 - p)).collect(), q);
        }
        ErrorRateSpec::LocalFdr { q } => {
            if let Some(g) = groups.iter().zip(&pips).find(|(_, &p)| p < 1.0 - q) {
                return invalid(format!("group {} has pip below the local FDR floor", g.0.id));
            }
        }
    }
    lp.rows.extend(disjointness_rows(groups, mode)?);
    Ok(lp)
}

/// Solves the selection problem for `groups` (each carrying its PIP) under
/// `spec`. FWER control is handled by [`run_fwer`] without samples.
pub fn run_blip(
    groups: &[CandidateGroup],
    weight_fn: &WeightFn,
    spec: &ErrorRateSpec,
    opts: &BlipOptions,
) -> Result<DetectionSet> {
    spec.validate()?;
    if let ErrorRateSpec::Fwer { q, grid_tol } = *spec {
        return run_fwer(groups, weight_fn, q, grid_tol, FwerMode::Expectation, None, opts);
    }
    solve_spec(groups, weight_fn, spec, opts)
}

pub(crate) fn solve_spec(
    groups: &[CandidateGroup],
    weight_fn: &WeightFn,
    spec: &ErrorRateSpec,
    opts: &BlipOptions,
) -> Result<DetectionSet> {
    spec.validate()?;
    let mut seen = HashSet::new();
    for g in groups {
        g.validate()?;
        g.pip_or_err()?;
        if !seen.insert(g.id) {
            return invalid(format!("duplicate group id {}", g.id));
        }
    }
    let mut flags = Vec::new();
    let mut work = if opts.prefilter || matches!(spec, ErrorRateSpec::LocalFdr { .. }) {
        prefilter_groups(groups.to_vec(), spec, opts.kappa_group)?
    } else {
        groups.to_vec()
    };
    if opts.prenarrow {
        if let ErrorRateSpec::Fdr { q } | ErrorRateSpec::LocalFdr { q } = *spec {
            let alpha = opts.prenarrow_alpha.unwrap_or(q / 2.0);
            work = prenarrow(work, q, alpha, weight_fn)?;
        }
    }
    for g in &mut work {
        g.weight = Some(weight_fn.weight(g)?);
    }
    if work.is_empty() {
        let mut det = DetectionSet::empty(*spec);
        det.stats.flags.push("no_candidate_groups".into());
        return Ok(det);
    }

    let lp = assemble_problem(&work, weight_fn, spec, opts.disjointness)?;
    let relaxed = solve_relaxed(&lp)?;
    if relaxed.status != LpStatus::Optimal {
        return Err(Error::Internal("relaxed LP reported infeasible although x = 0 is feasible".into()));
    }
    let pips: Vec<f64> = work.iter().map(|g| g.pip.unwrap()).collect();
    let mut free: Vec<usize> = (0..lp.n_vars()).filter(|&j| !is_integral(relaxed.values[j])).collect();
    let n_nonintegers = free.len();
    let mut ones: Vec<usize> = (0..lp.n_vars()).filter(|&j| is_integral(relaxed.values[j]) && relaxed.values[j] > 0.5).collect();
    let mut backtracks = 0;
    let (mut values, mut repair) = loop {
        if free.len() > BRANCH_AND_BOUND_CAP {
            let r = randomized_rounding(&lp, &relaxed.values, &pips, opts.seed, opts.n_sample)?;
            break (r.values, RepairMethod::RandomizedRounding);
        }
        let fixed: Vec<(usize, bool)> = ones.iter().map(|&j| (j, true)).collect();
        let sol = solve_residual_integer(&lp, &fixed, &free)?;
        if sol.feasible {
            if !sol.proven_optimal {
                flags.push("branch_and_bound_node_limit".into());
            }
            let method = if free.is_empty() { RepairMethod::None } else { sol.method };
            break (sol.values, method);
        }
        // move the least probable fixed discovery into the free set
        let k = (0..ones.len())
            .min_by(|&a, &b| pips[ones[a]].total_cmp(&pips[ones[b]]).then(ones[a].cmp(&ones[b])))
            .ok_or_else(|| Error::Internal("no feasible integer point although x = 0 is feasible".into()))?;
        free.push(ones.remove(k));
        backtracks += 1;
    };
    let found = lp.objective_value(&values);
    let bound_gap = relaxed.objective - found;
    if lp.n_vars() <= opts.refine_max_vars && bound_gap > 1e-12 * relaxed.objective.abs().max(1.0) {
        let all: Vec<usize> = (0..lp.n_vars()).collect();
        let sol = solve_residual_integer(&lp, &[], &all)?;
        if sol.feasible && sol.objective > found + 1e-12 {
            debug!("full integer search improved {found} to {}", sol.objective);
            values = sol.values;
            repair = sol.method;
            flags.push("refined_by_full_search".into());
        }
    } else if opts.neighborhood_nodes > 0 && bound_gap > 1e-12 * relaxed.objective.abs().max(1.0) {
        let seeds: Vec<usize> =
            (0..lp.n_vars()).filter(|&j| values[j] > 0.5 || relaxed.values[j] > 0.0).collect();
        let free = overlap_neighborhood(&lp, &seeds, NEIGHBORHOOD_JACCARD, BRANCH_AND_BOUND_CAP);
        let sol = improve_integer(&lp, &free, &values, opts.neighborhood_nodes)?;
        if sol.objective > found + 1e-12 {
            debug!("neighbourhood search over {} groups improved {found} to {}", free.len(), sol.objective);
            values = sol.values;
            flags.push("refined_by_neighborhood_search".into());
        }
    }

    let mut discoveries: Vec<Discovery> = (0..lp.n_vars())
        .filter(|&j| values[j] > 0.5)
        .map(|j| Discovery { group: work[j].clone(), selection_prob: 1.0 })
        .collect();
    discoveries.sort_by_key(|d| d.group.id);
    let objective = discoveries.iter().map(|d| d.pip() * d.weight()).sum();
    let mut relaxed_nz: Vec<_> =
        (0..lp.n_vars()).filter(|&j| relaxed.values[j] > 0.0).map(|j| (work[j].id, relaxed.values[j])).collect();
    relaxed_nz.sort_by_key(|e| e.0);
    let mut det = DetectionSet {
        error_budget_used: error_budget_used(spec, discoveries.iter().map(Discovery::pip)),
        discoveries,
        objective,
        upper_bound: relaxed.objective.max(objective),
        error_spec: *spec,
        relaxed: relaxed_nz,
        stats: SolveStats {
            n_groups: lp.n_vars(),
            n_rows: lp.n_rows(),
            n_nonintegers,
            backtracks,
            repair,
            flags,
        },
    };
    if det.relative_gap() > opts.gap_threshold {
        det.stats.flags.push("gap_exceeds_threshold".into());
    }
    Ok(det)
}
