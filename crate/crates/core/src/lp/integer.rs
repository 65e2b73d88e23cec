use serde::{Deserialize, Serialize};

use super::{is_integral, solve_relaxed, LpProblem, LpStatus, FEASIBILITY_TOL};
use crate::error::{invalid, Result};
use crate::types::RepairMethod;

/// Largest number of free variables solved by exhaustive search.
pub const ENUMERATION_CAP: usize = 20;
/// Largest number of free variables solved by branch and bound.
pub const BRANCH_AND_BOUND_CAP: usize = 200;
const NODE_LIMIT: usize = 20_000;
const ROW_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerSolution {
    /// Full 0/1 assignment (fixed, free and unlisted variables).
    pub values: Vec<f64>,
    pub objective: f64,
    pub feasible: bool,
    pub method: RepairMethod,
    /// False only when branch and bound hit its node limit.
    pub proven_optimal: bool,
}

/// The problem left after substituting fixed values: rows over the free
/// variables only, with adjusted right-hand sides.
struct Residual {
    free: Vec<usize>,
    obj: Vec<f64>,
    // per free variable: (row, coefficient)
    var_rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl Residual {
    fn new(lp: &LpProblem, base: &[f64], free: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; lp.n_vars()];
        for (k, &j) in free.iter().enumerate() {
            pos[j] = k;
        }
        let mut var_rows = vec![Vec::new(); free.len()];
        let mut rhs = Vec::with_capacity(lp.n_rows());
        for (i, r) in lp.rows.iter().enumerate() {
            let mut b = r.rhs;
            for &(j, a) in &r.coeffs {
                if pos[j] != usize::MAX {
                    var_rows[pos[j]].push((i, a));
                } else {
                    b -= a * base[j];
                }
            }
            rhs.push(b);
        }
        Residual { free: free.to_vec(), obj: free.iter().map(|&j| lp.objective[j]).collect(), var_rows, rhs }
    }

    /// LP over the free variables not yet assigned in `assign`.
    fn node_lp(&self, assign: &[Option<bool>]) -> (LpProblem, Vec<usize>) {
        let open: Vec<usize> = (0..self.free.len()).filter(|&k| assign[k].is_none()).collect();
        let mut rhs = self.rhs.clone();
        for (k, a) in assign.iter().enumerate() {
            if *a == Some(true) {
                for &(i, c) in &self.var_rows[k] {
                    rhs[i] -= c;
                }
            }
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rhs.len()];
        for (t, &k) in open.iter().enumerate() {
            for &(i, c) in &self.var_rows[k] {
                rows[i].push((t, c));
            }
        }
        let mut lp = LpProblem::new(open.iter().map(|&k| self.obj[k]).collect());
        for (coeffs, b) in rows.into_iter().zip(rhs) {
            if coeffs.is_empty() {
                if b < -ROW_TOL {
                    // an unsatisfiable constant row
                    lp.add_row(Vec::new(), b);
                }
            } else {
                lp.add_row(coeffs, b);
            }
        }
        (lp, open)
    }
}

/// Optimal 0/1 values for `free` with the variables in `fixed` held at their
/// values; unlisted variables are held at 0. Uses exhaustive search up to
/// [`ENUMERATION_CAP`] free variables and LP-bounded branch and bound up to
/// [`BRANCH_AND_BOUND_CAP`].
pub fn solve_residual_integer(lp: &LpProblem, fixed: &[(usize, bool)], free: &[usize]) -> Result<IntegerSolution> {
    lp.validate()?;
    let n = lp.n_vars();
    let mut base = vec![0.0; n];
    let mut seen = vec![false; n];
    for &(j, v) in fixed {
        if j >= n || seen[j] {
            return invalid(format!("fixed variable {j} is out of range or repeated"));
        }
        seen[j] = true;
        base[j] = if v { 1.0 } else { 0.0 };
    }
    for &j in free {
        if j >= n || seen[j] {
            return invalid(format!("free variable {j} is out of range, repeated or fixed"));
        }
        seen[j] = true;
    }
    if free.len() > BRANCH_AND_BOUND_CAP {
        return invalid(format!(
            "{} free variables exceed the exact-repair cap of {BRANCH_AND_BOUND_CAP}; use randomized rounding",
            free.len()
        ));
    }
    let res = Residual::new(lp, &base, free);
    let (assign, proven, method) = if free.len() <= ENUMERATION_CAP {
        (enumerate(&res), true, RepairMethod::Enumeration)
    } else {
        let (a, proven) = branch_and_bound(&res, None, NODE_LIMIT)?;
        if !proven {
            log::warn!("branch and bound stopped after {NODE_LIMIT} nodes");
        }
        (a, proven, RepairMethod::BranchAndBound)
    };
    let mut values = base;
    let feasible = match assign {
        Some(a) => {
            for (k, &j) in free.iter().enumerate() {
                values[j] = if a[k] { 1.0 } else { 0.0 };
            }
            true
        }
        None => false,
    };
    let objective = if feasible { lp.objective_value(&values) } else { 0.0 };
    Ok(IntegerSolution { values, objective, feasible, method, proven_optimal: proven })
}

fn enumerate(res: &Residual) -> Option<Vec<bool>> {
    let k = res.free.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| res.obj[b].total_cmp(&res.obj[a]).then(a.cmp(&b)));
    let m = res.rhs.len();
    // min_rest[d * m + i]: most negative contribution still available to row i
    let mut min_rest = vec![0.0; (k + 1) * m];
    let mut pos_rest = vec![0.0; k + 1];
    for d in (0..k).rev() {
        let v = order[d];
        min_rest.copy_within((d + 1) * m..(d + 2) * m, d * m);
        for &(i, c) in &res.var_rows[v] {
            if c < 0.0 {
                min_rest[d * m + i] += c;
            }
        }
        pos_rest[d] = pos_rest[d + 1] + res.obj[v].max(0.0);
    }
    let mut search = Dfs {
        res,
        order: &order,
        min_rest: &min_rest,
        pos_rest: &pos_rest,
        activity: vec![0.0; m],
        current: vec![false; k],
        best: None,
    };
    search.visit(0, 0.0);
    search.best.map(|(_, a)| a)
}

struct Dfs<'a> {
    res: &'a Residual,
    order: &'a [usize],
    min_rest: &'a [f64],
    pos_rest: &'a [f64],
    activity: Vec<f64>,
    current: Vec<bool>,
    best: Option<(f64, Vec<bool>)>,
}

impl Dfs<'_> {
    fn visit(&mut self, depth: usize, obj: f64) {
        let m = self.activity.len();
        let rest = &self.min_rest[depth * m..(depth + 1) * m];
        if (0..m).any(|i| self.activity[i] + rest[i] > self.res.rhs[i] + ROW_TOL) {
            return;
        }
        if let Some((b, _)) = &self.best {
            if obj + self.pos_rest[depth] <= *b + 1e-12 {
                return;
            }
        }
        if depth == self.order.len() {
            // every row holds here, since no free coefficients remain
            self.best = Some((obj, self.current.clone()));
            return;
        }
        let v = self.order[depth];
        for choice in [true, false] {
            self.current[v] = choice;
            if choice {
                for &(i, c) in &self.res.var_rows[v] {
                    self.activity[i] += c;
                }
            }
            self.visit(depth + 1, if choice { obj + self.res.obj[v] } else { obj });
            if choice {
                for &(i, c) in &self.res.var_rows[v] {
                    self.activity[i] -= c;
                }
            }
        }
        self.current[v] = false;
    }
}

/// Improves a feasible 0/1 point by LP-bounded branch and bound over
/// `free`, holding every other variable at 0. `incumbent` must be zero off
/// `free`. Stops after `node_limit` nodes; the result is never worse than
/// the incumbent.
pub fn improve_integer(lp: &LpProblem, free: &[usize], incumbent: &[f64], node_limit: usize) -> Result<IntegerSolution> {
    lp.validate()?;
    let n = lp.n_vars();
    if incumbent.len() != n || !lp.is_feasible(incumbent, FEASIBILITY_TOL) {
        return invalid("incumbent is not a feasible point of the problem");
    }
    let mut in_free = vec![false; n];
    for &j in free {
        if j >= n || in_free[j] {
            return invalid(format!("free variable {j} is out of range or repeated"));
        }
        in_free[j] = true;
    }
    if (0..n).any(|j| !in_free[j] && incumbent[j] != 0.0) {
        return invalid("incumbent selects a variable outside the free set");
    }
    let res = Residual::new(lp, &vec![0.0; n], free);
    let start: Vec<bool> = free.iter().map(|&j| incumbent[j] > 0.5).collect();
    let start_obj: f64 = (0..free.len()).filter(|&k| start[k]).map(|k| res.obj[k]).sum();
    let (assign, proven) = branch_and_bound(&res, Some((start_obj, start)), node_limit)?;
    let mut values = vec![0.0; n];
    for (k, on) in assign.expect("incumbent is kept").into_iter().enumerate() {
        values[free[k]] = if on { 1.0 } else { 0.0 };
    }
    Ok(IntegerSolution {
        objective: lp.objective_value(&values),
        values,
        feasible: true,
        method: RepairMethod::BranchAndBound,
        proven_optimal: proven,
    })
}

/// Variables whose packing rows overlap those of some seed with Jaccard
/// index at least `min_jaccard`, seeds first, then by decreasing overlap and
/// objective, truncated to `cap`.
pub fn overlap_neighborhood(lp: &LpProblem, seeds: &[usize], min_jaccard: f64, cap: usize) -> Vec<usize> {
    let n = lp.n_vars();
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, r) in lp.rows.iter().enumerate() {
        if r.is_packing() {
            for &(j, _) in &r.coeffs {
                rows_of[j].push(i);
            }
        }
    }
    let mut chosen = vec![false; n];
    let mut out = Vec::new();
    for &j in seeds {
        if !chosen[j] {
            chosen[j] = true;
            out.push(j);
        }
    }
    let n_seeds = out.len();
    let mut score = vec![0.0f64; n];
    for &s in seeds {
        let a = &rows_of[s];
        if a.is_empty() {
            continue;
        }
        let mut shared = vec![0usize; n];
        for &i in a {
            for &(j, _) in &lp.rows[i].coeffs {
                shared[j] += 1;
            }
        }
        for j in 0..n {
            if shared[j] > 0 && !chosen[j] {
                let jac = shared[j] as f64 / (a.len() + rows_of[j].len() - shared[j]) as f64;
                if jac >= min_jaccard {
                    score[j] = score[j].max(jac);
                }
            }
        }
    }
    let mut rest: Vec<usize> = (0..n).filter(|&j| score[j] > 0.0).collect();
    rest.sort_by(|&a, &b| {
        score[b].total_cmp(&score[a]).then(lp.objective[b].total_cmp(&lp.objective[a])).then(a.cmp(&b))
    });
    out.extend(rest);
    out.truncate(cap.max(n_seeds));
    out
}

fn branch_and_bound(
    res: &Residual,
    incumbent: Option<(f64, Vec<bool>)>,
    node_limit: usize,
) -> Result<(Option<Vec<bool>>, bool)> {
    let k = res.free.len();
    let mut best: Option<(f64, Vec<bool>)> = incumbent;
    let mut nodes = 0usize;
    let mut stack: Vec<Vec<Option<bool>>> = vec![vec![None; k]];
    while let Some(assign) = stack.pop() {
        nodes += 1;
        if nodes > node_limit {
            return Ok((best.map(|b| b.1), false));
        }
        let (node, open) = res.node_lp(&assign);
        let sol = solve_relaxed(&node)?;
        if sol.status == LpStatus::Infeasible {
            continue;
        }
        let fixed_obj: f64 = (0..k).filter(|&t| assign[t] == Some(true)).map(|t| res.obj[t]).sum();
        let bound = fixed_obj + sol.objective;
        if let Some((b, _)) = &best {
            if bound <= *b + 1e-9 {
                continue;
            }
        }
        let frac = open
            .iter()
            .enumerate()
            .filter(|(t, _)| !is_integral(sol.values[*t]))
            .min_by(|a, b| {
                let da = (sol.values[a.0] - 0.5).abs();
                let db = (sol.values[b.0] - 0.5).abs();
                da.total_cmp(&db).then(a.1.cmp(b.1))
            })
            .map(|(_, &k)| k);
        match frac {
            None => {
                let mut full: Vec<bool> = assign.iter().map(|a| a == &Some(true)).collect();
                for (t, &kk) in open.iter().enumerate() {
                    full[kk] = sol.values[t] > 0.5;
                }
                let obj: f64 = (0..k).filter(|&t| full[t]).map(|t| res.obj[t]).sum();
                if rows_hold(res, &full) && best.as_ref().is_none_or(|(b, _)| obj > *b + 1e-12) {
                    best = Some((obj, full));
                }
            }
            Some(v) => {
                let mut zero = assign.clone();
                zero[v] = Some(false);
                let mut one = assign;
                one[v] = Some(true);
                // explore x = 1 first
                stack.push(zero);
                stack.push(one);
            }
        }
    }
    Ok((best.map(|b| b.1), true))
}

fn rows_hold(res: &Residual, a: &[bool]) -> bool {
    let mut act = vec![0.0; res.rhs.len()];
    for (k, &on) in a.iter().enumerate() {
        if on {
            for &(i, c) in &res.var_rows[k] {
                act[i] += c;
            }
        }
    }
    act.iter().zip(&res.rhs).all(|(a, b)| *a <= b + ROW_TOL)
}
