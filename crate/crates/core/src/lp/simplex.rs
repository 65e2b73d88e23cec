use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LpProblem;
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-10;
const PRIMAL_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const REFACTOR_EVERY: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

/// Bounded-variable revised simplex over `[x | slacks | artificials]`.
struct Simplex {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    ub: Vec<f64>,
    b: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    // dense row-major basis inverse
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    degenerate: usize,
    bland: bool,
}

impl Simplex {
    fn new(lp: &LpProblem) -> Self {
        let m = lp.n_rows();
        let n = lp.n_vars();
        let sign: Vec<f64> = lp.rows.iter().map(|r| if r.rhs < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, r) in lp.rows.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                if a != 0.0 {
                    cols[j].push((i, sign[i] * a));
                }
            }
        }
        // merge repeated entries of a variable within one row
        for c in cols.iter_mut() {
            c.sort_by_key(|e| e.0);
            c.dedup_by(|later, first| {
                if later.0 == first.0 {
                    first.1 += later.1;
                    true
                } else {
                    false
                }
            });
        }
        let mut ub = vec![1.0; n];
        for i in 0..m {
            cols.push(vec![(i, sign[i])]);
            ub.push(f64::INFINITY);
        }
        let mut basis = Vec::with_capacity(m);
        let mut state = vec![State::Lower; n + m];
        for i in 0..m {
            if sign[i] > 0.0 {
                basis.push(n + i);
                state[n + i] = State::Basic;
            } else {
                cols.push(vec![(i, 1.0)]);
                ub.push(f64::INFINITY);
                state.push(State::Basic);
                basis.push(cols.len() - 1);
            }
        }
        let b: Vec<f64> = lp.rows.iter().map(|r| r.rhs.abs()).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Simplex {
            m,
            n,
            cols,
            ub,
            xb: b.clone(),
            b,
            state,
            basis,
            binv,
            iterations: 0,
            since_refactor: 0,
            degenerate: 0,
            bland: false,
        }
    }

    fn n_artificial(&self) -> usize {
        self.cols.len() - self.n - self.m
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.m
    }

    /// Rebuilds the basis inverse and basic values from scratch.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let mut bmat = DMatrix::<f64>::zeros(m, m);
        for (pos, &j) in self.basis.iter().enumerate() {
            for &(i, a) in &self.cols[j] {
                bmat[(i, pos)] = a;
            }
        }
        let inv = bmat
            .try_inverse()
            .ok_or_else(|| Error::Internal("simplex basis became singular".into()))?;
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = inv[(i, k)];
            }
        }
        let mut rhs = self.b.clone();
        for (j, st) in self.state.iter().enumerate() {
            if *st == State::Upper {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * self.ub[j];
                }
            }
        }
        for i in 0..m {
            self.xb[i] = (0..m).map(|k| self.binv[i * m + k] * rhs[k]).sum();
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Runs primal simplex iterations to optimality for `cost`.
    fn optimize(&mut self, cost: &[f64]) -> Result<()> {
        let m = self.m;
        let ncols = self.cols.len();
        let max_iter = 50 * (m + ncols) + 10_000;
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        loop {
            if self.iterations > max_iter {
                return Err(Error::Internal("simplex iteration limit exceeded".into()));
            }
            // duals
            y.iter_mut().for_each(|v| *v = 0.0);
            for (i, &j) in self.basis.iter().enumerate() {
                let c = cost[j];
                if c != 0.0 {
                    let row = &self.binv[i * m..(i + 1) * m];
                    for (yk, bk) in y.iter_mut().zip(row) {
                        *yk += c * bk;
                    }
                }
            }
            // pricing
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..ncols {
                let st = self.state[j];
                if st == State::Basic || self.ub[j] == 0.0 {
                    continue;
                }
                let d = cost[j] - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>();
                let eligible = (st == State::Lower && d > DUAL_TOL) || (st == State::Upper && d < -DUAL_TOL);
                if !eligible {
                    continue;
                }
                if self.bland {
                    enter = Some((j, d));
                    break;
                }
                if enter.is_none_or(|(_, best)| d.abs() > best.abs()) {
                    enter = Some((j, d));
                }
            }
            let Some((q, _)) = enter else {
                return Ok(());
            };
            let dir = if self.state[q] == State::Lower { 1.0 } else { -1.0 };

            // column in the current basis
            alpha.iter_mut().for_each(|v| *v = 0.0);
            for &(r, a) in &self.cols[q] {
                for i in 0..m {
                    alpha[i] += self.binv[i * m + r] * a;
                }
            }

            // ratio test
            let mut leave: Option<usize> = None;
            let mut t_min = f64::INFINITY;
            for i in 0..m {
                let delta = dir * alpha[i];
                let limit = if delta > PIVOT_TOL {
                    self.xb[i].max(0.0) / delta
                } else if delta < -PIVOT_TOL && self.ub[self.basis[i]].is_finite() {
                    (self.ub[self.basis[i]] - self.xb[i]).max(0.0) / -delta
                } else {
                    continue;
                };
                match leave {
                    Some(_) if limit > t_min + 1e-12 => {}
                    Some(r) if limit >= t_min - 1e-12 => {
                        let wins = if self.bland {
                            self.basis[i] < self.basis[r]
                        } else {
                            delta.abs() > (dir * alpha[r]).abs()
                        };
                        if wins {
                            leave = Some(i);
                        }
                        t_min = t_min.min(limit);
                    }
                    _ => {
                        leave = Some(i);
                        t_min = limit;
                    }
                }
            }
            let leave = leave.map(|r| (r, dir * alpha[r]));
            if let Some((r, delta)) = leave {
                // step exactly to the chosen row's bound
                t_min = if delta > 0.0 {
                    self.xb[r].max(0.0) / delta
                } else {
                    (self.ub[self.basis[r]] - self.xb[r]).max(0.0) / -delta
                };
            }
            let flip = self.ub[q];
            if leave.is_none() && flip.is_infinite() {
                return Err(Error::Internal("LP relaxation reported unbounded".into()));
            }
            self.iterations += 1;
            let step = if flip <= t_min { flip } else { t_min };
            if step < DEGENERATE_STEP {
                self.degenerate += 1;
                if !self.bland && self.degenerate > 10 * (m + self.n) {
                    self.bland = true;
                }
            }
            for i in 0..m {
                self.xb[i] -= step * dir * alpha[i];
            }
            if flip <= t_min {
                self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                continue;
            }
            let (r, delta) = leave.unwrap();
            let entering_value = if dir > 0.0 { step } else { self.ub[q] - step };
            let out = self.basis[r];
            self.state[out] = if delta > 0.0 { State::Lower } else { State::Upper };
            self.state[q] = State::Basic;
            self.basis[r] = q;
            self.xb[r] = entering_value;

            // eta update of the inverse
            let piv = alpha[r];
            for k in 0..m {
                self.binv[r * m + k] /= piv;
            }
            let (head, tail) = self.binv.split_at_mut(r * m);
            let (prow, rest) = tail.split_at_mut(m);
            for i in 0..m {
                if i == r || alpha[i] == 0.0 {
                    continue;
                }
                let f = alpha[i];
                let row = if i < r {
                    &mut head[i * m..(i + 1) * m]
                } else {
                    &mut rest[(i - r - 1) * m..(i - r) * m]
                };
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
            }
            self.since_refactor += 1;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
        }
    }

    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Lower => 0.0,
            State::Upper => self.ub[j],
            State::Basic => self.xb[self.basis.iter().position(|&b| b == j).unwrap()],
        }
    }
}

/// Solves the LP relaxation `max c.x, Ax <= b, 0 <= x <= 1`. Rows with a
/// negative right-hand side trigger a first phase that can report
/// infeasibility.
pub fn solve_relaxed(lp: &LpProblem) -> Result<LpSolution> {
    lp.validate()?;
    let mut s = Simplex::new(lp);
    let total = s.cols.len();
    if s.n_artificial() > 0 {
        let cost: Vec<f64> = (0..total).map(|j| if s.is_artificial(j) { -1.0 } else { 0.0 }).collect();
        s.optimize(&cost)?;
        s.refactor()?;
        let infeasibility: f64 = (0..total).filter(|&j| s.is_artificial(j)).map(|j| s.value(j).max(0.0)).sum();
        let scale = 1.0 + s.b.iter().fold(0.0f64, |a, &v| a.max(v));
        if infeasibility > PRIMAL_TOL * scale {
            return Ok(LpSolution {
                values: vec![0.0; lp.n_vars()],
                objective: 0.0,
                status: LpStatus::Infeasible,
                iterations: s.iterations,
            });
        }
        for j in s.n + s.m..total {
            s.ub[j] = 0.0;
        }
        s.degenerate = 0;
        s.bland = false;
    }
    let mut cost = lp.objective.clone();
    cost.resize(total, 0.0);
    s.optimize(&cost)?;
    s.refactor()?;
    // a fresh factorization can expose tiny dual infeasibilities
    s.optimize(&cost)?;

    let mut values = vec![0.0; lp.n_vars()];
    for (j, v) in values.iter_mut().enumerate() {
        *v = s.value(j).clamp(0.0, 1.0);
    }
    let objective = lp.objective_value(&values);
    Ok(LpSolution { values, objective, status: LpStatus::Optimal, iterations: s.iterations })
}
