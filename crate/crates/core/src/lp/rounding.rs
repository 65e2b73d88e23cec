use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_integral, LpProblem, FEASIBILITY_TOL};
use crate::error::{invalid, Result};

pub const DEFAULT_N_SAMPLE: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingResult {
    pub values: Vec<f64>,
    pub objective: f64,
    /// Index of the winning draw (`None` when the input was already integral).
    pub draw: Option<usize>,
}

/// Randomized rounding of a relaxed solution.
///
/// Packing rows (unit coefficients, rhs 1) play the role of locations;
/// variables outside every packing row form their own location. Each draw
/// visits locations by decreasing relaxed mass `s`, and with probability `s`
/// selects one still-compatible variable of that location with probability
/// proportional to its relaxed value. Selected variables with the lowest
/// `pips` are then dropped until every other row holds. The draw with the
/// largest objective wins (ties go to the earliest draw).
pub fn randomized_rounding(
    lp: &LpProblem,
    relaxed: &[f64],
    pips: &[f64],
    seed: u64,
    n_sample: usize,
) -> Result<RoundingResult> {
    lp.validate()?;
    let n = lp.n_vars();
    if relaxed.len() != n || pips.len() != n {
        return invalid("relaxed values and pips need one entry per variable");
    }
    if n_sample == 0 {
        return invalid("n_sample must be positive");
    }
    if relaxed.iter().all(|&v| is_integral(v)) {
        let values: Vec<f64> = relaxed.iter().map(|&v| v.round()).collect();
        if lp.is_feasible(&values, FEASIBILITY_TOL) {
            let objective = lp.objective_value(&values);
            return Ok(RoundingResult { values, objective, draw: None });
        }
    }

    let mut locations: Vec<Vec<usize>> = Vec::new();
    let mut var_locs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut covered = vec![false; n];
    let mut other_rows = Vec::new();
    for (i, r) in lp.rows.iter().enumerate() {
        if r.is_packing() {
            let mut members: Vec<usize> = r.coeffs.iter().map(|c| c.0).collect();
            members.sort_unstable();
            members.dedup();
            for &j in &members {
                var_locs[j].push(locations.len());
                covered[j] = true;
            }
            locations.push(members);
        } else {
            other_rows.push(i);
        }
    }
    for j in 0..n {
        if !covered[j] {
            var_locs[j].push(locations.len());
            locations.push(vec![j]);
        }
    }
    let mass: Vec<f64> = locations
        .iter()
        .map(|l| l.iter().map(|&j| relaxed[j].clamp(0.0, 1.0)).sum::<f64>().min(1.0))
        .collect();
    let mut order: Vec<usize> = (0..locations.len()).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));

    let draw = |i: usize| -> (f64, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut blocked = vec![false; locations.len()];
        let mut chosen = vec![false; n];
        for &l in &order {
            let u: f64 = rng.random();
            if blocked[l] || u >= mass[l] {
                continue;
            }
            let options: Vec<usize> = locations[l]
                .iter()
                .copied()
                .filter(|&j| relaxed[j] > 0.0 && !chosen[j] && var_locs[j].iter().all(|&k| !blocked[k]))
                .collect();
            let total: f64 = options.iter().map(|&j| relaxed[j]).sum();
            if total <= 0.0 {
                continue;
            }
            let mut target = rng.random::<f64>() * total;
            let mut pick = *options.last().unwrap();
            for &j in &options {
                if target < relaxed[j] {
                    pick = j;
                    break;
                }
                target -= relaxed[j];
            }
            chosen[pick] = true;
            for &k in &var_locs[pick] {
                blocked[k] = true;
            }
        }
        let mut x: Vec<f64> = chosen.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
        // drop the least probable selections until the remaining rows hold
        let mut by_pip: Vec<usize> = (0..n).filter(|&j| chosen[j]).collect();
        by_pip.sort_by(|&a, &b| pips[a].total_cmp(&pips[b]).then(a.cmp(&b)));
        let mut next = 0;
        while other_rows.iter().any(|&i| lp.rows[i].activity(&x) > lp.rows[i].rhs + FEASIBILITY_TOL) {
            if next == by_pip.len() {
                break;
            }
            x[by_pip[next]] = 0.0;
            next += 1;
        }
        if lp.max_violation(&x) > FEASIBILITY_TOL {
            return (f64::NEG_INFINITY, vec![0.0; n]);
        }
        (lp.objective_value(&x), x)
    };

    let draws: Vec<(f64, Vec<f64>)> = (0..n_sample).into_par_iter().map(draw).collect();
    let mut best = 0;
    for (i, d) in draws.iter().enumerate() {
        if d.0 > draws[best].0 {
            best = i;
        }
    }
    let (objective, values) = draws.into_iter().nth(best).unwrap();
    if objective == f64::NEG_INFINITY {
        let zeros = vec![0.0; n];
        return Ok(RoundingResult { objective: lp.objective_value(&zeros), values: zeros, draw: None });
    }
    Ok(RoundingResult { values, objective, draw: Some(best) })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{solve_relaxed, LpProblem};
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn integral_input_is_returned() {
        let lp = two_group();
        let r = randomized_rounding(&lp, &[0.0, 1.0], &[0.8, 0.9], 1, 8).unwrap();
        assert_eq!(r.values, vec![0.0, 1.0]);
        assert_eq!(r.draw, None);
    }

    #[test]
    fn two_group_returns_a_feasible_set() {
        let lp = two_group();
        let relaxed = solve_relaxed(&lp).unwrap();
        let r = randomized_rounding(&lp, &relaxed.values, &[0.8, 0.9], 42, 64).unwrap();
        // only {} and {G'} are integer feasible; 64 draws find G'
        assert_eq!(r.values, vec![0.0, 1.0]);
        assert!(r.objective <= relaxed.objective);
        let again = randomized_rounding(&lp, &relaxed.values, &[0.8, 0.9], 42, 64).unwrap();
        assert_eq!(again, r);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn always_feasible(seed in any::<u64>(), n in 1usize..15) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pips: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let q = 0.1;
            let mut lp = LpProblem::new(pips.iter().map(|p| p / rng.random_range(1..4) as f64).collect());
            lp.add_row(pips.iter().enumerate().map(|(j, p)| (j, (1.0 - q) - p)).collect(), 0.0);
            for _ in 0..n {
                let members: Vec<(usize, f64)> = (0..n).filter(|_| rng.random_bool(0.3)).map(|j| (j, 1.0)).collect();
                if members.len() >= 2 {
                    lp.add_row(members, 1.0);
                }
            }
            let relaxed = solve_relaxed(&lp).unwrap();
            let r = randomized_rounding(&lp, &relaxed.values, &pips, seed, 16).unwrap();
            prop_assert!(lp.max_violation(&r.values) <= 1e-8);
            prop_assert!(r.values.iter().all(|&v| v == 0.0 || v == 1.0));
            prop_assert!(r.objective <= relaxed.objective + 1e-9);
        }
    }
}
