//! Rounding relaxed allocations to one relay per user.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    rates, Assignment, ChannelInstance, Codebook, PowerAllocation, RateReport, SolverOptions,
};
use crate::solver::{
    level_relay, solve_max_min, solve_sum_rate, solve_sum_rate_min, waterfill_relay, Objective,
    RelaxedSolution,
};

/// Assigns each user to the relay delivering it the most received power,
/// `argmax_j alpha_jk p_jk`, and drops every other entry of its column.
///
/// Ties go to the lowest relay index. Users that receive nothing go to the
/// relay with the largest gain. Row sums can only shrink, so the result is
/// feasible.
pub fn round_to_selection(
    instance: &ChannelInstance,
    relaxed: &RelaxedSolution,
) -> Result<(Assignment, PowerAllocation)> {
    relaxed.alpha.check_shape(instance)?;
    let (nj, nk) = (instance.num_relays(), instance.num_users());
    let argmax = |score: &dyn Fn(usize) -> f64| {
        (1..nj).fold(0, |best, j| if score(j) > score(best) { j } else { best })
    };
    let mut relay_of = Vec::with_capacity(nk);
    let mut alloc = PowerAllocation::zeros(nj, nk);
    for k in 0..nk {
        let received = |j: usize| relaxed.alpha.get(j, k) * instance.relay(j, k);
        let mut j = argmax(&received);
        if received(j) <= 0.0 {
            j = argmax(&|j| instance.relay(j, k));
        }
        relay_of.push(j);
        alloc.set(j, k, relaxed.alpha.get(j, k));
    }
    Ok((Assignment::new(relay_of, nj)?, alloc))
}

/// Re-optimizes each relay's power over the users assigned to it.
///
/// Sum rate uses water-filling, the floored variant when rate targets are
/// present, and max-min levels the rates of each relay's users. Returns
/// `Infeasible` when a relay cannot meet the floors of its users.
pub fn refine_selection(
    instance: &ChannelInstance,
    assignment: &Assignment,
    objective: &Objective,
    codebook: Codebook,
) -> Result<(PowerAllocation, RateReport)> {
    let (nj, nk) = (instance.num_relays(), instance.num_users());
    if assignment.num_users() != nk || assignment.as_slice().iter().any(|&j| j >= nj) {
        return Err(Error::InvalidArgument(
            "assignment does not match the instance".into(),
        ));
    }
    if let Some(t) = objective.targets() {
        if t.r.len() != nk {
            return Err(Error::InvalidArgument(
                "target count does not match the instance".into(),
            ));
        }
    }
    let mut alloc = PowerAllocation::zeros(nj, nk);
    for j in 0..nj {
        let users = assignment.users_of(j);
        if users.is_empty() {
            continue;
        }
        let share = allocate_relay(instance, j, &users, objective, codebook)?;
        for (&k, a) in users.iter().zip(share) {
            alloc.set(j, k, a);
        }
    }
    let report = rates(instance, &alloc, codebook);
    Ok((alloc, report))
}

/// Optimal power split of relay `j` among `users` for one objective.
pub(crate) fn allocate_relay(
    instance: &ChannelInstance,
    j: usize,
    users: &[usize],
    objective: &Objective,
    codebook: Codebook,
) -> Result<Vec<f64>> {
    let c: Vec<f64> = users.iter().map(|&k| instance.direct()[k]).collect();
    let p: Vec<f64> = users.iter().map(|&k| instance.relay(j, k)).collect();
    let base: Vec<f64> = match codebook {
        Codebook::Repetition => c.iter().map(|v| 1.0 + v).collect(),
        Codebook::Independent => vec![1.0; users.len()],
    };
    match objective {
        Objective::SumRate => waterfill_relay(&base, &p, 1.0, &vec![0.0; users.len()]),
        Objective::SumRateMin(t) => {
            let mut floors = Vec::with_capacity(users.len());
            for (i, &k) in users.iter().enumerate() {
                let target = match codebook {
                    Codebook::Repetition => (2.0 * t.r[k]).exp2(),
                    Codebook::Independent => (2.0 * t.r[k]).exp2() / (1.0 + c[i]),
                };
                let deficit = target - base[i];
                floors.push(if deficit <= 0.0 {
                    0.0
                } else if p[i] > 0.0 {
                    deficit / p[i]
                } else {
                    return Err(Error::Infeasible(format!(
                        "user {k} has no gain on relay {j} and needs relay power"
                    )));
                });
            }
            let total: f64 = floors.iter().sum();
            if total > 1.0 {
                return Err(Error::Infeasible(format!(
                    "relay {j} needs {total:.6} of its budget to meet its users' targets"
                )));
            }
            waterfill_relay(&base, &p, 1.0, &floors)
        }
        Objective::MaxMin => Ok(match codebook {
            Codebook::Repetition => level_relay(&c, &p, &vec![1.0; users.len()], 1.0).1,
            Codebook::Independent => level_relay_independent(&c, &p),
        }),
    }
}

/// Single-relay max-min with independent codebooks, by bisection on the
/// common rate.
fn level_relay_independent(c: &[f64], p: &[f64]) -> Vec<f64> {
    let direct = |i: usize| 0.5 * (1.0 + c[i]).log2();
    let n = c.len();
    let demand = |t: f64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let need = ((2.0 * t).exp2() / (1.0 + c[i]) - 1.0).max(0.0);
                if need == 0.0 {
                    0.0
                } else if p[i] > 0.0 {
                    need / p[i]
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    };
    let mut lo = (0..n).map(direct).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n)
        .map(|i| direct(i) + 0.5 * (1.0 + p[i]).log2())
        .fold(f64::INFINITY, f64::min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if demand(mid).iter().sum::<f64>() <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    demand(lo)
        .into_iter()
        .map(|a| if a.is_finite() { a } else { 0.0 })
        .collect()
}

/// Upper and lower bound of one objective with the selection constraint.
#[derive(Debug, Clone, Serialize)]
pub struct Bounds {
    pub upper: f64,
    pub lower: f64,
    /// `(upper - lower) / upper`.
    pub gap: f64,
    pub relaxed: RelaxedSolution,
    pub assignment: Assignment,
    pub allocation: PowerAllocation,
    pub rates: RateReport,
}

/// Solves the relaxed program for an objective. A run that stops before
/// certification yields its best iterate with `certified == false`.
pub fn relax(
    instance: &ChannelInstance,
    objective: &Objective,
    codebook: Codebook,
    options: &SolverOptions,
) -> Result<RelaxedSolution> {
    let result = match objective {
        Objective::SumRate => solve_sum_rate(instance, options, codebook),
        Objective::SumRateMin(t) => solve_sum_rate_min(instance, t, options, codebook),
        Objective::MaxMin => solve_max_min(instance, options, codebook),
    };
    match result {
        Err(Error::MaxItersExceeded { best, .. }) => Ok(*best),
        other => other,
    }
}

/// Whether `bound_pair` re-optimizes power after rounding: off for the plain
/// sum rate, on when targets or fairness are involved.
pub fn default_refinement(objective: &Objective) -> bool {
    !matches!(objective, Objective::SumRate)
}

/// Relaxes, rounds and (per [`default_refinement`]) refines.
pub fn bound_pair(
    instance: &ChannelInstance,
    objective: &Objective,
    codebook: Codebook,
    options: &SolverOptions,
) -> Result<Bounds> {
    bound_pair_with(
        instance,
        objective,
        codebook,
        default_refinement(objective),
        options,
    )
}

pub fn bound_pair_with(
    instance: &ChannelInstance,
    objective: &Objective,
    codebook: Codebook,
    refine: bool,
    options: &SolverOptions,
) -> Result<Bounds> {
    let relaxed = relax(instance, objective, codebook, options)?;
    let (assignment, rounded) = round_to_selection(instance, &relaxed)?;
    let (allocation, report) = if refine {
        refine_selection(instance, &assignment, objective, codebook)?
    } else {
        let report = rates(instance, &rounded, codebook);
        (rounded, report)
    };
    let upper = relaxed.objective;
    let lower = objective.value(&report);
    Ok(Bounds {
        upper,
        lower,
        gap: (upper - lower) / upper.max(1e-12),
        relaxed,
        assignment,
        allocation,
        rates: report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::MinRateTargets;

    fn inst(c: Vec<f64>, p: Vec<Vec<f64>>) -> ChannelInstance {
        ChannelInstance::new(c, p, None).unwrap()
    }

    fn relaxed_with(instance: &ChannelInstance, rows: Vec<Vec<f64>>) -> RelaxedSolution {
        let mut s =
            solve_sum_rate(instance, &SolverOptions::default(), Codebook::Repetition).unwrap();
        s.alpha = PowerAllocation::from_rows(rows).unwrap();
        s
    }

    #[test]
    fn picks_largest_received_power() {
        let i = inst(vec![0.0], vec![vec![1.0], vec![1.0]]);
        let (a, _) = round_to_selection(&i, &relaxed_with(&i, vec![vec![0.3], vec![0.5]])).unwrap();
        assert_eq!(a.as_slice(), &[1]);
        let (a, _) = round_to_selection(&i, &relaxed_with(&i, vec![vec![0.5], vec![0.5]])).unwrap();
        assert_eq!(a.as_slice(), &[0]);
    }

    #[test]
    fn sparse_input_is_unchanged() {
        let i = inst(vec![0.0, 0.0], vec![vec![2.0, 1.0], vec![1.0, 3.0]]);
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (a, alloc) = round_to_selection(&i, &relaxed_with(&i, rows.clone())).unwrap();
        assert_eq!(a.as_slice(), &[0, 1]);
        assert_eq!(alloc.rows(), rows);
    }

    #[test]
    fn refined_cross_assignment() {
        let i = inst(vec![0.0, 0.0], vec![vec![4.0, 1.0], vec![1.0, 4.0]]);
        let a = Assignment::new(vec![0, 1], 2).unwrap();
        let (alloc, r) =
            refine_selection(&i, &a, &Objective::SumRate, Codebook::Repetition).unwrap();
        assert_eq!(alloc.rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((r.sum_rate - 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn lone_user_gap() {
        let i = inst(vec![0.0], vec![vec![3.0], vec![4.0]]);
        let b = bound_pair(
            &i,
            &Objective::SumRate,
            Codebook::Repetition,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((b.upper - 1.5).abs() < 1e-12);
        assert!((b.lower - 0.5 * 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn floors_that_do_not_fit() {
        let i = inst(vec![0.0, 0.0], vec![vec![1.0, 1.0]]);
        let a = Assignment::new(vec![0, 0], 1).unwrap();
        let t = MinRateTargets::new(vec![0.4, 0.4]).unwrap();
        let e =
            refine_selection(&i, &a, &Objective::SumRateMin(t), Codebook::Repetition).unwrap_err();
        assert!(e.is_infeasible());
    }
}
