//! Exhaustive search over all relay assignments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{rates, Assignment, ChannelInstance, Codebook, PowerAllocation, RateReport};
use crate::selection::allocate_relay;
use crate::solver::Objective;

pub const DEFAULT_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub assignment: Assignment,
    pub allocation: PowerAllocation,
    pub rates: RateReport,
    pub value: f64,
    /// Assignments evaluated, excluding infeasible ones.
    pub evaluated: u64,
}

/// Tries every one of the `J^K` assignments with per-relay optimal power.
///
/// Assignments are visited in mixed-radix order with user 0 as the most
/// significant digit, and only a strict improvement replaces the incumbent,
/// so ties resolve to the lexicographically smallest assignment. With rate
/// targets, assignments whose floors do not fit are skipped; if none fits
/// the result is `Infeasible`.
pub fn exhaustive_optimum(
    instance: &ChannelInstance,
    objective: &Objective,
    codebook: Codebook,
    limit: u128,
) -> Result<OracleResult> {
    let (nj, nk) = (instance.num_relays(), instance.num_users());
    let count = (0..nk).try_fold(1u128, |acc, _| acc.checked_mul(nj as u128));
    match count {
        Some(count) if count <= limit => {}
        _ => {
            return Err(Error::TooLarge {
                count: count.unwrap_or(u128::MAX),
                limit,
            })
        }
    }

    let mut digits = vec![0usize; nk];
    let mut best: Option<(Vec<usize>, PowerAllocation, RateReport, f64)> = None;
    let mut evaluated = 0;
    loop {
        if let Some((alloc, report)) = evaluate(instance, &digits, objective, codebook)? {
            evaluated += 1;
            let value = objective.value(&report);
            if best.as_ref().is_none_or(|b| value > b.3) {
                best = Some((digits.clone(), alloc, report, value));
            }
        }
        let mut pos = nk;
        loop {
            if pos == 0 {
                let (relay_of, allocation, rates, value) = best.ok_or_else(|| {
                    Error::Infeasible("no assignment meets the rate targets".into())
                })?;
                return Ok(OracleResult {
                    assignment: Assignment::new(relay_of, nj)?,
                    allocation,
                    rates,
                    value,
                    evaluated,
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < nj {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn evaluate(
    instance: &ChannelInstance,
    relay_of: &[usize],
    objective: &Objective,
    codebook: Codebook,
) -> Result<Option<(PowerAllocation, RateReport)>> {
    let (nj, nk) = (instance.num_relays(), instance.num_users());
    let mut alloc = PowerAllocation::zeros(nj, nk);
    for j in 0..nj {
        let users: Vec<usize> = (0..nk).filter(|&k| relay_of[k] == j).collect();
        if users.is_empty() {
            continue;
        }
        match allocate_relay(instance, j, &users, objective, codebook) {
            Ok(share) => {
                for (&k, a) in users.iter().zip(share) {
                    alloc.set(j, k, a);
                }
            }
            Err(e) if e.is_infeasible() => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    let report = rates(instance, &alloc, codebook);
    Ok(Some((alloc, report)))
}
