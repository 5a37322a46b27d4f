//! Relaxed power-allocation programs (selection constraint dropped).
//!
//! The relaxed optimum of each objective is an upper bound on what any
//! one-relay-per-user assignment can achieve.

mod epigraph;
mod lp;
mod sumrate;
mod waterfill;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelInstance, Codebook, PowerAllocation, RateReport, SolverOptions};

pub use epigraph::solve_max_min;
pub use lp::{maximize, LpSolution};
pub use sumrate::{solve_sum_rate, solve_sum_rate_min};
pub use waterfill::{level_relay, waterfill_relay};

/// Guaranteed per-user rates in bits/s/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinRateTargets {
    pub r: Vec<f64>,
}

impl MinRateTargets {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "rate targets must be finite and non-negative".into(),
            ));
        }
        Ok(Self { r })
    }

    pub fn zeros(num_users: usize) -> Self {
        Self {
            r: vec![0.0; num_users],
        }
    }

    pub(crate) fn check_len(&self, num_users: usize) -> Result<()> {
        if self.r.len() != num_users {
            return Err(Error::InvalidArgument(format!(
                "{} rate targets for {num_users} users",
                self.r.len()
            )));
        }
        Ok(())
    }

    /// Targets expressed on `x = base + sum_j p_jk alpha_jk`.
    pub(crate) fn snr_targets(&self, instance: &ChannelInstance, codebook: Codebook) -> Vec<f64> {
        self.r
            .iter()
            .zip(instance.direct())
            .map(|(r, c)| match codebook {
                Codebook::Repetition => (2.0 * r).exp2(),
                Codebook::Independent => (2.0 * r).exp2() / (1.0 + c),
            })
            .collect()
    }
}

/// Which relaxed program to solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    SumRate,
    SumRateMin(MinRateTargets),
    MaxMin,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::SumRate => "sum",
            Objective::SumRateMin(_) => "sum_min",
            Objective::MaxMin => "max_min",
        }
    }

    /// The value of this objective for a rate report.
    pub fn value(&self, report: &RateReport) -> f64 {
        match self {
            Objective::MaxMin => report.min_rate,
            _ => report.sum_rate,
        }
    }

    pub fn targets(&self) -> Option<&MinRateTargets> {
        match self {
            Objective::SumRateMin(t) => Some(t),
            _ => None,
        }
    }
}

/// Lagrange multipliers attached to a relaxed solution.
///
/// For the sum-rate programs both are in rate units: `relay_prices[j]` is
/// the marginal sum rate of relay `j`'s budget and `user_multipliers[k]` the
/// multiplier of user `k`'s rate floor. For max-min they are the dual
/// variables of the epigraph linear program.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Duals {
    pub relay_prices: Vec<f64>,
    pub user_multipliers: Vec<f64>,
}

/// Solution of a relaxed program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedSolution {
    pub alpha: PowerAllocation,
    pub rates: RateReport,
    /// Sum rate, or minimum rate for max-min. This is the upper bound.
    pub objective: f64,
    pub kkt_residual: f64,
    pub certified: bool,
    pub multi_relay_users: Vec<usize>,
    pub duals: Duals,
    pub codebook: Codebook,
    pub iterations: usize,
}

/// Relaxed rates for an allocation: the compound rate for repetition coding,
/// without the decoding cap, which the relaxation does not model.
pub(crate) fn relaxed_rates(
    instance: &ChannelInstance,
    alpha: &PowerAllocation,
    codebook: Codebook,
) -> RateReport {
    let c = instance.direct();
    RateReport::from_rates(
        (0..instance.num_users())
            .map(|k| {
                let s = alpha.relay_terms(instance, k);
                match codebook {
                    Codebook::Repetition => 0.5 * (1.0 + c[k] + s).log2(),
                    Codebook::Independent => 0.5 * (1.0 + c[k]).log2() + 0.5 * (1.0 + s).log2(),
                }
            })
            .collect(),
    )
}

/// `base_k` such that the per-user log argument is `base_k + sum_j p_jk alpha_jk`.
pub(crate) fn log_base(instance: &ChannelInstance, codebook: Codebook) -> Vec<f64> {
    match codebook {
        Codebook::Repetition => instance.direct().iter().map(|c| 1.0 + c).collect(),
        Codebook::Independent => vec![1.0; instance.num_users()],
    }
}

/// Largest violation of the KKT system of the sum-rate programs.
///
/// Stationarity reads `(1 + gamma_k) m_jk + lambda_jk = nu_j` with marginal
/// rate `m_jk = p_jk / (2 ln 2 x_k)`, where `x_k` is the log argument of
/// user `k`. `lambda_jk` is recovered as `max(0, nu_j - (1 + gamma_k) m_jk)`.
/// Price-valued terms are divided by the largest price or marginal so the
/// result is dimensionless.
pub fn kkt_residual(
    instance: &ChannelInstance,
    alpha: &PowerAllocation,
    duals: &Duals,
    targets: Option<&MinRateTargets>,
    codebook: Codebook,
) -> Result<f64> {
    alpha.check_shape(instance)?;
    let (nj, nk) = (instance.num_relays(), instance.num_users());
    if duals.relay_prices.len() != nj || duals.user_multipliers.len() != nk {
        return Err(Error::InvalidArgument(
            "dual vector lengths do not match".into(),
        ));
    }
    if let Some(t) = targets {
        t.check_len(nk)?;
    }
    let base = log_base(instance, codebook);
    let x: Vec<f64> = (0..nk)
        .map(|k| base[k] + alpha.relay_terms(instance, k))
        .collect();
    let nu = &duals.relay_prices;
    let gamma = &duals.user_multipliers;
    let weighted =
        |j: usize, k: usize| (1.0 + gamma[k]) * instance.relay(j, k) / (2.0 * LN_2 * x[k]);

    let mut scale = nu.iter().copied().fold(0.0, f64::max);
    for j in 0..nj {
        for k in 0..nk {
            scale = scale.max(weighted(j, k));
        }
    }
    let scale = scale.max(f64::MIN_POSITIVE);

    let mut worst = 0.0f64;
    for j in 0..nj {
        let row_sum = alpha.row_sum(j);
        worst = worst.max(row_sum - 1.0);
        worst = worst.max(-nu[j] / scale);
        worst = worst.max(nu[j] * (1.0 - row_sum).max(0.0) / scale);
        for k in 0..nk {
            let a = alpha.get(j, k);
            let m = weighted(j, k);
            worst = worst.max(-a);
            worst = worst.max((m - nu[j]) / scale);
            worst = worst.max((nu[j] - m).max(0.0) * a / scale);
        }
    }
    for k in 0..nk {
        worst = worst.max(-gamma[k]);
    }
    match targets {
        Some(t) => {
            let rates = relaxed_rates(instance, alpha, codebook);
            for k in 0..nk {
                let slack = rates.per_user[k] - t.r[k];
                worst = worst.max(-slack);
                worst = worst.max(gamma[k] * slack.max(0.0));
            }
        }
        None => {
            for g in gamma {
                worst = worst.max(g.abs());
            }
        }
    }
    Ok(worst.max(0.0))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    instance: &ChannelInstance,
    alpha: PowerAllocation,
    duals: Duals,
    kkt_residual: f64,
    codebook: Codebook,
    max_min: bool,
    iterations: usize,
    options: &SolverOptions,
) -> RelaxedSolution {
    let rates = relaxed_rates(instance, &alpha, codebook);
    let objective = if max_min {
        rates.min_rate
    } else {
        rates.sum_rate
    };
    let multi_relay_users = alpha.multi_relay_users(options.nonzero_eps);
    RelaxedSolution {
        alpha,
        rates,
        objective,
        kkt_residual,
        certified: kkt_residual <= options.tol,
        multi_relay_users,
        duals,
        codebook,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric() -> ChannelInstance {
        ChannelInstance::new(vec![0.0, 0.0], vec![vec![1.0, 1.0]], None).unwrap()
    }

    fn duals(nu: f64, nk: usize) -> Duals {
        Duals {
            relay_prices: vec![nu],
            user_multipliers: vec![0.0; nk],
        }
    }

    #[test]
    fn residual_vanishes_at_symmetric_optimum() {
        let a = PowerAllocation::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        let nu = 1.0 / (2.0 * LN_2 * 1.5);
        let r = kkt_residual(&symmetric(), &a, &duals(nu, 2), None, Codebook::Repetition).unwrap();
        assert!(r <= 1e-10, "{r}");
    }

    #[test]
    fn residual_flags_corner_allocation_for_any_price() {
        let a = PowerAllocation::from_rows(vec![vec![1.0, 0.0]]).unwrap();
        for i in 0..=400 {
            let nu = i as f64 * 0.005;
            let r =
                kkt_residual(&symmetric(), &a, &duals(nu, 2), None, Codebook::Repetition).unwrap();
            assert!(r > 0.1, "nu {nu} gave {r}");
        }
    }

    #[test]
    fn single_variable_residual_is_zero() {
        let inst = ChannelInstance::new(vec![2.0], vec![vec![5.0]], None).unwrap();
        let a = PowerAllocation::from_rows(vec![vec![1.0]]).unwrap();
        let nu = 5.0 / (2.0 * LN_2 * 8.0);
        let r = kkt_residual(&inst, &a, &duals(nu, 1), None, Codebook::Repetition).unwrap();
        assert!(r <= 1e-15, "{r}");
    }
}
