//! Direct-transmission reference systems: a single-antenna base station
//! (SISO) and a matched-beamforming multi-antenna base station (MISO), both
//! without relays and without the two-slot 1/2 factor.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelInstance, Codebook, RateReport, SolverOptions};
use crate::selection::bound_pair;
use crate::solver::{waterfill_relay, Objective};

/// What a system optimizes across its users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemObjective {
    /// Maximize the sum rate (water-filling).
    #[default]
    Sum,
    /// Give every user the same, largest possible rate.
    MaxMin,
}

impl SystemObjective {
    pub fn relay_objective(self) -> Objective {
        match self {
            SystemObjective::Sum => Objective::SumRate,
            SystemObjective::MaxMin => Objective::MaxMin,
        }
    }
}

impl FromStr for SystemObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(SystemObjective::Sum),
            "max_min" | "equal_rate" => Ok(SystemObjective::MaxMin),
            other => Err(Error::InvalidArgument(format!(
                "unknown objective {other:?}; expected sum or max_min"
            ))),
        }
    }
}

impl fmt::Display for SystemObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemObjective::Sum => "sum",
            SystemObjective::MaxMin => "max_min",
        })
    }
}

/// Per-user powers and rates of a direct-transmission system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectAllocation {
    pub power: Vec<f64>,
    pub rates: RateReport,
}

fn check(gains: &[f64], total_power: f64) -> Result<()> {
    if !(total_power.is_finite() && total_power > 0.0) {
        return Err(Error::InvalidArgument(
            "total power must be positive".into(),
        ));
    }
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::InvalidArgument(
            "gains must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

/// Splits `total_power` over users with SNR-per-unit-power `gains`.
///
/// `Sum` water-fills `sum_k log2(1 + q_k g_k)`. `MaxMin` solves
/// `sum_k (2^t - 1) / g_k = P` in closed form; a user with zero gain forces
/// the common rate to zero and no power is spent.
pub fn siso_allocate(
    gains: &[f64],
    total_power: f64,
    objective: SystemObjective,
) -> Result<DirectAllocation> {
    check(gains, total_power)?;
    let nk = gains.len();
    let power = match objective {
        SystemObjective::Sum => {
            waterfill_relay(&vec![1.0; nk], gains, total_power, &vec![0.0; nk])?
        }
        SystemObjective::MaxMin => {
            if gains.contains(&0.0) {
                vec![0.0; nk]
            } else {
                let inv: f64 = gains.iter().map(|g| 1.0 / g).sum();
                let snr = total_power / inv;
                gains.iter().map(|g| snr / g).collect()
            }
        }
    };
    let rates = RateReport::from_rates(
        power
            .iter()
            .zip(gains)
            .map(|(q, g)| (1.0 + q * g).log2())
            .collect(),
    );
    Ok(DirectAllocation { power, rates })
}

pub fn siso_rates(
    gains: &[f64],
    total_power: f64,
    objective: SystemObjective,
) -> Result<RateReport> {
    Ok(siso_allocate(gains, total_power, objective)?.rates)
}

/// Matched beamforming: user `k` sees gain `|h_k|^2`, then power is split as
/// in [`siso_rates`].
pub fn miso_rates(
    channel_vectors: &[Vec<Complex64>],
    total_power: f64,
    objective: SystemObjective,
) -> Result<RateReport> {
    let gains: Vec<f64> = channel_vectors
        .iter()
        .map(|h| h.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    siso_rates(&gains, total_power, objective)
}

/// Rates of the relay-assisted system: the selection heuristic for the sum
/// rate, rounded and re-optimized allocations for max-min.
pub fn relay_system_rates(
    instance: &ChannelInstance,
    objective: SystemObjective,
    codebook: Codebook,
    options: &SolverOptions,
) -> Result<RateReport> {
    Ok(bound_pair(instance, &objective.relay_objective(), codebook, options)?.rates)
}
