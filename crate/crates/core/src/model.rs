//! Channel instances, power allocations and the per-user rate equations of
//! the two-slot decode-and-forward downlink.
//!
//! All SNRs are linear power ratios. Rates are in bits/s/Hz per orthogonal
//! user channel and already include the 1/2 factor for the two time slots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking the per-relay budget rows.
pub const BUDGET_TOL: f64 = 1e-9;

/// Per-link SNRs for one channel realization.
///
/// `direct[k]` is the BS-to-user SNR, `relay(j, k)` the full-power SNR from
/// relay `j` to user `k`, and `source_relay[j]` (when known) the BS-to-relay
/// SNR used for the decoding cap.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInstance {
    num_relays: usize,
    num_users: usize,
    direct: Vec<f64>,
    relay: Vec<f64>,
    source_relay: Option<Vec<f64>>,
}

fn check_entries(name: &str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInstance(format!(
            "{name} contains {v}; entries must be finite and non-negative"
        )));
    }
    Ok(())
}

impl ChannelInstance {
    /// Builds an instance from the direct SNRs and one row of relay SNRs per
    /// relay.
    pub fn new(
        direct: Vec<f64>,
        relay_rows: Vec<Vec<f64>>,
        source_relay: Option<Vec<f64>>,
    ) -> Result<Self> {
        let num_users = direct.len();
        let num_relays = relay_rows.len();
        if let Some(row) = relay_rows.iter().find(|r| r.len() != num_users) {
            return Err(Error::InvalidInstance(format!(
                "relay row has {} entries but there are {num_users} users",
                row.len()
            )));
        }
        let relay = relay_rows.into_iter().flatten().collect();
        Self::from_flat(num_relays, num_users, direct, relay, source_relay)
    }

    /// Builds an instance from a row-major `num_relays x num_users` matrix.
    pub fn from_flat(
        num_relays: usize,
        num_users: usize,
        direct: Vec<f64>,
        relay: Vec<f64>,
        source_relay: Option<Vec<f64>>,
    ) -> Result<Self> {
        if num_relays == 0 || num_users == 0 {
            return Err(Error::InvalidInstance(
                "need at least one relay and one user".into(),
            ));
        }
        if direct.len() != num_users {
            return Err(Error::InvalidInstance(format!(
                "direct SNR vector has {} entries, expected {num_users}",
                direct.len()
            )));
        }
        if relay.len() != num_relays * num_users {
            return Err(Error::InvalidInstance(format!(
                "relay SNR matrix has {} entries, expected {}",
                relay.len(),
                num_relays * num_users
            )));
        }
        check_entries("direct SNRs", &direct)?;
        check_entries("relay SNRs", &relay)?;
        if let Some(sr) = &source_relay {
            if sr.len() != num_relays {
                return Err(Error::InvalidInstance(format!(
                    "source-relay SNR vector has {} entries, expected {num_relays}",
                    sr.len()
                )));
            }
            check_entries("source-relay SNRs", sr)?;
        }
        Ok(Self {
            num_relays,
            num_users,
            direct,
            relay,
            source_relay,
        })
    }

    pub fn num_relays(&self) -> usize {
        self.num_relays
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn direct(&self) -> &[f64] {
        &self.direct
    }

    pub fn relay(&self, j: usize, k: usize) -> f64 {
        self.relay[j * self.num_users + k]
    }

    pub fn relay_row(&self, j: usize) -> &[f64] {
        &self.relay[j * self.num_users..(j + 1) * self.num_users]
    }

    /// Row-major relay SNR matrix.
    pub fn relay_matrix(&self) -> &[f64] {
        &self.relay
    }

    pub fn source_relay(&self) -> Option<&[f64]> {
        self.source_relay.as_deref()
    }

    /// Rate at which relay `j` can decode the BS transmission.
    pub fn source_relay_rate(&self, j: usize) -> Option<f64> {
        self.source_relay
            .as_ref()
            .map(|sr| 0.5 * (1.0 + sr[j]).log2())
    }

    /// Same instance with the source-relay SNRs dropped.
    pub fn without_source_relay(&self) -> Self {
        Self {
            source_relay: None,
            ..self.clone()
        }
    }

    /// Instance whose user `i` is user `perm[i]` of `self`.
    pub fn permute_users(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.num_users)?;
        let direct = perm.iter().map(|&k| self.direct[k]).collect();
        let relay = (0..self.num_relays)
            .flat_map(|j| perm.iter().map(move |&k| self.relay(j, k)))
            .collect();
        Self::from_flat(
            self.num_relays,
            self.num_users,
            direct,
            relay,
            self.source_relay.clone(),
        )
    }

    /// Multiplies every SNR by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_flat(
            self.num_relays,
            self.num_users,
            self.direct.iter().map(|v| v * factor).collect(),
            self.relay.iter().map(|v| v * factor).collect(),
            self.source_relay
                .as_ref()
                .map(|sr| sr.iter().map(|v| v * factor).collect()),
        )
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidArgument(format!(
            "permutation has {} entries, expected {n}",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Fractions of each relay's power given to each user (`num_relays x
/// num_users`, row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    num_relays: usize,
    num_users: usize,
    fractions: Vec<f64>,
    /// Rows that are required to spend exactly the whole budget.
    budget_tight: Vec<bool>,
}

impl PowerAllocation {
    pub fn zeros(num_relays: usize, num_users: usize) -> Self {
        Self {
            num_relays,
            num_users,
            fractions: vec![0.0; num_relays * num_users],
            budget_tight: vec![false; num_relays],
        }
    }

    /// Every relay gives its full power to every user. Not budget-feasible;
    /// used as the conservative evaluation point of the decoding check.
    pub fn full(num_relays: usize, num_users: usize) -> Self {
        Self {
            num_relays,
            num_users,
            fractions: vec![1.0; num_relays * num_users],
            budget_tight: vec![false; num_relays],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_relays = rows.len();
        let num_users = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_users) {
            return Err(Error::InvalidArgument("ragged allocation rows".into()));
        }
        Self::from_flat(num_relays, num_users, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(num_relays: usize, num_users: usize, fractions: Vec<f64>) -> Result<Self> {
        if fractions.len() != num_relays * num_users {
            return Err(Error::InvalidArgument(format!(
                "allocation has {} entries, expected {}",
                fractions.len(),
                num_relays * num_users
            )));
        }
        if fractions.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidArgument(
                "power fractions must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            num_relays,
            num_users,
            fractions,
            budget_tight: vec![false; num_relays],
        })
    }

    pub fn num_relays(&self) -> usize {
        self.num_relays
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.fractions[j * self.num_users + k]
    }

    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        self.fractions[j * self.num_users + k] = value;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.fractions[j * self.num_users..(j + 1) * self.num_users]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.fractions[j * self.num_users..(j + 1) * self.num_users]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.fractions
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_relays).map(|j| self.row(j).to_vec()).collect()
    }

    pub fn row_sum(&self, j: usize) -> f64 {
        self.row(j).iter().sum()
    }

    pub fn budget_tight(&self) -> &[bool] {
        &self.budget_tight
    }

    pub fn set_budget_tight(&mut self, j: usize, tight: bool) {
        self.budget_tight[j] = tight;
    }

    /// Received relay SNR of user `k`: the sum over relays of `p_jk * alpha_jk`.
    pub fn relay_terms(&self, instance: &ChannelInstance, k: usize) -> f64 {
        (0..self.num_relays)
            .map(|j| instance.relay(j, k) * self.get(j, k))
            .sum()
    }

    /// Checks non-negativity, the row budgets, and exact spending on tight rows.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.fractions.iter().all(|a| *a >= -tol)
            && (0..self.num_relays).all(|j| {
                let s = self.row_sum(j);
                s <= 1.0 + tol && (!self.budget_tight[j] || (s - 1.0).abs() <= tol)
            })
    }

    /// Users with at least two entries above `eps`.
    pub fn multi_relay_users(&self, eps: f64) -> Vec<usize> {
        (0..self.num_users)
            .filter(|&k| {
                (0..self.num_relays)
                    .filter(|&j| self.get(j, k) > eps)
                    .count()
                    >= 2
            })
            .collect()
    }

    pub(crate) fn check_shape(&self, instance: &ChannelInstance) -> Result<()> {
        if self.num_relays != instance.num_relays() || self.num_users != instance.num_users() {
            return Err(Error::InvalidArgument(format!(
                "allocation is {}x{} but the instance is {}x{}",
                self.num_relays,
                self.num_users,
                instance.num_relays(),
                instance.num_users()
            )));
        }
        Ok(())
    }
}

/// Relay chosen for each user (0-based relay indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    relay_of: Vec<usize>,
}

impl Assignment {
    pub fn new(relay_of: Vec<usize>, num_relays: usize) -> Result<Self> {
        if let Some(j) = relay_of.iter().find(|&&j| j >= num_relays) {
            return Err(Error::InvalidArgument(format!(
                "relay index {j} out of range for {num_relays} relays"
            )));
        }
        Ok(Self { relay_of })
    }

    pub fn relay_of(&self, k: usize) -> usize {
        self.relay_of[k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.relay_of
    }

    pub fn num_users(&self) -> usize {
        self.relay_of.len()
    }

    /// Users served by relay `j`, in increasing order.
    pub fn users_of(&self, j: usize) -> Vec<usize> {
        (0..self.relay_of.len())
            .filter(|&k| self.relay_of[k] == j)
            .collect()
    }
}

/// Per-user rates with their sum and minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub per_user: Vec<f64>,
    pub sum_rate: f64,
    pub min_rate: f64,
}

impl RateReport {
    pub fn from_rates(per_user: Vec<f64>) -> Self {
        let sum_rate = per_user.iter().sum();
        let min_rate = per_user.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            per_user,
            sum_rate,
            min_rate,
        }
    }

    pub fn mean_rate(&self) -> f64 {
        self.sum_rate / self.per_user.len().max(1) as f64
    }
}

/// Convergence controls shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative convergence tolerance, also the KKT certification threshold.
    pub tol: f64,
    pub max_iters: usize,
    /// Entries at or below this count as zero in sparsity accounting.
    pub nonzero_eps: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 10_000,
            nonzero_eps: 1e-7,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidOptions("tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidOptions("max_iters must be positive".into()));
        }
        if !(self.nonzero_eps > self.tol) {
            return Err(Error::InvalidOptions("nonzero_eps must exceed tol".into()));
        }
        Ok(())
    }
}

/// How the relay re-encodes the message in the second slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codebook {
    /// Relay reuses the source codebook; SNRs add inside one log.
    #[default]
    Repetition,
    /// Relay uses an independent codebook; the two slots add as two logs.
    Independent,
}

impl std::str::FromStr for Codebook {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repetition" => Ok(Codebook::Repetition),
            "independent" => Ok(Codebook::Independent),
            other => Err(Error::InvalidArgument(format!(
                "unknown codebook '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for Codebook {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Codebook::Repetition => "repetition",
            Codebook::Independent => "independent",
        })
    }
}

/// Two-slot compound rate `(1/2) log2(1 + c + relay_terms)`.
pub fn rate_compound(direct: f64, relay_terms: f64) -> f64 {
    0.5 * (1.0 + direct + relay_terms).log2()
}

/// Rate of user `k` with repetition coding.
///
/// With source-relay SNRs present, the compound rate is capped by the
/// smallest decoding rate among the relays that give the user power.
pub fn rate_user_repetition(instance: &ChannelInstance, alloc: &PowerAllocation, k: usize) -> f64 {
    let compound = rate_compound(instance.direct()[k], alloc.relay_terms(instance, k));
    match instance.source_relay() {
        None => compound,
        Some(_) => (0..instance.num_relays())
            .filter(|&j| alloc.get(j, k) > 0.0)
            .filter_map(|j| instance.source_relay_rate(j))
            .fold(compound, f64::min),
    }
}

/// Rate of user `k` with independent codebooks at source and relay.
pub fn rate_user_independent(instance: &ChannelInstance, alloc: &PowerAllocation, k: usize) -> f64 {
    0.5 * (1.0 + instance.direct()[k]).log2() + 0.5 * (1.0 + alloc.relay_terms(instance, k)).log2()
}

pub fn rate_user(
    instance: &ChannelInstance,
    alloc: &PowerAllocation,
    k: usize,
    codebook: Codebook,
) -> f64 {
    match codebook {
        Codebook::Repetition => rate_user_repetition(instance, alloc, k),
        Codebook::Independent => rate_user_independent(instance, alloc, k),
    }
}

pub fn rates(
    instance: &ChannelInstance,
    alloc: &PowerAllocation,
    codebook: Codebook,
) -> RateReport {
    RateReport::from_rates(
        (0..instance.num_users())
            .map(|k| rate_user(instance, alloc, k, codebook))
            .collect(),
    )
}

/// Checks that every relay decodes faster than any compound link it could
/// serve, evaluated with every relay at full power towards every user.
pub fn assumption_holds(instance: &ChannelInstance) -> Result<bool> {
    assumption_holds_at(
        instance,
        &PowerAllocation::full(instance.num_relays(), instance.num_users()),
    )
}

/// Decoding check `I_sr_j > I_sr_j_d_k` for all pairs at the given allocation.
pub fn assumption_holds_at(instance: &ChannelInstance, alloc: &PowerAllocation) -> Result<bool> {
    alloc.check_shape(instance)?;
    let sr = instance
        .source_relay()
        .ok_or(Error::MissingSourceRelayData)?;
    let c = instance.direct();
    Ok((0..instance.num_relays()).all(|j| {
        (0..instance.num_users()).all(|k| sr[j] > c[k] + instance.relay(j, k) * alloc.get(j, k))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(c: f64, p: f64, sr: Option<f64>) -> ChannelInstance {
        ChannelInstance::new(vec![c], vec![vec![p]], sr.map(|s| vec![s])).unwrap()
    }

    fn one() -> PowerAllocation {
        PowerAllocation::from_rows(vec![vec![1.0]]).unwrap()
    }

    #[test]
    fn compound_rate_values() {
        assert_eq!(rate_compound(0.0, 0.0), 0.0);
        assert!((rate_compound(3.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((rate_compound(1.0, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn repetition_rate_cases() {
        assert!((rate_user_repetition(&single(3.0, 0.0, None), &one(), 0) - 1.0).abs() < 1e-15);
        let huge = single(1.0, 2.0, Some(1e12));
        assert!((rate_user_repetition(&huge, &one(), 0) - 1.0).abs() < 1e-15);
        // I_sr = 0.5 caps the compound rate 1.5.
        let capped = single(1.0, 6.0, Some(1.0));
        assert!((rate_user_repetition(&capped, &one(), 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cap_uses_weakest_serving_relay() {
        let inst = ChannelInstance::new(
            vec![0.0],
            vec![vec![100.0], vec![100.0]],
            Some(vec![3.0, 1.0]),
        )
        .unwrap();
        let both = PowerAllocation::from_rows(vec![vec![1.0], vec![0.5]]).unwrap();
        assert!((rate_user_repetition(&inst, &both, 0) - 0.5).abs() < 1e-15);
        let first = PowerAllocation::from_rows(vec![vec![1.0], vec![0.0]]).unwrap();
        assert!((rate_user_repetition(&inst, &first, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn independent_rate_cases() {
        let zero = PowerAllocation::zeros(1, 1);
        assert_eq!(
            rate_user_independent(&single(0.0, 0.0, None), &zero, 0),
            0.0
        );
        assert!((rate_user_independent(&single(3.0, 3.0, None), &one(), 0) - 2.0).abs() < 1e-15);
        assert!((rate_user_independent(&single(1.0, 0.0, None), &one(), 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn assumption_check() {
        assert!(assumption_holds(&single(1.0, 2.0, Some(10.0))).unwrap());
        assert!(!assumption_holds(&single(1.0, 2.0, Some(2.0))).unwrap());
        assert!(!assumption_holds(&single(1.0, 2.0, Some(3.0))).unwrap());
        assert!(matches!(
            assumption_holds(&single(1.0, 2.0, None)),
            Err(Error::MissingSourceRelayData)
        ));
    }

    #[test]
    fn instance_validation() {
        assert!(ChannelInstance::new(vec![], vec![], None).is_err());
        assert!(ChannelInstance::new(vec![1.0], vec![vec![1.0, 2.0]], None).is_err());
        assert!(ChannelInstance::new(vec![-1.0], vec![vec![1.0]], None).is_err());
        assert!(ChannelInstance::new(vec![1.0], vec![vec![f64::NAN]], None).is_err());
        assert!(ChannelInstance::new(vec![1.0], vec![vec![1.0]], Some(vec![1.0, 1.0])).is_err());
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        let bad = SolverOptions {
            nonzero_eps: 1e-9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn report_aggregates() {
        let r = RateReport::from_rates(vec![0.5, 0.25, 1.0]);
        assert_eq!(r.sum_rate, 1.75);
        assert_eq!(r.min_rate, 0.25);
    }

    #[test]
    fn multi_relay_accounting() {
        let a =
            PowerAllocation::from_rows(vec![vec![0.5, 1e-9, 0.5], vec![0.5, 0.3, 0.0]]).unwrap();
        assert_eq!(a.multi_relay_users(1e-7), vec![0]);
    }
}
