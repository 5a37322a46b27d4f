//! Monte Carlo experiments: decoding-assumption validity by distance,
//! bound tightness on synthetic Rayleigh channels (optionally against the
//! exhaustive optimum) and the cell-level comparison with SISO and MISO base
//! stations.
//!
//! Every trial draws from its own random substream, trials run on a rayon
//! pool, and results are merged in trial order, so output is identical for
//! any thread count.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{miso_rates, relay_system_rates, siso_rates, SystemObjective};
use crate::channel::{
    db_to_linear, draw_instance, draw_large_scale, draw_small_scale, draw_synthetic_rayleigh,
    instance_from, uniform_annulus, LargeScale, Placement, PowerSplit, ScenarioConfig, SmallScale,
    StreamClass, Streams,
};
use crate::error::{Error, Result};
use crate::model::{assumption_holds, ChannelInstance, Codebook, SolverOptions};
use crate::oracle::{exhaustive_optimum, DEFAULT_LIMIT};
use crate::selection::bound_pair_with;

/// Width of the distance bins of the assumption table, km.
pub const ANNULUS_WIDTH_KM: f64 = 0.1;

/// Relative distance to the exhaustive optimum counted as a match.
pub const ORACLE_MATCH_TOL: f64 = 1e-3;

const SANDWICH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    AssumptionTable,
    BoundTightness,
    CellComparison,
    OracleCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::AssumptionTable,
        ExperimentKind::BoundTightness,
        ExperimentKind::CellComparison,
        ExperimentKind::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AssumptionTable => "assumption-table",
            ExperimentKind::BoundTightness => "bound-tightness",
            ExperimentKind::CellComparison => "cell-comparison",
            ExperimentKind::OracleCheck => "oracle-check",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment {s:?}")))
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateUnit {
    #[default]
    BitsPerHz,
    /// Scaled by the configured channel bandwidth.
    BitsPerSecond,
}

/// Experiment knobs that are not part of the physical scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentParams {
    /// User locations drawn for the assumption table.
    pub samples: usize,
    pub relays: Vec<usize>,
    pub users: Vec<usize>,
    /// Total SNR of the synthetic channels; 30 dB for the sum rate and 20 dB
    /// for max-min when unset.
    #[serde(rename = "snr_dB")]
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub objective: SystemObjective,
    pub codebook: Codebook,
    pub oracle: bool,
    pub radii_km: Vec<f64>,
    pub location_sets: usize,
    pub fades_per_set: usize,
    pub rate_unit: RateUnit,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            samples: 300_000,
            relays: vec![4],
            users: vec![8, 16, 24, 32],
            snr_db: None,
            trials: 1000,
            objective: SystemObjective::Sum,
            codebook: Codebook::Repetition,
            oracle: false,
            radii_km: vec![1.0, 2.0, 3.0],
            location_sets: 50,
            fades_per_set: 500,
            rate_unit: RateUnit::BitsPerHz,
        }
    }
}

impl ExperimentParams {
    pub fn defaults_for(kind: ExperimentKind) -> Self {
        let base = Self::default();
        match kind {
            ExperimentKind::OracleCheck => Self {
                relays: vec![2],
                users: (2..=8).collect(),
                trials: 100,
                oracle: true,
                ..base
            },
            _ => base,
        }
    }

    /// Fills in values that depend on other fields.
    pub fn resolved(mut self) -> Self {
        if self.snr_db.is_none() {
            self.snr_db = Some(match self.objective {
                SystemObjective::Sum => 30.0,
                SystemObjective::MaxMin => 20.0,
            });
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.relays.contains(&0) || self.users.contains(&0) {
            return bad("relay and user counts must be positive");
        }
        if self.radii_km.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("radii must be positive");
        }
        if self.snr_db.is_some_and(|s| !s.is_finite()) {
            return bad("snr_dB must be finite");
        }
        if self.samples == 0
            || self.trials == 0
            || self.location_sets == 0
            || self.fades_per_set == 0
        {
            return bad("sample, trial, set and fade counts must be positive");
        }
        Ok(())
    }
}

/// Rows that can be written as CSV.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn to_csv<R: CsvRow>(rows: &[R]) -> String {
    let mut out = R::HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.record().join(","));
        out.push('\n');
    }
    out
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionRow {
    pub inner_m: f64,
    pub outer_m: f64,
    pub samples: u64,
    pub valid: u64,
    pub percent_valid: f64,
}

impl CsvRow for AssumptionRow {
    const HEADER: &'static [&'static str] =
        &["inner_m", "outer_m", "samples", "valid", "percent_valid"];

    fn record(&self) -> Vec<String> {
        vec![
            num(self.inner_m),
            num(self.outer_m),
            self.samples.to_string(),
            self.valid.to_string(),
            num(self.percent_valid),
        ]
    }
}

/// Share of uniformly placed users for which the decoding assumption holds
/// with all power on, per 100 m annulus around the base station.
///
/// Sample `i` uses substream `i`, so the table for `n` samples extends the
/// table for fewer samples.
pub fn run_assumption_table(
    config: &ScenarioConfig,
    num_samples: usize,
    threads: Option<usize>,
) -> Result<Vec<AssumptionRow>> {
    config.validate()?;
    let radius = config.cell_radius_km;
    let bins = ((radius / ANNULUS_WIDTH_KM) - 1e-9).ceil().max(1.0) as usize;
    let power = PowerSplit::full_power(config);
    let relays = Placement::new(config, vec![]).relays;
    let outcomes: Vec<(usize, bool)> = pool(threads)?.install(|| {
        (0..num_samples as u64)
            .into_par_iter()
            .map(|i| {
                let streams = Streams::new(config.seed, i);
                let users =
                    uniform_annulus(0.0, radius, 1, &mut streams.rng(StreamClass::Placement));
                let d = users[0][0].hypot(users[0][1]);
                let bin = ((d / ANNULUS_WIDTH_KM) as usize).min(bins - 1);
                let placement = Placement {
                    relays: relays.clone(),
                    users,
                };
                let inst = draw_instance(&placement, config, &power, &streams)?;
                Ok((bin, assumption_holds(&inst)?))
            })
            .collect::<Result<_>>()
    })?;
    let mut counts = vec![(0u64, 0u64); bins];
    for (bin, ok) in outcomes {
        counts[bin].0 += 1;
        counts[bin].1 += ok as u64;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(b, (n, v))| AssumptionRow {
            inner_m: (1000.0 * ANNULUS_WIDTH_KM).round() * b as f64,
            outer_m: ((1000.0 * ANNULUS_WIDTH_KM).round() * (b + 1) as f64).min(1000.0 * radius),
            samples: n,
            valid: v,
            percent_valid: if n == 0 {
                f64::NAN
            } else {
                100.0 * v as f64 / n as f64
            },
        })
        .collect())
}

/// Settings of a bound-tightness sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessSetup {
    pub relays: Vec<usize>,
    pub users: Vec<usize>,
    pub snr_db: f64,
    pub trials: usize,
    pub objective: SystemObjective,
    pub codebook: Codebook,
    pub oracle: bool,
    pub seed: u64,
}

/// Averages over the trials of one `(J, K)` pair. Gaps are relative,
/// `(upper - lower) / upper`. `lower` is the rounded heuristic as configured
/// by default (no re-optimization for the sum rate); `lower_refined`
/// re-optimizes power per relay after rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessRow {
    pub relays: usize,
    pub users: usize,
    pub trials: usize,
    pub certified: usize,
    pub mean_upper: f64,
    pub mean_lower: f64,
    pub mean_lower_refined: f64,
    pub mean_gap: f64,
    pub median_gap: f64,
    pub mean_gap_refined: f64,
    pub median_gap_refined: f64,
    pub mean_oracle: Option<f64>,
    /// Share of trials whose refined lower bound is within
    /// [`ORACLE_MATCH_TOL`] of the optimum.
    pub oracle_match: Option<f64>,
    /// Trials where `lower <= optimum <= upper` fails by more than 1e-6.
    pub sandwich_violations: Option<usize>,
}

impl CsvRow for TightnessRow {
    const HEADER: &'static [&'static str] = &[
        "relays",
        "users",
        "trials",
        "certified",
        "mean_upper",
        "mean_lower",
        "mean_lower_refined",
        "mean_gap",
        "median_gap",
        "mean_gap_refined",
        "median_gap_refined",
        "mean_oracle",
        "oracle_match",
        "sandwich_violations",
    ];

    fn record(&self) -> Vec<String> {
        vec![
            self.relays.to_string(),
            self.users.to_string(),
            self.trials.to_string(),
            self.certified.to_string(),
            num(self.mean_upper),
            num(self.mean_lower),
            num(self.mean_lower_refined),
            num(self.mean_gap),
            num(self.median_gap),
            num(self.mean_gap_refined),
            num(self.median_gap_refined),
            opt(self.mean_oracle),
            opt(self.oracle_match),
            self.sandwich_violations
                .map(|v| v.to_string())
                .unwrap_or_default(),
        ]
    }
}

/// Per-trial outcome of the bound-tightness sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessTrial {
    pub upper: f64,
    pub lower: f64,
    pub lower_refined: f64,
    pub certified: bool,
    pub oracle: Option<f64>,
}

/// Bounds for trial `trial` of the `(J, K)` pair; a pure function of its
/// arguments.
pub fn tightness_trial(
    setup: &TightnessSetup,
    nj: usize,
    nk: usize,
    trial: usize,
) -> Result<TightnessTrial> {
    let objective = setup.objective.relay_objective();
    let options = SolverOptions::default();
    let streams = Streams::at(setup.seed, [nj as u64, nk as u64, trial as u64]);
    let inst = draw_synthetic_rayleigh(
        nj,
        nk,
        db_to_linear(setup.snr_db),
        &mut streams.rng(StreamClass::Synthetic),
    )?;
    let plain = bound_pair_with(&inst, &objective, setup.codebook, false, &options)?;
    let refined = bound_pair_with(&inst, &objective, setup.codebook, true, &options)?;
    let lower = match objective {
        crate::solver::Objective::SumRate => plain.lower,
        _ => refined.lower,
    };
    let oracle = if setup.oracle {
        Some(exhaustive_optimum(&inst, &objective, setup.codebook, DEFAULT_LIMIT)?.value)
    } else {
        None
    };
    Ok(TightnessTrial {
        upper: plain.upper,
        lower,
        lower_refined: refined.lower,
        certified: plain.relaxed.certified,
        oracle,
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn relative_gap(upper: f64, lower: f64) -> f64 {
    (upper - lower) / upper.max(1e-12)
}

pub fn run_bound_tightness(
    setup: &TightnessSetup,
    threads: Option<usize>,
) -> Result<Vec<TightnessRow>> {
    let pool = pool(threads)?;
    let mut rows = Vec::new();
    for &nj in &setup.relays {
        for &nk in &setup.users {
            let trials: Vec<TightnessTrial> = pool.install(|| {
                (0..setup.trials)
                    .into_par_iter()
                    .map(|t| tightness_trial(setup, nj, nk, t))
                    .collect::<Result<_>>()
            })?;
            let gaps: Vec<f64> = trials
                .iter()
                .map(|t| relative_gap(t.upper, t.lower))
                .collect();
            let gaps_refined: Vec<f64> = trials
                .iter()
                .map(|t| relative_gap(t.upper, t.lower_refined))
                .collect();
            let (mut mean_oracle, mut oracle_match, mut sandwich) = (None, None, None);
            if setup.oracle {
                let opt = |t: &TightnessTrial| t.oracle.unwrap_or(f64::NAN);
                mean_oracle = Some(mean(trials.iter().map(opt)));
                let matched = trials
                    .iter()
                    .filter(|t| relative_gap(opt(t), t.lower_refined) <= ORACLE_MATCH_TOL)
                    .count();
                oracle_match = Some(matched as f64 / trials.len() as f64);
                sandwich = Some(
                    trials
                        .iter()
                        .filter(|t| {
                            let o = opt(t);
                            !(t.lower <= o + SANDWICH_TOL
                                && t.lower_refined <= o + SANDWICH_TOL
                                && o <= t.upper + SANDWICH_TOL)
                        })
                        .count(),
                );
            }
            rows.push(TightnessRow {
                relays: nj,
                users: nk,
                trials: trials.len(),
                certified: trials.iter().filter(|t| t.certified).count(),
                mean_upper: mean(trials.iter().map(|t| t.upper)),
                mean_lower: mean(trials.iter().map(|t| t.lower)),
                mean_lower_refined: mean(trials.iter().map(|t| t.lower_refined)),
                mean_gap: mean(gaps.iter().copied()),
                median_gap: median(gaps),
                mean_gap_refined: mean(gaps_refined.iter().copied()),
                median_gap_refined: median(gaps_refined),
                mean_oracle,
                oracle_match,
                sandwich_violations: sandwich,
            });
        }
    }
    Ok(rows)
}

/// Channels of the three systems for one location set and one fade, all
/// built from the same large-scale gains.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedChannels {
    pub relay: ChannelInstance,
    /// SISO SNR per unit transmit power (mW).
    pub siso_gains: Vec<f64>,
    /// MISO amplitude gains with unit transmit power; antenna 0 carries the
    /// SISO fade.
    pub miso: Vec<Vec<Complex64>>,
}

pub fn paired_channels(
    config: &ScenarioConfig,
    large: &LargeScale,
    small: &SmallScale,
    extra: &mut impl Rng,
) -> Result<PairedChannels> {
    let nk = large.bs_user.len();
    let noise = config.noise_power_mw();
    let relay = instance_from(large, small, &PowerSplit::shared(config, nk), noise)?;
    let siso_gains: Vec<f64> = (0..nk)
        .map(|k| large.bs_user[k] * small.bs_user[k] / noise)
        .collect();
    let antennas = config.num_relays + 1;
    let miso = (0..nk)
        .map(|k| {
            let amp = (large.bs_user[k] / noise).sqrt();
            let mut h = Vec::with_capacity(antennas);
            h.push(Complex64::new((siso_gains[k]).sqrt(), 0.0));
            for _ in 1..antennas {
                let re: f64 = extra.sample(StandardNormal);
                let im: f64 = extra.sample(StandardNormal);
                h.push(Complex64::new(re, im) * (amp * std::f64::consts::FRAC_1_SQRT_2));
            }
            h
        })
        .collect();
    Ok(PairedChannels {
        relay,
        siso_gains,
        miso,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Siso,
    Miso,
    Relay,
}

impl System {
    pub const ALL: [System; 3] = [System::Siso, System::Miso, System::Relay];

    pub fn name(self) -> &'static str {
        match self {
            System::Siso => "siso",
            System::Miso => "miso",
            System::Relay => "relay",
        }
    }
}

/// Setting of a cell comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSetup {
    pub radii_km: Vec<f64>,
    pub objective: SystemObjective,
    pub codebook: Codebook,
    pub location_sets: usize,
    pub fades_per_set: usize,
    pub rate_unit: RateUnit,
}

/// Pooled per-user rate statistics of one system at one cell radius.
/// `outage10` and `outage1` are the 10th and 1st percentiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub radius_km: f64,
    pub system: System,
    pub users: usize,
    pub samples: usize,
    pub mean_rate: f64,
    pub outage10: f64,
    pub outage1: f64,
}

impl CsvRow for CellRow {
    const HEADER: &'static [&'static str] = &[
        "radius_km",
        "system",
        "users",
        "samples",
        "mean_rate",
        "outage10",
        "outage1",
    ];

    fn record(&self) -> Vec<String> {
        vec![
            num(self.radius_km),
            self.system.name().into(),
            self.users.to_string(),
            self.samples.to_string(),
            num(self.mean_rate),
            num(self.outage10),
            num(self.outage1),
        ]
    }
}

/// Users in the outer annulus `[r/2, r]` at the configured density, at
/// least one.
pub fn users_in_annulus(config: &ScenarioConfig, radius_km: f64) -> usize {
    let area = PI * 0.75 * radius_km * radius_km;
    ((config.user_density_per_km2 * area).round() as usize).max(1)
}

/// Nearest-rank empirical quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Rates of the three systems for location set `set` at radius index `ri`:
/// one placement and large-scale draw, then `fades_per_set` fades.
fn cell_set(
    config: &ScenarioConfig,
    setup: &CellSetup,
    ri: usize,
    set: usize,
) -> Result<[Vec<f64>; 3]> {
    let radius = config.cell_radius_km;
    let nk = users_in_annulus(config, radius);
    let place = Streams::at(config.seed, [ri as u64, set as u64, 0]);
    let users = uniform_annulus(
        radius / 2.0,
        radius,
        nk,
        &mut place.rng(StreamClass::Placement),
    );
    let placement = Placement::new(config, users);
    let large = draw_large_scale(&placement, config, &place);
    let power = config.tx_power_mw();
    let options = SolverOptions::default();
    let mut out: [Vec<f64>; 3] = Default::default();
    for f in 0..setup.fades_per_set {
        let fade = Streams::at(config.seed, [ri as u64, set as u64, f as u64 + 1]);
        let small = draw_small_scale(config.num_relays, nk, config, &fade);
        let ch = paired_channels(
            config,
            &large,
            &small,
            &mut fade.rng(StreamClass::ExtraAntennaFade),
        )?;
        let siso = siso_rates(&ch.siso_gains, power, setup.objective)?;
        let miso = miso_rates(&ch.miso, power, setup.objective)?;
        let relay = relay_system_rates(&ch.relay, setup.objective, setup.codebook, &options)?;
        out[0].extend(siso.per_user);
        out[1].extend(miso.per_user);
        out[2].extend(relay.per_user);
    }
    Ok(out)
}

/// Average and outage per-user rates of the SISO, MISO and relay systems
/// as the cell grows. The three systems share placements, shadowing and
/// the fade of antenna 0.
pub fn run_cell_comparison(
    config: &ScenarioConfig,
    setup: &CellSetup,
    threads: Option<usize>,
) -> Result<Vec<CellRow>> {
    config.validate()?;
    let pool = pool(threads)?;
    let scale = match setup.rate_unit {
        RateUnit::BitsPerHz => 1.0,
        RateUnit::BitsPerSecond => 1000.0 * config.channel_bandwidth_khz,
    };
    let mut rows = Vec::new();
    for (ri, &radius) in setup.radii_km.iter().enumerate() {
        let cfg = ScenarioConfig {
            cell_radius_km: radius,
            ..config.clone()
        };
        let sets: Vec<[Vec<f64>; 3]> = pool.install(|| {
            (0..setup.location_sets)
                .into_par_iter()
                .map(|s| cell_set(&cfg, setup, ri, s))
                .collect::<Result<_>>()
        })?;
        for (i, system) in System::ALL.into_iter().enumerate() {
            let mut pooled: Vec<f64> = sets
                .iter()
                .flat_map(|s| s[i].iter().map(|r| r * scale))
                .collect();
            let mean_rate = mean(pooled.iter().copied());
            pooled.sort_by(f64::total_cmp);
            rows.push(CellRow {
                radius_km: radius,
                system,
                users: users_in_annulus(&cfg, radius),
                samples: pooled.len(),
                mean_rate,
                outage10: quantile(&pooled, 0.10),
                outage1: quantile(&pooled, 0.01),
            });
        }
    }
    Ok(rows)
}

/// Output of [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub rows: usize,
}

/// Runs a named experiment with `params` already resolved.
pub fn run_experiment(
    kind: ExperimentKind,
    config: &ScenarioConfig,
    params: &ExperimentParams,
    threads: Option<usize>,
) -> Result<ExperimentOutput> {
    config.validate()?;
    params.validate()?;
    let params = params.clone().resolved();
    let (csv, rows) = match kind {
        ExperimentKind::AssumptionTable => {
            let rows = run_assumption_table(config, params.samples, threads)?;
            (to_csv(&rows), rows.len())
        }
        ExperimentKind::BoundTightness | ExperimentKind::OracleCheck => {
            let setup = TightnessSetup {
                relays: params.relays.clone(),
                users: params.users.clone(),
                snr_db: params.snr_db.unwrap_or(30.0),
                trials: params.trials,
                objective: params.objective,
                codebook: params.codebook,
                oracle: params.oracle,
                seed: config.seed,
            };
            let rows = run_bound_tightness(&setup, threads)?;
            (to_csv(&rows), rows.len())
        }
        ExperimentKind::CellComparison => {
            let setup = CellSetup {
                radii_km: params.radii_km.clone(),
                objective: params.objective,
                codebook: params.codebook,
                location_sets: params.location_sets,
                fades_per_set: params.fades_per_set,
                rate_unit: params.rate_unit,
            };
            let rows = run_cell_comparison(config, &setup, threads)?;
            (to_csv(&rows), rows.len())
        }
    };
    Ok(ExperimentOutput { csv, rows })
}

/// Provenance written next to each CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub threads: usize,
    pub git_describe: String,
    pub wall_time_s: f64,
    pub rows: usize,
    pub csv: String,
    pub scenario: ScenarioConfig,
    pub params: ExperimentParams,
}

pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Runs an experiment and writes `<name>.csv` and `<name>.manifest.json`
/// into `out_dir`. Returns the paths written.
pub fn run_to_dir(
    kind: ExperimentKind,
    config: &ScenarioConfig,
    params: &ExperimentParams,
    threads: Option<usize>,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let start = Instant::now();
    let output = run_experiment(kind, config, params, threads)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(out_dir)?;
    let csv_name = format!("{}.csv", kind.name());
    let csv_path = out_dir.join(&csv_name);
    std::fs::write(&csv_path, &output.csv)?;
    let manifest = RunManifest {
        experiment: kind,
        seed: config.seed,
        threads: pool(threads)?.current_num_threads(),
        git_describe: git_describe(),
        wall_time_s,
        rows: output.rows,
        csv: csv_name,
        scenario: config.clone(),
        params: params.clone().resolved(),
    };
    let manifest_path = out_dir.join(format!("{}.manifest.json", kind.name()));
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok((csv_path, manifest_path))
}
