//! Statistical channel model: piecewise-linear path loss, log-normal
//! shadowing, Rician and Rayleigh fading, and the synthetic i.i.d. Rayleigh
//! generator.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ChannelInstance;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Geometry, radio and fading parameters of a simulated cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub cell_radius_km: f64,
    pub relay_ring_fraction: f64,
    pub num_relays: usize,
    pub bs_height_m: f64,
    pub relay_height_m: f64,
    pub user_height_m: f64,
    pub rooftop_height_m: f64,
    #[serde(rename = "frequency_GHz")]
    pub frequency_ghz: f64,
    pub building_spacing_m: f64,
    pub street_width_m: f64,
    pub road_orientation_deg: f64,
    #[serde(rename = "tx_power_dBm")]
    pub tx_power_dbm: f64,
    #[serde(rename = "noise_psd_dBm_per_Hz")]
    pub noise_psd_dbm_per_hz: f64,
    #[serde(rename = "channel_bandwidth_kHz")]
    pub channel_bandwidth_khz: f64,
    /// Overrides the noise power computed from the PSD and bandwidth.
    #[serde(rename = "noise_power_dBm")]
    pub noise_power_dbm: Option<f64>,
    /// Shadowing on links that end at a user.
    #[serde(rename = "shadowing_sigma_dB")]
    pub shadowing_sigma_db: f64,
    /// Shadowing on the line-of-sight BS-relay link.
    #[serde(rename = "los_shadowing_sigma_dB")]
    pub los_shadowing_sigma_db: f64,
    #[serde(rename = "rician_K_dB")]
    pub rician_k_db: f64,
    pub user_density_per_km2: f64,
    /// Loss at zero distance; defaults to free-space loss at 1 m.
    #[serde(rename = "path_loss_intercept_dB")]
    pub path_loss_intercept_db: Option<f64>,
    #[serde(rename = "near_slope_dB_per_km")]
    pub near_slope_db_per_km: f64,
    #[serde(rename = "far_slope_dB_per_km")]
    pub far_slope_db_per_km: f64,
    pub breakpoint_km: f64,
    /// Adds the rooftop-to-street diffraction loss on links to users.
    pub rooftop_to_street: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            cell_radius_km: 1.0,
            relay_ring_fraction: 0.4,
            num_relays: 4,
            bs_height_m: 50.0,
            relay_height_m: 50.0,
            user_height_m: 1.5,
            rooftop_height_m: 30.0,
            frequency_ghz: 1.0,
            building_spacing_m: 50.0,
            street_width_m: 12.0,
            road_orientation_deg: 90.0,
            tx_power_dbm: 20.0,
            noise_psd_dbm_per_hz: -174.0,
            channel_bandwidth_khz: 200.0,
            noise_power_dbm: None,
            shadowing_sigma_db: 8.0,
            los_shadowing_sigma_db: 3.4,
            rician_k_db: 10.0,
            user_density_per_km2: 30.0 / PI,
            path_loss_intercept_db: None,
            near_slope_db_per_km: 20.0,
            far_slope_db_per_km: 38.0,
            breakpoint_km: 0.657,
            rooftop_to_street: true,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cell_radius_km", self.cell_radius_km),
            ("user_height_m", self.user_height_m),
            ("rooftop_height_m", self.rooftop_height_m),
            ("frequency_GHz", self.frequency_ghz),
            ("street_width_m", self.street_width_m),
            ("channel_bandwidth_kHz", self.channel_bandwidth_khz),
            ("user_density_per_km2", self.user_density_per_km2),
            ("breakpoint_km", self.breakpoint_km),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.relay_ring_fraction > 0.0 && self.relay_ring_fraction < 1.0) {
            return Err(Error::InvalidArgument(
                "relay_ring_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.num_relays == 0 {
            return Err(Error::InvalidArgument("num_relays must be positive".into()));
        }
        if self.shadowing_sigma_db < 0.0 || self.los_shadowing_sigma_db < 0.0 {
            return Err(Error::InvalidArgument(
                "shadowing sigma must be non-negative".into(),
            ));
        }
        if self.rooftop_to_street && self.rooftop_height_m <= self.user_height_m {
            return Err(Error::InvalidArgument(
                "rooftops must be above the users".into(),
            ));
        }
        Ok(())
    }

    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_power_dbm.unwrap_or_else(|| {
            self.noise_psd_dbm_per_hz + 10.0 * (self.channel_bandwidth_khz * 1e3).log10()
        })
    }

    pub fn noise_power_mw(&self) -> f64 {
        db_to_linear(self.noise_power_dbm())
    }

    pub fn tx_power_mw(&self) -> f64 {
        db_to_linear(self.tx_power_dbm)
    }

    pub fn intercept_db(&self) -> f64 {
        self.path_loss_intercept_db
            .unwrap_or_else(|| free_space_loss_db(1.0, self.frequency_ghz))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Free-space loss over `distance_m` at `frequency_ghz`.
pub fn free_space_loss_db(distance_m: f64, frequency_ghz: f64) -> f64 {
    let wavelength = SPEED_OF_LIGHT / (frequency_ghz * 1e9);
    20.0 * (4.0 * PI * distance_m / wavelength).log10()
}

/// Rooftop-to-street diffraction loss of the COST-231 Walfisch-Ikegami model.
pub fn rooftop_to_street_db(config: &ScenarioConfig) -> f64 {
    let phi = config.road_orientation_deg;
    let orientation = if phi < 35.0 {
        -10.0 + 0.354 * phi
    } else if phi < 55.0 {
        2.5 + 0.075 * (phi - 35.0)
    } else {
        4.0 - 0.114 * (phi - 55.0)
    };
    -16.9 - 10.0 * config.street_width_m.log10()
        + 10.0 * (config.frequency_ghz * 1e3).log10()
        + 20.0 * (config.rooftop_height_m - config.user_height_m).log10()
        + orientation
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    BsRelay,
    BsUser,
    RelayUser,
}

/// Path loss in dB at `distance_km`: the intercept plus 20 dB/km up to the
/// breakpoint and 38 dB/km beyond it (both configurable). Links that end at
/// a user also pay the rooftop-to-street loss when that is enabled.
#[allow(non_snake_case)]
pub fn path_loss_dB(distance_km: f64, kind: LinkKind, config: &ScenarioConfig) -> f64 {
    let d = distance_km.max(0.0);
    let bp = config.breakpoint_km;
    let mut loss = config.intercept_db()
        + config.near_slope_db_per_km * d.min(bp)
        + config.far_slope_db_per_km * (d - bp).max(0.0);
    if config.rooftop_to_street && kind != LinkKind::BsRelay {
        loss += rooftop_to_street_db(config);
    }
    loss
}

/// Independent random substreams for one trial.
///
/// Every link class draws from its own ChaCha8 stream keyed by the seed, a
/// three-level index path and the class, so the values do not depend on
/// evaluation order or on how trials are spread over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
    path: [u64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamClass {
    Placement = 0,
    BsRelayShadow = 1,
    BsUserShadow = 2,
    RelayUserShadow = 3,
    BsRelayFade = 4,
    BsUserFade = 5,
    RelayUserFade = 6,
    ExtraAntennaFade = 7,
    Synthetic = 8,
}

impl Streams {
    pub fn new(seed: u64, index: u64) -> Self {
        Self::at(seed, [index, 0, 0])
    }

    pub fn at(seed: u64, path: [u64; 3]) -> Self {
        Self { seed, path }
    }

    pub fn rng(&self, class: StreamClass) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        for (i, v) in self.path.iter().enumerate() {
            key[8 * (i + 1)..8 * (i + 2)].copy_from_slice(&v.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(class as u64);
        rng
    }
}

/// Node positions in km, base station at the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement {
    pub relays: Vec<[f64; 2]>,
    pub users: Vec<[f64; 2]>,
}

impl Placement {
    pub fn new(config: &ScenarioConfig, users: Vec<[f64; 2]>) -> Self {
        Self {
            relays: relay_positions(config),
            users,
        }
    }
}

/// Relays equally spaced on the ring, the first at 45 degrees.
pub fn relay_positions(config: &ScenarioConfig) -> Vec<[f64; 2]> {
    let r = config.relay_ring_fraction * config.cell_radius_km;
    (0..config.num_relays)
        .map(|i| {
            let angle = PI / 4.0 + 2.0 * PI * i as f64 / config.num_relays as f64;
            [r * angle.cos(), r * angle.sin()]
        })
        .collect()
}

/// Uniform points in the annulus `inner <= r <= outer` (km).
pub fn uniform_annulus<R: Rng + ?Sized>(
    inner: f64,
    outer: f64,
    n: usize,
    rng: &mut R,
) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let r = (inner * inner + rng.random::<f64>() * (outer * outer - inner * inner)).sqrt();
            let angle = 2.0 * PI * rng.random::<f64>();
            [r * angle.cos(), r * angle.sin()]
        })
        .collect()
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Path loss and shadowing as linear power gains.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    pub bs_relay: Vec<f64>,
    pub bs_user: Vec<f64>,
    /// Row-major `J x K`.
    pub relay_user: Vec<f64>,
}

pub fn draw_large_scale(
    placement: &Placement,
    config: &ScenarioConfig,
    streams: &Streams,
) -> LargeScale {
    let gain = |d: f64, kind: LinkKind, sigma: f64, rng: &mut ChaCha8Rng| {
        let shadow: f64 = if sigma > 0.0 {
            sigma * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        db_to_linear(shadow - path_loss_dB(d, kind, config))
    };
    let origin = [0.0, 0.0];
    let mut rng = streams.rng(StreamClass::BsRelayShadow);
    let bs_relay = placement
        .relays
        .iter()
        .map(|&r| {
            gain(
                distance(origin, r),
                LinkKind::BsRelay,
                config.los_shadowing_sigma_db,
                &mut rng,
            )
        })
        .collect();
    let mut rng = streams.rng(StreamClass::BsUserShadow);
    let bs_user = placement
        .users
        .iter()
        .map(|&u| {
            gain(
                distance(origin, u),
                LinkKind::BsUser,
                config.shadowing_sigma_db,
                &mut rng,
            )
        })
        .collect();
    let mut rng = streams.rng(StreamClass::RelayUserShadow);
    let relay_user = placement
        .relays
        .iter()
        .flat_map(|&r| placement.users.iter().map(move |&u| distance(r, u)))
        .map(|d| gain(d, LinkKind::RelayUser, config.shadowing_sigma_db, &mut rng))
        .collect();
    LargeScale {
        bs_relay,
        bs_user,
        relay_user,
    }
}

/// Unit-mean power of a Rayleigh fade.
pub fn rayleigh_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Unit-mean power of a Rician fade with linear K-factor `k`.
pub fn rician_power<R: Rng + ?Sized>(k: f64, rng: &mut R) -> f64 {
    if k.is_infinite() {
        return 1.0;
    }
    let los = (k / (k + 1.0)).sqrt();
    let s = (0.5 / (k + 1.0)).sqrt();
    let re = los + s * rng.sample::<f64, _>(StandardNormal);
    let im = s * rng.sample::<f64, _>(StandardNormal);
    re * re + im * im
}

/// Small-scale fading powers, Rician on the BS-relay link and Rayleigh
/// elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallScale {
    pub bs_relay: Vec<f64>,
    pub bs_user: Vec<f64>,
    pub relay_user: Vec<f64>,
}

pub fn draw_small_scale(
    nj: usize,
    nk: usize,
    config: &ScenarioConfig,
    streams: &Streams,
) -> SmallScale {
    let k = db_to_linear(config.rician_k_db);
    let mut rng = streams.rng(StreamClass::BsRelayFade);
    let bs_relay = (0..nj).map(|_| rician_power(k, &mut rng)).collect();
    let mut rng = streams.rng(StreamClass::BsUserFade);
    let bs_user = (0..nk).map(|_| rayleigh_power(&mut rng)).collect();
    let mut rng = streams.rng(StreamClass::RelayUserFade);
    let relay_user = (0..nj * nk).map(|_| rayleigh_power(&mut rng)).collect();
    SmallScale {
        bs_relay,
        bs_user,
        relay_user,
    }
}

/// Transmit powers in mW used to turn gains into SNRs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSplit {
    /// BS power behind each direct-link SNR.
    pub direct_mw: f64,
    /// Full power of each relay.
    pub relay_mw: f64,
    /// BS power behind the source-relay SNRs; `None` omits them.
    pub source_relay_mw: Option<f64>,
}

impl PowerSplit {
    /// Everything at full power, relays sharing the BS budget equally. Used
    /// for the conservative decoding check.
    pub fn full_power(config: &ScenarioConfig) -> Self {
        let p = config.tx_power_mw();
        Self {
            direct_mw: p,
            relay_mw: p / config.num_relays as f64,
            source_relay_mw: Some(p),
        }
    }

    /// First slot shared equally among `num_users`, each relay with an equal
    /// share of the budget in the second slot.
    pub fn shared(config: &ScenarioConfig, num_users: usize) -> Self {
        let p = config.tx_power_mw();
        Self {
            direct_mw: p / num_users.max(1) as f64,
            relay_mw: p / config.num_relays as f64,
            source_relay_mw: None,
        }
    }
}

pub fn instance_from(
    large: &LargeScale,
    small: &SmallScale,
    power: &PowerSplit,
    noise_mw: f64,
) -> Result<ChannelInstance> {
    let nj = large.bs_relay.len();
    let nk = large.bs_user.len();
    let direct = (0..nk)
        .map(|k| power.direct_mw * large.bs_user[k] * small.bs_user[k] / noise_mw)
        .collect();
    let relay = (0..nj * nk)
        .map(|i| power.relay_mw * large.relay_user[i] * small.relay_user[i] / noise_mw)
        .collect();
    let sr = power.source_relay_mw.map(|pw| {
        (0..nj)
            .map(|j| pw * large.bs_relay[j] * small.bs_relay[j] / noise_mw)
            .collect()
    });
    ChannelInstance::from_flat(nj, nk, direct, relay, sr)
}

/// One channel realization (shadowing and fading) for the given placement.
pub fn draw_instance(
    placement: &Placement,
    config: &ScenarioConfig,
    power: &PowerSplit,
    streams: &Streams,
) -> Result<ChannelInstance> {
    let large = draw_large_scale(placement, config, streams);
    let small = draw_small_scale(
        placement.relays.len(),
        placement.users.len(),
        config,
        streams,
    );
    instance_from(&large, &small, power, config.noise_power_mw())
}

/// I.i.d. Rayleigh instance: `p_jk = (snr / J) |h|^2` and
/// `c_k = (snr / K) |g|^2` with unit-mean exponential powers.
pub fn draw_synthetic_rayleigh<R: Rng + ?Sized>(
    num_relays: usize,
    num_users: usize,
    snr_total: f64,
    rng: &mut R,
) -> Result<ChannelInstance> {
    let relay_snr = snr_total / num_relays.max(1) as f64;
    let direct_snr = snr_total / num_users.max(1) as f64;
    let relay = (0..num_relays * num_users)
        .map(|_| relay_snr * rayleigh_power(rng))
        .collect();
    let direct = (0..num_users)
        .map(|_| direct_snr * rayleigh_power(rng))
        .collect();
    ChannelInstance::from_flat(num_relays, num_users, direct, relay, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_and_intercept() {
        let cfg = ScenarioConfig::default();
        let pl = |d| path_loss_dB(d, LinkKind::BsRelay, &cfg);
        assert!((pl(0.657) - pl(0.0) - 13.14).abs() < 1e-9);
        assert!((pl(1.0) - pl(0.657) - 0.343 * 38.0).abs() < 1e-9);
        assert_eq!(pl(0.0), cfg.intercept_db());
        assert!((cfg.intercept_db() - 32.44).abs() < 0.01);
    }

    #[test]
    fn user_links_pay_rooftop_loss() {
        let cfg = ScenarioConfig::default();
        let extra = path_loss_dB(0.5, LinkKind::RelayUser, &cfg)
            - path_loss_dB(0.5, LinkKind::BsRelay, &cfg);
        assert!((extra - rooftop_to_street_db(&cfg)).abs() < 1e-12);
        assert!((rooftop_to_street_db(&cfg) - 31.415).abs() < 1e-3);
    }

    #[test]
    fn noise_floor() {
        let cfg = ScenarioConfig::default();
        assert!((cfg.noise_power_dbm() - (-120.98970004336019)).abs() < 1e-9);
        let cfg = ScenarioConfig {
            noise_power_dbm: Some(-120.0),
            ..cfg
        };
        assert_eq!(cfg.noise_power_dbm(), -120.0);
    }

    #[test]
    fn relay_ring_starts_at_45_degrees() {
        let r = relay_positions(&ScenarioConfig::default());
        let v = 0.4 / 2f64.sqrt();
        assert!((r[0][0] - v).abs() < 1e-12 && (r[0][1] - v).abs() < 1e-12);
        assert!((r[2][0] + v).abs() < 1e-12 && (r[2][1] + v).abs() < 1e-12);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = Streams::new(3, 9);
        let a: f64 = s.rng(StreamClass::BsUserFade).random();
        let b: f64 = s.rng(StreamClass::BsUserFade).random();
        let c: f64 = s.rng(StreamClass::RelayUserFade).random();
        let d: f64 = Streams::new(3, 10).rng(StreamClass::BsUserFade).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
