//! SISO and MISO base stations against the relay system on one drop.
//!
//! Run with `cargo run --example baselines`.

use relaysel::baselines::{miso_rates, relay_system_rates, siso_rates, SystemObjective};
use relaysel::channel::{
    draw_large_scale, draw_small_scale, uniform_annulus, Placement, ScenarioConfig, StreamClass,
    Streams,
};
use relaysel::experiments::paired_channels;
use relaysel::model::{Codebook, SolverOptions};

fn main() -> relaysel::Result<()> {
    let config = ScenarioConfig {
        cell_radius_km: 2.0,
        ..ScenarioConfig::default()
    };
    let streams = Streams::new(5, 0);
    let users = uniform_annulus(1.0, 2.0, 12, &mut streams.rng(StreamClass::Placement));
    let placement = Placement::new(&config, users);
    let large = draw_large_scale(&placement, &config, &streams);
    let small = draw_small_scale(config.num_relays, 12, &config, &streams);
    let ch = paired_channels(
        &config,
        &large,
        &small,
        &mut streams.rng(StreamClass::ExtraAntennaFade),
    )?;

    let power = config.tx_power_mw();
    for objective in [SystemObjective::Sum, SystemObjective::MaxMin] {
        let siso = siso_rates(&ch.siso_gains, power, objective)?;
        let miso = miso_rates(&ch.miso, power, objective)?;
        let relay = relay_system_rates(
            &ch.relay,
            objective,
            Codebook::Repetition,
            &SolverOptions::default(),
        )?;
        println!("{objective}:");
        for (name, r) in [("siso", siso), ("miso", miso), ("relay", relay)] {
            println!(
                "  {name:>5}: mean {:.4}, min {:.4}",
                r.mean_rate(),
                r.min_rate
            );
        }
    }
    Ok(())
}
