//! Path loss by distance and one channel draw for a small cell.
//!
//! Run with `cargo run --example channel_draws`.

use relaysel::channel::{
    draw_instance, path_loss_dB, uniform_annulus, LinkKind, Placement, PowerSplit, ScenarioConfig,
    StreamClass, Streams,
};

fn main() -> relaysel::Result<()> {
    let config = ScenarioConfig::default();
    println!("noise power {:.2} dBm", config.noise_power_dbm());
    for d in [0.1, 0.4, 0.657, 1.0, 2.0] {
        println!(
            "d = {d:>5} km: bs-relay {:6.2} dB, relay-user {:6.2} dB",
            path_loss_dB(d, LinkKind::BsRelay, &config),
            path_loss_dB(d, LinkKind::RelayUser, &config)
        );
    }

    let streams = Streams::new(config.seed, 0);
    let users = uniform_annulus(0.5, 1.0, 3, &mut streams.rng(StreamClass::Placement));
    let placement = Placement::new(&config, users);
    let inst = draw_instance(
        &placement,
        &config,
        &PowerSplit::shared(&config, 3),
        &streams,
    )?;
    println!("relays at {:?}", placement.relays);
    for k in 0..inst.num_users() {
        let relays: Vec<String> = (0..inst.num_relays())
            .map(|j| format!("{:8.2}", 10.0 * inst.relay(j, k).log10()))
            .collect();
        println!(
            "user {k}: direct {:7.2} dB, relays [{}] dB",
            10.0 * inst.direct()[k].log10(),
            relays.join(", ")
        );
    }
    Ok(())
}
