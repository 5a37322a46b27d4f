//! Writing a default experiment config and reading an edited one back.
//!
//! Run with `cargo run --example config_files`.

use relaysel::channel::ScenarioConfig;
use relaysel::config::{parse_config, render_config};
use relaysel::experiments::{ExperimentKind, ExperimentParams};

fn main() -> relaysel::Result<()> {
    let kind = ExperimentKind::OracleCheck;
    print!(
        "{}",
        render_config(
            &ScenarioConfig::default(),
            &ExperimentParams::defaults_for(kind)
        )
    );

    let edited = "# smaller run\ntrials = 20\nusers = 2, 4, 6\nnoise_power_dBm = -120\n";
    let (scenario, params) = parse_config(edited, kind)?;
    println!(
        "\nnoise {} dBm, users {:?}, trials {}",
        scenario.noise_power_dbm(),
        params.users,
        params.trials
    );

    match parse_config("trails = 20\n", kind) {
        Err(e) => println!("typo rejected: {e}"),
        Ok(_) => println!("typo accepted"),
    }
    Ok(())
}
