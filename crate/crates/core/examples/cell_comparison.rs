//! Average and outage rates of SISO, MISO and relay-assisted cells as the
//! cell grows. Uses fewer fades than the full experiment.
//!
//! Run with `cargo run --release --example cell_comparison [fades_per_set]`.

use relaysel::baselines::SystemObjective;
use relaysel::channel::ScenarioConfig;
use relaysel::experiments::{run_cell_comparison, CellSetup, RateUnit};
use relaysel::model::Codebook;

fn main() -> relaysel::Result<()> {
    let fades = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    for objective in [SystemObjective::Sum, SystemObjective::MaxMin] {
        let setup = CellSetup {
            radii_km: vec![1.0, 2.0, 3.0],
            objective,
            codebook: Codebook::Repetition,
            location_sets: 50,
            fades_per_set: fades,
            rate_unit: RateUnit::BitsPerHz,
        };
        println!("{objective}");
        println!(
            "{:>6} {:>6} {:>5} {:>10} {:>10} {:>10}",
            "r (km)", "system", "K", "mean", "10%", "1%"
        );
        for r in run_cell_comparison(&ScenarioConfig::default(), &setup, None)? {
            println!(
                "{:>6} {:>6} {:>5} {:>10.4} {:>10.4} {:>10.4}",
                r.radius_km,
                r.system.name(),
                r.users,
                r.mean_rate,
                r.outage10,
                r.outage1
            );
        }
    }
    Ok(())
}
