//! How often the source-relay link is not the bottleneck, by distance from
//! the base station.
//!
//! Run with `cargo run --release --example assumption_table [samples]`.

use relaysel::channel::ScenarioConfig;
use relaysel::experiments::run_assumption_table;

fn main() -> relaysel::Result<()> {
    let samples = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(100_000);
    let rows = run_assumption_table(&ScenarioConfig::default(), samples, None)?;
    println!("{:>12} {:>9} {:>9}", "annulus (m)", "samples", "valid %");
    for r in rows {
        println!(
            "{:>5}-{:<6} {:>9} {:>9.3}",
            r.inner_m, r.outer_m, r.samples, r.percent_valid
        );
    }
    Ok(())
}
