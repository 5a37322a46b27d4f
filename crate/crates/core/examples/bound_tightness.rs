//! Average gap between the relaxed upper bound and the selection heuristic
//! on i.i.d. Rayleigh channels.
//!
//! Run with `cargo run --release --example bound_tightness`.

use relaysel::baselines::SystemObjective;
use relaysel::experiments::{run_bound_tightness, TightnessSetup};
use relaysel::model::Codebook;

fn main() -> relaysel::Result<()> {
    for (objective, snr_db) in [
        (SystemObjective::Sum, 30.0),
        (SystemObjective::MaxMin, 20.0),
    ] {
        let setup = TightnessSetup {
            relays: vec![2, 4],
            users: vec![8, 16, 32],
            snr_db,
            trials: 100,
            objective,
            codebook: Codebook::Repetition,
            oracle: false,
            seed: 1,
        };
        println!("{objective} at {snr_db} dB");
        println!(
            "{:>2} {:>3} {:>10} {:>10} {:>10} {:>10}",
            "J", "K", "upper", "lower", "gap", "refined"
        );
        for r in run_bound_tightness(&setup, None)? {
            println!(
                "{:>2} {:>3} {:>10.4} {:>10.4} {:>10.2e} {:>10.2e}",
                r.relays, r.users, r.mean_upper, r.mean_lower, r.mean_gap, r.mean_gap_refined
            );
        }
    }
    Ok(())
}
