//! Repetition coding against independent codebooks on the same channels,
//! and the decoding cap set by the source-relay link.
//!
//! Run with `cargo run --example codebooks`.

use relaysel::model::{
    assumption_holds, rates, ChannelInstance, Codebook, PowerAllocation, SolverOptions,
};
use relaysel::selection::bound_pair;
use relaysel::solver::Objective;

fn main() -> relaysel::Result<()> {
    let instance = ChannelInstance::new(
        vec![3.0, 1.0, 0.2],
        vec![vec![20.0, 4.0, 9.0], vec![6.0, 15.0, 7.0]],
        Some(vec![200.0, 200.0]),
    )?;
    println!(
        "decoding assumption holds: {}",
        assumption_holds(&instance)?
    );

    let options = SolverOptions::default();
    for codebook in [Codebook::Repetition, Codebook::Independent] {
        let b = bound_pair(&instance, &Objective::SumRate, codebook, &options)?;
        println!(
            "{codebook:>12}: upper {:.5} lower {:.5} rates {:?}",
            b.upper,
            b.lower,
            b.rates
                .per_user
                .iter()
                .map(|r| format!("{r:.4}"))
                .collect::<Vec<_>>()
        );
    }

    // A weak source-relay link caps the rate of every user that relay serves.
    let capped = ChannelInstance::new(vec![0.0], vec![vec![100.0]], Some(vec![3.0]))?;
    let full = PowerAllocation::full(1, 1);
    let r = rates(&capped, &full, Codebook::Repetition);
    println!(
        "capped user rate {:.4} (uncapped would be {:.4})",
        r.per_user[0],
        0.5 * 101f64.log2()
    );
    Ok(())
}
