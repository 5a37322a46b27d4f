//! Heuristic bounds against the exhaustive optimum on random instances.
//!
//! Run with `cargo run --release --example oracle_check`.

use relaysel::channel::{db_to_linear, draw_synthetic_rayleigh, StreamClass, Streams};
use relaysel::model::{Codebook, SolverOptions};
use relaysel::oracle::{exhaustive_optimum, DEFAULT_LIMIT};
use relaysel::selection::bound_pair_with;
use relaysel::solver::Objective;

fn main() -> relaysel::Result<()> {
    let options = SolverOptions::default();
    let mut rng = Streams::new(11, 0).rng(StreamClass::Synthetic);
    println!(
        "{:>2} {:>10} {:>10} {:>10} {:>10}",
        "K", "upper", "optimum", "refined", "rounded"
    );
    for k in 2..=8 {
        let inst = draw_synthetic_rayleigh(2, k, db_to_linear(30.0), &mut rng)?;
        let opt = exhaustive_optimum(
            &inst,
            &Objective::SumRate,
            Codebook::Repetition,
            DEFAULT_LIMIT,
        )?;
        let rounded = bound_pair_with(
            &inst,
            &Objective::SumRate,
            Codebook::Repetition,
            false,
            &options,
        )?;
        let refined = bound_pair_with(
            &inst,
            &Objective::SumRate,
            Codebook::Repetition,
            true,
            &options,
        )?;
        println!(
            "{k:>2} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            rounded.upper, opt.value, refined.lower, rounded.lower
        );
    }
    Ok(())
}
