//! Max-min fair allocation: every served user ends up at the same rate.
//!
//! Run with `cargo run --example max_min`.

use relaysel::model::{ChannelInstance, Codebook, SolverOptions};
use relaysel::selection::bound_pair;
use relaysel::solver::{solve_max_min, Objective};

fn main() -> relaysel::Result<()> {
    let instance = ChannelInstance::new(
        vec![1.0, 0.1, 4.0, 0.5, 0.0],
        vec![
            vec![30.0, 2.0, 1.0, 20.0, 5.0],
            vec![1.0, 25.0, 3.0, 2.0, 18.0],
        ],
        None,
    )?;
    let options = SolverOptions::default();
    let relaxed = solve_max_min(&instance, &options, Codebook::Repetition)?;
    println!(
        "relaxed minimum rate {:.6}, certified {}",
        relaxed.objective, relaxed.certified
    );
    for (k, r) in relaxed.rates.per_user.iter().enumerate() {
        let power: f64 = (0..instance.num_relays())
            .map(|j| relaxed.alpha.get(j, k))
            .sum();
        println!("  user {k}: rate {r:.6}, relay power {power:.4}");
    }

    let b = bound_pair(
        &instance,
        &Objective::MaxMin,
        Codebook::Repetition,
        &options,
    )?;
    println!(
        "with one relay per user: {:.6} (gap {:.2e})",
        b.lower, b.gap
    );
    println!("assignment {:?}", b.assignment.as_slice());
    Ok(())
}
