//! Sum rate with a guaranteed rate per user, and what happens when the
//! guarantees cannot be met.
//!
//! Run with `cargo run --example min_rate`.

use relaysel::model::{ChannelInstance, Codebook, SolverOptions};
use relaysel::selection::bound_pair;
use relaysel::solver::{solve_sum_rate, solve_sum_rate_min, MinRateTargets, Objective};

fn main() -> relaysel::Result<()> {
    let instance = ChannelInstance::new(
        vec![0.2, 0.5, 0.1, 0.3],
        vec![vec![50.0, 2.0, 6.0, 1.0], vec![3.0, 40.0, 5.0, 30.0]],
        None,
    )?;
    let options = SolverOptions::default();

    let free = solve_sum_rate(&instance, &options, Codebook::Repetition)?;
    println!(
        "without targets: sum {:.4}, rates {:?}",
        free.objective,
        short(&free.rates.per_user)
    );

    let targets = MinRateTargets::new(vec![1.0; 4])?;
    let floor = solve_sum_rate_min(&instance, &targets, &options, Codebook::Repetition)?;
    println!(
        "1 bit/s/Hz each: sum {:.4}, rates {:?}",
        floor.objective,
        short(&floor.rates.per_user)
    );
    println!(
        "  binding multipliers {:?}",
        short(&floor.duals.user_multipliers)
    );

    let b = bound_pair(
        &instance,
        &Objective::SumRateMin(targets),
        Codebook::Repetition,
        &options,
    )?;
    println!(
        "  after selection: lower {:.4}, rates {:?}",
        b.lower,
        short(&b.rates.per_user)
    );

    let too_much = MinRateTargets::new(vec![3.0; 4])?;
    match solve_sum_rate_min(&instance, &too_much, &options, Codebook::Repetition) {
        Err(e) if e.is_infeasible() => println!("3 bits/s/Hz each: {e}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}

fn short(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.4}")).collect()
}
