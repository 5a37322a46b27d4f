//! Upper and lower bounds on the best sum rate of a small instance.
//!
//! Run with `cargo run --example solve_instance`.

use relaysel::model::{ChannelInstance, Codebook, SolverOptions};
use relaysel::selection::{bound_pair, round_to_selection};
use relaysel::solver::{solve_sum_rate, Objective};

fn main() -> relaysel::Result<()> {
    // Three relays, five users; linear SNRs.
    let instance = ChannelInstance::new(
        vec![0.5, 2.0, 0.1, 1.0, 0.0],
        vec![
            vec![40.0, 5.0, 12.0, 1.0, 30.0],
            vec![2.0, 60.0, 10.0, 8.0, 25.0],
            vec![9.0, 3.0, 11.0, 50.0, 1.0],
        ],
        None,
    )?;
    let options = SolverOptions::default();

    let relaxed = solve_sum_rate(&instance, &options, Codebook::Repetition)?;
    println!("relaxed sum rate {:.6} bits/s/Hz", relaxed.objective);
    println!(
        "kkt residual {:.1e}, certified {}",
        relaxed.kkt_residual, relaxed.certified
    );
    for (j, row) in relaxed.alpha.rows().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|a| format!("{a:.4}")).collect();
        println!("  relay {j}: [{}]", cells.join(", "));
    }
    println!(
        "users served by several relays: {:?}",
        relaxed.multi_relay_users
    );

    let (assignment, _) = round_to_selection(&instance, &relaxed)?;
    println!("selection {:?}", assignment.as_slice());

    let bounds = bound_pair(
        &instance,
        &Objective::SumRate,
        Codebook::Repetition,
        &options,
    )?;
    println!(
        "upper {:.6}  lower {:.6}  relative gap {:.2e}",
        bounds.upper, bounds.lower, bounds.gap
    );
    Ok(())
}
