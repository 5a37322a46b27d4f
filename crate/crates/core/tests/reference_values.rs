//! Small instances whose optima are pinned by brute-force grids written
//! here, independently of the solvers.

use relaysel::channel::ScenarioConfig;
use relaysel::experiments::run_assumption_table;
use relaysel::model::{Assignment, ChannelInstance, Codebook, PowerAllocation, SolverOptions};
use relaysel::oracle::{exhaustive_optimum, DEFAULT_LIMIT};
use relaysel::selection::{bound_pair_with, refine_selection};
use relaysel::solver::{
    kkt_residual, solve_max_min, solve_sum_rate, solve_sum_rate_min, waterfill_relay, Duals,
    MinRateTargets, Objective,
};

const STEP: f64 = 1e-4;

fn grid() -> impl Iterator<Item = f64> {
    (0..=10_000).map(|i| i as f64 * STEP)
}

/// Maximizer over `a in [lo, hi]` on the 1e-4 grid.
fn argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    grid()
        .filter(|a| *a >= lo - 1e-12 && *a <= hi + 1e-12)
        .map(|a| (a, f(a)))
        .fold((f64::NAN, f64::MIN), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
}

fn inst(c: Vec<f64>, p: Vec<Vec<f64>>) -> ChannelInstance {
    ChannelInstance::new(c, p, None).unwrap()
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn waterfilling_corner_and_floor() {
    let f = |a: f64| (1.0 + a).ln() + (4.0 + 1.0 - a).ln();
    let (a1, _) = argmax(f, 0.0, 1.0);
    assert_eq!(a1, 1.0);
    let got = waterfill_relay(&[1.0, 4.0], &[1.0, 1.0], 1.0, &[0.0, 0.0]).unwrap();
    assert!((got[0] - 1.0).abs() < 1e-12 && got[1].abs() < 1e-12);

    // With the second user held at 0.5948 or more.
    let (a1, _) = argmax(f, 0.0, 1.0 - 0.5948);
    assert!((a1 - 0.4052).abs() < STEP);
    let got = waterfill_relay(&[1.0, 4.0], &[1.0, 1.0], 1.0, &[0.0, 0.5948]).unwrap();
    assert!((got[0] - 0.4052).abs() < 1e-12 && (got[1] - 0.5948).abs() < 1e-12);
}

#[test]
fn sum_rate_with_a_strong_direct_user() {
    let i = inst(vec![0.0, 3.0], vec![vec![1.0, 1.0]]);
    let rate = |a: f64| 0.5 * (1.0 + a).log2() + 0.5 * (4.0 + 1.0 - a).log2();
    let (a1, best) = argmax(rate, 0.0, 1.0);
    assert_eq!(a1, 1.0);
    assert!((best - 1.5).abs() < 1e-12);
    let s = solve_sum_rate(&i, &opts(), Codebook::Repetition).unwrap();
    assert_eq!(s.alpha.rows(), vec![vec![1.0, 0.0]]);
    assert!((s.objective - 1.5).abs() < 1e-12);
}

#[test]
fn sum_rate_with_a_binding_target() {
    let i = inst(vec![0.0, 3.0], vec![vec![1.0, 1.0]]);
    // User 1 needs 4 + a2 >= 2^2.2.
    let floor = 2f64.powf(2.2) - 4.0;
    let rate = |a1: f64| 0.5 * (1.0 + a1).log2() + 0.5 * (4.0 + 1.0 - a1).log2();
    let (a1, best) = argmax(rate, 0.0, 1.0 - floor);
    assert!((a1 - 0.4052).abs() < 2.0 * STEP);
    let exact = 0.5 * (6.0 - 2f64.powf(2.2)).log2() + 1.1;
    assert!((best - exact).abs() < 1e-4);
    // 1.34539, quoted elsewhere as 1.3455.
    assert!((exact - 1.3455).abs() < 2e-4);
    let t = MinRateTargets::new(vec![0.0, 1.1]).unwrap();
    let s = solve_sum_rate_min(&i, &t, &opts(), Codebook::Repetition).unwrap();
    assert!((s.alpha.get(0, 1) - 0.5948).abs() < 1e-4);
    assert!((s.alpha.get(0, 0) - 0.4052).abs() < 1e-4);
    assert!((s.objective - exact).abs() < 1e-9);
    assert!(s.rates.per_user[1] >= 1.1 - 1e-9);
}

#[test]
fn max_min_levels_and_ignores_strong_users() {
    let i = inst(vec![0.0, 0.0], vec![vec![2.0, 1.0]]);
    let (a1, u) = argmax(|a| (2.0 * a).min(1.0 - a), 0.0, 1.0);
    assert!((a1 - 1.0 / 3.0).abs() < STEP && (u - 2.0 / 3.0).abs() < 2.0 * STEP);
    let s = solve_max_min(&i, &opts(), Codebook::Repetition).unwrap();
    assert!((s.alpha.get(0, 0) - 1.0 / 3.0).abs() < 1e-12);
    assert!((s.alpha.get(0, 1) - 2.0 / 3.0).abs() < 1e-12);
    assert!((s.objective - 0.3685).abs() < 1e-4);

    let i = inst(vec![0.0, 10.0], vec![vec![1.0, 1.0]]);
    let (a1, u) = argmax(|a| a.min(10.0 + 1.0 - a), 0.0, 1.0);
    assert_eq!((a1, u), (1.0, 1.0));
    let s = solve_max_min(&i, &opts(), Codebook::Repetition).unwrap();
    assert_eq!(s.alpha.rows(), vec![vec![1.0, 0.0]]);
    assert!((s.rates.per_user[0] - 0.5).abs() < 1e-12);
    assert!((s.rates.per_user[1] - 0.5 * 11f64.log2()).abs() < 1e-12);
}

#[test]
fn corner_allocation_is_never_stationary() {
    let i = inst(vec![0.0, 0.0], vec![vec![1.0, 1.0]]);
    let a = PowerAllocation::from_rows(vec![vec![1.0, 0.0]]).unwrap();
    let min = grid()
        .map(|nu| {
            let duals = Duals {
                relay_prices: vec![nu],
                user_multipliers: vec![0.0, 0.0],
            };
            kkt_residual(&i, &a, &duals, None, Codebook::Repetition).unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(min > 0.1, "{min}");
}

fn two_by_two() -> ChannelInstance {
    inst(vec![0.0, 0.0], vec![vec![4.0, 1.0], vec![1.0, 4.0]])
}

/// Best sum rate of two users sharing one relay with gains `g`.
fn shared(g: [f64; 2]) -> f64 {
    argmax(
        |a| 0.5 * (1.0 + g[0] * a).log2() + 0.5 * (1.0 + g[1] * (1.0 - a)).log2(),
        0.0,
        1.0,
    )
    .1
}

#[test]
fn split_assignment_is_the_global_optimum() {
    let split = 0.5 * 5f64.log2() * 2.0;
    let same = [shared([4.0, 1.0]), shared([1.0, 4.0])];
    assert!((same[0] - same[1]).abs() < 1e-12);
    assert!((same[0] - 1.17).abs() < 0.01);
    let reversed = 0.5 * 2f64.log2() * 2.0;
    assert!(split > same[0] && split > reversed);

    let i = two_by_two();
    let o =
        exhaustive_optimum(&i, &Objective::SumRate, Codebook::Repetition, DEFAULT_LIMIT).unwrap();
    assert_eq!(o.assignment.as_slice(), &[0, 1]);
    assert!((o.value - 5f64.log2()).abs() < 1e-12);
    assert!(o.value > same[0]);
    let a = Assignment::new(vec![0, 1], 2).unwrap();
    let (alloc, r) = refine_selection(&i, &a, &Objective::SumRate, Codebook::Repetition).unwrap();
    assert_eq!(alloc.rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert!((r.sum_rate - 2.322).abs() < 1e-3);
}

#[test]
fn lone_user_cannot_combine_relays() {
    let i = inst(vec![0.0], vec![vec![3.0], vec![4.0]]);
    let b = bound_pair_with(&i, &Objective::SumRate, Codebook::Repetition, true, &opts()).unwrap();
    let best_single = [3.0f64, 4.0]
        .iter()
        .map(|p| 0.5 * (1.0 + p).log2())
        .fold(f64::MIN, f64::max);
    assert!((b.upper - 1.5).abs() < 1e-12);
    assert!((b.lower - best_single).abs() < 1e-12);
    assert!((b.lower - 1.161).abs() < 1e-3);
}

#[test]
fn cli_instance_matches_the_grid() {
    let i = relaysel::cli::parse_instance(r#"{"c":[0,3],"p":[[1,1]]}"#).unwrap();
    let b = bound_pair_with(
        &i,
        &Objective::SumRate,
        Codebook::Repetition,
        false,
        &opts(),
    )
    .unwrap();
    assert_eq!(b.relaxed.alpha.rows(), vec![vec![1.0, 0.0]]);
    assert!((b.lower - 1.5).abs() < 1e-12);
}

#[test]
fn decoding_always_holds_without_shadowing_or_scatter() {
    let cfg = ScenarioConfig {
        shadowing_sigma_db: 0.0,
        los_shadowing_sigma_db: 0.0,
        rician_k_db: 300.0,
        ..ScenarioConfig::default()
    };
    let rows = run_assumption_table(&cfg, 20_000, Some(1)).unwrap();
    for r in rows.iter().filter(|r| r.inner_m >= 400.0) {
        assert_eq!(r.valid, r.samples, "{r:?}");
    }
}
