//! Max-min power allocation through its epigraph linear program
//!
//! ```text
//! max u  s.t.  h_k + sum_j p_jk a_jk >= w_k u   (users with w_k > 0)
//!              sum_k a_jk <= 1,  a >= 0
//! ```
//!
//! Most users are served by a single relay at the optimum, so the program is
//! first solved in a reduced form where each such user is folded into its
//! relay's budget row. Users that want a second relay at the reduced prices
//! are expanded into full rows and the reduced program is solved again. The
//! dense program over all users is the fallback.

use crate::error::{Error, Result};
use crate::model::{ChannelInstance, Codebook, PowerAllocation, SolverOptions};

use super::lp::maximize;
use super::{finish, Duals, RelaxedSolution};

#[derive(Debug, Clone)]
pub(crate) struct Epigraph {
    pub u: f64,
    /// Row-major `J x K` allocation.
    pub alpha: Vec<f64>,
    pub nu: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Largest of primal infeasibility, dual infeasibility and relative gap.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    Ignored,
    Capped,
    Simple { relay: usize, active: bool },
    Full,
}

/// Solves the epigraph program for row-major gains `p` (`nj x nk`).
pub(crate) fn solve_epigraph(
    nj: usize,
    nk: usize,
    p: &[f64],
    w: &[f64],
    h: &[f64],
) -> Result<Epigraph> {
    if w.iter().all(|v| *v <= 0.0) {
        return Ok(Epigraph {
            u: f64::INFINITY,
            alpha: vec![0.0; nj * nk],
            nu: vec![0.0; nj],
            gamma: vec![0.0; nk],
            residual: 0.0,
        });
    }
    let mut sol = match solve_reduced(nj, nk, p, w, h) {
        Some(sol) => sol,
        None => solve_full(nj, nk, p, w, h)?,
    };
    trim_excess(nj, nk, p, w, h, &mut sol);
    sol.residual = certificate(nj, nk, p, w, h, &sol);
    if sol.residual > 1e-9 {
        let mut full = solve_full(nj, nk, p, w, h)?;
        trim_excess(nj, nk, p, w, h, &mut full);
        full.residual = certificate(nj, nk, p, w, h, &full);
        if full.residual < sol.residual {
            sol = full;
        }
    }
    Ok(sol)
}

fn solve_full(nj: usize, nk: usize, p: &[f64], w: &[f64], h: &[f64]) -> Result<Epigraph> {
    let users: Vec<usize> = (0..nk).filter(|&k| w[k] > 0.0).collect();
    let pairs: Vec<(usize, usize)> = users
        .iter()
        .flat_map(|&k| {
            (0..nj)
                .filter(move |&j| p[j * nk + k] > 0.0)
                .map(move |j| (j, k))
        })
        .collect();
    let n = 1 + pairs.len();
    let m = users.len() + nj;
    let mut a = vec![0.0; m * n];
    let mut b = vec![0.0; m];
    for (r, &k) in users.iter().enumerate() {
        a[r * n] = w[k];
        b[r] = h[k];
    }
    for (col, &(j, k)) in pairs.iter().enumerate() {
        let r = users.iter().position(|&x| x == k).unwrap();
        a[r * n + 1 + col] = -p[j * nk + k];
        a[(users.len() + j) * n + 1 + col] = 1.0;
    }
    for j in 0..nj {
        b[users.len() + j] = 1.0;
    }
    let mut c = vec![0.0; n];
    c[0] = 1.0;
    let lp = maximize(&c, &a, &b)?;
    let mut alpha = vec![0.0; nj * nk];
    for (col, &(j, k)) in pairs.iter().enumerate() {
        alpha[j * nk + k] = lp.x[1 + col];
    }
    let mut gamma = vec![0.0; nk];
    for (r, &k) in users.iter().enumerate() {
        gamma[k] = lp.duals[r];
    }
    Ok(Epigraph {
        u: lp.x[0],
        alpha,
        nu: lp.duals[users.len()..].to_vec(),
        gamma,
        residual: f64::INFINITY,
    })
}

fn solve_reduced(nj: usize, nk: usize, p: &[f64], w: &[f64], h: &[f64]) -> Option<Epigraph> {
    let gain = |j: usize, k: usize| p[j * nk + k];
    let threshold = |k: usize| h[k] / w[k];
    let mut roles: Vec<Role> = (0..nk)
        .map(|k| {
            if w[k] <= 0.0 {
                return Role::Ignored;
            }
            let best = (0..nj)
                .filter(|&j| gain(j, k) > 0.0)
                .max_by(|&a, &b| gain(a, k).total_cmp(&gain(b, k)).then(b.cmp(&a)));
            match best {
                Some(relay) => Role::Simple {
                    relay,
                    active: true,
                },
                None => Role::Capped,
            }
        })
        .collect();

    for _round in 0..(4 * nj + 4 * nk.min(64) + 20) {
        let full: Vec<usize> = (0..nk).filter(|&k| roles[k] == Role::Full).collect();
        let pairs: Vec<(usize, usize)> = full
            .iter()
            .flat_map(|&k| {
                (0..nj)
                    .filter(move |&j| gain(j, k) > 0.0)
                    .map(move |j| (j, k))
            })
            .collect();
        let cap = (0..nk)
            .filter(|&k| matches!(roles[k], Role::Capped | Role::Simple { active: false, .. }))
            .map(threshold)
            .min_by(f64::total_cmp);

        let n = 1 + pairs.len();
        let m = nj + full.len() + usize::from(cap.is_some());
        let mut a = vec![0.0; m * n];
        let mut b = vec![0.0; m];
        for j in 0..nj {
            b[j] = 1.0;
        }
        for k in 0..nk {
            if let Role::Simple {
                relay,
                active: true,
            } = roles[k]
            {
                let g = gain(relay, k);
                a[relay * n] += w[k] / g;
                b[relay] += h[k] / g;
            }
        }
        for (r, &k) in full.iter().enumerate() {
            a[(nj + r) * n] = w[k];
            b[nj + r] = h[k];
        }
        for (col, &(j, k)) in pairs.iter().enumerate() {
            let r = full.iter().position(|&x| x == k).unwrap();
            a[(nj + r) * n + 1 + col] = -gain(j, k);
            a[j * n + 1 + col] = 1.0;
        }
        if let Some(theta) = cap {
            a[(m - 1) * n] = 1.0;
            b[m - 1] = theta;
        }
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        let lp = maximize(&c, &a, &b).ok()?;
        let u = lp.x[0];
        let nu = &lp.duals[..nj];

        let mut changed = false;
        for k in 0..nk {
            if let Role::Simple {
                relay,
                active: true,
            } = roles[k]
            {
                if w[k] * u < h[k] - 1e-12 * h[k].max(1e-300) {
                    roles[k] = Role::Simple {
                        relay,
                        active: false,
                    };
                    changed = true;
                }
            }
        }
        if let Some(theta) = cap {
            if lp.duals[m - 1] > 1e-12 {
                for k in 0..nk {
                    if let Role::Simple {
                        relay,
                        active: false,
                    } = roles[k]
                    {
                        if threshold(k) <= theta * (1.0 + 1e-12) {
                            roles[k] = Role::Simple {
                                relay,
                                active: true,
                            };
                            changed = true;
                        }
                    }
                }
            }
        }
        for k in 0..nk {
            if let Role::Simple {
                relay,
                active: true,
            } = roles[k]
            {
                let gamma = nu[relay] / gain(relay, k);
                let violated = (0..nj).any(|l| {
                    l != relay
                        && gain(l, k) > 0.0
                        && gamma * gain(l, k) > nu[l] * (1.0 + 1e-9) + 1e-300
                });
                if violated {
                    roles[k] = Role::Full;
                    changed = true;
                }
            }
        }
        if changed {
            continue;
        }

        let mut alpha = vec![0.0; nj * nk];
        let mut gamma = vec![0.0; nk];
        for (col, &(j, k)) in pairs.iter().enumerate() {
            alpha[j * nk + k] = lp.x[1 + col];
        }
        for (r, &k) in full.iter().enumerate() {
            gamma[k] = lp.duals[nj + r];
        }
        for k in 0..nk {
            match roles[k] {
                Role::Simple {
                    relay,
                    active: true,
                } => {
                    let g = gain(relay, k);
                    alpha[relay * nk + k] = ((w[k] * u - h[k]) / g).max(0.0);
                    gamma[k] = nu[relay] / g;
                }
                Role::Capped => {
                    if let Some(theta) = cap {
                        if threshold(k) == theta {
                            gamma[k] = lp.duals[m - 1] / w[k];
                        }
                    }
                }
                _ => {}
            }
        }
        // Only one capped user carries the cap row's multiplier.
        if let Some(theta) = cap {
            let mut seen = false;
            for k in 0..nk {
                if roles[k] == Role::Capped && threshold(k) == theta {
                    if seen {
                        gamma[k] = 0.0;
                    }
                    seen = true;
                }
            }
        }
        return Some(Epigraph {
            u,
            alpha,
            nu: nu.to_vec(),
            gamma,
            residual: f64::INFINITY,
        });
    }
    None
}

/// Removes power from users whose SNR exceeds their requirement `w_k u`.
fn trim_excess(nj: usize, nk: usize, p: &[f64], w: &[f64], h: &[f64], sol: &mut Epigraph) {
    for k in 0..nk {
        let relay: f64 = (0..nj).map(|j| p[j * nk + k] * sol.alpha[j * nk + k]).sum();
        if relay <= 0.0 {
            continue;
        }
        let need = if w[k] > 0.0 {
            (w[k] * sol.u - h[k]).max(0.0)
        } else {
            0.0
        };
        if relay > need {
            let s = need / relay;
            for j in 0..nj {
                sol.alpha[j * nk + k] *= s;
            }
        }
    }
}

fn certificate(nj: usize, nk: usize, p: &[f64], w: &[f64], h: &[f64], sol: &Epigraph) -> f64 {
    let u = sol.u;
    let mut worst = 0.0f64;
    for k in 0..nk {
        if w[k] <= 0.0 {
            continue;
        }
        let x = h[k]
            + (0..nj)
                .map(|j| p[j * nk + k] * sol.alpha[j * nk + k])
                .sum::<f64>();
        worst = worst.max((w[k] * u - x) / (w[k] * u).max(1.0));
    }
    for j in 0..nj {
        let row = &sol.alpha[j * nk..(j + 1) * nk];
        worst = worst.max(row.iter().sum::<f64>() - 1.0);
        worst = worst.max(row.iter().fold(0.0f64, |s, a| s.max(-a)));
    }
    let nu_max = sol
        .nu
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut weight = 0.0;
    let mut dual = sol.nu.iter().sum::<f64>();
    for k in 0..nk {
        if w[k] <= 0.0 {
            continue;
        }
        weight += w[k] * sol.gamma[k];
        dual += h[k] * sol.gamma[k];
        worst = worst.max(-sol.gamma[k]);
        for j in 0..nj {
            worst = worst.max((sol.gamma[k] * p[j * nk + k] - sol.nu[j]) / nu_max);
        }
    }
    worst = worst.max(1.0 - weight);
    worst = worst.max((dual - u).abs() / u.abs().max(1.0));
    worst.max(0.0)
}

/// Maximizes the minimum user rate with the selection constraint dropped.
///
/// Repetition coding solves the epigraph program on SNRs directly.
/// Independent codebooks bisect on the common rate, checking each candidate
/// with the same program. Power above what a user needs to reach the common
/// level is removed, so users whose direct link already beats the level get
/// nothing. `kkt_residual` is the optimality certificate of the linear
/// program (plus the remaining bisection width for independent codebooks).
pub fn solve_max_min(
    instance: &ChannelInstance,
    options: &SolverOptions,
    codebook: Codebook,
) -> Result<RelaxedSolution> {
    options.validate()?;
    let (nj, nk) = (instance.num_relays(), instance.num_users());
    let p = instance.relay_matrix();
    let c = instance.direct();
    match codebook {
        Codebook::Repetition => {
            let sol = solve_epigraph(nj, nk, p, &vec![1.0; nk], c)?;
            let alpha = PowerAllocation::from_flat(nj, nk, sol.alpha)?;
            let duals = Duals {
                relay_prices: sol.nu,
                user_multipliers: sol.gamma,
            };
            Ok(finish(
                instance,
                alpha,
                duals,
                sol.residual,
                codebook,
                true,
                1,
                options,
            ))
        }
        Codebook::Independent => {
            let direct_rate = |k: usize| 0.5 * (1.0 + c[k]).log2();
            let required = |t: f64| -> Vec<f64> {
                (0..nk)
                    .map(|k| ((2.0 * t).exp2() / (1.0 + c[k]) - 1.0).max(0.0))
                    .collect()
            };
            let mut lo = (0..nk).map(direct_rate).fold(f64::INFINITY, f64::min);
            let mut hi = (0..nk)
                .map(|k| {
                    let all: f64 = (0..nj).map(|j| instance.relay(j, k)).sum();
                    direct_rate(k) + 0.5 * (1.0 + all).log2()
                })
                .fold(f64::INFINITY, f64::min);
            let zeros = vec![0.0; nk];
            let mut best = solve_epigraph(nj, nk, p, &required(lo), &zeros)?;
            let mut iterations = 0;
            while hi - lo > 0.25 * options.tol * hi.max(1.0) && iterations < options.max_iters {
                iterations += 1;
                let mid = 0.5 * (lo + hi);
                let sol = solve_epigraph(nj, nk, p, &required(mid), &zeros)?;
                if sol.u >= 1.0 {
                    lo = mid;
                    best = sol;
                } else {
                    hi = mid;
                }
            }
            let need = required(lo);
            // Rescale to meet the level exactly.
            best.u = 1.0;
            trim_excess(nj, nk, p, &need, &zeros, &mut best);
            let width = (hi - lo) / hi.max(1.0);
            let residual = best.residual.clamp(0.0, 1.0).max(width);
            let alpha = PowerAllocation::from_flat(nj, nk, best.alpha)?;
            let duals = Duals {
                relay_prices: best.nu,
                user_multipliers: best.gamma,
            };
            if hi - lo > 0.25 * options.tol * hi.max(1.0) {
                let sol = finish(
                    instance, alpha, duals, residual, codebook, true, iterations, options,
                );
                return Err(Error::MaxItersExceeded {
                    iterations,
                    residual,
                    best: Box::new(sol),
                });
            }
            Ok(finish(
                instance, alpha, duals, residual, codebook, true, iterations, options,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(c: Vec<f64>, p: Vec<Vec<f64>>) -> ChannelInstance {
        ChannelInstance::new(c, p, None).unwrap()
    }

    #[test]
    fn symmetric_single_relay() {
        let s = solve_max_min(
            &inst(vec![0.0, 0.0], vec![vec![1.0, 1.0]]),
            &SolverOptions::default(),
            Codebook::Repetition,
        )
        .unwrap();
        assert!((s.alpha.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((s.objective - 0.5 * 1.5f64.log2()).abs() < 1e-12);
        assert!(s.certified);
    }

    #[test]
    fn unequal_gains() {
        let s = solve_max_min(
            &inst(vec![0.0, 0.0], vec![vec![2.0, 1.0]]),
            &SolverOptions::default(),
            Codebook::Repetition,
        )
        .unwrap();
        assert!((s.alpha.get(0, 0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.alpha.get(0, 1) - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.objective - 0.5 * (5.0f64 / 3.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn strong_direct_user_gets_nothing() {
        let s = solve_max_min(
            &inst(vec![0.0, 10.0], vec![vec![1.0, 1.0]]),
            &SolverOptions::default(),
            Codebook::Repetition,
        )
        .unwrap();
        assert!((s.alpha.get(0, 0) - 1.0).abs() < 1e-12);
        assert!(s.alpha.get(0, 1).abs() < 1e-12);
        assert!((s.rates.per_user[1] - 0.5 * 11f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn reduced_and_full_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let nj = rng.random_range(1..5);
            let nk = rng.random_range(1..12);
            let p: Vec<f64> = (0..nj * nk)
                .map(|_| -rng.random::<f64>().ln() * 10.0)
                .collect();
            let h: Vec<f64> = (0..nk).map(|_| -rng.random::<f64>().ln()).collect();
            let w = vec![1.0; nk];
            let a = solve_epigraph(nj, nk, &p, &w, &h).unwrap();
            let mut b = solve_full(nj, nk, &p, &w, &h).unwrap();
            trim_excess(nj, nk, &p, &w, &h, &mut b);
            assert!(a.residual <= 1e-9, "{}", a.residual);
            assert!((a.u - b.u).abs() <= 1e-9 * b.u.max(1.0));
        }
    }
}
