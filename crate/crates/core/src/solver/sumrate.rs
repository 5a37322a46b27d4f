//! Relaxed sum-rate maximization, with and without per-user rate floors.
//!
//! Both programs maximize `sum_k ln x_k` with `x_k = base_k + sum_j p_jk a_jk`
//! over row-budgeted allocations. Block-coordinate ascent over relays gets
//! close to the optimum; an active-set Newton step on the KKT system then
//! lands on it to machine precision so the residual can be certified.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ChannelInstance, Codebook, PowerAllocation, SolverOptions};

use super::epigraph::solve_epigraph;
use super::waterfill::waterfill_into;
use super::{finish, kkt_residual, log_base, Duals, MinRateTargets, RelaxedSolution};

struct Problem<'a> {
    nj: usize,
    nk: usize,
    p: &'a [f64],
    base: Vec<f64>,
    /// Required value of `x_k`; only meaningful where `constrained[k]`.
    target: Vec<f64>,
    constrained: Vec<bool>,
    /// Relays with at least one positive gain.
    live: Vec<bool>,
}

impl<'a> Problem<'a> {
    fn new(instance: &'a ChannelInstance, codebook: Codebook, target: Option<Vec<f64>>) -> Self {
        let (nj, nk) = (instance.num_relays(), instance.num_users());
        let base = log_base(instance, codebook);
        let target = target.unwrap_or_else(|| vec![0.0; nk]);
        let constrained = (0..nk).map(|k| target[k] > base[k]).collect();
        let live = (0..nj)
            .map(|j| instance.relay_row(j).iter().any(|v| *v > 0.0))
            .collect();
        Self {
            nj,
            nk,
            p: instance.relay_matrix(),
            base,
            target,
            constrained,
            live,
        }
    }

    fn gain(&self, j: usize, k: usize) -> f64 {
        self.p[j * self.nk + k]
    }

    fn snr(&self, alpha: &[f64]) -> Vec<f64> {
        let mut x = self.base.clone();
        for j in 0..self.nj {
            for k in 0..self.nk {
                x[k] += self.p[j * self.nk + k] * alpha[j * self.nk + k];
            }
        }
        x
    }

    fn objective(&self, alpha: &[f64]) -> f64 {
        self.snr(alpha).iter().map(|x| x.ln()).sum()
    }

    /// Prices `max_k w_k p_jk / x_k` in natural-log units.
    fn prices(&self, x: &[f64], w: &[f64]) -> Vec<f64> {
        (0..self.nj)
            .map(|j| {
                (0..self.nk)
                    .map(|k| w[k] * self.gain(j, k) / x[k])
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

#[derive(Default)]
struct Scratch {
    b: Vec<f64>,
    out: Vec<f64>,
    lower: Vec<f64>,
    sort: Vec<f64>,
}

fn sweep(prob: &Problem, alpha: &mut [f64], floors: bool, s: &mut Scratch) {
    let nk = prob.nk;
    let mut x = prob.snr(alpha);
    s.b.resize(nk, 0.0);
    s.out.resize(nk, 0.0);
    s.lower.resize(nk, 0.0);
    for j in 0..prob.nj {
        if !prob.live[j] {
            continue;
        }
        let row = &prob.p[j * nk..(j + 1) * nk];
        for k in 0..nk {
            s.b[k] = x[k] - row[k] * alpha[j * nk + k];
        }
        if floors {
            let mut total = 0.0;
            for k in 0..nk {
                s.lower[k] = if prob.constrained[k] && row[k] > 0.0 {
                    ((prob.target[k] - s.b[k]) / row[k]).max(0.0)
                } else {
                    0.0
                };
                total += s.lower[k];
            }
            if total > 1.0 {
                for l in &mut s.lower {
                    *l /= total;
                }
            }
        }
        let lower = floors.then_some(&s.lower[..]);
        waterfill_into(&s.b, row, 1.0, lower, &mut s.out, &mut s.sort);
        for k in 0..nk {
            alpha[j * nk + k] = s.out[k];
            x[k] = s.b[k] + row[k] * s.out[k];
        }
    }
}

/// One ascent sweep on `sum ln x_k + mu sum_{constrained} ln(x_k - T_k)`.
/// Each block is solved by bisection on its price; the iterate stays
/// strictly feasible.
fn barrier_sweep(prob: &Problem, alpha: &mut [f64], mu: f64, nu: &mut [f64], s: &mut Scratch) {
    let nk = prob.nk;
    let mut x = prob.snr(alpha);
    s.b.resize(nk, 0.0);
    s.out.resize(nk, 0.0);
    for j in 0..prob.nj {
        if !prob.live[j] {
            continue;
        }
        let row = &prob.p[j * nk..(j + 1) * nk];
        for k in 0..nk {
            s.b[k] = x[k] - row[k] * alpha[j * nk + k];
        }
        let demand = |price: f64, out: &mut [f64]| -> f64 {
            let mut total = 0.0;
            for k in 0..nk {
                let p = row[k];
                let a = if p <= 0.0 {
                    0.0
                } else if prob.constrained[k] {
                    let t = prob.target[k];
                    let bq = price * t + p * (1.0 + mu);
                    let disc = (bq * bq - 4.0 * price * p * t).max(0.0);
                    let y = (bq + disc.sqrt()) / (2.0 * price);
                    ((y - s.b[k]) / p).max(0.0)
                } else {
                    (1.0 / price - s.b[k] / p).max(0.0)
                };
                out[k] = a;
                total += a;
            }
            total
        };
        let mut hi = if nu[j] > 0.0 { nu[j] } else { 1.0 };
        let mut lo = hi;
        let mut tmp = std::mem::take(&mut s.out);
        while demand(hi, &mut tmp) > 1.0 {
            hi *= 2.0;
        }
        while demand(lo, &mut tmp) < 1.0 && lo > 1e-300 {
            lo *= 0.5;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if !(mid > lo && mid < hi) || hi / lo < 1.0 + 1e-15 {
                break;
            }
            if demand(mid, &mut tmp) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        demand(hi, &mut tmp);
        nu[j] = hi;
        for k in 0..nk {
            alpha[j * nk + k] = tmp[k];
            x[k] = s.b[k] + row[k] * tmp[k];
        }
        s.out = tmp;
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Member {
    Fixed,
    Simple(usize),
    Complex(Vec<usize>),
}

struct Polished {
    alpha: Vec<f64>,
    nu: Vec<f64>,
    w: Vec<f64>,
}

/// Newton's method on the KKT system for a guessed active set, repeated
/// with corrected guesses until the solution is primal and dual feasible.
///
/// Single-relay users are explicit in their relay's price:
/// `x_k = max(base_k, T_k, p_jk / nu_j)`. The unknowns are the prices, the
/// splits of users served by several relays, and the weight `w_k = 1 +
/// gamma_k` of such users when their rate floor binds.
fn polish(prob: &Problem, alpha0: &[f64], w0: &[f64]) -> Option<Polished> {
    let (nj, nk) = (prob.nj, prob.nk);
    let x0 = prob.snr(alpha0);
    let mut nu = prob.prices(&x0, w0);
    let mut w = w0.to_vec();
    let mut alpha = alpha0.to_vec();
    let supports = spanning_support(prob, alpha0);
    let mut member: Vec<Member> = supports
        .into_iter()
        .enumerate()
        .map(|(k, support)| match support.len() {
            0 => best_relay(prob, &nu, k, 1.0, prob.base[k]).map_or(Member::Fixed, Member::Simple),
            1 => Member::Simple(support[0]),
            _ => Member::Complex(support),
        })
        .collect();
    let mut binding: Vec<bool> = (0..nk)
        .map(|k| {
            prob.constrained[k] && (w0[k] > 1.0 + 1e-7 || x0[k] <= prob.target[k] * (1.0 + 1e-9))
        })
        .collect();
    for k in 0..nk {
        if !(matches!(member[k], Member::Complex(_)) && binding[k]) {
            w[k] = 1.0;
        }
        if !prob.constrained[k] {
            binding[k] = false;
        }
    }

    for _round in 0..(2 * (nj + nk) + 10) {
        let ok = newton(prob, &member, &binding, &mut nu, &mut alpha, &mut w);
        if !ok {
            return None;
        }
        let x = prob.snr(&alpha);
        let mut changed = false;

        for k in 0..nk {
            let Member::Complex(set) = &member[k] else {
                continue;
            };
            let (worst, value) = set
                .iter()
                .map(|&j| (j, alpha[j * nk + k]))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if value < -1e-12 {
                let rest: Vec<usize> = set.iter().copied().filter(|&j| j != worst).collect();
                alpha[worst * nk + k] = 0.0;
                member[k] = if rest.len() == 1 {
                    Member::Simple(rest[0])
                } else {
                    Member::Complex(rest)
                };
                changed = true;
            } else {
                for &j in set {
                    alpha[j * nk + k] = alpha[j * nk + k].max(0.0);
                }
            }
        }
        for k in 0..nk {
            if !matches!(member[k], Member::Complex(_)) || !prob.constrained[k] {
                continue;
            }
            if binding[k] && w[k] < 1.0 - 1e-10 {
                binding[k] = false;
                w[k] = 1.0;
                changed = true;
            } else if !binding[k] && x[k] < prob.target[k] * (1.0 - 1e-12) {
                binding[k] = true;
                changed = true;
            }
        }
        if changed {
            continue;
        }

        for k in 0..nk {
            let serving: Vec<usize> = match &member[k] {
                Member::Fixed => continue,
                Member::Simple(j) => vec![*j],
                Member::Complex(set) => set.clone(),
            };
            let mut best: Option<(usize, f64)> = None;
            for l in 0..nj {
                if !prob.live[l] || serving.contains(&l) || prob.gain(l, k) <= 0.0 {
                    continue;
                }
                let ratio = w[k] * prob.gain(l, k) / (x[k] * nu[l]);
                if ratio > 1.0 + 1e-9 && best.is_none_or(|(_, r)| ratio > r) {
                    best = Some((l, ratio));
                }
            }
            let Some((l, _)) = best else { continue };
            changed = true;
            let idle = serving.iter().all(|&j| alpha[j * nk + k] <= 0.0);
            if idle {
                member[k] = Member::Simple(l);
            } else {
                let mut dropped = None;
                if let Some(path) = path_between(prob, &member, &alpha, l, k) {
                    let removable = path
                        .iter()
                        .filter(|&&(j, u)| {
                            u == k || matches!(&member[u], Member::Complex(set) if set.contains(&j))
                        })
                        .min_by(|a, b| alpha[a.0 * nk + a.1].total_cmp(&alpha[b.0 * nk + b.1]));
                    if let Some(&(j, u)) = removable {
                        drop_edge(&mut member, &mut alpha, nk, j, u);
                        if u == k {
                            dropped = Some(j);
                        }
                    }
                }
                let mut set = match &member[k] {
                    Member::Fixed => vec![],
                    Member::Simple(j) => vec![*j],
                    Member::Complex(set) => set.clone(),
                };
                set.retain(|&j| j != l && Some(j) != dropped);
                set.push(l);
                set.sort_unstable();
                binding[k] = prob.constrained[k] && w[k] > 1.0 + 1e-12;
                member[k] = match set.len() {
                    1 => Member::Simple(set[0]),
                    _ => Member::Complex(set),
                };
            }
        }
        if !changed {
            return Some(Polished { alpha, nu, w });
        }
    }
    None
}

/// Support edges `alpha_jk > 0` reduced to a maximum-weight spanning forest
/// of the relay-user graph, weighted by received power. A generic optimum
/// has no cycles; a warm start that is not yet converged can.
fn spanning_support(prob: &Problem, alpha: &[f64]) -> Vec<Vec<usize>> {
    let (nj, nk) = (prob.nj, prob.nk);
    let mut edges: Vec<(usize, usize)> = (0..nj)
        .flat_map(|j| (0..nk).map(move |k| (j, k)))
        .filter(|&(j, k)| prob.live[j] && prob.gain(j, k) > 0.0 && alpha[j * nk + k] > 1e-13)
        .collect();
    let weight = |&(j, k): &(usize, usize)| alpha[j * nk + k] * prob.gain(j, k);
    edges.sort_by(|a, b| weight(b).total_cmp(&weight(a)).then(a.cmp(b)));
    let mut parent: Vec<usize> = (0..nj + nk).collect();
    fn root(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut support = vec![Vec::new(); nk];
    for (j, k) in edges {
        let (a, b) = (root(&mut parent, j), root(&mut parent, nj + k));
        if a != b {
            parent[a] = b;
            support[k].push(j);
        }
    }
    for s in &mut support {
        s.sort_unstable();
    }
    support
}

/// Edges on the path from relay `l` to user `k` in the current support
/// graph, if they are connected.
fn path_between(
    prob: &Problem,
    member: &[Member],
    alpha: &[f64],
    l: usize,
    k: usize,
) -> Option<Vec<(usize, usize)>> {
    let (nj, nk) = (prob.nj, prob.nk);
    let mut adj = vec![Vec::new(); nj + nk];
    for (u, m) in member.iter().enumerate() {
        let relays: Vec<usize> = match m {
            Member::Fixed => continue,
            Member::Simple(j) if alpha[j * nk + u] > 0.0 => vec![*j],
            Member::Simple(_) => continue,
            Member::Complex(set) => set.clone(),
        };
        for j in relays {
            adj[j].push(nj + u);
            adj[nj + u].push(j);
        }
    }
    let mut prev = vec![usize::MAX; nj + nk];
    let mut queue = std::collections::VecDeque::from([l]);
    prev[l] = l;
    while let Some(v) = queue.pop_front() {
        if v == nj + k {
            let mut path = Vec::new();
            let mut cur = v;
            while cur != l {
                let p = prev[cur];
                let (j, u) = if cur >= nj {
                    (p, cur - nj)
                } else {
                    (cur, p - nj)
                };
                path.push((j, u));
                cur = p;
            }
            return Some(path);
        }
        for &n in &adj[v] {
            if prev[n] == usize::MAX {
                prev[n] = v;
                queue.push_back(n);
            }
        }
    }
    None
}

fn drop_edge(member: &mut [Member], alpha: &mut [f64], nk: usize, j: usize, u: usize) {
    alpha[j * nk + u] = 0.0;
    if let Member::Complex(set) = &member[u] {
        let rest: Vec<usize> = set.iter().copied().filter(|&x| x != j).collect();
        member[u] = match rest.len() {
            0 => Member::Simple(j),
            1 => Member::Simple(rest[0]),
            _ => Member::Complex(rest),
        };
    }
}

fn best_relay(prob: &Problem, nu: &[f64], k: usize, w: f64, x: f64) -> Option<usize> {
    (0..prob.nj)
        .filter(|&j| prob.live[j] && prob.gain(j, k) > 0.0)
        .max_by(|&a, &b| {
            let ra = w * prob.gain(a, k) / (x * nu[a]);
            let rb = w * prob.gain(b, k) / (x * nu[b]);
            ra.total_cmp(&rb).then(b.cmp(&a))
        })
}

/// Explicit allocation of a single-relay user at price `nu`:
/// returns `(alpha, d alpha / d nu, w)`.
fn simple_user(prob: &Problem, j: usize, k: usize, nu: f64) -> (f64, f64, f64) {
    let p = prob.gain(j, k);
    let h = prob.base[k];
    let t = if prob.constrained[k] {
        prob.target[k]
    } else {
        0.0
    };
    let water = p / nu;
    if water > h.max(t) {
        (1.0 / nu - h / p, -1.0 / (nu * nu), 1.0)
    } else if t > h {
        ((t - h) / p, 0.0, nu * t / p)
    } else {
        (0.0, 0.0, 1.0)
    }
}

struct Layout {
    rows: Vec<usize>,
    nu_idx: Vec<Option<usize>>,
    split_idx: Vec<Vec<(usize, usize)>>,
    w_idx: Vec<Option<usize>>,
    size: usize,
}

fn layout(prob: &Problem, member: &[Member], binding: &[bool]) -> Layout {
    let mut size = 0;
    let mut rows = Vec::new();
    let mut nu_idx = vec![None; prob.nj];
    for j in 0..prob.nj {
        if prob.live[j] {
            nu_idx[j] = Some(size);
            rows.push(j);
            size += 1;
        }
    }
    let mut split_idx = vec![Vec::new(); prob.nk];
    let mut w_idx = vec![None; prob.nk];
    for k in 0..prob.nk {
        if let Member::Complex(set) = &member[k] {
            for &j in set {
                split_idx[k].push((j, size));
                size += 1;
            }
            if binding[k] {
                w_idx[k] = Some(size);
                size += 1;
            }
        }
    }
    Layout {
        rows,
        nu_idx,
        split_idx,
        w_idx,
        size,
    }
}

/// Evaluates the residual (and optionally the Jacobian) at the given state.
fn residual(
    prob: &Problem,
    member: &[Member],
    lay: &Layout,
    z: &[f64],
    jac: Option<&mut DMatrix<f64>>,
) -> Vec<f64> {
    let (nj, nk) = (prob.nj, prob.nk);
    let mut r = vec![0.0; lay.size];
    let nu = |j: usize| lay.nu_idx[j].map_or(0.0, |i| z[i]);
    let mut jac = jac;
    if let Some(m) = jac.as_deref_mut() {
        m.fill(0.0);
    }
    let mut row_sum = vec![0.0; nj];
    let mut row_deriv = vec![0.0; nj];
    let mut eq = lay.rows.len();
    for k in 0..nk {
        match &member[k] {
            Member::Fixed => {}
            Member::Simple(j) => {
                let (a, da, _) = simple_user(prob, *j, k, nu(*j));
                row_sum[*j] += a;
                row_deriv[*j] += da;
            }
            Member::Complex(_) => {
                let splits = &lay.split_idx[k];
                let x = prob.base[k]
                    + splits
                        .iter()
                        .map(|&(j, i)| prob.gain(j, k) * z[i])
                        .sum::<f64>();
                let wk = lay.w_idx[k].map_or(1.0, |i| z[i]);
                for &(j, i) in splits {
                    row_sum[j] += z[i];
                    if let Some(m) = jac.as_deref_mut() {
                        m[(lay.nu_idx[j].unwrap(), i)] += 1.0;
                    }
                }
                for &(j, _) in splits {
                    let p = prob.gain(j, k);
                    r[eq] = wk - nu(j) * x / p;
                    if let Some(m) = jac.as_deref_mut() {
                        m[(eq, lay.nu_idx[j].unwrap())] = -x / p;
                        for &(l, il) in splits {
                            m[(eq, il)] = -nu(j) * prob.gain(l, k) / p;
                        }
                        if let Some(iw) = lay.w_idx[k] {
                            m[(eq, iw)] = 1.0;
                        }
                    }
                    eq += 1;
                }
                if lay.w_idx[k].is_some() {
                    let t = prob.target[k];
                    r[eq] = (x - t) / t;
                    if let Some(m) = jac.as_deref_mut() {
                        for &(l, il) in splits {
                            m[(eq, il)] = prob.gain(l, k) / t;
                        }
                    }
                    eq += 1;
                }
            }
        }
    }
    for (e, &j) in lay.rows.iter().enumerate() {
        r[e] = row_sum[j] - 1.0;
        if let Some(m) = jac.as_deref_mut() {
            m[(e, lay.nu_idx[j].unwrap())] = row_deriv[j];
        }
    }
    r
}

fn newton(
    prob: &Problem,
    member: &[Member],
    binding: &[bool],
    nu: &mut [f64],
    alpha: &mut [f64],
    w: &mut [f64],
) -> bool {
    let nk = prob.nk;
    let lay = layout(prob, member, binding);
    let mut z = vec![0.0; lay.size];
    for j in 0..prob.nj {
        if let Some(i) = lay.nu_idx[j] {
            z[i] = if nu[j] > 0.0 { nu[j] } else { 1.0 };
        }
    }
    for k in 0..nk {
        for &(j, i) in &lay.split_idx[k] {
            z[i] = alpha[j * nk + k];
        }
        if let Some(i) = lay.w_idx[k] {
            z[i] = w[k].max(1.0);
        }
    }
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let mut jac = DMatrix::zeros(lay.size, lay.size);
    let mut r = residual(prob, member, &lay, &z, Some(&mut jac));
    let mut current = norm(&r);
    let mut converged = current <= 1e-14;
    for _ in 0..60 {
        if converged {
            break;
        }
        let Some(step) = jac
            .clone()
            .lu()
            .solve(&DVector::from_iterator(lay.size, r.iter().map(|v| -v)))
        else {
            return false;
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-8 {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            if lay.nu_idx.iter().flatten().all(|&i| trial[i] > 0.0) {
                let tr = residual(prob, member, &lay, &trial, None);
                let tn = norm(&tr);
                if tn.is_finite() && (tn < (1.0 - 1e-4 * t) * current || tn <= 1e-14) {
                    z = trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        r = residual(prob, member, &lay, &z, Some(&mut jac));
        current = norm(&r);
        converged = current <= 1e-14;
    }
    if !(current <= 1e-11) {
        return false;
    }

    for j in 0..prob.nj {
        nu[j] = lay.nu_idx[j].map_or(0.0, |i| z[i]);
    }
    alpha.fill(0.0);
    for k in 0..nk {
        match &member[k] {
            Member::Fixed => w[k] = 1.0,
            Member::Simple(j) => {
                let (a, _, wk) = simple_user(prob, *j, k, nu[*j]);
                alpha[j * nk + k] = a;
                w[k] = wk;
            }
            Member::Complex(_) => {
                for &(j, i) in &lay.split_idx[k] {
                    alpha[j * nk + k] = z[i];
                }
                w[k] = lay.w_idx[k].map_or(1.0, |i| z[i]);
            }
        }
    }
    true
}

fn rate_duals(nu: &[f64], w: &[f64]) -> Duals {
    Duals {
        relay_prices: nu.iter().map(|v| v / (2.0 * LN_2)).collect(),
        user_multipliers: w.iter().map(|v| (v - 1.0).max(0.0)).collect(),
    }
}

struct Outcome {
    alpha: Vec<f64>,
    duals: Duals,
    residual: f64,
}

fn certify(
    instance: &ChannelInstance,
    prob: &Problem,
    polished: Polished,
    targets: Option<&MinRateTargets>,
    codebook: Codebook,
) -> Result<Outcome> {
    let duals = rate_duals(&polished.nu, &polished.w);
    let alloc = PowerAllocation::from_flat(prob.nj, prob.nk, polished.alpha.clone())?;
    let residual = kkt_residual(instance, &alloc, &duals, targets, codebook)?;
    Ok(Outcome {
        alpha: polished.alpha,
        duals,
        residual,
    })
}

fn fallback_outcome(
    instance: &ChannelInstance,
    prob: &Problem,
    alpha: &[f64],
    w: &[f64],
    targets: Option<&MinRateTargets>,
    codebook: Codebook,
) -> Result<Outcome> {
    let x = prob.snr(alpha);
    let duals = rate_duals(&prob.prices(&x, w), w);
    let alloc = PowerAllocation::from_flat(prob.nj, prob.nk, alpha.to_vec())?;
    let residual = kkt_residual(instance, &alloc, &duals, targets, codebook)?;
    Ok(Outcome {
        alpha: alpha.to_vec(),
        duals,
        residual,
    })
}

fn solution(
    instance: &ChannelInstance,
    out: Outcome,
    codebook: Codebook,
    iterations: usize,
    options: &SolverOptions,
) -> Result<RelaxedSolution> {
    let alloc = budget_tight(
        PowerAllocation::from_flat(instance.num_relays(), instance.num_users(), out.alpha)?,
        instance,
    );
    let sol = finish(
        instance,
        alloc,
        out.duals,
        out.residual,
        codebook,
        false,
        iterations,
        options,
    );
    if sol.certified {
        Ok(sol)
    } else {
        Err(Error::MaxItersExceeded {
            iterations,
            residual: sol.kkt_residual,
            best: Box::new(sol),
        })
    }
}

fn budget_tight(mut alloc: PowerAllocation, instance: &ChannelInstance) -> PowerAllocation {
    for j in 0..instance.num_relays() {
        let live = instance.relay_row(j).iter().any(|v| *v > 0.0);
        alloc.set_budget_tight(j, live);
    }
    alloc
}

/// Plain block-coordinate ascent with Newton polishing attempts at
/// iterations 1, 2, 4, 8, ... and whenever progress stalls.
fn ascend(
    instance: &ChannelInstance,
    prob: &Problem,
    mut alpha: Vec<f64>,
    floors: bool,
    targets: Option<&MinRateTargets>,
    codebook: Codebook,
    options: &SolverOptions,
) -> Result<RelaxedSolution> {
    let mut scratch = Scratch::default();
    let mut previous = f64::NEG_INFINITY;
    let mut best: Option<Outcome> = None;
    let mut w = vec![1.0; prob.nk];
    for iteration in 1..=options.max_iters {
        sweep(prob, &mut alpha, floors, &mut scratch);
        let objective = prob.objective(&alpha);
        let stalled = objective - previous <= 1e-9 * objective.abs().max(1.0);
        previous = objective;
        if iteration.is_power_of_two() || stalled || iteration == options.max_iters {
            if floors {
                let x = prob.snr(&alpha);
                for k in 0..prob.nk {
                    w[k] = if prob.constrained[k] && x[k] <= prob.target[k] * (1.0 + 1e-9) {
                        1.0 + 1e-3
                    } else {
                        1.0
                    };
                }
            }
            if let Some(polished) = polish(prob, &alpha, &w) {
                let out = certify(instance, prob, polished, targets, codebook)?;
                if out.residual <= options.tol {
                    return solution(instance, out, codebook, iteration, options);
                }
                if best.as_ref().is_none_or(|b| out.residual < b.residual) {
                    best = Some(out);
                }
            }
        }
    }
    let last = fallback_outcome(instance, prob, &alpha, &w, targets, codebook)?;
    let out = match best {
        Some(b) if b.residual < last.residual => b,
        _ => last,
    };
    solution(instance, out, codebook, options.max_iters, options)
}

/// Maximizes the sum rate over row-budgeted allocations.
///
/// The result is an upper bound on the sum rate of any assignment. Returns
/// `MaxItersExceeded`, carrying the best iterate, if the KKT residual does not
/// reach `options.tol`.
pub fn solve_sum_rate(
    instance: &ChannelInstance,
    options: &SolverOptions,
    codebook: Codebook,
) -> Result<RelaxedSolution> {
    options.validate()?;
    let prob = Problem::new(instance, codebook, None);
    let alpha = vec![0.0; prob.nj * prob.nk];
    ascend(instance, &prob, alpha, false, None, codebook, options)
}

/// Maximizes the sum rate subject to every user reaching its target rate.
///
/// Feasibility is settled first with the max-min linear program scaled by
/// the targets. From its solution a log-barrier ascent approaches the
/// optimum from the interior, and Newton polishing finishes. Returns
/// `Infeasible` when no allocation meets the targets.
pub fn solve_sum_rate_min(
    instance: &ChannelInstance,
    targets: &MinRateTargets,
    options: &SolverOptions,
    codebook: Codebook,
) -> Result<RelaxedSolution> {
    options.validate()?;
    targets.check_len(instance.num_users())?;
    let snr_targets = targets.snr_targets(instance, codebook);
    let prob = Problem::new(instance, codebook, Some(snr_targets));
    let (nj, nk) = (prob.nj, prob.nk);

    if !prob.constrained.iter().any(|c| *c) {
        let mut sol = solve_sum_rate(instance, options, codebook)?;
        sol.duals.user_multipliers = vec![0.0; nk];
        sol.kkt_residual = kkt_residual(instance, &sol.alpha, &sol.duals, Some(targets), codebook)?;
        sol.certified = sol.kkt_residual <= options.tol;
        return Ok(sol);
    }
    for k in (0..nk).filter(|&k| prob.constrained[k]) {
        let reach = prob.base[k] + (0..nj).map(|j| prob.gain(j, k)).sum::<f64>();
        if reach < prob.target[k] {
            return Err(Error::Infeasible(format!(
                "user {k} cannot reach rate {} even with every relay at full power",
                targets.r[k]
            )));
        }
    }
    let weights: Vec<f64> = (0..nk)
        .map(|k| {
            if prob.constrained[k] {
                prob.target[k]
            } else {
                0.0
            }
        })
        .collect();
    let start = solve_epigraph(nj, nk, prob.p, &weights, &prob.base)?;
    if start.u < 1.0 - 1e-9 {
        return Err(Error::Infeasible(format!(
            "targets can be met only up to a factor {:.6} in SNR",
            start.u
        )));
    }
    let mut alpha = start.alpha;
    let mut scratch = Scratch::default();

    if start.u > 1.0 + 1e-6 {
        let mut nu = vec![0.0; nj];
        let mut mu = 1.0;
        while mu >= 1e-9 {
            for _ in 0..60 {
                let before = alpha.clone();
                barrier_sweep(&prob, &mut alpha, mu, &mut nu, &mut scratch);
                let change = alpha
                    .iter()
                    .zip(&before)
                    .fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
                if change < 1e-10 {
                    break;
                }
            }
            mu *= 0.1;
        }
        let x = prob.snr(&alpha);
        let mu = 1e-9;
        let w: Vec<f64> = (0..nk)
            .map(|k| {
                if prob.constrained[k] {
                    let slack = (x[k] - prob.target[k]).max(f64::MIN_POSITIVE);
                    let g = mu * x[k] / slack;
                    if g > 1e-6 {
                        1.0 + g
                    } else {
                        1.0
                    }
                } else {
                    1.0
                }
            })
            .collect();
        if let Some(polished) = polish(&prob, &alpha, &w) {
            let out = certify(instance, &prob, polished, Some(targets), codebook)?;
            if out.residual <= options.tol {
                return solution(instance, out, codebook, 1, options);
            }
        }
    }
    ascend(
        instance,
        &prob,
        alpha,
        true,
        Some(targets),
        codebook,
        options,
    )
}
