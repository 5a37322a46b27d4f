use crate::error::{Error, Result};

/// Single-relay water-filling with per-user floors.
///
/// Maximizes `sum_k ln(b_k + p_k a_k)` subject to `sum_k a_k = budget` and
/// `a_k >= L_k`. The optimum is `a_k = max(L_k, W - b_k / p_k)` for a water
/// level `W`, found exactly by sorting the breakpoints. Users with `p_k = 0`
/// get their floor. When every gain is zero the budget beyond the floors is
/// left unspent.
pub fn waterfill_relay(
    base: &[f64],
    gains: &[f64],
    budget: f64,
    lower_bounds: &[f64],
) -> Result<Vec<f64>> {
    let n = base.len();
    if gains.len() != n || lower_bounds.len() != n {
        return Err(Error::InvalidArgument(
            "water-filling inputs differ in length".into(),
        ));
    }
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    if base.iter().any(|b| !(*b > 0.0) || !b.is_finite())
        || gains.iter().any(|p| !(*p >= 0.0) || !p.is_finite())
        || lower_bounds.iter().any(|l| !(*l >= 0.0) || !l.is_finite())
    {
        return Err(Error::InvalidArgument(
            "bases must be positive, gains and floors non-negative".into(),
        ));
    }
    let total: f64 = lower_bounds.iter().sum();
    if total > budget * (1.0 + 1e-9) {
        return Err(Error::InfeasibleLowerBounds { total, budget });
    }
    let mut out = vec![0.0; n];
    let mut scratch = Vec::with_capacity(n);
    waterfill_into(
        base,
        gains,
        budget,
        Some(lower_bounds),
        &mut out,
        &mut scratch,
    );
    Ok(out)
}

/// In-place water-filling used by the iterative solvers. Returns the water
/// level `W`, or `None` when no gain is positive.
pub(crate) fn waterfill_into(
    base: &[f64],
    gains: &[f64],
    budget: f64,
    lower: Option<&[f64]>,
    out: &mut [f64],
    scratch: &mut Vec<f64>,
) -> Option<f64> {
    let floor = |k: usize| lower.map_or(0.0, |l| l[k]);
    let mut remaining = budget;
    scratch.clear();
    for k in 0..base.len() {
        let l = floor(k);
        remaining -= l;
        if gains[k] > 0.0 {
            scratch.push(l + base[k] / gains[k]);
        }
    }
    if scratch.is_empty() {
        for (k, o) in out.iter_mut().enumerate() {
            *o = floor(k);
        }
        return None;
    }
    let remaining = remaining.max(0.0);
    scratch.sort_unstable_by(f64::total_cmp);
    let mut acc = 0.0;
    let mut level = 0.0;
    for (i, t) in scratch.iter().enumerate() {
        acc += t;
        level = (remaining + acc) / (i + 1) as f64;
        if scratch.get(i + 1).is_none_or(|next| level <= *next) {
            break;
        }
    }
    for k in 0..base.len() {
        let l = floor(k);
        out[k] = if gains[k] > 0.0 {
            l + (level - l - base[k] / gains[k]).max(0.0)
        } else {
            l
        };
    }
    Some(level)
}

/// Single-relay max-min leveling.
///
/// Maximizes `u` subject to `h_k + p_k a_k >= w_k u` for every user with
/// `w_k > 0`, `sum_k a_k <= budget`, `a >= 0`. Users whose `h_k / w_k`
/// already exceeds the level get nothing. Returns `(u, a)`; `u` is infinite
/// when no user has a positive weight.
pub fn level_relay(h: &[f64], gains: &[f64], w: &[f64], budget: f64) -> (f64, Vec<f64>) {
    let n = h.len();
    let mut order: Vec<usize> = (0..n).filter(|&k| w[k] > 0.0).collect();
    order.sort_by(|&a, &b| (h[a] / w[a]).total_cmp(&(h[b] / w[b])).then(a.cmp(&b)));
    let (mut slope, mut offset) = (0.0, 0.0);
    let mut level = f64::INFINITY;
    for &k in &order {
        let threshold = h[k] / w[k];
        let candidate = if slope > 0.0 {
            (budget + offset) / slope
        } else {
            f64::INFINITY
        };
        if candidate <= threshold {
            level = candidate;
            break;
        }
        if gains[k] <= 0.0 {
            level = threshold;
            break;
        }
        slope += w[k] / gains[k];
        offset += h[k] / gains[k];
        level = (budget + offset) / slope;
    }
    let a = (0..n)
        .map(|k| {
            if w[k] > 0.0 && gains[k] > 0.0 && level.is_finite() {
                ((w[k] * level - h[k]) / gains[k]).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    (level, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn symmetric_split() {
        let a = waterfill_relay(&[1.0, 1.0], &[1.0, 1.0], 1.0, &[0.0, 0.0]).unwrap();
        assert!(close(&a, &[0.5, 0.5], 1e-15));
    }

    #[test]
    fn corner_and_floor() {
        let a = waterfill_relay(&[1.0, 4.0], &[1.0, 1.0], 1.0, &[0.0, 0.0]).unwrap();
        assert!(close(&a, &[1.0, 0.0], 1e-15));
        let a = waterfill_relay(&[1.0, 4.0], &[1.0, 1.0], 1.0, &[0.0, 0.5948]).unwrap();
        assert!(close(&a, &[0.4052, 0.5948], 1e-12));
    }

    #[test]
    fn infeasible_floors() {
        let e = waterfill_relay(&[1.0, 1.0], &[1.0, 1.0], 1.0, &[0.7, 0.7]).unwrap_err();
        assert!(e.is_infeasible());
    }

    #[test]
    fn zero_gain_users_keep_floor() {
        let a = waterfill_relay(&[1.0, 1.0, 2.0], &[0.0, 2.0, 1.0], 1.0, &[0.1, 0.0, 0.0]).unwrap();
        assert_eq!(a[0], 0.1);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let a = waterfill_relay(&[1.0], &[0.0], 1.0, &[0.0]).unwrap();
        assert_eq!(a, vec![0.0]);
    }

    #[test]
    fn leveling() {
        let (u, a) = level_relay(&[0.0, 0.0], &[2.0, 1.0], &[1.0, 1.0], 1.0);
        assert!((u - 2.0 / 3.0).abs() < 1e-15);
        assert!(close(&a, &[1.0 / 3.0, 2.0 / 3.0], 1e-15));
        let (u, a) = level_relay(&[0.0, 10.0], &[1.0, 1.0], &[1.0, 1.0], 1.0);
        assert_eq!(u, 1.0);
        assert_eq!(a, vec![1.0, 0.0]);
        // A zero-gain user caps the level at its own direct SNR.
        let (u, a) = level_relay(&[0.0, 0.3], &[1.0, 0.0], &[1.0, 1.0], 1.0);
        assert_eq!(u, 0.3);
        assert_eq!(a, vec![0.3, 0.0]);
    }
}
