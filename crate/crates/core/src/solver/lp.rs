//! Dense tableau simplex for small problems of the form
//! `max c'x  s.t.  A x <= b, x >= 0` with `b >= 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// One non-negative multiplier per constraint row.
    pub duals: Vec<f64>,
    pub objective: f64,
}

const PIVOT_EPS: f64 = 1e-11;
const DEGENERATE_LIMIT: usize = 50;

/// Solves the problem with `a` given row-major (`b.len()` rows, `c.len()`
/// columns). Rows and then columns are scaled to unit max norm. The slack
/// basis is the starting point, which is why `b` must be non-negative. Pivoting is Dantzig's rule, switching to Bland's rule
/// after a run of degenerate pivots. The final basis is re-solved by LU
/// factorization to clean up accumulated rounding.
pub fn maximize(c: &[f64], a: &[f64], b: &[f64]) -> Result<LpSolution> {
    let (m, n) = (b.len(), c.len());
    if a.len() != m * n {
        return Err(Error::Lp(format!(
            "constraint matrix has {} entries, expected {}",
            a.len(),
            m * n
        )));
    }
    if b.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Lp(
            "right-hand side must be finite and non-negative".into(),
        ));
    }
    if a.iter().chain(c).any(|v| !v.is_finite()) {
        return Err(Error::Lp("non-finite coefficient".into()));
    }

    let scale: Vec<f64> = (0..m)
        .map(|i| {
            let big = a[i * n..(i + 1) * n]
                .iter()
                .fold(0.0f64, |s, v| s.max(v.abs()));
            if big > 0.0 {
                1.0 / big
            } else {
                1.0
            }
        })
        .collect();
    let col_scale: Vec<f64> = (0..n)
        .map(|j| {
            let big = (0..m).fold(0.0f64, |s, i| s.max((a[i * n + j] * scale[i]).abs()));
            if big > 0.0 {
                1.0 / big
            } else {
                1.0
            }
        })
        .collect();
    let c_scaled: Vec<f64> = c.iter().zip(&col_scale).map(|(v, s)| v * s).collect();

    let width = n + m + 1;
    let mut t = vec![0.0; m * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        for j in 0..n {
            row[j] = a[i * n + j] * scale[i] * col_scale[j];
        }
        row[n + i] = 1.0;
        row[width - 1] = b[i] * scale[i];
    }
    let mut d: Vec<f64> = c_scaled
        .iter()
        .copied()
        .chain(std::iter::repeat_n(0.0, m))
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let d_eps = 1e-11 * (1.0 + c_scaled.iter().fold(0.0f64, |s, v| s.max(v.abs())));

    let max_pivots = 50 * (m + n) + 1000;
    let mut bland = false;
    let mut degenerate_run = 0;
    let mut pivots = 0;
    loop {
        let entering = if bland {
            (0..n + m).find(|&j| d[j] > d_eps)
        } else {
            (0..n + m)
                .filter(|&j| d[j] > d_eps)
                .max_by(|&x, &y| d[x].total_cmp(&d[y]).then(y.cmp(&x)))
        };
        let Some(e) = entering else { break };

        let mut leave: Option<(usize, f64, f64)> = None;
        for i in 0..m {
            let coef = t[i * width + e];
            if coef <= PIVOT_EPS {
                continue;
            }
            let ratio = t[i * width + width - 1] / coef;
            leave = match leave {
                None => Some((i, ratio, coef)),
                Some((r, best, best_coef)) => {
                    let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                    let better = if tie {
                        if bland {
                            basis[i] < basis[r]
                        } else {
                            coef > best_coef
                        }
                    } else {
                        ratio < best
                    };
                    if better {
                        Some((i, ratio, coef))
                    } else {
                        Some((r, best, best_coef))
                    }
                }
            };
        }
        let Some((r, ratio, _)) = leave else {
            return Err(Error::Lp("problem is unbounded".into()));
        };

        if ratio <= 1e-14 {
            degenerate_run += 1;
            if degenerate_run > DEGENERATE_LIMIT {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }

        pivot(&mut t, &mut d, width, r, e);
        basis[r] = e;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Lp(format!("no convergence after {pivots} pivots")));
        }
    }

    let mut x_all = vec![0.0; n + m];
    for (i, &v) in basis.iter().enumerate() {
        x_all[v] = t[i * width + width - 1].max(0.0);
    }
    let mut y_scaled: Vec<f64> = (0..m).map(|i| (-d[n + i]).max(0.0)).collect();
    refine_basis(
        a,
        b,
        &c_scaled,
        &scale,
        &col_scale,
        &basis,
        &mut x_all,
        &mut y_scaled,
    );

    let x: Vec<f64> = x_all[..n]
        .iter()
        .zip(&col_scale)
        .map(|(v, s)| v * s)
        .collect();
    let duals: Vec<f64> = y_scaled.iter().zip(&scale).map(|(y, s)| y * s).collect();
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution {
        x,
        duals,
        objective,
    })
}

fn pivot(t: &mut [f64], d: &mut [f64], width: usize, r: usize, e: usize) {
    let inv = 1.0 / t[r * width + e];
    for v in &mut t[r * width..(r + 1) * width] {
        *v *= inv;
    }
    t[r * width + e] = 1.0;
    let (before, rest) = t.split_at_mut(r * width);
    let (prow, after) = rest.split_at_mut(width);
    for row in before
        .chunks_exact_mut(width)
        .chain(after.chunks_exact_mut(width))
    {
        let f = row[e];
        if f != 0.0 {
            for (v, p) in row.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            row[e] = 0.0;
        }
    }
    let f = d[e];
    if f != 0.0 {
        for (v, p) in d.iter_mut().zip(prow.iter()) {
            *v -= f * p;
        }
        d[e] = 0.0;
    }
}

/// Recomputes primal and dual values from the final basis of the scaled
/// problem. Keeps the tableau values if the factorization is singular or
/// disagrees in sign.
#[allow(clippy::too_many_arguments)]
fn refine_basis(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    scale: &[f64],
    col_scale: &[f64],
    basis: &[usize],
    x_all: &mut [f64],
    y_scaled: &mut [f64],
) {
    let (m, n) = (b.len(), c.len());
    if m == 0 {
        return;
    }
    let column = |v: usize, i: usize| {
        if v < n {
            a[i * n + v] * scale[i] * col_scale[v]
        } else if v - n == i {
            1.0
        } else {
            0.0
        }
    };
    let bm = DMatrix::from_fn(m, m, |i, col| column(basis[col], i));
    let lu = bm.clone().lu();
    let rhs = DVector::from_fn(m, |i, _| b[i] * scale[i]);
    let Some(xb) = lu.solve(&rhs) else { return };
    if xb.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return;
    }
    let cb = DVector::from_fn(m, |i, _| if basis[i] < n { c[basis[i]] } else { 0.0 });
    let Some(y) = bm.transpose().lu().solve(&cb) else {
        return;
    };
    if y.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return;
    }
    for v in x_all.iter_mut() {
        *v = 0.0;
    }
    for (i, &v) in basis.iter().enumerate() {
        x_all[v] = xb[i].max(0.0);
    }
    for i in 0..m {
        y_scaled[i] = y[i].max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36.
        let s = maximize(
            &[3.0, 5.0],
            &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        let dual_obj: f64 = s
            .duals
            .iter()
            .zip([4.0, 12.0, 18.0])
            .map(|(y, b)| y * b)
            .sum();
        assert!((dual_obj - 36.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        assert!(maximize(&[1.0], &[-1.0], &[1.0]).is_err());
    }

    #[test]
    fn tiny_column_is_not_mistaken_for_unbounded() {
        // max u, 2e-16 u - x <= 0, x <= 1 -> u = 5e15.
        let s = maximize(&[1.0, 0.0], &[2e-16, -0.01, 0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert!((s.x[0] / 5e13 - 1.0).abs() < 1e-12);
        assert!((s.duals[1] - s.objective).abs() <= 1e-12 * s.objective);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Several constraints active at the origin.
        let s = maximize(
            &[1.0, 1.0],
            &[1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 0.0],
            &[0.0, 0.0, 2.0, 1.0],
        )
        .unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }
}
