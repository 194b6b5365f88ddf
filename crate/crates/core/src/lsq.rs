//! Small dense least-squares solvers.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

/// Solves `min Σ w_i (y_i − Σ_j x_ij β_j)²` by Householder QR.
///
/// `design` holds `n` rows of `p` regressors, row-major. Returns `None` when
/// the weighted design is rank deficient.
pub(crate) fn weighted_least_squares(
    design: &[f64],
    p: usize,
    y: &[f64],
    w: &[f64],
) -> Option<Vec<f64>> {
    let n = y.len();
    if p == 0 || n < p || design.len() != n * p || w.len() != n {
        return None;
    }
    let mut a: Vec<f64> = Vec::with_capacity(n * p);
    let mut b: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let sw = w[i].max(0.0).sqrt();
        a.extend(design[i * p..(i + 1) * p].iter().map(|x| x * sw));
        b.push(y[i] * sw);
    }

    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..p {
        let norm = (k..n).map(|i| a[i * p + k] * a[i * p + k]).sum::<f64>().sqrt();
        if norm <= 1e-13 * scale {
            return None;
        }
        let alpha = if a[k * p + k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| a[i * p + k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..p {
            let dot: f64 = (k..n).map(|i| v[i - k] * a[i * p + j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                a[i * p + j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..n).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..n {
            b[i] -= f * v[i - k];
        }
    }

    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = b[k];
        for j in k + 1..p {
            s -= a[k * p + j] * beta[j];
        }
        beta[k] = s / a[k * p + k];
    }
    if beta.iter().all(|x| x.is_finite()) {
        Some(beta)
    } else {
        None
    }
}

/// Minimizes a unimodal function on `[lo, hi]` by golden-section search.
pub(crate) fn golden_section(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Grid search followed by golden-section refinement around the best grid point.
pub(crate) fn minimize_1d(lo: f64, hi: f64, grid: usize, refine: usize, f: impl Fn(f64) -> f64) -> f64 {
    let grid = grid.max(3);
    let step = (hi - lo) / (grid - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..grid {
        let v = f(lo + step * i as f64);
        if v < best.1 {
            best = (i, v);
        }
    }
    let a = lo + step * best.0.saturating_sub(1) as f64;
    let b = lo + step * (best.0 + 1).min(grid - 1) as f64;
    let x = golden_section(a, b, refine, &f);
    let grid_x = lo + step * best.0 as f64;
    if f(x) <= best.1 {
        x
    } else {
        grid_x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_recovered() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let design: Vec<f64> = ts.iter().flat_map(|&t| [1.0, t]).collect();
        let y: Vec<f64> = ts.iter().map(|t| 0.8744 - 0.08 * t).collect();
        let w = vec![1.0; ts.len()];
        let beta = weighted_least_squares(&design, 2, &y, &w).unwrap();
        assert!((beta[0] - 0.8744).abs() < 1e-13);
        assert!((beta[1] + 0.08).abs() < 1e-13);
    }

    #[test]
    fn zero_weight_rows_ignored() {
        let design = [1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0];
        let y = [0.0, 1.0, 100.0, 3.0];
        let w = [1.0, 1.0, 0.0, 1.0];
        let beta = weighted_least_squares(&design, 2, &y, &w).unwrap();
        assert!((beta[0]).abs() < 1e-12 && (beta[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_is_none() {
        let design = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        assert!(weighted_least_squares(&design, 2, &[1.0, 2.0, 3.0], &[1.0; 3]).is_none());
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let x = minimize_1d(-5.0, 5.0, 11, 80, |x| (x - 1.2345) * (x - 1.2345));
        assert!((x - 1.2345).abs() < 1e-8);
    }
}
