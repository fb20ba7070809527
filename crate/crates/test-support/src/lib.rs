//! Brute-force oracles for the solver test suites: exhaustive grid
//! minimization in one and two dimensions, a Jacobi eigenvalue sweep for
//! small symmetric matrices, and a central finite-difference helper.
//!
//! Everything here is deliberately naive and independent of the solver
//! crate so it can serve as ground truth.

/// Minimizes `f` over `[lo, hi]` by scanning a uniform grid and then
/// refining around the best point until the grid step drops below
/// `target_step`. Returns `(argmin, min)`.
pub fn grid_min_1d<F>(f: F, lo: f64, hi: f64, points: usize, target_step: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    assert!(points >= 3 && hi > lo);
    let mut lo = lo;
    let mut hi = hi;
    let mut best_x = lo;
    let mut best_v = f64::INFINITY;
    loop {
        let step = (hi - lo) / (points - 1) as f64;
        for i in 0..points {
            let x = lo + step * i as f64;
            let v = f(x);
            if v < best_v {
                best_v = v;
                best_x = x;
            }
        }
        if step <= target_step {
            return (best_x, best_v);
        }
        lo = best_x - step;
        hi = best_x + step;
    }
}

/// Two-dimensional analogue of [`grid_min_1d`] over a square box.
/// Returns `([x0, x1], min)`.
pub fn grid_min_2d<F>(
    f: F,
    lo: [f64; 2],
    hi: [f64; 2],
    points: usize,
    target_step: f64,
) -> ([f64; 2], f64)
where
    F: Fn(f64, f64) -> f64,
{
    assert!(points >= 3);
    let mut lo = lo;
    let mut hi = hi;
    let mut best = [lo[0], lo[1]];
    let mut best_v = f64::INFINITY;
    loop {
        let step0 = (hi[0] - lo[0]) / (points - 1) as f64;
        let step1 = (hi[1] - lo[1]) / (points - 1) as f64;
        for i in 0..points {
            let x0 = lo[0] + step0 * i as f64;
            for j in 0..points {
                let x1 = lo[1] + step1 * j as f64;
                let v = f(x0, x1);
                if v < best_v {
                    best_v = v;
                    best = [x0, x1];
                }
            }
        }
        let step = step0.max(step1);
        if step <= target_step {
            return (best, best_v);
        }
        lo = [best[0] - step0, best[1] - step1];
        hi = [best[0] + step0, best[1] + step1];
    }
}

/// Eigenvalues of a small symmetric matrix (row-major, `n x n`) by cyclic
/// Jacobi rotations; returned in ascending order.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    for sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        assert!(sweep < 99, "jacobi sweep did not converge");
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Central finite difference `(f(x + h) - f(x - h)) / (2 h)`.
pub fn central_difference<F>(f: F, x: f64, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_1d_finds_quadratic_minimum() {
        let (x, v) = grid_min_1d(|x| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 41, 1e-6);
        assert!((x - 0.3).abs() < 1e-5);
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grid_2d_finds_shifted_minimum() {
        let ([x0, x1], v) = grid_min_2d(
            |a, b| (a + 0.5).powi(2) + 2.0 * (b - 1.25).powi(2),
            [-3.0, -3.0],
            [3.0, 3.0],
            33,
            1e-5,
        );
        assert!((x0 + 0.5).abs() < 1e-4);
        assert!((x1 - 1.25).abs() < 1e-4);
        assert!(v < 1e-7);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let eig = jacobi_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn central_difference_matches_derivative() {
        let d = central_difference(|x| x.powi(3), 2.0, 1e-6);
        assert!((d - 12.0).abs() < 1e-5);
    }
}
