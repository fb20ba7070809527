//! Inexact semismooth Newton method with Armijo backtracking for one
//! augmented-Lagrangian subproblem: minimize the strongly convex dual
//! surrogate `psi` over `y`.

use crate::error::{check_dim, Result, SglError};
use crate::float::{fl, FloatT};
use crate::jacobian::derivative_info;
use crate::linalg::{axpy, dot, norm2};
use crate::model::SglProblem;
use crate::newton_system::{build_structured_with, NewtonConfig};
use crate::prox;

/// Line-search and inexactness parameters of the Newton iteration.
#[derive(Debug, Clone)]
pub struct SsnParams<T> {
    /// Armijo slope fraction, in `(0, 1/2)`.
    pub mu: T,
    /// Cap on the inner linear-system residual, in `(0, 1)`.
    pub eta_bar: T,
    /// Inexactness exponent, in `(0, 1]`: residual bound
    /// `min(eta_bar, ||grad||^{1+tau})`.
    pub tau: T,
    /// Backtracking ratio, in `(0, 1)`.
    pub delta: T,
    /// Gradient-norm target; set per call from the outer loop's criteria.
    pub grad_tol: T,
    pub max_iters: usize,
}

impl<T: FloatT> Default for SsnParams<T> {
    fn default() -> Self {
        SsnParams {
            mu: fl(1e-4),
            eta_bar: fl(0.1),
            tau: fl(0.5),
            delta: fl(0.5),
            grad_tol: fl(1e-6),
            max_iters: 200,
        }
    }
}

impl<T: FloatT> SsnParams<T> {
    pub fn validate(&self) -> Result<()> {
        let half = fl::<T>(0.5);
        let ok = self.mu > T::zero()
            && self.mu < half
            && self.eta_bar > T::zero()
            && self.eta_bar < T::one()
            && self.tau > T::zero()
            && self.tau <= T::one()
            && self.delta > T::zero()
            && self.delta < T::one()
            && self.grad_tol > T::zero();
        if !ok {
            return Err(SglError::InvalidArgument(
                "SSN parameters out of range".into(),
            ));
        }
        Ok(())
    }
}

const MAX_BACKTRACKS: usize = 50;

/// Outcome of one subproblem solve.
#[derive(Debug, Clone)]
pub struct SsnOutcome<T> {
    pub y: Vec<T>,
    pub grad_norm: T,
    pub iters: usize,
    pub converged: bool,
    /// `||grad psi|| ` at `y_0, y_1, ...` including the final iterate.
    pub grad_norms: Vec<T>,
    /// Backtracking steps taken over the whole solve (diagnostic).
    pub backtracks: usize,
}

struct PsiPoint<T> {
    psi: T,
    /// `w = x_tilde/sigma - A^T y`.
    w: Vec<T>,
    /// `prox_p(w)`.
    pw: Vec<T>,
}

fn eval_psi_point<T: FloatT>(
    prob: &SglProblem<T>,
    sigma: T,
    x_tilde: &[T],
    x_term: T,
    y: &[T],
) -> Result<PsiPoint<T>> {
    let mut w = prob.a().adjoint_matvec(y);
    let inv = sigma.recip();
    for (wi, &xi) in w.iter_mut().zip(x_tilde) {
        *wi = inv * xi - *wi;
    }
    let pw = prox::prox_p(prob, &w)?;
    let half = fl::<T>(0.5);
    let psi = dot(prob.b(), y) + half * dot(y, y) + half * sigma * dot(&pw, &pw) - x_term;
    Ok(PsiPoint { psi, w, pw })
}

/// Value of the subproblem objective
/// `psi(y) = <b,y> + ||y||^2/2 + (sigma/2) ||prox_p(x~/sigma - A^T y)||^2
///  - ||x~||^2/(2 sigma)`; the conjugate term vanishes on the prox output.
pub fn psi_value<T: FloatT>(prob: &SglProblem<T>, sigma: T, x_tilde: &[T], y: &[T]) -> Result<T> {
    check_dim("x_tilde", prob.ncols(), x_tilde.len())?;
    check_dim("y", prob.nrows(), y.len())?;
    if !(sigma > T::zero()) {
        return Err(SglError::InvalidArgument("sigma must be positive".into()));
    }
    let x_term = dot(x_tilde, x_tilde) / (fl::<T>(2.0) * sigma);
    Ok(eval_psi_point(prob, sigma, x_tilde, x_term, y)?.psi)
}

/// `grad psi(y) = b + y - sigma A prox_p(x~/sigma - A^T y)`.
pub fn psi_grad<T: FloatT>(
    prob: &SglProblem<T>,
    sigma: T,
    x_tilde: &[T],
    y: &[T],
) -> Result<Vec<T>> {
    check_dim("x_tilde", prob.ncols(), x_tilde.len())?;
    check_dim("y", prob.nrows(), y.len())?;
    if !(sigma > T::zero()) {
        return Err(SglError::InvalidArgument("sigma must be positive".into()));
    }
    let pt = eval_psi_point(prob, sigma, x_tilde, T::zero(), y)?;
    Ok(grad_from_point(prob, sigma, y, &pt))
}

fn grad_from_point<T: FloatT>(
    prob: &SglProblem<T>,
    sigma: T,
    y: &[T],
    pt: &PsiPoint<T>,
) -> Vec<T> {
    let mut g = prob.a().matvec(&pt.pw);
    for ((gi, &bi), &yi) in g.iter_mut().zip(prob.b()).zip(y) {
        *gi = bi + yi - sigma * *gi;
    }
    g
}

/// Minimizes `psi` from `y0` until `||grad psi|| <= params.grad_tol`.
///
/// Each iteration builds the Jacobian element at the current prox argument,
/// solves the Newton system to the inexactness bound, and backtracks. A
/// Newton solve that misses its tolerance falls back to a steepest-descent
/// step; a line search that fails even on the gradient direction is reported
/// as a numeric error since it indicates an inconsistent gradient.
pub fn ssn_minimize<T: FloatT>(
    prob: &SglProblem<T>,
    sigma: T,
    x_tilde: &[T],
    y0: &[T],
    params: &SsnParams<T>,
) -> Result<SsnOutcome<T>> {
    ssn_minimize_with(prob, sigma, x_tilde, y0, params, &NewtonConfig::default())
}

pub fn ssn_minimize_with<T: FloatT>(
    prob: &SglProblem<T>,
    sigma: T,
    x_tilde: &[T],
    y0: &[T],
    params: &SsnParams<T>,
    newton: &NewtonConfig,
) -> Result<SsnOutcome<T>> {
    params.validate()?;
    check_dim("x_tilde", prob.ncols(), x_tilde.len())?;
    check_dim("y0", prob.nrows(), y0.len())?;

    let x_term = dot(x_tilde, x_tilde) / (fl::<T>(2.0) * sigma);
    let mut y = y0.to_vec();
    let mut point = eval_psi_point(prob, sigma, x_tilde, x_term, &y)?;
    let mut grad = grad_from_point(prob, sigma, &y, &point);
    let mut grad_norm = norm2(&grad);
    let mut grad_norms = vec![grad_norm];
    let mut backtracks = 0usize;

    for iter in 0..params.max_iters {
        if grad_norm <= params.grad_tol {
            return Ok(SsnOutcome {
                y,
                grad_norm,
                iters: iter,
                converged: true,
                grad_norms,
                backtracks,
            });
        }

        let info = derivative_info(prob, &point.w)?;
        let sys = build_structured_with(prob.a(), sigma, &info, newton)?;
        let lin_tol = params
            .eta_bar
            .min(grad_norm.powf(T::one() + params.tau));
        let rhs: Vec<T> = grad.iter().map(|&g| -g).collect();
        let solve = sys.solve(&rhs, lin_tol, usize::MAX);

        let mut d = solve.d;
        let mut slope = dot(&grad, &d);
        // A loose CG exit or a failed solve can spoil descent; the gradient
        // direction always restores it.
        if !solve.converged || slope >= T::zero() {
            d = rhs.clone();
            slope = -grad_norm * grad_norm;
        }

        match line_search(
            prob, sigma, x_tilde, x_term, &y, &point, &d, slope, params,
        )? {
            LineSearch::Accepted {
                y: y_new,
                point: point_new,
                backtracks: bt,
            } => {
                backtracks += bt;
                y = y_new;
                point = point_new;
            }
            LineSearch::Failed => {
                // Retry along the raw gradient before giving up.
                let d = rhs.clone();
                let slope = -grad_norm * grad_norm;
                match line_search(
                    prob, sigma, x_tilde, x_term, &y, &point, &d, slope, params,
                )? {
                    LineSearch::Accepted {
                        y: y_new,
                        point: point_new,
                        backtracks: bt,
                    } => {
                        backtracks += bt;
                        y = y_new;
                        point = point_new;
                    }
                    LineSearch::Failed => {
                        return Err(SglError::Numeric(
                            "line search failed along the gradient direction".into(),
                        ));
                    }
                }
            }
        }

        grad = grad_from_point(prob, sigma, &y, &point);
        grad_norm = norm2(&grad);
        grad_norms.push(grad_norm);
    }

    let converged = grad_norm <= params.grad_tol;
    Ok(SsnOutcome {
        y,
        grad_norm,
        iters: params.max_iters,
        converged,
        grad_norms,
        backtracks,
    })
}

enum LineSearch<T> {
    Accepted {
        y: Vec<T>,
        point: PsiPoint<T>,
        backtracks: usize,
    },
    Failed,
}

#[allow(clippy::too_many_arguments)]
fn line_search<T: FloatT>(
    prob: &SglProblem<T>,
    sigma: T,
    x_tilde: &[T],
    x_term: T,
    y: &[T],
    point: &PsiPoint<T>,
    d: &[T],
    slope: T,
    params: &SsnParams<T>,
) -> Result<LineSearch<T>> {
    let mut alpha = T::one();
    for bt in 0..=MAX_BACKTRACKS {
        let mut trial = y.to_vec();
        axpy(alpha, d, &mut trial);
        let trial_point = eval_psi_point(prob, sigma, x_tilde, x_term, &trial)?;
        if trial_point.psi <= point.psi + params.mu * alpha * slope {
            return Ok(LineSearch::Accepted {
                y: trial,
                point: trial_point,
                backtracks: bt,
            });
        }
        alpha *= params.delta;
    }
    Ok(LineSearch::Failed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DesignMatrix, GroupPartition, WeightMode};

    fn lasso_identity(b: Vec<f64>, l1: f64) -> SglProblem<f64> {
        let n = b.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        let a = DesignMatrix::dense(n, n, data).unwrap();
        let part =
            GroupPartition::with_weight_mode(vec![(0..n).collect()], WeightMode::One, n).unwrap();
        SglProblem::new(a, b, l1, 0.0, part).unwrap()
    }

    #[test]
    fn psi_zero_case() {
        let prob = lasso_identity(vec![0.0, 0.0], 0.5);
        let v = psi_value(&prob, 1.0, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn grad_in_dead_zone_is_b_plus_y() {
        // tiny prox argument -> prox_p = 0 -> grad = b + y
        let prob = lasso_identity(vec![1.0, -2.0], 10.0);
        let y = vec![0.2, 0.3];
        let g = psi_grad(&prob, 1.0, &[0.0, 0.0], &y).unwrap();
        assert!((g[0] - 1.2).abs() < 1e-15);
        assert!((g[1] + 1.7).abs() < 1e-15);
    }

    #[test]
    fn already_optimal_returns_immediately() {
        let prob = lasso_identity(vec![0.0, 0.0], 0.5);
        let params = SsnParams {
            grad_tol: 1e-10,
            ..SsnParams::default()
        };
        let out = ssn_minimize(&prob, 1.0, &[0.0, 0.0], &[0.0, 0.0], &params).unwrap();
        assert!(out.converged);
        assert_eq!(out.iters, 0);
    }

    #[test]
    fn all_active_lasso_converges_in_three_newton_steps() {
        // lambda2 = 0 and every coordinate strictly active at the optimum:
        // the piecewise system is exact once the active piece is found.
        let b = vec![5.0, -4.0, 6.0, -7.0, 3.0];
        let prob = lasso_identity(b, 0.1);
        let params = SsnParams {
            grad_tol: 1e-9,
            ..SsnParams::default()
        };
        let out = ssn_minimize(&prob, 1.0, &[0.0; 5], &[0.0; 5], &params).unwrap();
        assert!(out.converged, "grad_norm {}", out.grad_norm);
        assert!(out.iters <= 3, "took {} iterations", out.iters);
    }

    #[test]
    fn param_validation() {
        let mut p = SsnParams::<f64>::default();
        p.mu = 0.7;
        assert!(p.validate().is_err());
        let mut p = SsnParams::<f64>::default();
        p.tau = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn distinct_starts_agree() {
        // strong convexity: unique minimizer
        let m = 3;
        let n = 6;
        let data: Vec<f64> = (0..m * n)
            .map(|k| (((k * 13 + 5) % 23) as f64 - 11.0) / 6.0)
            .collect();
        let a = DesignMatrix::dense(m, n, data).unwrap();
        let part = GroupPartition::with_weight_mode(
            vec![(0..3).collect(), (3..6).collect()],
            WeightMode::Sqrt,
            n,
        )
        .unwrap();
        let prob = SglProblem::new(a, vec![1.0, -0.5, 2.0], 0.2, 0.3, part).unwrap();
        let x_tilde = vec![0.5, -0.2, 0.9, 0.0, 1.1, -0.4];
        let params = SsnParams {
            grad_tol: 1e-10,
            ..SsnParams::default()
        };
        let o1 = ssn_minimize(&prob, 1.3, &x_tilde, &[0.0; 3], &params).unwrap();
        let o2 = ssn_minimize(&prob, 1.3, &x_tilde, &[5.0, -3.0, 1.0], &params).unwrap();
        assert!(o1.converged && o2.converged);
        for i in 0..m {
            assert!((o1.y[i] - o2.y[i]).abs() < 1e-6);
        }
    }
}
