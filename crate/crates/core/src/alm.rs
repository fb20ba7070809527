//! Inexact augmented Lagrangian method on the dual problem, with the
//! gradient-based inner stopping criteria and the relative-residual
//! termination rule.
//!
//! Each outer iteration minimizes the dual surrogate over `y` with the
//! semismooth Newton method, recovers `z` from the conjugate-side proximal
//! residual, and updates the primal multiplier `x` through the scaled
//! proximal map. The penalty grows geometrically up to a cap.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Result, SglError};
use crate::float::{fl, FloatT};
use crate::linalg::{dist2, dot, norm2};
use crate::model::{
    dual_objective, nnz_estimate, primal_objective, PrimalDualPoint, SglProblem, SolveReport,
};
use crate::newton_system::NewtonConfig;
use crate::prox;
use crate::ssn::{ssn_minimize_with, SsnParams};

/// Outer-loop parameters.
#[derive(Debug, Clone)]
pub struct AlmParams<T> {
    /// Initial penalty; `None` picks the scale-aware `max(1, ||b||/sqrt(m))`.
    pub sigma0: Option<T>,
    /// Geometric growth factor, `> 1`.
    pub sigma_growth: T,
    /// Penalty cap; set to infinity for uncapped growth.
    pub sigma_max: T,
    /// Inner-tolerance sequence `eps_k = eps_scale * eps_ratio^k` (summable).
    pub eps_scale: T,
    pub eps_ratio: T,
    /// Cap for the summable relative sequence `delta_k = min(cap, 1/(k+1)^2)`.
    pub delta_cap: T,
    /// Termination threshold on `max(eta_gap, eta_dual)`.
    pub tol: T,
    pub max_outer: usize,
    /// Budget on the total number of inner Newton iterations.
    pub max_inner_total: usize,
    /// How many times one outer iteration may resume the inner solve to
    /// enforce the a-posteriori relative criterion.
    pub max_criterion_resumes: usize,
    pub ssn: SsnParams<T>,
    pub newton: NewtonConfig,
}

impl<T: FloatT> Default for AlmParams<T> {
    fn default() -> Self {
        AlmParams {
            sigma0: None,
            sigma_growth: fl(3.0),
            sigma_max: fl(1e6),
            eps_scale: fl(1e-2),
            eps_ratio: fl(0.5),
            delta_cap: fl(0.5),
            tol: fl(1e-6),
            max_outer: 100,
            max_inner_total: 10_000,
            max_criterion_resumes: 3,
            ssn: SsnParams::default(),
            newton: NewtonConfig::default(),
        }
    }
}

impl<T: FloatT> AlmParams<T> {
    fn validate(&self) -> Result<()> {
        if !(self.sigma_growth > T::one()) {
            return Err(SglError::InvalidArgument(
                "sigma_growth must exceed 1".into(),
            ));
        }
        if !(self.eps_scale > T::zero())
            || !(self.eps_ratio > T::zero())
            || !(self.eps_ratio < T::one())
        {
            return Err(SglError::InvalidArgument(
                "eps sequence must be positive and geometrically decaying".into(),
            ));
        }
        if !(self.delta_cap > T::zero()) || !(self.delta_cap < T::one()) {
            return Err(SglError::InvalidArgument(
                "delta_cap must lie in (0, 1)".into(),
            ));
        }
        if !(self.tol > T::zero()) {
            return Err(SglError::InvalidArgument("tol must be positive".into()));
        }
        Ok(())
    }

    fn initial_sigma(&self, prob: &SglProblem<T>) -> T {
        self.sigma0.unwrap_or_else(|| {
            let m = T::from_usize(prob.nrows()).unwrap();
            T::one().max(norm2(prob.b()) / m.sqrt())
        })
    }
}

/// Geometric penalty update `min(sigma_max, sigma_growth * sigma)`;
/// monotone nondecreasing.
pub fn sigma_update<T: FloatT>(sigma: T, params: &AlmParams<T>) -> T {
    params.sigma_max.min(params.sigma_growth * sigma)
}

/// Snapshot handed to observers after each outer iteration.
pub struct AlmIteration<'a, T> {
    /// Outer iteration index, starting at 0.
    pub k: usize,
    /// Penalty used in this iteration.
    pub sigma: T,
    /// Final inner gradient norm.
    pub grad_norm: T,
    /// Newton iterations spent in this outer iteration.
    pub inner_iters: usize,
    pub eta_gap: T,
    pub eta_dual: T,
    pub pobj: T,
    pub dobj: T,
    pub x: &'a [T],
    pub y: &'a [T],
    pub z: &'a [T],
    pub x_prev: &'a [T],
    /// Gradient norms along the inner iterates of this subproblem
    /// (resumed solves are spliced in without duplicating their start).
    pub ssn_grad_norms: &'a [T],
    /// The relative inner criterion was accepted unmet after the resume
    /// budget ran out.
    pub criterion_relaxed: bool,
}

/// One line of the optional line-delimited JSON trace.
#[derive(Debug, Serialize)]
struct TraceRecord {
    k: usize,
    sigma: f64,
    grad_norm: Option<f64>,
    inner_iters: usize,
    eta_gap: f64,
    eta_dual: f64,
    pobj: f64,
    dobj: f64,
}

pub(crate) fn write_trace_line<W: Write, T: FloatT>(
    sink: &mut W,
    k: usize,
    sigma: T,
    grad_norm: Option<T>,
    inner_iters: usize,
    eta_gap: T,
    eta_dual: T,
    pobj: T,
    dobj: T,
) -> Result<()> {
    let rec = TraceRecord {
        k,
        sigma: sigma.to_f64().unwrap_or(f64::NAN),
        grad_norm: grad_norm.map(|g| g.to_f64().unwrap_or(f64::NAN)),
        inner_iters,
        eta_gap: eta_gap.to_f64().unwrap_or(f64::NAN),
        eta_dual: eta_dual.to_f64().unwrap_or(f64::NAN),
        pobj: pobj.to_f64().unwrap_or(f64::NAN),
        dobj: dobj.to_f64().unwrap_or(f64::NAN),
    };
    serde_json::to_writer(&mut *sink, &rec)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Solves the problem with the semismooth-Newton augmented Lagrangian method.
pub fn alm_solve<T: FloatT>(
    prob: &SglProblem<T>,
    params: &AlmParams<T>,
    start: Option<PrimalDualPoint<T>>,
) -> Result<(PrimalDualPoint<T>, SolveReport)> {
    alm_solve_observed(prob, params, start, |_: &AlmIteration<T>| {})
}

/// Same as [`alm_solve`], emitting a line-delimited JSON trace record per
/// outer iteration.
pub fn alm_solve_traced<T: FloatT, W: Write>(
    prob: &SglProblem<T>,
    params: &AlmParams<T>,
    start: Option<PrimalDualPoint<T>>,
    sink: &mut W,
) -> Result<(PrimalDualPoint<T>, SolveReport)> {
    let mut trace_err = None;
    let result = alm_solve_observed(prob, params, start, |it: &AlmIteration<T>| {
        if trace_err.is_none() {
            if let Err(e) = write_trace_line(
                sink,
                it.k,
                it.sigma,
                Some(it.grad_norm),
                it.inner_iters,
                it.eta_gap,
                it.eta_dual,
                it.pobj,
                it.dobj,
            ) {
                trace_err = Some(e);
            }
        }
    })?;
    if let Some(e) = trace_err {
        return Err(e);
    }
    Ok(result)
}

/// Full solver with a per-iteration observer hook.
pub fn alm_solve_observed<T: FloatT, F>(
    prob: &SglProblem<T>,
    params: &AlmParams<T>,
    start: Option<PrimalDualPoint<T>>,
    mut observer: F,
) -> Result<(PrimalDualPoint<T>, SolveReport)>
where
    F: FnMut(&AlmIteration<T>),
{
    params.validate()?;
    let m = prob.nrows();
    let n = prob.ncols();
    let pt = match start {
        Some(p) => {
            p.check_dims(prob)?;
            p
        }
        None => PrimalDualPoint::zeros(n, m),
    };
    let (mut x, mut y, mut z) = (pt.x, pt.y, pt.z);

    let t0 = Instant::now();
    let mut sigma = params.initial_sigma(prob);
    let mut inner_total = 0usize;
    let mut outer = 0usize;
    let mut converged = false;
    let mut last_eta = (T::infinity(), T::infinity());
    let mut last_obj = (T::zero(), T::zero());

    for k in 0..params.max_outer {
        let eps_k = params.eps_scale * params.eps_ratio.powi(k as i32);
        let delta_k = params
            .delta_cap
            .min(T::one() / T::from_usize((k + 1) * (k + 1)).unwrap());
        let sqrt_sigma = sigma.sqrt();

        // Inner solve under the absolute criterion, then enforce the
        // relative criterion a posteriori: it references the new primal
        // point, so the solve resumes with the tightened tolerance when the
        // check fails.
        let mut ssn_params = params.ssn.clone();
        ssn_params.grad_tol = eps_k / sqrt_sigma;
        let mut grad_norms: Vec<T> = Vec::new();
        let mut inner_here = 0usize;
        let mut resumes = 0usize;
        let mut criterion_relaxed = false;
        let (x_next, z_next, grad_norm) = loop {
            let out = ssn_minimize_with(prob, sigma, &x, &y, &ssn_params, &params.newton)?;
            inner_here += out.iters;
            if grad_norms.is_empty() {
                grad_norms.extend_from_slice(&out.grad_norms);
            } else {
                // a resumed run re-evaluates the gradient at the same y
                grad_norms.extend_from_slice(&out.grad_norms[1..]);
            }
            y = out.y;

            let inv = sigma.recip();
            let mut w = prob.a().adjoint_matvec(&y);
            for (wi, &xi) in w.iter_mut().zip(&x) {
                *wi = inv * xi - *wi;
            }
            let pw = prox::prox_p(prob, &w)?;
            let x_next: Vec<T> = pw.iter().map(|&p| sigma * p).collect();
            let z_next: Vec<T> = w.iter().zip(&pw).map(|(&wi, &pi)| wi - pi).collect();

            let x_change = dist2(&x_next, &x);
            let rel_tol = delta_k / sqrt_sigma * x_change;
            if out.grad_norm <= rel_tol {
                break (x_next, z_next, out.grad_norm);
            }
            let budget_left = inner_total + inner_here < params.max_inner_total;
            if !out.converged
                || resumes >= params.max_criterion_resumes
                || rel_tol <= T::zero()
                || !budget_left
            {
                criterion_relaxed = true;
                break (x_next, z_next, out.grad_norm);
            }
            ssn_params.grad_tol = rel_tol;
            resumes += 1;
        };

        inner_total += inner_here;
        let x_prev = std::mem::replace(&mut x, x_next);
        z = z_next;
        outer = k + 1;

        let pobj = primal_objective(prob, &x)?;
        let dobj = dual_objective(prob, &y)?;
        let eta_gap = (pobj - dobj).abs() / (T::one() + pobj.abs() + dobj.abs());
        let mut dual_res = prob.a().adjoint_matvec(&y);
        for (ri, &zi) in dual_res.iter_mut().zip(&z) {
            *ri += zi;
        }
        let eta_dual = norm2(&dual_res) / (T::one() + norm2(&z));
        last_eta = (eta_gap, eta_dual);
        last_obj = (pobj, dobj);

        observer(&AlmIteration {
            k,
            sigma,
            grad_norm,
            inner_iters: inner_here,
            eta_gap,
            eta_dual,
            pobj,
            dobj,
            x: &x,
            y: &y,
            z: &z,
            x_prev: &x_prev,
            ssn_grad_norms: &grad_norms,
            criterion_relaxed,
        });

        if eta_gap.max(eta_dual) < params.tol {
            converged = true;
            break;
        }
        if inner_total >= params.max_inner_total {
            break;
        }
        sigma = sigma_update(sigma, params);
    }

    let wall = t0.elapsed().as_secs_f64();
    let report = SolveReport {
        pobj: last_obj.0.to_f64().unwrap_or(f64::NAN),
        dobj: last_obj.1.to_f64().unwrap_or(f64::NAN),
        eta_gap: last_eta.0.to_f64().unwrap_or(f64::NAN),
        eta_dual: last_eta.1.to_f64().unwrap_or(f64::NAN),
        nnz: nnz_estimate(&x),
        outer_iters: outer,
        inner_iters: inner_total,
        wall_seconds: wall,
        solver_name: "ssnal".into(),
        converged,
    };
    Ok((PrimalDualPoint { x, y, z }, report))
}

/// Augmented Lagrangian value at `(y, z; x)` for a `z` with vanishing
/// conjugate term (all solver iterates satisfy this):
/// `<b,y> + ||y||^2/2 + (sigma/2) ||A^T y + z - x/sigma||^2
///  - ||x||^2/(2 sigma)`.
pub fn augmented_lagrangian<T: FloatT>(
    prob: &SglProblem<T>,
    sigma: T,
    y: &[T],
    z: &[T],
    x: &[T],
) -> T {
    let mut c = prob.a().adjoint_matvec(y);
    let inv = sigma.recip();
    for ((ci, &zi), &xi) in c.iter_mut().zip(z).zip(x) {
        *ci += zi - inv * xi;
    }
    let half = fl::<T>(0.5);
    dot(prob.b(), y) + half * dot(y, y) + half * sigma * dot(&c, &c)
        - dot(x, x) / (fl::<T>(2.0) * sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DesignMatrix, GroupPartition, WeightMode};

    #[test]
    fn zero_rhs_converges_immediately() {
        let m = 4;
        let n = 6;
        let data: Vec<f64> = (0..m * n).map(|k| ((k % 7) as f64 - 3.0) / 2.0).collect();
        let a = DesignMatrix::dense(m, n, data).unwrap();
        let part = GroupPartition::with_weight_mode(
            vec![(0..3).collect(), (3..6).collect()],
            WeightMode::Sqrt,
            n,
        )
        .unwrap();
        let prob = SglProblem::new(a, vec![0.0; m], 0.5, 0.5, part).unwrap();
        let (pt, rep) = alm_solve(&prob, &AlmParams::default(), None).unwrap();
        assert!(rep.converged);
        assert!(rep.outer_iters <= 2);
        assert!(pt.x.iter().all(|&v| v == 0.0));
        assert!(pt.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sigma_update_examples() {
        let params = AlmParams::<f64> {
            sigma_growth: 3.0,
            sigma_max: 1e6,
            ..AlmParams::default()
        };
        let mut s = 1.0;
        for _ in 0..3 {
            s = sigma_update(s, &params);
        }
        assert_eq!(s, 27.0);
        let capped = AlmParams::<f64> {
            sigma_growth: 3.0,
            sigma_max: 10.0,
            ..AlmParams::default()
        };
        let mut s = 9.0;
        for _ in 0..5 {
            let next = sigma_update(s, &capped);
            assert!(next >= s);
            assert!(next <= 10.0);
            s = next;
        }
    }
}
