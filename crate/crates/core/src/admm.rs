//! Dual semi-proximal ADMM baseline with zero proximal terms: a cached
//! Cholesky `y`-step, a Moreau-identity `z`-step, and the over-relaxed
//! multiplier step length 1.618.

use std::io::Write;
use std::time::Instant;

use crate::error::{Result, SglError};
use crate::float::{fl, FloatT};
use crate::linalg::{norm2, Cholesky, Mat};
use crate::model::{
    dual_objective, nnz_estimate, primal_objective, DesignMatrix, PrimalDualPoint, SglProblem,
    SolveReport,
};
use crate::prox;

/// Baseline solver parameters. The penalty-tuning cadence and thresholds are
/// recorded here so runs are reproducible.
#[derive(Debug, Clone)]
pub struct AdmmParams<T> {
    /// Initial penalty; `None` picks the scale-aware `max(1, ||b||/sqrt(m))`.
    pub sigma0: Option<T>,
    pub tol: T,
    pub max_iters: usize,
    /// Multiplier step length in `(0, (1+sqrt(5))/2)`.
    pub tau: T,
    /// Rebalance the penalty from the primal/dual residual ratio.
    pub sigma_tuning: bool,
    /// Tuning cadence in iterations.
    pub tune_every: usize,
    /// Residual imbalance that triggers a tuning step.
    pub tune_threshold: T,
    /// Multiplicative change applied when tuning.
    pub tune_factor: T,
    pub sigma_min: T,
    pub sigma_max: T,
}

impl<T: FloatT> Default for AdmmParams<T> {
    fn default() -> Self {
        AdmmParams {
            sigma0: None,
            tol: fl(1e-6),
            max_iters: 10_000,
            tau: fl(1.618),
            sigma_tuning: true,
            tune_every: 50,
            tune_threshold: fl(5.0),
            tune_factor: fl(2.0),
            sigma_min: fl(1e-6),
            sigma_max: fl(1e6),
        }
    }
}

/// Cached `y`-step factorization: `A A^T` is accumulated once; the Cholesky
/// of `sigma^{-1} I + A A^T` is recomputed only when `sigma` changes.
pub struct AdmmCache<T> {
    aat: Mat<T>,
    sigma: T,
    chol: Cholesky<T>,
}

impl<T: FloatT> AdmmCache<T> {
    pub fn new(a: &DesignMatrix<T>, sigma: T) -> Result<Self> {
        let m = a.nrows();
        let mut aat = Mat::zeros(m, m);
        // column accumulation: A A^T = sum_j a_j a_j^T
        for j in 0..a.ncols() {
            let col = a.gather_columns(&[j]);
            aat.syr(T::one(), col.col(0));
        }
        let chol = Self::factor(&aat, sigma)?;
        Ok(AdmmCache { aat, sigma, chol })
    }

    fn factor(aat: &Mat<T>, sigma: T) -> Result<Cholesky<T>> {
        let m = aat.rows();
        let mut sys = aat.clone();
        let inv = sigma.recip();
        for i in 0..m {
            sys[(i, i)] += inv;
        }
        sys.cholesky()
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        self.chol.solve(rhs)
    }
}

/// Refactors the cached `y`-step system only when the penalty changed.
pub fn refactorize_on_sigma_change<T: FloatT>(cache: &mut AdmmCache<T>, sigma: T) -> Result<bool> {
    if sigma == cache.sigma {
        return Ok(false);
    }
    cache.chol = AdmmCache::factor(&cache.aat, sigma)?;
    cache.sigma = sigma;
    Ok(true)
}

/// Per-iteration snapshot for observers.
pub struct AdmmIteration<'a, T> {
    pub k: usize,
    pub sigma: T,
    pub eta_gap: T,
    pub eta_dual: T,
    pub pobj: T,
    pub dobj: T,
    pub x: &'a [T],
    pub y: &'a [T],
    pub z: &'a [T],
    pub x_prev: &'a [T],
    /// Residual of the `y`-step linear system.
    pub y_step_residual: T,
}

pub fn admm_solve<T: FloatT>(
    prob: &SglProblem<T>,
    params: &AdmmParams<T>,
    start: Option<PrimalDualPoint<T>>,
) -> Result<(PrimalDualPoint<T>, SolveReport)> {
    admm_solve_observed(prob, params, start, |_: &AdmmIteration<T>| {})
}

/// Same as [`admm_solve`], emitting the line-delimited JSON trace format
/// shared with the augmented Lagrangian solver.
pub fn admm_solve_traced<T: FloatT, W: Write>(
    prob: &SglProblem<T>,
    params: &AdmmParams<T>,
    start: Option<PrimalDualPoint<T>>,
    sink: &mut W,
) -> Result<(PrimalDualPoint<T>, SolveReport)> {
    let mut trace_err = None;
    let result = admm_solve_observed(prob, params, start, |it: &AdmmIteration<T>| {
        if trace_err.is_none() {
            if let Err(e) = crate::alm::write_trace_line(
                sink,
                it.k,
                it.sigma,
                None,
                0,
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

pub fn admm_solve_observed<T: FloatT, F>(
    prob: &SglProblem<T>,
    params: &AdmmParams<T>,
    start: Option<PrimalDualPoint<T>>,
    mut observer: F,
) -> Result<(PrimalDualPoint<T>, SolveReport)>
where
    F: FnMut(&AdmmIteration<T>),
{
    let golden = (T::one() + fl::<T>(5.0).sqrt()) / fl::<T>(2.0);
    if !(params.tau > T::zero()) || params.tau >= golden {
        return Err(SglError::InvalidArgument(
            "ADMM step length must lie in (0, (1+sqrt(5))/2)".into(),
        ));
    }
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
    let mut sigma = params.sigma0.unwrap_or_else(|| {
        let mf = T::from_usize(m).unwrap();
        T::one().max(norm2(prob.b()) / mf.sqrt())
    });
    let mut cache = AdmmCache::new(prob.a(), sigma)?;
    let mut converged = false;
    let mut iters = 0usize;
    let mut last_eta = (T::infinity(), T::infinity());
    let mut last_obj = (T::zero(), T::zero());
    // residual pair observed at the last tuning checkpoint
    let mut dual_res_estimate;

    for k in 0..params.max_iters {
        let inv = sigma.recip();

        // y-step: (sigma^{-1} I + A A^T) y = -sigma^{-1} b - A (z - sigma^{-1} x)
        let zc: Vec<T> = z.iter().zip(&x).map(|(&zi, &xi)| zi - inv * xi).collect();
        let azc = prob.a().matvec(&zc);
        let rhs: Vec<T> = prob
            .b()
            .iter()
            .zip(&azc)
            .map(|(&bi, &ai)| -inv * bi - ai)
            .collect();
        y = cache.solve(&rhs);
        let y_step_residual = {
            // verify (sigma^{-1} I + A A^T) y - rhs
            let aty = prob.a().adjoint_matvec(&y);
            let aaty = prob.a().matvec(&aty);
            let r: Vec<T> = y
                .iter()
                .zip(&aaty)
                .zip(&rhs)
                .map(|((&yi, &ai), &ri)| inv * yi + ai - ri)
                .collect();
            norm2(&r)
        };

        // z-step by the Moreau identity, sharing the prox evaluation
        let mut w = prob.a().adjoint_matvec(&y);
        for (wi, &xi) in w.iter_mut().zip(&x) {
            *wi = inv * xi - *wi;
        }
        let pw = prox::prox_p(prob, &w)?;
        let z_next: Vec<T> = w.iter().zip(&pw).map(|(&wi, &pi)| wi - pi).collect();
        z = z_next;

        // x-step: x - tau sigma (A^T y + z) with A^T y + z = x/sigma - prox
        let x_prev = x.clone();
        for (xi, &pi) in x.iter_mut().zip(&pw) {
            *xi = (T::one() - params.tau) * *xi + params.tau * sigma * pi;
        }
        iters = k + 1;

        let pobj = primal_objective(prob, &x)?;
        let dobj = dual_objective(prob, &y)?;
        let eta_gap = (pobj - dobj).abs() / (T::one() + pobj.abs() + dobj.abs());
        let mut dual_vec = prob.a().adjoint_matvec(&y);
        for (ri, &zi) in dual_vec.iter_mut().zip(&z) {
            *ri += zi;
        }
        let eta_dual = norm2(&dual_vec) / (T::one() + norm2(&z));
        last_eta = (eta_gap, eta_dual);
        last_obj = (pobj, dobj);
        dual_res_estimate =
            crate::linalg::dist2(&x, &x_prev) / (sigma * (T::one() + norm2(&x_prev)));

        observer(&AdmmIteration {
            k,
            sigma,
            eta_gap,
            eta_dual,
            pobj,
            dobj,
            x: &x,
            y: &y,
            z: &z,
            x_prev: &x_prev,
            y_step_residual,
        });

        if eta_gap.max(eta_dual) < params.tol {
            converged = true;
            break;
        }

        if params.sigma_tuning && (k + 1) % params.tune_every == 0 {
            let primal_res = eta_dual;
            let mut next = sigma;
            if primal_res > params.tune_threshold * dual_res_estimate {
                next = sigma * params.tune_factor;
            } else if dual_res_estimate > params.tune_threshold * primal_res {
                next = sigma / params.tune_factor;
            }
            let next = next.max(params.sigma_min).min(params.sigma_max);
            if refactorize_on_sigma_change(&mut cache, next)? {
                sigma = next;
            }
        }
    }

    let wall = t0.elapsed().as_secs_f64();
    let report = SolveReport {
        pobj: last_obj.0.to_f64().unwrap_or(f64::NAN),
        dobj: last_obj.1.to_f64().unwrap_or(f64::NAN),
        eta_gap: last_eta.0.to_f64().unwrap_or(f64::NAN),
        eta_dual: last_eta.1.to_f64().unwrap_or(f64::NAN),
        nnz: nnz_estimate(&x),
        outer_iters: iters,
        inner_iters: 0,
        wall_seconds: wall,
        solver_name: "admm".into(),
        converged,
    };
    Ok((PrimalDualPoint { x, y, z }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GroupPartition, WeightMode};

    #[test]
    fn zero_rhs_converges_to_zero() {
        let m = 3;
        let n = 5;
        let data: Vec<f64> = (0..m * n).map(|k| ((k % 5) as f64 - 2.0) / 2.0).collect();
        let a = DesignMatrix::dense(m, n, data).unwrap();
        let part = GroupPartition::with_weight_mode(
            vec![(0..2).collect(), (2..5).collect()],
            WeightMode::Sqrt,
            n,
        )
        .unwrap();
        let prob = SglProblem::new(a, vec![0.0; m], 0.2, 0.3, part).unwrap();
        let (pt, rep) = admm_solve(&prob, &AdmmParams::default(), None).unwrap();
        assert!(rep.converged);
        assert!(pt.x.iter().all(|&v| v.abs() < 1e-8));
    }

    #[test]
    fn refactorization_only_on_change() {
        let a = DesignMatrix::dense(2, 2, vec![1.0, 0.5, -0.5, 2.0]).unwrap();
        let mut cache = AdmmCache::new(&a, 1.0).unwrap();
        assert!(!refactorize_on_sigma_change(&mut cache, 1.0).unwrap());
        assert!(refactorize_on_sigma_change(&mut cache, 2.0).unwrap());
        assert_eq!(cache.sigma(), 2.0);
    }

    #[test]
    fn y_step_matches_direct_solve() {
        let a = DesignMatrix::dense(2, 3, vec![1.0, 0.0, 2.0, -1.0, 1.0, 0.5]).unwrap();
        let sigma = 1.7;
        let cache = AdmmCache::new(&a, sigma).unwrap();
        let rhs = vec![0.3, -0.8];
        let y = cache.solve(&rhs);
        // direct: (sigma^{-1} I + A A^T) y = rhs
        let dn = a.to_dense();
        let mut sys = Mat::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += dn[(i, k)] * dn[(j, k)];
                }
                sys[(i, j)] = s + if i == j { 1.0 / sigma } else { 0.0 };
            }
        }
        let resid = {
            let sy = sys.matvec(&y);
            sy.iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        assert!(resid < 1e-12);
    }
}
