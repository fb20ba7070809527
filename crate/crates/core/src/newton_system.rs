//! The semismooth-Newton linear system `(I + sigma A M A^T) d = rhs`,
//! solved through one of three interchangeable strategies that all exploit
//! the structured sparsity of `M`:
//!
//! * `DenseCholesky` assembles the `m x m` operator from the active-group
//!   blocks and factors it;
//! * `WoodburyFactor` writes the operator as `I + D D^T` with
//!   `D in R^{m x (r+r2)}` and inverts through the small Gram system;
//! * `Pcg` keeps everything matrix-free with a diagonal preconditioner.

use crate::error::{Result, SglError};
use crate::float::{fl, FloatT};
use crate::jacobian::ProxDerivativeInfo;
use crate::linalg::{axpy, dot, norm2, Cholesky, ColBlock, Mat};
use crate::model::DesignMatrix;

/// Which factorization backs the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStrategy {
    DenseCholesky,
    WoodburyFactor,
    Pcg,
}

/// Strategy-selection and iteration limits; defaults follow the cost model
/// `O(m^2 (r+r2))` for the dense assembly versus `O(m (r+r2)^2)` for the
/// Woodbury route.
#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Bypass the selection rule entirely.
    pub force_strategy: Option<SolveStrategy>,
    /// Woodbury is used when `r + r2 <= m / woodbury_fraction`.
    pub woodbury_fraction: usize,
    /// ... and `r + r2` is at most this.
    pub woodbury_rank_limit: usize,
    /// Dense Cholesky is used when `m` is at most this.
    pub dense_m_limit: usize,
    /// Iteration cap for the conjugate-gradient fallback.
    pub pcg_max_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            force_strategy: None,
            woodbury_fraction: 4,
            woodbury_rank_limit: 4000,
            dense_m_limit: 4000,
            pcg_max_iters: 500,
        }
    }
}

impl NewtonConfig {
    pub fn forcing(strategy: SolveStrategy) -> Self {
        NewtonConfig {
            force_strategy: Some(strategy),
            ..NewtonConfig::default()
        }
    }

    fn select(&self, m: usize, rank: usize) -> SolveStrategy {
        if let Some(s) = self.force_strategy {
            return s;
        }
        if rank <= m / self.woodbury_fraction && rank <= self.woodbury_rank_limit {
            SolveStrategy::WoodburyFactor
        } else if m <= self.dense_m_limit {
            SolveStrategy::DenseCholesky
        } else {
            SolveStrategy::Pcg
        }
    }
}

/// Gathered data of one active group: its design-matrix columns, the image
/// of its active subvector, and the two scalar coefficients.
struct ActiveBlock<T> {
    cols: ColBlock<T>,
    a_s: Vec<T>,
    coef_diag: T,
    coef_rank1: T,
}

enum Factor<T> {
    /// No active groups: the operator is the identity.
    Identity,
    Dense(Cholesky<T>),
    Woodbury {
        /// `D = [B, C]`, `m x (r + r2)`.
        d: ColBlock<T>,
        /// Cholesky of `I + D^T D`.
        gram: Cholesky<T>,
    },
    Pcg {
        diag: Vec<T>,
        max_iters: usize,
    },
}

/// One built instance of `V = I + sigma A M A^T`.
pub struct NewtonSystem<T> {
    m: usize,
    sigma: T,
    strategy: SolveStrategy,
    blocks: Vec<ActiveBlock<T>>,
    factor: Factor<T>,
}

/// Result of a linear solve, with the verified residual.
#[derive(Debug, Clone)]
pub struct SolveOutcome<T> {
    pub d: Vec<T>,
    pub residual_norm: T,
    pub converged: bool,
    pub iters: usize,
}

/// Builds the system with the default configuration.
pub fn build_structured<T: FloatT>(
    a: &DesignMatrix<T>,
    sigma: T,
    info: &ProxDerivativeInfo<T>,
) -> Result<NewtonSystem<T>> {
    build_structured_with(a, sigma, info, &NewtonConfig::default())
}

pub fn build_structured_with<T: FloatT>(
    a: &DesignMatrix<T>,
    sigma: T,
    info: &ProxDerivativeInfo<T>,
    config: &NewtonConfig,
) -> Result<NewtonSystem<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(SglError::InvalidArgument(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    let m = a.nrows();
    let rank = info.r() + info.r2();

    // Gather each active group's columns once; every strategy reuses them.
    let mut blocks = Vec::with_capacity(info.active_groups().len());
    for slot in 0..info.active_groups().len() {
        let idx = &info.active_sets()[slot];
        let s = &info.s_vectors()[slot];
        let cols = a.gather_columns(idx);
        let mut a_s = vec![T::zero(); m];
        cols.accumulate_matvec(s, &mut a_s);
        let block = ActiveBlock {
            cols,
            a_s,
            coef_diag: info.coef_diag()[slot],
            coef_rank1: info.coef_rank1()[slot],
        };
        if !block.coef_diag.is_finite() || !block.coef_rank1.is_finite() {
            return Err(SglError::Numeric("non-finite block coefficient".into()));
        }
        blocks.push(block);
    }

    if blocks.is_empty() {
        return Ok(NewtonSystem {
            m,
            sigma,
            strategy: config.select(m, rank),
            blocks,
            factor: Factor::Identity,
        });
    }

    let strategy = config.select(m, rank);
    let factor = match strategy {
        SolveStrategy::DenseCholesky => {
            let v = assemble_dense_v_from(m, sigma, &blocks);
            Factor::Dense(v.cholesky()?)
        }
        SolveStrategy::WoodburyFactor => {
            let mut d = ColBlock::zeros(m, 0);
            // B_l = sqrt(sigma * coef_diag) A_l for every active group ...
            for blk in &blocks {
                let scale = (sigma * blk.coef_diag).sqrt();
                if !scale.is_finite() {
                    return Err(SglError::Numeric("non-finite Woodbury scale".into()));
                }
                for j in 0..blk.cols.ncols() {
                    let col: Vec<T> = blk.cols.col(j).iter().map(|&v| scale * v).collect();
                    d.push_col(&col);
                }
            }
            // ... then c_l = sqrt(sigma * coef_rank1) (A_l s_l).
            for blk in &blocks {
                let scale = (sigma * blk.coef_rank1).sqrt();
                if !scale.is_finite() {
                    return Err(SglError::Numeric("non-finite Woodbury scale".into()));
                }
                let col: Vec<T> = blk.a_s.iter().map(|&v| scale * v).collect();
                d.push_col(&col);
            }
            let k = d.ncols();
            let mut gram = Mat::identity(k);
            for i in 0..k {
                for j in i..k {
                    let g = dot(d.col(i), d.col(j));
                    gram[(i, j)] += g;
                    if i != j {
                        gram[(j, i)] += g;
                    }
                }
            }
            let gram = gram.cholesky()?;
            Factor::Woodbury { d, gram }
        }
        SolveStrategy::Pcg => {
            // diag(V) in O(m (r + r2)).
            let mut diag = vec![T::one(); m];
            for blk in &blocks {
                for j in 0..blk.cols.ncols() {
                    for (di, &c) in diag.iter_mut().zip(blk.cols.col(j)) {
                        *di += sigma * blk.coef_diag * c * c;
                    }
                }
                for (di, &c) in diag.iter_mut().zip(&blk.a_s) {
                    *di += sigma * blk.coef_rank1 * c * c;
                }
            }
            Factor::Pcg {
                diag,
                max_iters: config.pcg_max_iters,
            }
        }
    };

    Ok(NewtonSystem {
        m,
        sigma,
        strategy,
        blocks,
        factor,
    })
}

fn assemble_dense_v_from<T: FloatT>(m: usize, sigma: T, blocks: &[ActiveBlock<T>]) -> Mat<T> {
    let mut v = Mat::identity(m);
    for blk in blocks {
        for j in 0..blk.cols.ncols() {
            v.syr(sigma * blk.coef_diag, blk.cols.col(j));
        }
        v.syr(sigma * blk.coef_rank1, &blk.a_s);
    }
    v
}

impl<T: FloatT> NewtonSystem<T> {
    pub fn strategy(&self) -> SolveStrategy {
        self.strategy
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    /// `V h = h + sigma A M A^T h` through the gathered blocks,
    /// `O(m (r + r2))` arithmetic.
    pub fn apply_v(&self, h: &[T]) -> Vec<T> {
        assert_eq!(h.len(), self.m);
        let mut out = h.to_vec();
        for blk in &self.blocks {
            let t = blk.cols.adjoint_matvec(h);
            let scaled: Vec<T> = t.iter().map(|&v| self.sigma * blk.coef_diag * v).collect();
            blk.cols.accumulate_matvec(&scaled, &mut out);
            let w = self.sigma * blk.coef_rank1 * dot(&blk.a_s, h);
            axpy(w, &blk.a_s, &mut out);
        }
        out
    }

    /// Dense assembly of `V` (test oracle).
    pub fn assemble_dense_v(&self) -> Mat<T> {
        assemble_dense_v_from(self.m, self.sigma, &self.blocks)
    }

    /// Solves `V d = rhs`. Direct strategies return machine-accurate solves;
    /// the CG path iterates until `||V d - rhs|| <= tol` or `max_iters`.
    /// The returned residual norm is verified through `apply_v`.
    pub fn solve(&self, rhs: &[T], tol: T, max_iters: usize) -> SolveOutcome<T> {
        assert_eq!(rhs.len(), self.m);
        match &self.factor {
            Factor::Identity => SolveOutcome {
                d: rhs.to_vec(),
                residual_norm: T::zero(),
                converged: true,
                iters: 0,
            },
            Factor::Dense(chol) => {
                let d = chol.solve(rhs);
                let residual_norm = self.residual(&d, rhs);
                SolveOutcome {
                    d,
                    residual_norm,
                    converged: true,
                    iters: 1,
                }
            }
            Factor::Woodbury { d, gram } => {
                let t = d.adjoint_matvec(rhs);
                let s = gram.solve(&t);
                let mut out = rhs.to_vec();
                let neg: Vec<T> = s.iter().map(|&v| -v).collect();
                d.accumulate_matvec(&neg, &mut out);
                let residual_norm = self.residual(&out, rhs);
                SolveOutcome {
                    d: out,
                    residual_norm,
                    converged: true,
                    iters: 1,
                }
            }
            Factor::Pcg {
                diag,
                max_iters: cap,
            } => self.pcg(rhs, tol, max_iters.min(*cap), diag),
        }
    }

    fn residual(&self, d: &[T], rhs: &[T]) -> T {
        let vd = self.apply_v(d);
        vd.iter()
            .zip(rhs)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    fn pcg(&self, rhs: &[T], tol: T, max_iters: usize, diag: &[T]) -> SolveOutcome<T> {
        let tol = tol.max(fl::<T>(1e-300));
        let mut x = vec![T::zero(); self.m];
        let mut r = rhs.to_vec();
        let mut rnorm = norm2(&r);
        if rnorm <= tol {
            return SolveOutcome {
                d: x,
                residual_norm: rnorm,
                converged: true,
                iters: 0,
            };
        }
        let mut z: Vec<T> = r.iter().zip(diag).map(|(&ri, &di)| ri / di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut iters = 0;
        while iters < max_iters {
            let vp = self.apply_v(&p);
            let denom = dot(&p, &vp);
            if denom <= T::zero() {
                break;
            }
            let alpha = rz / denom;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &vp, &mut r);
            iters += 1;
            rnorm = norm2(&r);
            if rnorm <= tol {
                break;
            }
            for ((zi, &ri), &di) in z.iter_mut().zip(&r).zip(diag) {
                *zi = ri / di;
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, &zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        let residual_norm = self.residual(&x, rhs);
        SolveOutcome {
            d: x,
            converged: residual_norm <= tol,
            residual_norm,
            iters,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobian::derivative_info;
    use crate::model::{GroupPartition, SglProblem, WeightMode};

    fn small_problem() -> (SglProblem<f64>, Vec<f64>) {
        // 4x6, two groups of 3, deterministic entries
        let m = 4;
        let n = 6;
        let data: Vec<f64> = (0..m * n)
            .map(|k| (((k * 31 + 7) % 17) as f64 - 8.0) / 5.0)
            .collect();
        let a = DesignMatrix::dense(m, n, data).unwrap();
        let part = GroupPartition::with_weight_mode(
            vec![(0..3).collect(), (3..6).collect()],
            WeightMode::One,
            n,
        )
        .unwrap();
        let prob = SglProblem::new(a, vec![0.0; m], 0.3, 0.4, part).unwrap();
        let u = vec![2.0, -1.5, 0.1, 1.2, -2.5, 0.9];
        (prob, u)
    }

    #[test]
    fn identity_path_when_no_active_groups() {
        let (prob, _) = small_problem();
        // huge lambda2 -> all interior
        let prob2 = prob.with_lambdas(0.3, 100.0).unwrap();
        let info = derivative_info(&prob2, &[2.0, -1.5, 0.1, 1.2, -2.5, 0.9]).unwrap();
        let sys = build_structured(prob2.a(), 1.7, &info).unwrap();
        let rhs = vec![1.0, -2.0, 3.0, 4.0];
        let out = sys.solve(&rhs, 1e-12, 100);
        assert_eq!(out.d, rhs);
        assert_eq!(out.residual_norm, 0.0);
    }

    #[test]
    fn strategies_agree_and_apply_matches_dense() {
        let (prob, u) = small_problem();
        let info = derivative_info(&prob, &u).unwrap();
        assert!(info.has_active_groups());
        let sigma = 2.3;
        let rhs = vec![0.7, -1.1, 0.4, 2.2];

        let dense = build_structured_with(
            prob.a(),
            sigma,
            &info,
            &NewtonConfig::forcing(SolveStrategy::DenseCholesky),
        )
        .unwrap();
        let wood = build_structured_with(
            prob.a(),
            sigma,
            &info,
            &NewtonConfig::forcing(SolveStrategy::WoodburyFactor),
        )
        .unwrap();
        let pcg = build_structured_with(
            prob.a(),
            sigma,
            &info,
            &NewtonConfig::forcing(SolveStrategy::Pcg),
        )
        .unwrap();

        let d1 = dense.solve(&rhs, 1e-12, 100);
        let d2 = wood.solve(&rhs, 1e-12, 100);
        let d3 = pcg.solve(&rhs, 1e-12, 200);
        assert!(d3.converged);
        for i in 0..rhs.len() {
            assert!((d1.d[i] - d2.d[i]).abs() < 1e-9);
            assert!((d1.d[i] - d3.d[i]).abs() < 1e-8);
        }
        assert!(d1.residual_norm < 1e-10);
        assert!(d2.residual_norm < 1e-10);

        // apply_v equals the dense assembly
        let v = dense.assemble_dense_v();
        let h = vec![1.0, 2.0, -1.0, 0.5];
        let vh = dense.apply_v(&h);
        let vh_ref = v.matvec(&h);
        for i in 0..h.len() {
            assert!((vh[i] - vh_ref[i]).abs() < 1e-12);
        }

        // SPD sanity: <d, rhs> > 0
        assert!(dot(&d1.d, &rhs) > 0.0);
    }

    #[test]
    fn rayleigh_quotient_at_least_one() {
        let (prob, u) = small_problem();
        let info = derivative_info(&prob, &u).unwrap();
        let sys = build_structured(prob.a(), 0.9, &info).unwrap();
        for seed in 0..5u64 {
            let h: Vec<f64> = (0..4)
                .map(|i| (((seed * 13 + i * 7 + 1) % 19) as f64 - 9.0) / 4.0)
                .collect();
            let hh = dot(&h, &h);
            if hh == 0.0 {
                continue;
            }
            let vh = sys.apply_v(&h);
            assert!(dot(&h, &vh) / hh >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn selection_rule() {
        let cfg = NewtonConfig::default();
        assert_eq!(cfg.select(1000, 10), SolveStrategy::WoodburyFactor);
        assert_eq!(cfg.select(1000, 600), SolveStrategy::DenseCholesky);
        assert_eq!(cfg.select(10_000, 9000), SolveStrategy::Pcg);
        // rank fits m/4 but exceeds the absolute Woodbury cap, m too big for dense
        assert_eq!(cfg.select(20_000, 4100), SolveStrategy::Pcg);
    }
}
