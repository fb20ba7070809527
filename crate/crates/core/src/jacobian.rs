//! One element of the surrogate generalized Jacobian of the regularizer's
//! proximal map, kept in structured form.
//!
//! Only groups whose soft-thresholded subvector leaves the scaled ball
//! contribute; each such group acts on its active coordinates as a scaled
//! identity plus a rank-one term. Everything else is zero, which is the
//! second-order sparsity the Newton solver exploits.

use crate::error::{check_dim, Result, SglError};
use crate::float::FloatT;
use crate::linalg::Mat;
use crate::model::SglProblem;
use crate::prox::soft_threshold_scalar;

/// Default size cap for dense assembly (test oracle path).
pub const DENSE_ASSEMBLY_BOUND: usize = 200;

/// Classification of a group at the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupCase {
    /// `||v_l|| < lambda_{2,l}`: the block vanishes.
    Interior,
    /// `||v_l|| = lambda_{2,l}`: the zero member of the ball-projection
    /// Jacobian is chosen, so the block also vanishes.
    Boundary,
    /// `||v_l|| > lambda_{2,l}`: scaled identity plus rank-one on the
    /// active coordinates.
    Exterior,
}

/// Structured encoding of the chosen Jacobian element at a point `u`.
#[derive(Debug, Clone)]
pub struct ProxDerivativeInfo<T> {
    n: usize,
    /// `theta_i = |u_i| > lambda1`.
    theta: Vec<bool>,
    /// `||v_{G_l}||` with `v = soft_threshold(u, lambda1)`.
    v_norms: Vec<T>,
    case_tags: Vec<GroupCase>,
    /// Indices of Exterior groups.
    active_groups: Vec<usize>,
    /// Per active group: global indices of the active coordinates.
    active_sets: Vec<Vec<usize>>,
    /// Per active group: `v` restricted to the active set.
    s_vectors: Vec<Vec<T>>,
    /// Per active group: `1 - lambda_{2,l}/||v_l||`.
    coef_diag: Vec<T>,
    /// Per active group: `lambda_{2,l}/||v_l||^3`.
    coef_rank1: Vec<T>,
    /// Overall sparsity: total active coordinates over active groups.
    r: usize,
    /// Group sparsity: number of active groups.
    r2: usize,
}

impl<T: FloatT> ProxDerivativeInfo<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> &[bool] {
        &self.theta
    }

    pub fn v_norms(&self) -> &[T] {
        &self.v_norms
    }

    pub fn case_tags(&self) -> &[GroupCase] {
        &self.case_tags
    }

    pub fn active_groups(&self) -> &[usize] {
        &self.active_groups
    }

    pub fn active_sets(&self) -> &[Vec<usize>] {
        &self.active_sets
    }

    pub fn s_vectors(&self) -> &[Vec<T>] {
        &self.s_vectors
    }

    /// `1 - lambda_{2,l}/||v_l||` per active group.
    pub fn coef_diag(&self) -> &[T] {
        &self.coef_diag
    }

    /// `lambda_{2,l}/||v_l||^3` per active group.
    pub fn coef_rank1(&self) -> &[T] {
        &self.coef_rank1
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn r2(&self) -> usize {
        self.r2
    }

    pub fn has_active_groups(&self) -> bool {
        !self.active_groups.is_empty()
    }
}

/// Builds the canonical Jacobian element at `u`: the diagonal mask uses the
/// strict threshold `|u_i| > lambda1`, and groups on the ball boundary take
/// the zero member so only strictly exterior groups contribute.
pub fn derivative_info<T: FloatT>(prob: &SglProblem<T>, u: &[T]) -> Result<ProxDerivativeInfo<T>> {
    check_dim("u", prob.ncols(), u.len())?;
    let n = prob.ncols();
    let l1 = prob.lambda1();
    let part = prob.partition();
    let g = part.num_groups();

    let mut theta = vec![false; n];
    for (t, &ui) in theta.iter_mut().zip(u) {
        *t = ui.abs() > l1;
    }

    let mut v_norms = Vec::with_capacity(g);
    let mut case_tags = Vec::with_capacity(g);
    let mut active_groups = Vec::new();
    let mut active_sets = Vec::new();
    let mut s_vectors = Vec::new();
    let mut coef_diag = Vec::new();
    let mut coef_rank1 = Vec::new();
    let mut r = 0usize;

    for (l, (grp, &l2)) in part
        .groups()
        .iter()
        .zip(part.lambda2_scaled())
        .enumerate()
    {
        let mut sq = T::zero();
        for &i in grp {
            let v = soft_threshold_scalar(u[i], l1);
            sq += v * v;
        }
        let nrm = sq.sqrt();
        v_norms.push(nrm);
        let case = if nrm > l2 {
            GroupCase::Exterior
        } else if nrm == l2 {
            GroupCase::Boundary
        } else {
            GroupCase::Interior
        };
        case_tags.push(case);
        if case != GroupCase::Exterior {
            continue;
        }
        let mut idx = Vec::new();
        let mut s = Vec::new();
        for &i in grp {
            if theta[i] {
                idx.push(i);
                s.push(soft_threshold_scalar(u[i], l1));
            }
        }
        let cd = T::one() - l2 / nrm;
        let cr = l2 / (nrm * nrm * nrm);
        if !cd.is_finite() || !cr.is_finite() {
            return Err(SglError::Numeric(format!(
                "non-finite Jacobian coefficients in group {l} (norm {nrm})"
            )));
        }
        r += idx.len();
        active_groups.push(l);
        active_sets.push(idx);
        s_vectors.push(s);
        coef_diag.push(cd);
        coef_rank1.push(cr);
    }

    let r2 = active_groups.len();
    Ok(ProxDerivativeInfo {
        n,
        theta,
        v_norms,
        case_tags,
        active_groups,
        active_sets,
        s_vectors,
        coef_diag,
        coef_rank1,
        r,
        r2,
    })
}

/// Applies the encoded element to `h` without materializing it.
pub fn apply_m<T: FloatT>(info: &ProxDerivativeInfo<T>, h: &[T]) -> Vec<T> {
    assert_eq!(h.len(), info.n);
    let mut out = vec![T::zero(); info.n];
    for (slot, _) in info.active_groups.iter().enumerate() {
        let idx = &info.active_sets[slot];
        let s = &info.s_vectors[slot];
        let cd = info.coef_diag[slot];
        let cr = info.coef_rank1[slot];
        let mut sh = T::zero();
        for (&i, &si) in idx.iter().zip(s) {
            sh += si * h[i];
        }
        for (&i, &si) in idx.iter().zip(s) {
            out[i] = cd * h[i] + cr * sh * si;
        }
    }
    out
}

/// Dense assembly of the encoded element (test oracle; bounded size).
pub fn assemble_dense_m<T: FloatT>(info: &ProxDerivativeInfo<T>) -> Result<Mat<T>> {
    assemble_dense_m_with_bound(info, DENSE_ASSEMBLY_BOUND)
}

pub fn assemble_dense_m_with_bound<T: FloatT>(
    info: &ProxDerivativeInfo<T>,
    bound: usize,
) -> Result<Mat<T>> {
    if info.n > bound {
        return Err(SglError::CapabilityExceeded(format!(
            "dense Jacobian assembly limited to n <= {bound}, got {}",
            info.n
        )));
    }
    let mut m = Mat::zeros(info.n, info.n);
    for slot in 0..info.active_groups.len() {
        let idx = &info.active_sets[slot];
        let s = &info.s_vectors[slot];
        let cd = info.coef_diag[slot];
        let cr = info.coef_rank1[slot];
        for (a, &i) in idx.iter().enumerate() {
            m[(i, i)] += cd;
            for (c, &j) in idx.iter().enumerate() {
                m[(i, j)] += cr * s[a] * s[c];
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DesignMatrix, GroupPartition, WeightMode};

    fn one_group(n: usize, l1: f64, l2: f64) -> SglProblem<f64> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        let a = DesignMatrix::dense(n, n, data).unwrap();
        let part =
            GroupPartition::with_weight_mode(vec![(0..n).collect()], WeightMode::One, n).unwrap();
        SglProblem::new(a, vec![0.0; n], l1, l2, part).unwrap()
    }

    #[test]
    fn textbook_block() {
        // u = (3, -0.5), lambda1 = 1, lambda_{2,l} = 1: exterior, M = Diag(1, 0)
        let prob = one_group(2, 1.0, 1.0);
        let info = derivative_info(&prob, &[3.0, -0.5]).unwrap();
        assert_eq!(info.case_tags(), &[GroupCase::Exterior]);
        assert_eq!(info.r(), 1);
        assert_eq!(info.r2(), 1);
        let m = assemble_dense_m(&info).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(1, 0)], 0.0);
        assert_eq!(m[(1, 1)], 0.0);
        // apply matches: h = (1, 1) -> (1, 0)
        let mh = apply_m(&info, &[1.0, 1.0]);
        assert!((mh[0] - 1.0).abs() < 1e-15);
        assert_eq!(mh[1], 0.0);
        // h = 0 -> 0
        assert_eq!(apply_m(&info, &[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn interior_group_gives_zero_block() {
        let prob = one_group(2, 1.0, 5.0);
        let info = derivative_info(&prob, &[3.0, -0.5]).unwrap();
        assert_eq!(info.case_tags(), &[GroupCase::Interior]);
        assert!(!info.has_active_groups());
        let m = assemble_dense_m(&info).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn boundary_group_takes_zero_member() {
        // ||v|| = 2 exactly with lambda_{2,l} = 2
        let prob = one_group(2, 1.0, 2.0);
        let info = derivative_info(&prob, &[3.0, -1.0]).unwrap();
        assert_eq!(info.case_tags(), &[GroupCase::Boundary]);
        assert!(!info.has_active_groups());
    }

    #[test]
    fn lambda2_zero_reduces_to_theta_mask() {
        let prob = one_group(3, 1.0, 0.0);
        let u = [3.0, 0.5, -2.0];
        let info = derivative_info(&prob, &u).unwrap();
        assert_eq!(info.theta(), &[true, false, true]);
        let m = assemble_dense_m(&info).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j && info.theta()[i] { 1.0 } else { 0.0 };
                assert!((m[(i, j)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn theta_zero_at_exact_threshold() {
        let prob = one_group(2, 1.0, 0.0);
        let info = derivative_info(&prob, &[1.0, -1.0]).unwrap();
        assert_eq!(info.theta(), &[false, false]);
    }

    #[test]
    fn dense_assembly_bound_enforced() {
        let prob = one_group(4, 0.1, 0.1);
        let info = derivative_info(&prob, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(assemble_dense_m_with_bound(&info, 3).is_err());
    }

    #[test]
    fn active_set_data_is_consistent() {
        let prob = one_group(4, 0.5, 0.2);
        let u = [2.0, -0.1, 0.75, -1.5];
        let info = derivative_info(&prob, &u).unwrap();
        assert_eq!(info.active_sets()[0], vec![0, 2, 3]);
        let s = &info.s_vectors()[0];
        assert!(s.iter().all(|&v| v != 0.0));
        let snorm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((snorm - info.v_norms()[0]).abs() < 1e-15);
    }
}
