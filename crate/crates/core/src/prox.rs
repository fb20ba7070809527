//! Closed-form proximal kernels for the sparse group Lasso regularizer and
//! its conjugate.
//!
//! The regularizer decomposes per group, and its proximal map is the group
//! shrinkage applied to the soft-thresholded input. The conjugate side never
//! needs its own formula: `w - prox_p(w)` lands in the domain of the
//! conjugate, which is what the dual solvers rely on.

use crate::error::{check_dim, Result};
use crate::float::FloatT;
use crate::model::SglProblem;

/// Componentwise soft threshold `sign(u) .* max(|u| - c, 0)`.
pub fn soft_threshold<T: FloatT>(u: &[T], c: T) -> Vec<T> {
    let mut out = vec![T::zero(); u.len()];
    soft_threshold_into(u, c, &mut out);
    out
}

pub fn soft_threshold_into<T: FloatT>(u: &[T], c: T, out: &mut [T]) {
    debug_assert!(c >= T::zero());
    debug_assert_eq!(u.len(), out.len());
    for (o, &v) in out.iter_mut().zip(u) {
        *o = soft_threshold_scalar(v, c);
    }
}

#[inline]
pub fn soft_threshold_scalar<T: FloatT>(v: T, c: T) -> T {
    if v > c {
        v - c
    } else if v < -c {
        v + c
    } else {
        T::zero()
    }
}

/// Block shrinkage `(u/||u||) max(||u|| - c, 0)`; zero when `||u|| <= c`.
pub fn group_shrink<T: FloatT>(u: &[T], c: T) -> Vec<T> {
    debug_assert!(c >= T::zero());
    let nrm = u.iter().map(|&v| v * v).sum::<T>().sqrt();
    if nrm <= c {
        return vec![T::zero(); u.len()];
    }
    let scale = T::one() - c / nrm;
    u.iter().map(|&v| scale * v).collect()
}

/// Projection onto the Euclidean ball of the given radius.
pub fn project_l2_ball<T: FloatT>(v: &[T], radius: T) -> Vec<T> {
    debug_assert!(radius > T::zero());
    let nrm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if nrm <= radius {
        return v.to_vec();
    }
    let scale = radius / nrm;
    v.iter().map(|&x| scale * x).collect()
}

/// Proximal map of the full regularizer: per group, group shrinkage of the
/// soft-thresholded subvector.
pub fn prox_p<T: FloatT>(prob: &SglProblem<T>, u: &[T]) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); u.len()];
    prox_p_into(prob, u, &mut out)?;
    Ok(out)
}

pub fn prox_p_into<T: FloatT>(prob: &SglProblem<T>, u: &[T], out: &mut [T]) -> Result<()> {
    check_dim("prox input", prob.ncols(), u.len())?;
    check_dim("prox output", prob.ncols(), out.len())?;
    let l1 = prob.lambda1();
    let part = prob.partition();
    for (g, &l2) in part.groups().iter().zip(part.lambda2_scaled()) {
        let mut sq = T::zero();
        for &i in g {
            let v = soft_threshold_scalar(u[i], l1);
            out[i] = v;
            sq += v * v;
        }
        let nrm = sq.sqrt();
        if nrm <= l2 {
            for &i in g {
                out[i] = T::zero();
            }
        } else {
            let scale = T::one() - l2 / nrm;
            for &i in g {
                // Double subtraction keeps the value within one ulp and
                // makes p + (u - p) = u exact in real arithmetic, so the
                // Moreau reconstruction holds bitwise.
                let raw = out[i] * scale;
                out[i] = u[i] - (u[i] - raw);
            }
        }
    }
    Ok(())
}

/// `w - prox_p(w)`: the conjugate-side proximal point, which carries zero
/// conjugate value and certifies the dual objective formula.
pub fn prox_conjugate_residual<T: FloatT>(prob: &SglProblem<T>, w: &[T]) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); w.len()];
    prox_conjugate_residual_into(prob, w, &mut out)?;
    Ok(out)
}

pub fn prox_conjugate_residual_into<T: FloatT>(
    prob: &SglProblem<T>,
    w: &[T],
    out: &mut [T],
) -> Result<()> {
    prox_p_into(prob, w, out)?;
    for (o, &wi) in out.iter_mut().zip(w) {
        *o = wi - *o;
    }
    Ok(())
}

/// Distance-style certificate that `z` lies in the domain of the conjugate
/// regularizer: per group, `max(0, ||max(|z| - lambda1, 0)|| - lambda_{2,l})`,
/// maximized over groups. Zero certifies membership.
pub fn dual_feasibility_gap<T: FloatT>(prob: &SglProblem<T>, z: &[T]) -> Result<T> {
    check_dim("z", prob.ncols(), z.len())?;
    let l1 = prob.lambda1();
    let part = prob.partition();
    let mut worst = T::zero();
    for (g, &l2) in part.groups().iter().zip(part.lambda2_scaled()) {
        let mut sq = T::zero();
        for &i in g {
            let e = (z[i].abs() - l1).max(T::zero());
            sq += e * e;
        }
        let gap = (sq.sqrt() - l2).max(T::zero());
        if gap > worst {
            worst = gap;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DesignMatrix, GroupPartition, SglProblem, WeightMode};

    fn single_group_problem(n: usize, l1: f64, l2_scaled: f64) -> SglProblem<f64> {
        // weight 1 so lambda2 == lambda_{2,l}
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        let a = DesignMatrix::dense(n, n, data).unwrap();
        let part =
            GroupPartition::with_weight_mode(vec![(0..n).collect()], WeightMode::One, n).unwrap();
        SglProblem::new(a, vec![0.0; n], l1, l2_scaled, part).unwrap()
    }

    #[test]
    fn soft_threshold_formula() {
        assert_eq!(soft_threshold(&[3.0, -0.5], 1.0), vec![2.0, 0.0]);
        let u = vec![0.3, -2.0, 1.0];
        assert_eq!(soft_threshold(&u, 0.0), u);
    }

    #[test]
    fn group_shrink_formula() {
        let out = group_shrink(&[3.0f64, 4.0], 1.0);
        assert!((out[0] - 2.4).abs() < 1e-15);
        assert!((out[1] - 3.2).abs() < 1e-15);
        assert_eq!(group_shrink(&[0.3, 0.4], 1.0), vec![0.0, 0.0]);
        assert_eq!(group_shrink(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn ball_projection_and_shrink_consistency() {
        let v = vec![3.0f64, 4.0];
        let p = project_l2_ball(&v, 1.0);
        assert!((p[0] - 0.6).abs() < 1e-15);
        assert!((p[1] - 0.8).abs() < 1e-15);
        let inside = vec![0.1f64, -0.2];
        assert_eq!(project_l2_ball(&inside, 1.0), inside);

        // group_shrink(v, c) = v - project(v, c) on a few fixed vectors
        for v in [vec![3.0f64, 4.0], vec![0.2, -0.1], vec![-5.0, 12.0]] {
            let s = group_shrink(&v, 1.0);
            let p = project_l2_ball(&v, 1.0);
            for i in 0..v.len() {
                assert!((s[i] - (v[i] - p[i])).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn prox_p_composed_example() {
        // one group dim 2, lambda1 = 1, lambda_{2,l} = 1, u = (3, -0.5)
        let prob = single_group_problem(2, 1.0, 1.0);
        let p = prox_p(&prob, &[3.0, -0.5]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn prox_p_reduces_to_soft_threshold_when_lambda2_zero() {
        let prob = single_group_problem(4, 0.7, 0.0);
        let u = vec![1.0, -0.3, 2.2, 0.0];
        assert_eq!(prox_p(&prob, &u).unwrap(), soft_threshold(&u, 0.7));
    }

    #[test]
    fn conjugate_residual_cases() {
        let prob = single_group_problem(3, 0.5, 1.0);
        assert_eq!(
            prox_conjugate_residual(&prob, &[0.0, 0.0, 0.0]).unwrap(),
            vec![0.0; 3]
        );
        // tiny w stays fixed: prox_p(w) = 0 there
        let w = vec![0.1, -0.2, 0.05];
        assert_eq!(prox_conjugate_residual(&prob, &w).unwrap(), w);
    }

    #[test]
    fn feasibility_gap_cases() {
        let prob = single_group_problem(2, 0.0, 1.0);
        assert_eq!(dual_feasibility_gap(&prob, &[0.0, 0.0]).unwrap(), 0.0);
        // ||z|| = 2 with lambda1 = 0, lambda_{2,l} = 1 -> gap 1
        let g = dual_feasibility_gap(&prob, &[2.0f64.sqrt(), 2.0f64.sqrt()]).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moreau_identity_is_bitwise() {
        let prob = single_group_problem(5, 0.8, 1.3);
        let u = vec![2.5, -0.4, 1.7, -3.1, 0.9];
        let p = prox_p(&prob, &u).unwrap();
        let q = prox_conjugate_residual(&prob, &u).unwrap();
        for i in 0..u.len() {
            assert_eq!((p[i] + q[i]).to_bits(), u[i].to_bits());
        }
    }

    #[test]
    fn support_contained_in_soft_threshold_support() {
        let prob = single_group_problem(4, 1.0, 0.6);
        let u = vec![3.0, 0.5, -2.0, -0.9];
        let p = prox_p(&prob, &u).unwrap();
        let v = soft_threshold(&u, 1.0);
        for i in 0..4 {
            if p[i] != 0.0 {
                assert!(v[i] != 0.0);
            }
        }
    }
}
