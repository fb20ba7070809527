//! Problem representation: the design matrix abstraction, group partition,
//! the immutable problem bundle, and the objective/residual metrics used for
//! reporting and termination.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, SglError};
use crate::float::FloatT;
use crate::linalg::{dot, norm1, norm2, norm_inf, ColBlock, Mat};
use crate::prox;

/// Storage backing a [`DesignMatrix`].
#[derive(Debug, Clone)]
pub enum MatrixStorage<T> {
    /// Row-major `m x n` array.
    Dense(Vec<T>),
    /// Compressed sparse column.
    Csc {
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<T>,
    },
}

/// The linear map `A` of the regression problem, with matvec, adjoint matvec,
/// and column access for both dense and CSC storage.
#[derive(Debug, Clone)]
pub struct DesignMatrix<T> {
    m: usize,
    n: usize,
    storage: MatrixStorage<T>,
}

impl<T: FloatT> DesignMatrix<T> {
    pub fn dense(m: usize, n: usize, data: Vec<T>) -> Result<Self> {
        check_dim("dense design matrix data", m * n, data.len())?;
        Ok(DesignMatrix {
            m,
            n,
            storage: MatrixStorage::Dense(data),
        })
    }

    pub fn csc(
        m: usize,
        n: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        check_dim("CSC column pointers", n + 1, col_ptr.len())?;
        check_dim("CSC values", row_idx.len(), values.len())?;
        if col_ptr[0] != 0 || *col_ptr.last().unwrap() != row_idx.len() {
            return Err(SglError::InvalidArgument(
                "CSC column pointers must start at 0 and end at nnz".into(),
            ));
        }
        for j in 0..n {
            if col_ptr[j] > col_ptr[j + 1] {
                return Err(SglError::InvalidArgument(format!(
                    "CSC column pointers decrease at column {j}"
                )));
            }
            let rows = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            for w in rows.windows(2) {
                if w[0] >= w[1] {
                    return Err(SglError::InvalidArgument(format!(
                        "CSC row indices not strictly increasing in column {j}"
                    )));
                }
            }
            if let Some(&last) = rows.last() {
                if last >= m {
                    return Err(SglError::InvalidArgument(format!(
                        "CSC row index {last} out of range in column {j}"
                    )));
                }
            }
        }
        Ok(DesignMatrix {
            m,
            n,
            storage: MatrixStorage::Csc {
                col_ptr,
                row_idx,
                values,
            },
        })
    }

    /// Builds a CSC matrix from per-row `(column, value)` entries
    /// (columns 0-based, ascending within a row).
    pub fn from_sparse_rows(m: usize, n: usize, rows: &[Vec<(usize, T)>]) -> Result<Self> {
        check_dim("sparse rows", m, rows.len())?;
        let mut counts = vec![0usize; n];
        for row in rows {
            for &(j, _) in row {
                if j >= n {
                    return Err(SglError::InvalidArgument(format!(
                        "column index {j} out of range 0..{n}"
                    )));
                }
                counts[j] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + counts[j];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![T::zero(); nnz];
        let mut next = col_ptr.clone();
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                let slot = next[j];
                row_idx[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        DesignMatrix::csc(m, n, col_ptr, row_idx, values)
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, MatrixStorage::Csc { .. })
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            MatrixStorage::Dense(_) => self.m * self.n,
            MatrixStorage::Csc { values, .. } => values.len(),
        }
    }

    /// `out = A x`.
    pub fn matvec_into(&self, x: &[T], out: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.m);
        match &self.storage {
            MatrixStorage::Dense(data) => {
                for (i, oi) in out.iter_mut().enumerate() {
                    *oi = dot(&data[i * self.n..(i + 1) * self.n], x);
                }
            }
            MatrixStorage::Csc {
                col_ptr,
                row_idx,
                values,
            } => {
                out.fill(T::zero());
                for (j, &xj) in x.iter().enumerate() {
                    if xj == T::zero() {
                        continue;
                    }
                    for k in col_ptr[j]..col_ptr[j + 1] {
                        out[row_idx[k]] += values[k] * xj;
                    }
                }
            }
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.m];
        self.matvec_into(x, &mut out);
        out
    }

    /// `out = A^T y`.
    pub fn adjoint_matvec_into(&self, y: &[T], out: &mut [T]) {
        assert_eq!(y.len(), self.m);
        assert_eq!(out.len(), self.n);
        match &self.storage {
            MatrixStorage::Dense(data) => {
                out.fill(T::zero());
                for (i, &yi) in y.iter().enumerate() {
                    if yi == T::zero() {
                        continue;
                    }
                    let row = &data[i * self.n..(i + 1) * self.n];
                    for (oj, &aij) in out.iter_mut().zip(row) {
                        *oj += aij * yi;
                    }
                }
            }
            MatrixStorage::Csc {
                col_ptr,
                row_idx,
                values,
            } => {
                for (j, oj) in out.iter_mut().enumerate() {
                    let mut s = T::zero();
                    for k in col_ptr[j]..col_ptr[j + 1] {
                        s += values[k] * y[row_idx[k]];
                    }
                    *oj = s;
                }
            }
        }
    }

    pub fn adjoint_matvec(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        self.adjoint_matvec_into(y, &mut out);
        out
    }

    /// `<A[:, j], h>`.
    pub fn column_dot(&self, j: usize, h: &[T]) -> T {
        assert_eq!(h.len(), self.m);
        match &self.storage {
            MatrixStorage::Dense(data) => {
                (0..self.m).map(|i| data[i * self.n + j] * h[i]).sum()
            }
            MatrixStorage::Csc {
                col_ptr,
                row_idx,
                values,
            } => (col_ptr[j]..col_ptr[j + 1])
                .map(|k| values[k] * h[row_idx[k]])
                .sum(),
        }
    }

    /// Gathers the given columns into a dense column block.
    pub fn gather_columns(&self, indices: &[usize]) -> ColBlock<T> {
        let mut block = ColBlock::zeros(self.m, indices.len());
        for (slot, &j) in indices.iter().enumerate() {
            let col = block.col_mut(slot);
            match &self.storage {
                MatrixStorage::Dense(data) => {
                    for (i, ci) in col.iter_mut().enumerate() {
                        *ci = data[i * self.n + j];
                    }
                }
                MatrixStorage::Csc {
                    col_ptr,
                    row_idx,
                    values,
                } => {
                    for k in col_ptr[j]..col_ptr[j + 1] {
                        col[row_idx[k]] = values[k];
                    }
                }
            }
        }
        block
    }

    /// Densifies into a row-major [`Mat`] (test oracle; small instances only).
    pub fn to_dense(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.m, self.n);
        match &self.storage {
            MatrixStorage::Dense(data) => {
                for i in 0..self.m {
                    for j in 0..self.n {
                        out[(i, j)] = data[i * self.n + j];
                    }
                }
            }
            MatrixStorage::Csc {
                col_ptr,
                row_idx,
                values,
            } => {
                for j in 0..self.n {
                    for k in col_ptr[j]..col_ptr[j + 1] {
                        out[(row_idx[k], j)] = values[k];
                    }
                }
            }
        }
        out
    }
}

/// How group weights are derived from group sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// `w_l = sqrt(|G_l|)`, the default.
    Sqrt,
    /// `w_l = 1`.
    One,
}

impl WeightMode {
    pub fn weight<T: FloatT>(self, group_size: usize) -> T {
        match self {
            WeightMode::Sqrt => T::from_usize(group_size).unwrap().sqrt(),
            WeightMode::One => T::one(),
        }
    }
}

/// A disjoint partition of `{0..n-1}` into groups with positive weights.
#[derive(Debug, Clone)]
pub struct GroupPartition<T> {
    groups: Vec<Vec<usize>>,
    weights: Vec<T>,
    /// `lambda_{2,l} = lambda2 * w_l`; populated when the partition is bound
    /// to an [`SglProblem`].
    lambda2_scaled: Vec<T>,
    n: usize,
}

impl<T: FloatT> GroupPartition<T> {
    pub fn new(groups: Vec<Vec<usize>>, weights: Vec<T>, n: usize) -> Result<Self> {
        check_dim("group weights", groups.len(), weights.len())?;
        if groups.is_empty() {
            return Err(SglError::InvalidArgument("no groups given".into()));
        }
        let mut seen = vec![false; n];
        let mut covered = 0usize;
        for (l, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(SglError::InvalidArgument(format!("group {l} is empty")));
            }
            for &i in g {
                if i >= n {
                    return Err(SglError::InvalidArgument(format!(
                        "group {l} contains index {i} outside 0..{n}"
                    )));
                }
                if seen[i] {
                    return Err(SglError::InvalidArgument(format!(
                        "index {i} appears in more than one group"
                    )));
                }
                seen[i] = true;
                covered += 1;
            }
        }
        if covered != n {
            return Err(SglError::InvalidArgument(format!(
                "groups cover {covered} of {n} indices"
            )));
        }
        for (l, &w) in weights.iter().enumerate() {
            if !(w > T::zero()) {
                return Err(SglError::InvalidArgument(format!(
                    "weight of group {l} must be positive"
                )));
            }
        }
        let mut groups = groups;
        for g in &mut groups {
            g.sort_unstable();
        }
        Ok(GroupPartition {
            groups,
            weights,
            lambda2_scaled: Vec::new(),
            n,
        })
    }

    /// Partition with weights derived from the group sizes.
    pub fn with_weight_mode(groups: Vec<Vec<usize>>, mode: WeightMode, n: usize) -> Result<Self> {
        let weights = groups.iter().map(|g| mode.weight(g.len())).collect();
        GroupPartition::new(groups, weights, n)
    }

    /// Contiguous partition of `{0..n-1}` with the given group sizes.
    pub fn contiguous(sizes: &[usize], mode: WeightMode) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        let mut groups = Vec::with_capacity(sizes.len());
        let mut start = 0usize;
        for &s in sizes {
            groups.push((start..start + s).collect());
            start += s;
        }
        GroupPartition::with_weight_mode(groups, mode, n)
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn group(&self, l: usize) -> &[usize] {
        &self.groups[l]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Cached `lambda_{2,l}`; meaningful once owned by a problem.
    pub fn lambda2_scaled(&self) -> &[T] {
        &self.lambda2_scaled
    }

    fn bind_lambda2(&mut self, lambda2: T) {
        self.lambda2_scaled = self.weights.iter().map(|&w| lambda2 * w).collect();
    }
}

/// Immutable sparse group Lasso problem instance.
#[derive(Debug, Clone)]
pub struct SglProblem<T> {
    a: Arc<DesignMatrix<T>>,
    b: Vec<T>,
    lambda1: T,
    lambda2: T,
    partition: GroupPartition<T>,
}

impl<T: FloatT> SglProblem<T> {
    pub fn new(
        a: DesignMatrix<T>,
        b: Vec<T>,
        lambda1: T,
        lambda2: T,
        partition: GroupPartition<T>,
    ) -> Result<Self> {
        Self::with_shared_matrix(Arc::new(a), b, lambda1, lambda2, partition)
    }

    pub fn with_shared_matrix(
        a: Arc<DesignMatrix<T>>,
        b: Vec<T>,
        lambda1: T,
        lambda2: T,
        partition: GroupPartition<T>,
    ) -> Result<Self> {
        check_dim("response vector", a.nrows(), b.len())?;
        check_dim("partition dimension", a.ncols(), partition.n())?;
        if lambda1 < T::zero() || lambda2 < T::zero() {
            return Err(SglError::InvalidArgument(
                "regularization parameters must be nonnegative".into(),
            ));
        }
        if !(lambda1 + lambda2 > T::zero()) {
            return Err(SglError::InvalidArgument(
                "lambda1 + lambda2 must be positive".into(),
            ));
        }
        let mut partition = partition;
        partition.bind_lambda2(lambda2);
        Ok(SglProblem {
            a,
            b,
            lambda1,
            lambda2,
            partition,
        })
    }

    /// Same data, different regularization parameters; shares the matrix.
    pub fn with_lambdas(&self, lambda1: T, lambda2: T) -> Result<Self> {
        SglProblem::with_shared_matrix(
            Arc::clone(&self.a),
            self.b.clone(),
            lambda1,
            lambda2,
            self.partition.clone(),
        )
    }

    pub fn a(&self) -> &DesignMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn lambda1(&self) -> T {
        self.lambda1
    }

    pub fn lambda2(&self) -> T {
        self.lambda2
    }

    pub fn partition(&self) -> &GroupPartition<T> {
        &self.partition
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    /// `p(x) = lambda1 ||x||_1 + lambda2 sum_l w_l ||x_{G_l}||`.
    pub fn regularizer(&self, x: &[T]) -> T {
        let mut val = self.lambda1 * norm1(x);
        for (g, &l2) in self
            .partition
            .groups()
            .iter()
            .zip(self.partition.lambda2_scaled())
        {
            let nrm = g.iter().map(|&i| x[i] * x[i]).sum::<T>().sqrt();
            val += l2 * nrm;
        }
        val
    }
}

/// Primal/dual iterate `(x, y, z)`.
#[derive(Debug, Clone)]
pub struct PrimalDualPoint<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
}

impl<T: FloatT> PrimalDualPoint<T> {
    pub fn zeros(n: usize, m: usize) -> Self {
        PrimalDualPoint {
            x: vec![T::zero(); n],
            y: vec![T::zero(); m],
            z: vec![T::zero(); n],
        }
    }

    pub fn check_dims(&self, prob: &SglProblem<T>) -> Result<()> {
        check_dim("x", prob.ncols(), self.x.len())?;
        check_dim("y", prob.nrows(), self.y.len())?;
        check_dim("z", prob.ncols(), self.z.len())
    }
}

/// Solver outcome summary; all metrics are reported in `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub pobj: f64,
    pub dobj: f64,
    pub eta_gap: f64,
    pub eta_dual: f64,
    pub nnz: usize,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub wall_seconds: f64,
    pub solver_name: String,
    pub converged: bool,
}

/// `pobj = 1/2 ||Ax - b||^2 + p(x)`.
pub fn primal_objective<T: FloatT>(prob: &SglProblem<T>, x: &[T]) -> Result<T> {
    check_dim("x", prob.ncols(), x.len())?;
    let mut r = prob.a().matvec(x);
    for (ri, &bi) in r.iter_mut().zip(prob.b()) {
        *ri -= bi;
    }
    let fit = crate::float::fl::<T>(0.5) * dot(&r, &r);
    Ok(fit + prob.regularizer(x))
}

/// `dobj = -<b, y> - 1/2 ||y||^2` (iterates keep the conjugate term at zero).
pub fn dual_objective<T: FloatT>(prob: &SglProblem<T>, y: &[T]) -> Result<T> {
    check_dim("y", prob.nrows(), y.len())?;
    Ok(-dot(prob.b(), y) - crate::float::fl::<T>(0.5) * dot(y, y))
}

/// Relative duality gap and relative dual infeasibility:
/// `eta_gap = |pobj - dobj| / (1 + |pobj| + |dobj|)`,
/// `eta_dual = ||A^T y + z|| / (1 + ||z||)`.
pub fn eta_metrics<T: FloatT>(prob: &SglProblem<T>, pt: &PrimalDualPoint<T>) -> Result<(T, T)> {
    pt.check_dims(prob)?;
    let pobj = primal_objective(prob, &pt.x)?;
    let dobj = dual_objective(prob, &pt.y)?;
    let eta_gap = (pobj - dobj).abs() / (T::one() + pobj.abs() + dobj.abs());
    let mut aty = prob.a().adjoint_matvec(&pt.y);
    for (ai, &zi) in aty.iter_mut().zip(&pt.z) {
        *ai += zi;
    }
    let eta_dual = norm2(&aty) / (T::one() + norm2(&pt.z));
    Ok((eta_gap, eta_dual))
}

/// Signed relative objective gap between two solvers:
/// `(obj_other - pobj) / (1 + |obj_other| + |pobj|)`.
pub fn eta_objective_gap(obj_other: f64, pobj: f64) -> f64 {
    (obj_other - pobj) / (1.0 + obj_other.abs() + pobj.abs())
}

/// Smallest `k` such that the `k` largest-magnitude entries hold at least
/// 99.9% of `||x||_1`; 0 for `x = 0`.
pub fn nnz_estimate<T: FloatT>(x: &[T]) -> usize {
    let total = norm1(x);
    if total == T::zero() {
        return 0;
    }
    let mut mags: Vec<T> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite magnitudes"));
    let threshold = crate::float::fl::<T>(0.999) * total;
    let mut acc = T::zero();
    for (k, &v) in mags.iter().enumerate() {
        acc += v;
        if acc >= threshold {
            return k + 1;
        }
    }
    mags.len()
}

/// Norm of the proximal residual `R(x) = x - Prox_p(x - A^T(Ax - b))`.
/// Diagnostic only; termination uses the eta metrics.
pub fn kkt_residual<T: FloatT>(prob: &SglProblem<T>, x: &[T]) -> Result<T> {
    check_dim("x", prob.ncols(), x.len())?;
    let mut r = prob.a().matvec(x);
    for (ri, &bi) in r.iter_mut().zip(prob.b()) {
        *ri -= bi;
    }
    let grad = prob.a().adjoint_matvec(&r);
    let shifted: Vec<T> = x.iter().zip(&grad).map(|(&xi, &gi)| xi - gi).collect();
    let px = prox::prox_p(prob, &shifted)?;
    let res: Vec<T> = x.iter().zip(&px).map(|(&xi, &pi)| xi - pi).collect();
    Ok(norm2(&res))
}

/// `||A^T b||_inf`, the scale used by the (S1)-(S3) parameter strategies.
pub fn lambda_max<T: FloatT>(a: &DesignMatrix<T>, b: &[T]) -> Result<T> {
    check_dim("b", a.nrows(), b.len())?;
    Ok(norm_inf(&a.adjoint_matvec(b)))
}
