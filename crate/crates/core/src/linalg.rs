//! Dense complex linear algebra and quantum-state primitives.
//!
//! Matrices are small (Hilbert dimensions up to 64), stored row-major, and
//! every operation is a plain O(d^3) dense routine. Eigen- and singular-value
//! decompositions are delegated to `nalgebra`.
//!
//! Composite systems always put the state system first and the emission
//! system second, so the basis index of `|s>|e>` is `s * M + e`.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const UNITARY_TOL: f64 = 1e-9;
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Dimension("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn column_vector(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|u><v|`
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        assert_eq!(v.len(), self.rows);
        for (i, z) in v.iter().enumerate() {
            self[(i, j)] = *z;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `A X A†` for square `X`.
    pub fn sandwich(&self, x: &Self) -> Self {
        self.matmul(x).matmul(&self.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        singular_values(self).first().copied().unwrap_or(0.0)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Max entrywise `|M†M - I|`.
    pub fn isometry_deviation(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.cols))
    }

    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        if r.re.len() != r.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        let data = r
            .re
            .iter()
            .zip(&r.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        ComplexMatrix::from_vec(r.rows, r.cols, data).map_err(serde::de::Error::custom)
    }
}

/// A validated density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityOperator(ComplexMatrix);

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDensity("not square".into()));
        }
        let herm = matrix.hermitian_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let (vals, _) = eig_hermitian(&matrix.hermitian_part())?;
        if let Some(&min) = vals.last() {
            if min < -PSD_TOL {
                return Err(Error::InvalidDensity(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self(matrix))
    }

    /// Skips validation; callers guarantee the invariants up to rounding.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self(matrix)
    }

    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let k: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Ok(Self(ComplexMatrix::outer(&k, &k)))
    }

    /// `|i><i|`
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(i, i)] = ONE;
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let m = ComplexMatrix::diag(&probs.iter().map(|&p| C64::new(p, 0.0)).collect::<Vec<_>>());
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        DensityOperator::new(m).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UnitaryOperator(ComplexMatrix);

impl UnitaryOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotUnitary(f64::INFINITY));
        }
        let dev = matrix.isometry_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(matrix))
    }

    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self(matrix)
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}

impl<'de> Deserialize<'de> for UnitaryOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        UnitaryOperator::new(m).map_err(serde::de::Error::custom)
    }
}

/// Kronecker product; entry `(ia*rb + ib, ja*cb + jb)` is `a[ia,ja] * b[ib,jb]`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rb, cb) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * rb, a.cols() * cb, |i, j| {
        a[(i / rb, j / cb)] * b[(i % rb, j % cb)]
    })
}

/// Traces out the emission factor: `(rho_S)[s,s'] = sum_e rho[s*M+e, s'*M+e]`.
pub fn partial_trace_emission(
    rho: &ComplexMatrix,
    dim_s: usize,
    dim_e: usize,
) -> Result<ComplexMatrix> {
    if !rho.is_square() || rho.rows() != dim_s * dim_e {
        return Err(Error::Dimension(format!(
            "{}x{} operator is not {dim_s}*{dim_e} square",
            rho.rows(),
            rho.cols()
        )));
    }
    Ok(ComplexMatrix::from_fn(dim_s, dim_s, |s, t| {
        (0..dim_e).map(|e| rho[(s * dim_e + e, t * dim_e + e)]).sum()
    }))
}

/// Same as [`partial_trace_emission`] but on validated densities.
pub fn reduce_density(rho: &DensityOperator, dim_s: usize, dim_e: usize) -> Result<DensityOperator> {
    Ok(DensityOperator::new_unchecked(partial_trace_emission(
        rho.matrix(),
        dim_s,
        dim_e,
    )?))
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues are sorted
/// descending and the eigenvectors are the matching columns.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let dev = m.hermitian_deviation();
    if dev > 1e-8 {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.rows();
    if n == 0 {
        return Ok((vec![], ComplexMatrix::zeros(0, 0)));
    }
    let eig = m.hermitian_part().to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Singular values, descending.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return vec![];
    }
    let mut sv: Vec<f64> = m
        .to_nalgebra()
        .singular_values()
        .iter()
        .map(|s| s.max(0.0))
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Real-matrix convenience wrapper around [`numerical_rank`].
pub fn numerical_rank_real(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    numerical_rank(&ComplexMatrix::from_real_rows(rows), rel_tol)
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > rel_tol * top).count(),
        _ => 0,
    }
}

/// Basis of the right null space of `m` (columns whose singular values fall
/// below `tol`), together with the smallest singular value.
pub(crate) fn null_space(m: &ComplexMatrix, tol: f64) -> (Vec<Vec<C64>>, f64) {
    let n = m.cols();
    // pad to square so the full V is available
    let padded = if m.rows() < n {
        let mut p = ComplexMatrix::zeros(n, n);
        for i in 0..m.rows() {
            for j in 0..n {
                p[(i, j)] = m[(i, j)];
            }
        }
        p
    } else {
        m.clone()
    };
    let svd = padded.to_nalgebra().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let smallest = idx
        .first()
        .map_or(f64::INFINITY, |&k| svd.singular_values[k]);
    let basis = idx
        .iter()
        .filter(|&&k| svd.singular_values[k] <= tol)
        .map(|&k| (0..n).map(|j| v_t[(k, j)].conj()).collect())
        .collect();
    (basis, smallest)
}

fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Extends an isometry `V: H_S -> H_S (x) H_E` to a unitary on `H_S (x) H_E`.
///
/// `v` is `D x N` with `D = N * M`. Column `s*M + e0` of the result is column
/// `s` of `v`; the remaining columns come from Gram-Schmidt over the canonical
/// basis, skipping candidates whose residual norm is below `1e-8`.
pub fn complete_isometry_to_unitary(v: &ComplexMatrix, e0: usize) -> Result<UnitaryOperator> {
    let (d, n) = (v.rows(), v.cols());
    if n == 0 || n > d || d % n != 0 {
        return Err(Error::Dimension(format!(
            "isometry of shape {d}x{n} does not map into a product space"
        )));
    }
    let m = d / n;
    if e0 >= m {
        return Err(Error::Dimension(format!("e0 = {e0} >= emission dim {m}")));
    }
    let dev = v.isometry_deviation();
    if dev > UNITARY_TOL {
        return Err(Error::NotIsometry(dev));
    }

    let mut basis: Vec<Vec<C64>> = (0..n).map(|j| v.column(j)).collect();
    let mut extra: Vec<Vec<C64>> = Vec::with_capacity(d - n);
    for k in 0..d {
        if basis.len() + extra.len() == d {
            break;
        }
        let mut cand = vec![ZERO; d];
        cand[k] = ONE;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in basis.iter().chain(extra.iter()) {
                let c = inner(b, &cand);
                for (x, y) in cand.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let r = norm(&cand);
        if r < 1e-8 {
            continue;
        }
        cand.iter_mut().for_each(|x| *x /= r);
        extra.push(cand);
    }
    basis.append(&mut extra);
    if basis.len() != d {
        return Err(Error::NotIsometry(f64::NAN));
    }

    let mut u = ComplexMatrix::zeros(d, d);
    let mut free = (0..d).filter(|c| c % m != e0);
    for (j, col) in basis.iter().enumerate() {
        let target = if j < n {
            j * m + e0
        } else {
            free.next().expect("column count matches")
        };
        u.set_column(target, col);
    }
    UnitaryOperator::new(u)
}

/// `N^2` linearly independent density operators spanning the Hermitian
/// operators on an `N`-dimensional space.
///
/// Diagonal projectors `|i><i|`, then for each `i < j` the states
/// `(|i>+|j>)(<i|+<j|)/2` and `(|i>-i|j>)(<i|+i<j|)/2`.
pub fn density_basis(n: usize) -> Vec<DensityOperator> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(DensityOperator::basis(n, i));
    }
    let half = C64::new(0.5, 0.0);
    let i_half = C64::new(0.0, 0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = ComplexMatrix::zeros(n, n);
            m[(i, i)] = half;
            m[(j, j)] = half;
            m[(i, j)] = half;
            m[(j, i)] = half;
            out.push(DensityOperator::new_unchecked(m));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // 1/2 (b_ii + b_jj + i(b_ji - b_ij))
            let mut m = ComplexMatrix::zeros(n, n);
            m[(i, i)] = half;
            m[(j, j)] = half;
            m[(j, i)] = i_half;
            m[(i, j)] = -i_half;
            out.push(DensityOperator::new_unchecked(m));
        }
    }
    out
}

/// Stacks each operator's real and imaginary parts into one row so the rank
/// of the result is the real dimension of their span.
pub fn stacked_real_rank(ops: &[ComplexMatrix], rel_tol: f64) -> usize {
    let rows: Vec<Vec<f64>> = ops
        .iter()
        .map(|m| {
            m.as_slice()
                .iter()
                .map(|z| z.re)
                .chain(m.as_slice().iter().map(|z| z.im))
                .collect()
        })
        .collect();
    if rows.is_empty() {
        return 0;
    }
    numerical_rank_real(&rows, rel_tol)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}
