//! Dense complex matrix helpers shared by every module.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>`. Matrix functions
//! of hermitian arguments go through the hermitian eigensolver; ranks,
//! nullspaces and pseudo-inverses go through the SVD with the relative
//! threshold [`RANK_RTOL`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Default tolerance for structural identities.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Singular values below `RANK_RTOL * sigma_max` count as zero.
pub const RANK_RTOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Builds a complex matrix from a row-major slice of real entries.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMat {
    assert_eq!(data.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| real(data[i * cols + j]))
}

/// Entrywise complex conjugate.
pub fn conj(a: &CMat) -> CMat {
    a.map(|z| z.conj())
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of `a - b`; infinite when shapes differ.
pub fn diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Operator (spectral) norm.
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn min_singular_value(a: &CMat) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * real(0.5)
}

/// Eigen-decomposition of the hermitian part of `a`, eigenvalues ascending.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Applies `f` to the spectrum of a hermitian matrix.
pub fn hermitian_fn(a: &CMat, f: impl Fn(f64) -> Complex64) -> CMat {
    let (vals, vecs) = eigh(a);
    let mut scaled = vecs.clone();
    for (k, &lam) in vals.iter().enumerate() {
        let fk = f(lam);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= fk;
        }
    }
    scaled * vecs.adjoint()
}

/// Square root of a positive semidefinite hermitian matrix.
pub fn sqrt_psd(a: &CMat) -> CMat {
    hermitian_fn(a, |x| real(x.max(0.0).sqrt()))
}

/// Inverse square root of a positive definite hermitian matrix.
pub fn inv_sqrt_pd(a: &CMat) -> Result<CMat> {
    let (vals, _) = eigh(a);
    if let Some(&lo) = vals.first() {
        if lo <= 0.0 {
            return Err(Error::NumericallySingular(format!(
                "matrix is not positive definite (smallest eigenvalue {lo:.3e})"
            )));
        }
    }
    Ok(hermitian_fn(a, |x| real(1.0 / x.sqrt())))
}

/// `|a| = (a^dagger a)^{1/2}`.
pub fn abs(a: &CMat) -> CMat {
    sqrt_psd(&(a.adjoint() * a))
}

/// Thin SVD with singular values sorted descending: `(u, s, v)` with
/// `a = u diag(s) v^dagger`.
pub fn svd_sorted(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = CMat::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]);
    let v_sorted = CMat::from_fn(vt.ncols(), k, |r, c| vt[(order[c], r)].conj());
    (u_sorted, s, v_sorted)
}

/// Number of singular values above `RANK_RTOL * sigma_max`.
pub fn numerical_rank(a: &CMat) -> usize {
    let s = singular_values(a);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > RANK_RTOL * top).count()
}

/// Orthonormal basis (as columns) of the kernel of `a`.
pub fn nullspace(a: &CMat) -> CMat {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return zeros(0, 0);
    }
    // pad to square so the SVD returns a full set of right singular vectors
    let n = rows.max(cols);
    let mut padded = zeros(n, cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(a);
    let (_, s, v) = svd_sorted(&padded);
    let top = s.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..s.len())
        .filter(|&k| top == 0.0 || s[k] <= RANK_RTOL * top)
        .collect();
    CMat::from_fn(cols, keep.len(), |r, c| v[(r, keep[c])])
}

/// Orthonormal basis of the column space of `a`.
pub fn range_basis(a: &CMat) -> CMat {
    let (u, s, _) = svd_sorted(a);
    let top = s.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..s.len())
        .filter(|&k| top > 0.0 && s[k] > RANK_RTOL * top)
        .collect();
    CMat::from_fn(a.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Orthogonal projector onto the span of the (orthonormal) columns of `q`.
pub fn projector(q: &CMat, n: usize) -> CMat {
    if q.ncols() == 0 {
        return zeros(n, n);
    }
    q * q.adjoint()
}

/// Pseudo-inverse of an injective matrix: inverse on `ran b`, zero on
/// `ker b^dagger`.
pub fn pinv_injective(b: &CMat) -> Result<CMat> {
    let (u, s, v) = svd_sorted(b);
    if s.len() < b.ncols() {
        return Err(Error::NotInjective { smallest: 0.0 });
    }
    let top = s.first().copied().unwrap_or(0.0);
    let low = s.last().copied().unwrap_or(0.0);
    if b.ncols() > 0 && (low < RANK_RTOL * top || top == 0.0) {
        return Err(Error::NotInjective { smallest: low });
    }
    let mut vs = v.clone();
    for (k, &sk) in s.iter().enumerate() {
        for r in 0..vs.nrows() {
            vs[(r, k)] /= real(sk);
        }
    }
    Ok(vs * u.adjoint())
}

/// Moore-Penrose pseudo-inverse with the relative rank threshold.
pub fn pinv(a: &CMat) -> CMat {
    let (u, s, v) = svd_sorted(a);
    let top = s.first().copied().unwrap_or(0.0);
    let mut out = zeros(a.ncols(), a.nrows());
    for (k, &sk) in s.iter().enumerate() {
        if top > 0.0 && sk > RANK_RTOL * top {
            let col_v = v.column(k);
            let col_u = u.column(k);
            out += (col_v * col_u.adjoint()) * real(1.0 / sk);
        }
    }
    out
}

/// Inverse of a square matrix, refusing badly conditioned input.
pub fn inverse_checked(a: &CMat, what: &str) -> Result<CMat> {
    let s = singular_values(a);
    let top = s.first().copied().unwrap_or(0.0);
    let low = s.last().copied().unwrap_or(0.0);
    if a.nrows() > 0 && (top == 0.0 || low < 1e-12 * top) {
        return Err(Error::NumericallySingular(format!(
            "{what} (condition number {:.3e})",
            top / low
        )));
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericallySingular(what.to_string()))
}

/// Residual of complex symmetry `a = a^T`.
pub fn symmetry_defect(a: &CMat) -> f64 {
    diff(a, &a.transpose())
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    diff(a, &a.adjoint())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// JSON form of a complex matrix: row-major nested arrays of `[re, im]`.
pub fn to_pairs(a: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != cols) {
        return Err(Error::Shape("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(r, cols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub fn vec_to_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vec_from_pairs(v: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|p| c(p[0], p[1])))
}

/// `#[serde(with = "crate::linalg::serde_cmat")]` adapter.
pub mod serde_cmat {
    use super::*;

    pub fn serialize<S: Serializer>(a: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_pairs(a).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_pairs(&rows).map_err(serde::de::Error::custom)
    }
}
