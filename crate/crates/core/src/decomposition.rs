//! Canonical product decomposition `V = U_V W_V`.
//!
//! `P_V = V P1 V+ + P_{V+}` where `P_{V+}` is the basis projection of
//! `ker V+` built from the positive spectral part of `gamma` restricted to
//! that kernel. `Z_V` is the disk point of `P_V`, `U_V` its canonical lift,
//! and `W_V = U_V+ V` is block-diagonal.

use serde::Serialize;

use crate::bogoliubov::{pseudo_inverse_block, BogoliubovOperator};
use crate::disk::{self, BasisProjectionMatrix, DiskPoint};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::oneparticle::{self, bar, block, from_blocks, gamma_raw, plus, Block, KVector};

/// Eigenvalues of `gamma` on `ker V+` with magnitude below this are treated
/// as a degenerate form.
pub const SPECTRAL_SIGN_TOL: f64 = 1e-12;

/// Basis projection of `ker V+` together with the spectral data it came from.
#[derive(Clone, Debug)]
pub struct KernelProjection {
    /// `P_+ = A_+^{-1} C`, zero on the orthogonal complement of the kernel.
    pub p_plus: CMat,
    /// `A^{-1} C`, the gamma-orthogonal projection onto the kernel.
    pub gamma_projection: CMat,
    /// Orthogonal projection `E` onto the kernel.
    pub e: CMat,
    /// Kernel vectors spanning `ran P_+` (eigenvectors of `A` with positive
    /// eigenvalue).
    pub positive_span: CMat,
    pub eigenvalues: Vec<f64>,
}

pub fn basis_projection_of_kernel(v: &BogoliubovOperator) -> Result<KernelProjection> {
    let n = 2 * v.big_m();
    let c = oneparticle::c_raw(v.big_m());
    let q = linalg::nullspace(&v.plus());
    let d = q.ncols();
    if d == 0 {
        return Ok(KernelProjection {
            p_plus: linalg::zeros(n, n),
            gamma_projection: linalg::zeros(n, n),
            e: linalg::zeros(n, n),
            positive_span: linalg::zeros(n, 0),
            eigenvalues: Vec::new(),
        });
    }
    let a_h = q.adjoint() * &c * &q;
    let (vals, vecs) = linalg::eigh(&a_h);
    let smallest = vals.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if smallest < SPECTRAL_SIGN_TOL {
        return Err(Error::DegenerateGamma { smallest });
    }
    let mut a_inv = linalg::zeros(n, n);
    let mut a_plus_inv = linalg::zeros(n, n);
    let mut positive = Vec::new();
    for (k, &lam) in vals.iter().enumerate() {
        let x: CVec = &q * vecs.column(k);
        let outer = &x * x.adjoint() * linalg::real(1.0 / lam);
        if lam > 0.0 {
            a_plus_inv += &outer;
            positive.push(x);
        }
        a_inv += outer;
    }
    let positive_span = if positive.is_empty() {
        linalg::zeros(n, 0)
    } else {
        CMat::from_columns(&positive)
    };
    Ok(KernelProjection {
        p_plus: a_plus_inv * &c,
        gamma_projection: a_inv * &c,
        e: linalg::projector(&q, n),
        positive_span,
        eigenvalues: vals,
    })
}

/// Checks of the kernel basis projection: idempotent, gamma-selfadjoint,
/// `P_+ + bar(P_+) = 1` on the kernel, `C P_+ > 0` on its range, and the
/// pair `(||P_+ - P1 E||, ||[P1, E]||)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelProjectionReport {
    pub idempotent: f64,
    pub gamma_selfadjoint: f64,
    pub complement_on_kernel: f64,
    pub min_cp_on_range: f64,
    pub gamma_projection_defect: f64,
    pub p1e_defect: f64,
    pub e_commutator: f64,
}

impl KernelProjection {
    pub fn report(&self) -> KernelProjectionReport {
        let n = self.p_plus.nrows();
        let m = n / 2;
        let p = &self.p_plus;
        let p1 = oneparticle::p1_raw(m);
        let min_cp = if self.positive_span.ncols() == 0 {
            f64::INFINITY
        } else {
            let q = linalg::range_basis(&self.positive_span);
            let cp = oneparticle::c_raw(m) * p;
            linalg::eigh(&(q.adjoint() * linalg::hermitian_part(&cp) * &q)).0[0]
        };
        let g = &self.gamma_projection;
        let gamma_projection_defect = linalg::diff(&(g * g), g)
            .max(linalg::diff(&plus(g), g))
            .max(linalg::diff(&(g * &self.e), &self.e));
        KernelProjectionReport {
            idempotent: linalg::diff(&(p * p), p),
            gamma_selfadjoint: linalg::diff(&plus(p), p),
            complement_on_kernel: linalg::diff(&((p + bar(p)) * &self.e), &self.e),
            min_cp_on_range: min_cp,
            gamma_projection_defect,
            p1e_defect: linalg::diff(p, &(&p1 * &self.e)),
            e_commutator: linalg::fro(&linalg::commutator(&p1, &self.e)),
        }
    }
}

/// Gram-Schmidt with respect to `gamma` (assumed positive definite on the
/// span), with one re-orthogonalization pass.
pub fn gamma_gram_schmidt(vectors: &[CVec]) -> Result<Vec<CVec>> {
    let mut out: Vec<CVec> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for f in &out {
                let coeff = gamma_raw(f, &w);
                w -= f * coeff;
            }
        }
        let norm2 = gamma_raw(&w, &w).re;
        if norm2 <= 1e-24 {
            return Err(Error::DegenerateGamma { smallest: norm2 });
        }
        out.push(w / linalg::real(norm2.sqrt()));
    }
    Ok(out)
}

/// `gamma`-orthonormal basis `f_1..f_n` of `P_V(ker V+)`.
pub fn gamma_orthonormal_kernel_basis(v: &BogoliubovOperator) -> Result<Vec<KVector>> {
    let kp = basis_projection_of_kernel(v)?;
    let cols: Vec<CVec> = kp.positive_span.column_iter().map(|c| c.into_owned()).collect();
    Ok(gamma_gram_schmidt(&cols)?
        .into_iter()
        .map(|coords| KVector { space: v.target(), coords })
        .collect())
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub p_v_plus: CMat,
    pub p_v: BasisProjectionMatrix,
    pub z_v: DiskPoint,
    pub u_v: BogoliubovOperator,
    pub w_v: BogoliubovOperator,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecompositionResiduals {
    /// `||V+ P_V V - P1||`
    pub pv: f64,
    /// largest algebraic basis-projection residual of `P_V`
    pub pv_basis_projection: f64,
    pub pv_min_cp: f64,
    /// `||Z_V V11 - V21||`
    pub zv: f64,
    /// `||U_V W_V - V||`
    pub product: f64,
    /// norm of the off-diagonal blocks of `W_V`
    pub w_offdiag: f64,
    /// `||U_V P1 U_V+ - P_V||`
    pub u_projection: f64,
    /// `||Z_{U_V} - Z_V||`
    pub u_disk_point: f64,
    /// `||W_V+ W_V - 1||`
    pub w_isometry: f64,
    pub index_preserved: bool,
}

impl DecompositionResiduals {
    pub fn max_identity(&self) -> f64 {
        [
            self.pv,
            self.pv_basis_projection,
            self.zv,
            self.product,
            self.w_offdiag,
            self.u_projection,
            self.u_disk_point,
            self.w_isometry,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl DecompositionResult {
    pub fn residuals(&self, v: &BogoliubovOperator) -> DecompositionResiduals {
        let m = v.m();
        let big = v.big_m();
        let p1_src = oneparticle::p1_raw(m);
        let p1_tgt = oneparticle::p1_raw(big);
        let pv = self.p_v.matrix();
        let bp = self.p_v.residuals();
        let w = self.w_v.matrix();
        let off = linalg::fro(&block(w, Block::One, Block::Two)).hypot(linalg::fro(&block(w, Block::Two, Block::One)));
        let z_of_u = disk::z_from_projection(&BasisProjectionMatrix::from_trusted(
            self.u_v.matrix() * &p1_tgt * self.u_v.plus(),
        ));
        let u_disk_point = match z_of_u {
            Ok(z) => linalg::diff(z.z(), self.z_v.z()),
            Err(_) => f64::INFINITY,
        };
        DecompositionResiduals {
            pv: linalg::diff(&(v.plus() * pv * v.matrix()), &p1_src),
            pv_basis_projection: bp.algebraic_max(),
            pv_min_cp: bp.min_cp_on_range,
            zv: linalg::diff(&(self.z_v.z() * v.v11()), &v.v21()),
            product: linalg::diff(&(self.u_v.matrix() * w), v.matrix()),
            w_offdiag: off,
            u_projection: linalg::diff(&(self.u_v.matrix() * &p1_tgt * self.u_v.plus()), pv),
            u_disk_point,
            w_isometry: linalg::diff(&(plus(w) * w), &linalg::eye(2 * m)),
            index_preserved: self.w_v.index() == v.index() && self.u_v.index() == 0,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "P_V_plus": linalg::to_pairs(&self.p_v_plus),
            "P_V": linalg::to_pairs(self.p_v.matrix()),
            "Z_V": linalg::to_pairs(self.z_v.z()),
            "U_V": linalg::to_pairs(self.u_v.matrix()),
            "W_V": linalg::to_pairs(self.w_v.matrix()),
        })
    }
}

pub fn canonical_decomposition(v: &BogoliubovOperator) -> Result<DecompositionResult> {
    let kp = basis_projection_of_kernel(v)?;
    let p1 = oneparticle::p1_raw(v.m());
    let pv = v.matrix() * p1 * v.plus() + &kp.p_plus;
    let p_v = BasisProjectionMatrix::from_trusted(pv);
    let z_v = disk::z_from_projection(&p_v)?;
    let u_v = disk::u_from_z(&z_v);
    let w_v = BogoliubovOperator::from_trusted(u_v.plus() * v.matrix());
    Ok(DecompositionResult { p_v_plus: kp.p_plus, p_v, z_v, u_v, w_v })
}

/// Distance between the computed diagonal blocks of `W_V` and
/// `(1 - Z^dagger Z)^{1/2} V11`, `(1 - Z Z^dagger)^{1/2} V22`.
pub fn w_explicit_check(v: &BogoliubovOperator, result: &DecompositionResult) -> f64 {
    let z = result.z_v.z();
    let big = v.big_m();
    let top = linalg::sqrt_psd(&(linalg::eye(big) - z.adjoint() * z)) * v.v11();
    let bottom = linalg::sqrt_psd(&(linalg::eye(big) - z * z.adjoint())) * v.v22();
    let w = result.w_v.matrix();
    linalg::diff(&block(w, Block::One, Block::One), &top).max(linalg::diff(&block(w, Block::Two, Block::Two), &bottom))
}

/// Closed form of `(U_V, W_V)` for automorphisms via the polar parts of the
/// diagonal blocks.
pub fn automorphism_special_form(v: &BogoliubovOperator) -> Result<(BogoliubovOperator, BogoliubovOperator)> {
    if !v.is_square() {
        return Err(Error::NotAutomorphism { index: v.index() });
    }
    let v11 = v.v11();
    let abs11 = linalg::abs(&v11);
    let inv_abs11 = linalg::inverse_checked(&abs11, "|V11|")?;
    let unit11 = &v11 * inv_abs11;
    let unit22 = linalg::conj(&unit11);
    let abs11_star = linalg::sqrt_psd(&(&v11 * v11.adjoint()));
    let v22 = v.v22();
    let abs22_star = linalg::sqrt_psd(&(&v22 * v22.adjoint()));
    let u = from_blocks(
        &abs11_star,
        &(v.v12() * unit22.adjoint()),
        &(v.v21() * unit11.adjoint()),
        &abs22_star,
    );
    let zero = linalg::zeros(v.m(), v.m());
    let w = from_blocks(&unit11, &zero, &zero, &unit22);
    Ok((BogoliubovOperator::from_trusted(u), BogoliubovOperator::from_trusted(w)))
}

/// Projectors onto `ker V11*` and `ker V22*`.
pub fn cokernel_projectors(v: &BogoliubovOperator) -> Result<(CMat, CMat)> {
    let big = v.big_m();
    let v11 = v.v11();
    let v22 = v.v22();
    let k11 = linalg::eye(big) - &v11 * pseudo_inverse_block(&v11)?;
    let k22 = linalg::eye(big) - &v22 * pseudo_inverse_block(&v22)?;
    Ok((k11, k22))
}

/// The component of `z` mapping `ker V11*` into `ker V22*`.
pub fn free_part(v: &BogoliubovOperator, z: &CMat) -> Result<CMat> {
    let (k11, k22) = cokernel_projectors(v)?;
    Ok(k22 * z * k11)
}

/// General solution of `Z V11 = V21`:
/// `Z = V21 V11^{-1} + V22^{-1*} V12^* P_{ker V11*} + Z'`.
pub fn general_z_matrix(v: &BogoliubovOperator, zprime: Option<&CMat>) -> Result<CMat> {
    let big = v.big_m();
    let v11_inv = pseudo_inverse_block(&v.v11())?;
    let v22_inv = pseudo_inverse_block(&v.v22())?;
    let (k11, k22) = cokernel_projectors(v)?;
    let mut z = v.v21() * &v11_inv + v22_inv.adjoint() * v.v12().adjoint() * &k11;
    if let Some(zp) = zprime {
        if zp.shape() != (big, big) {
            return Err(Error::InvalidZprime(format!("expected {big}x{big}")));
        }
        let sym = linalg::symmetry_defect(zp);
        if sym > disk::SYMMETRY_TOL {
            return Err(Error::InvalidZprime(format!("not symmetric (residual {sym:.3e})")));
        }
        let support = linalg::diff(&(&k22 * zp * &k11), zp);
        if support > 1e-9 {
            return Err(Error::InvalidZprime(format!(
                "not supported from ker V11* to ker V22* (residual {support:.3e})"
            )));
        }
        z += zp;
    }
    Ok(z)
}

pub fn general_z(v: &BogoliubovOperator, zprime: Option<&CMat>) -> Result<DiskPoint> {
    let z = general_z_matrix(v, zprime)?;
    let norm = linalg::op_norm(&z);
    if norm >= 1.0 - disk::DISK_MARGIN {
        return Err(Error::NormExceeded { norm });
    }
    DiskPoint::new(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::{embedding_fixture, squeeze_fixture};
    use crate::linalg::{diff, from_real_rows};

    #[test]
    fn kernel_projection_examples() {
        let kp = basis_projection_of_kernel(&squeeze_fixture()).unwrap();
        assert_eq!(linalg::fro(&kp.p_plus), 0.0);
        let kp = basis_projection_of_kernel(&embedding_fixture()).unwrap();
        let mut expect = linalg::zeros(4, 4);
        expect[(1, 1)] = linalg::ONE;
        assert!(diff(&kp.p_plus, &expect) < 1e-12);
        let r = kp.report();
        assert!(r.p1e_defect < 1e-12 && r.e_commutator < 1e-12);
    }

    #[test]
    fn kernel_projection_random() {
        for seed in 0..10 {
            let v = BogoliubovOperator::random(1, 2, 0.6, seed).unwrap();
            let r = basis_projection_of_kernel(&v).unwrap().report();
            assert!(r.idempotent < 1e-10, "{r:?}");
            assert!(r.gamma_selfadjoint < 1e-10);
            assert!(r.complement_on_kernel < 1e-10);
            assert!(r.gamma_projection_defect < 1e-10);
            assert!(r.min_cp_on_range > 0.0);
            // non-diagonal: both sides of the iff are nonzero
            assert!(r.e_commutator > 1e-6 && r.p1e_defect > 1e-6);
        }
    }

    #[test]
    fn squeeze_decomposition() {
        let v = squeeze_fixture();
        let d = canonical_decomposition(&v).unwrap();
        assert!((d.z_v.z()[(0, 0)].re - 0.6).abs() < 1e-12);
        assert!(diff(d.u_v.matrix(), v.matrix()) < 1e-12);
        assert!(diff(d.w_v.matrix(), &linalg::eye(2)) < 1e-12);
        assert!(w_explicit_check(&v, &d) < 1e-12);
        let (u, w) = automorphism_special_form(&v).unwrap();
        assert!(diff(u.matrix(), v.matrix()) < 1e-12);
        assert!(diff(w.matrix(), &linalg::eye(2)) < 1e-12);
    }

    #[test]
    fn diagonal_decomposition() {
        let v = BogoliubovOperator::random(2, 3, 0.0, 4).unwrap();
        let d = canonical_decomposition(&v).unwrap();
        assert!(diff(d.u_v.matrix(), &linalg::eye(6)) < 1e-12);
        assert!(diff(d.w_v.matrix(), v.matrix()) < 1e-12);
        assert!(w_explicit_check(&v, &d) < 1e-12);
        let id = BogoliubovOperator::identity(2);
        let d = canonical_decomposition(&id).unwrap();
        assert!(linalg::fro(d.z_v.z()) < 1e-14);
        assert!(linalg::fro(&d.p_v_plus) < 1e-14);
        assert!(diff(d.u_v.matrix(), &linalg::eye(4)) < 1e-14);
        assert!(diff(d.w_v.matrix(), &linalg::eye(4)) < 1e-14);
        let unitary = BogoliubovOperator::random(2, 2, 0.0, 8).unwrap();
        let (u, w) = automorphism_special_form(&unitary).unwrap();
        assert!(diff(u.matrix(), &linalg::eye(4)) < 1e-12);
        assert!(diff(w.matrix(), unitary.matrix()) < 1e-12);
    }

    #[test]
    fn random_decompositions() {
        for seed in 0..20 {
            let (m, big) = [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3)][seed as usize % 5];
            let v = BogoliubovOperator::random(m, big, 0.8, seed).unwrap();
            let d = canonical_decomposition(&v).unwrap();
            let r = d.residuals(&v);
            assert!(r.max_identity() < 1e-10, "{r:?}");
            assert!(r.index_preserved && r.pv_min_cp > 0.0);
            assert!(w_explicit_check(&v, &d) < 1e-10);
            if v.is_square() {
                let (u, w) = automorphism_special_form(&v).unwrap();
                assert!(diff(u.matrix(), d.u_v.matrix()) < 1e-10);
                assert!(diff(w.matrix(), d.w_v.matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn general_z_examples() {
        let z = general_z(&squeeze_fixture(), None).unwrap();
        assert!((z.z()[(0, 0)].re - 0.6).abs() < 1e-12);
        let z = general_z(&embedding_fixture(), Some(&linalg::zeros(2, 2))).unwrap();
        assert!(linalg::fro(z.z()) < 1e-14);
        for seed in 0..10 {
            let v = BogoliubovOperator::random(1, 3, 0.7, seed).unwrap();
            let d = canonical_decomposition(&v).unwrap();
            let zp = free_part(&v, d.z_v.z()).unwrap();
            let z = general_z(&v, Some(&zp)).unwrap();
            assert!(diff(z.z(), d.z_v.z()) < 1e-10);
        }
        let bad = from_real_rows(2, 2, &[0.0, 0.0, 0.0, 0.5]);
        assert!(matches!(
            general_z(&squeeze_fixture_2(), Some(&bad)),
            Err(Error::InvalidZprime(_))
        ));
    }

    fn squeeze_fixture_2() -> BogoliubovOperator {
        BogoliubovOperator::random(2, 2, 0.5, 1).unwrap()
    }

    #[test]
    fn general_z_solves_zv() {
        for seed in 0..10 {
            let v = BogoliubovOperator::random(2, 3, 0.6, seed).unwrap();
            let z = general_z_matrix(&v, None).unwrap();
            assert!(diff(&(&z * v.v11()), &v.v21()) < 1e-10);
            assert!(linalg::symmetry_defect(&z) < 1e-10);
        }
    }
}
