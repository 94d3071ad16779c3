//! Siegel-disk model of basis projections near `P1`.
//!
//! A disk point is a complex-symmetric `M x M` matrix `Z` (an operator
//! `K1 -> K2`) with `||Z|| < 1`; `Z+ = -Z^dagger`. Basis projections and
//! disk points are in bijection via `P -> P21 P11^{-1}` and
//! `Z -> (P1 + Z) (P1 + Z+ Z)^{-1} (P1 + Z+)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bogoliubov::BogoliubovOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::oneparticle::{self, bar, block, from_blocks, plus, Block};

/// `||Z|| < 1 - DISK_MARGIN` is enforced at construction.
pub const DISK_MARGIN: f64 = 1e-8;

/// Tolerance on `Z^T = Z` at construction.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DiskPoint {
    z: CMat,
}

impl DiskPoint {
    pub fn new(z: CMat) -> Result<Self> {
        if !z.is_square() || z.nrows() == 0 {
            return Err(Error::Shape(format!("Z must be square, found {}x{}", z.nrows(), z.ncols())));
        }
        let sym = linalg::symmetry_defect(&z);
        if sym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { residual: sym });
        }
        let norm = linalg::op_norm(&z);
        if norm >= 1.0 - DISK_MARGIN {
            return Err(Error::OutsideDisk { norm });
        }
        Ok(Self { z })
    }

    pub fn origin(modes: usize) -> Self {
        Self { z: linalg::zeros(modes, modes) }
    }

    /// Random symmetric point with norm in `[bound/4, bound]`.
    pub fn random(modes: usize, bound: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        if !(0.0..1.0).contains(&bound) {
            return Err(Error::InvalidBound(bound));
        }
        let g = CMat::from_fn(modes, modes, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(re, im)
        });
        let s = (&g + g.transpose()) * linalg::real(0.5);
        let norm = linalg::op_norm(&s);
        let radius = bound * rng.random_range(0.25..=1.0);
        if bound == 0.0 || norm == 0.0 {
            return Ok(Self::origin(modes));
        }
        let z = s * linalg::real(radius / norm);
        // exact symmetry after scaling
        let z = (&z + z.transpose()) * linalg::real(0.5);
        Self::new(z)
    }

    pub fn z(&self) -> &CMat {
        &self.z
    }

    pub fn modes(&self) -> usize {
        self.z.nrows()
    }

    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.z)
    }

    /// `Y = (P1 + Z+ Z)^{-1} = (1 - Z^dagger Z)^{-1}` on `K1`.
    pub fn y(&self) -> CMat {
        let m = self.modes();
        let a = linalg::eye(m) - self.z.adjoint() * &self.z;
        a.try_inverse().expect("1 - Z^dagger Z is positive definite inside the disk")
    }

    /// `C P_Z = (P1 - Z) Y (P1 - Z*)`.
    pub fn cp(&self) -> CMat {
        let y = self.y();
        let zy = &self.z * &y;
        from_blocks(&y, &(-(&y * self.z.adjoint())), &(-zy.clone()), &(zy * self.z.adjoint()))
    }

    pub fn to_json(&self) -> DiskPointJson {
        DiskPointJson { modes: self.modes(), z: linalg::to_pairs(&self.z) }
    }

    pub fn from_json(json: &DiskPointJson) -> Result<Self> {
        let z = linalg::from_pairs(&json.z)?;
        if z.nrows() != json.modes {
            return Err(Error::DimensionMismatch { expected: json.modes, found: z.nrows() });
        }
        Self::new(z)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiskPointJson {
    #[serde(rename = "M")]
    pub modes: usize,
    #[serde(rename = "Z")]
    pub z: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisProjectionMatrix {
    p: CMat,
}

/// Residuals of `P = P+ = 1 - bar(P) = P^2` and the smallest eigenvalue of
/// `C P` compressed to `ran P`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BasisProjectionResiduals {
    pub gamma_selfadjoint: f64,
    pub complementary: f64,
    pub idempotent: f64,
    pub min_cp_on_range: f64,
}

impl BasisProjectionResiduals {
    pub fn algebraic_max(&self) -> f64 {
        self.gamma_selfadjoint.max(self.complementary).max(self.idempotent)
    }
}

pub fn basis_projection_residuals(p: &CMat) -> BasisProjectionResiduals {
    let n = p.nrows();
    let cp = oneparticle::c_raw(n / 2) * p;
    let q = linalg::range_basis(p);
    let compressed = q.adjoint() * linalg::hermitian_part(&cp) * &q;
    let min_cp = linalg::eigh(&compressed).0.first().copied().unwrap_or(f64::INFINITY);
    BasisProjectionResiduals {
        gamma_selfadjoint: linalg::diff(&plus(p), p),
        complementary: linalg::diff(&(linalg::eye(n) - bar(p)), p),
        idempotent: linalg::diff(&(p * p), p),
        min_cp_on_range: min_cp,
    }
}

impl BasisProjectionMatrix {
    pub fn new(p: CMat, tol: f64) -> Result<Self> {
        if !p.is_square() || !p.nrows().is_multiple_of(2) || p.nrows() == 0 {
            return Err(Error::Shape(format!("{}x{} is not a doubled-space operator", p.nrows(), p.ncols())));
        }
        let r = basis_projection_residuals(&p);
        for (check, residual) in [
            ("P = P+", r.gamma_selfadjoint),
            ("P = 1 - bar(P)", r.complementary),
            ("P = P^2", r.idempotent),
        ] {
            if residual > tol {
                return Err(Error::NotBasisProjection { check, residual });
            }
        }
        if r.min_cp_on_range <= 0.0 {
            return Err(Error::NotBasisProjection { check: "CP > 0 on ran P", residual: r.min_cp_on_range });
        }
        Ok(Self { p })
    }

    pub(crate) fn from_trusted(p: CMat) -> Self {
        Self { p }
    }

    pub fn matrix(&self) -> &CMat {
        &self.p
    }

    pub fn modes(&self) -> usize {
        self.p.nrows() / 2
    }

    pub fn residuals(&self) -> BasisProjectionResiduals {
        basis_projection_residuals(&self.p)
    }
}

/// `P -> P21 P11^{-1}`.
pub fn z_from_projection(p: &BasisProjectionMatrix) -> Result<DiskPoint> {
    let p11 = block(&p.p, Block::One, Block::One);
    let p21 = block(&p.p, Block::Two, Block::One);
    let smallest = linalg::min_singular_value(&p11);
    if smallest < 1e-12 {
        return Err(Error::P11NotInvertible { smallest });
    }
    let inv = p11
        .try_inverse()
        .ok_or(Error::P11NotInvertible { smallest })?;
    DiskPoint::new(p21 * inv)
}

/// `Z -> (P1 + Z)(P1 + Z+ Z)^{-1}(P1 + Z+)`.
pub fn projection_from_z(z: &DiskPoint) -> BasisProjectionMatrix {
    let y = z.y();
    let zd = z.z.adjoint();
    let zy = &z.z * &y;
    let p = from_blocks(&y, &(-(&y * &zd)), &zy, &(-(zy.clone() * &zd)));
    BasisProjectionMatrix::from_trusted(p)
}

/// `P -> U P U+`.
pub fn conjugate_projection(u: &BogoliubovOperator, p: &BasisProjectionMatrix) -> Result<BasisProjectionMatrix> {
    if !u.is_square() || u.big_m() != p.modes() {
        return Err(Error::Shape("action needs a square operator on the same space".into()));
    }
    Ok(BasisProjectionMatrix::from_trusted(u.matrix() * &p.p * u.plus()))
}

/// `Z -> (U21 + U22 Z)(U11 + U12 Z)^{-1}`.
pub fn mobius_action(u: &BogoliubovOperator, z: &DiskPoint) -> Result<DiskPoint> {
    if !u.is_square() {
        return Err(Error::NotAutomorphism { index: u.index() });
    }
    if u.big_m() != z.modes() {
        return Err(Error::DimensionMismatch { expected: u.big_m(), found: z.modes() });
    }
    let denom = u.v11() + u.v12() * &z.z;
    let inv = linalg::inverse_checked(&denom, "U11 + U12 Z")?;
    DiskPoint::new((u.v21() + u.v22() * &z.z) * inv)
}

/// Canonical lift `U_Z = (P1 + Z)(P1 + Z+ Z)^{-1/2} + (P2 - Z+)(P2 + Z Z+)^{-1/2}`.
pub fn u_from_z(z: &DiskPoint) -> BogoliubovOperator {
    let m = z.modes();
    let zd = z.z.adjoint();
    let y_half = linalg::inv_sqrt_pd(&(linalg::eye(m) - &zd * &z.z)).expect("inside the disk");
    let ybar_half = linalg::inv_sqrt_pd(&(linalg::eye(m) - &z.z * &zd)).expect("inside the disk");
    let u = from_blocks(&y_half, &(&zd * &ybar_half), &(&z.z * &y_half), &ybar_half);
    BogoliubovOperator::from_trusted(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::squeeze_fixture;
    use crate::linalg::{diff, from_real_rows, DEFAULT_TOL};
    use rand::SeedableRng;

    fn squeeze_projection() -> CMat {
        from_real_rows(2, 2, &[25.0 / 16.0, -15.0 / 16.0, 15.0 / 16.0, -9.0 / 16.0])
    }

    #[test]
    fn z_from_projection_examples() {
        let p1 = BasisProjectionMatrix::new(oneparticle::p1_raw(2), DEFAULT_TOL).unwrap();
        assert!(linalg::fro(z_from_projection(&p1).unwrap().z()) < 1e-15);
        let p = BasisProjectionMatrix::new(squeeze_projection(), DEFAULT_TOL).unwrap();
        let z = z_from_projection(&p).unwrap();
        assert!((z.z()[(0, 0)].re - 0.6).abs() < 1e-15);
    }

    #[test]
    fn projection_from_z_examples() {
        assert!(diff(projection_from_z(&DiskPoint::origin(2)).matrix(), &oneparticle::p1_raw(2)) < 1e-15);
        let z = DiskPoint::new(from_real_rows(1, 1, &[0.6])).unwrap();
        let p = projection_from_z(&z);
        assert!(diff(p.matrix(), &squeeze_projection()) < 1e-14);
        assert!(diff(&(p.matrix() * p.matrix()), p.matrix()) < 1e-14);
    }

    #[test]
    fn mobius_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = DiskPoint::random(2, 0.7, &mut rng).unwrap();
        let id = BogoliubovOperator::identity(2);
        assert!(diff(mobius_action(&id, &z).unwrap().z(), z.z()) < 1e-14);
        let z1 = mobius_action(&squeeze_fixture(), &DiskPoint::origin(1)).unwrap();
        assert!((z1.z()[(0, 0)].re - 0.6).abs() < 1e-15);
    }

    #[test]
    fn u_from_z_examples() {
        assert!(diff(u_from_z(&DiskPoint::origin(2)).matrix(), &linalg::eye(4)) < 1e-15);
        let z = DiskPoint::new(from_real_rows(1, 1, &[0.6])).unwrap();
        assert!(diff(u_from_z(&z).matrix(), squeeze_fixture().matrix()) < 1e-14);
    }

    #[test]
    fn disk_point_rejections() {
        assert!(matches!(
            DiskPoint::new(from_real_rows(2, 2, &[0.0, 0.1, 0.2, 0.0])),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            DiskPoint::new(from_real_rows(1, 1, &[1.0])),
            Err(Error::OutsideDisk { .. })
        ));
        let not_bp = oneparticle::p1_raw(1) * linalg::real(2.0);
        assert!(BasisProjectionMatrix::new(not_bp, DEFAULT_TOL).is_err());
    }

    #[test]
    fn random_corpus_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for modes in 1..=4 {
            for _ in 0..5 {
                let z = DiskPoint::random(modes, 0.9, &mut rng).unwrap();
                let p = projection_from_z(&z);
                let r = p.residuals();
                assert!(r.algebraic_max() < 1e-10, "{r:?}");
                assert!(r.min_cp_on_range > 0.0);
                let cp = oneparticle::c_raw(modes) * p.matrix();
                assert!(diff(&cp, &z.cp()) < 1e-12);
                let u = u_from_z(&z);
                BogoliubovOperator::validate(u.matrix().clone(), modes, modes, 1e-10).unwrap();
                let pz = u.matrix() * oneparticle::p1_raw(modes) * u.plus();
                assert!(diff(&pz, p.matrix()) < 1e-10);
                let back = mobius_action(&u, &DiskPoint::origin(modes)).unwrap();
                assert!(diff(back.z(), z.z()) < 1e-10);
            }
        }
    }
}
