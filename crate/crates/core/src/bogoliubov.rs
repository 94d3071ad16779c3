//! Bogoliubov operators: gamma-isometries `K(2m) -> K(2M)` commuting with
//! the conjugation.
//!
//! Genuine endomorphisms are rectangular (`M > m`); the Fredholm index is then
//! `-2(M - m)` by construction and is cross-checked against the numerical
//! nullity of `V+`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::disk::{self, DiskPoint};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, DEFAULT_TOL};
use crate::oneparticle::{self, bar, block, from_blocks, plus, Block, DoubledSpace, KVector};

#[derive(Clone, Debug, PartialEq)]
pub struct BogoliubovOperator {
    source: DoubledSpace,
    target: DoubledSpace,
    matrix: CMat,
}

impl BogoliubovOperator {
    /// Checks shape, `bar(V) = V` and `V+ V = 1` against `tol`.
    pub fn validate(matrix: CMat, m: usize, big_m: usize, tol: f64) -> Result<Self> {
        if m == 0 || big_m < m {
            return Err(Error::Shape(format!("need 1 <= m <= M, got m={m}, M={big_m}")));
        }
        if matrix.shape() != (2 * big_m, 2 * m) {
            return Err(Error::Shape(format!(
                "expected {}x{}, found {}x{}",
                2 * big_m,
                2 * m,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let conj_res = linalg::diff(&bar(&matrix), &matrix);
        if conj_res > tol {
            return Err(Error::NotConjugationInvariant { residual: conj_res });
        }
        let iso_res = linalg::diff(&(plus(&matrix) * &matrix), &linalg::eye(2 * m));
        if iso_res > tol {
            return Err(Error::NotGammaIsometry { residual: iso_res });
        }
        Ok(Self {
            source: DoubledSpace { m },
            target: DoubledSpace { m: big_m },
            matrix,
        })
    }

    /// Validates a square or rectangular matrix, reading `m, M` off its shape.
    pub fn from_matrix(matrix: CMat) -> Result<Self> {
        let (r, cols) = matrix.shape();
        if r % 2 != 0 || cols % 2 != 0 {
            return Err(Error::Shape(format!("{r}x{cols} has odd dimension")));
        }
        Self::validate(matrix, cols / 2, r / 2, DEFAULT_TOL)
    }

    /// Assembles `V = [[A, B], [conj B, conj A]]` from its first block row.
    pub fn from_blocks(a: &CMat, b: &CMat, tol: f64) -> Result<Self> {
        if a.shape() != b.shape() {
            return Err(Error::Shape("blocks A and B differ in shape".into()));
        }
        let (big_m, m) = a.shape();
        let v = from_blocks(a, b, &linalg::conj(b), &linalg::conj(a));
        Self::validate(v, m, big_m, tol)
    }

    pub fn identity(m: usize) -> Self {
        Self {
            source: DoubledSpace { m },
            target: DoubledSpace { m },
            matrix: linalg::eye(2 * m),
        }
    }

    pub(crate) fn from_trusted(matrix: CMat) -> Self {
        let (r, cols) = matrix.shape();
        Self {
            source: DoubledSpace { m: cols / 2 },
            target: DoubledSpace { m: r / 2 },
            matrix,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn source(&self) -> DoubledSpace {
        self.source
    }

    pub fn target(&self) -> DoubledSpace {
        self.target
    }

    pub fn m(&self) -> usize {
        self.source.m
    }

    pub fn big_m(&self) -> usize {
        self.target.m
    }

    pub fn is_square(&self) -> bool {
        self.source == self.target
    }

    pub fn block(&self, row: Block, col: Block) -> CMat {
        block(&self.matrix, row, col)
    }

    pub fn v11(&self) -> CMat {
        self.block(Block::One, Block::One)
    }

    pub fn v12(&self) -> CMat {
        self.block(Block::One, Block::Two)
    }

    pub fn v21(&self) -> CMat {
        self.block(Block::Two, Block::One)
    }

    pub fn v22(&self) -> CMat {
        self.block(Block::Two, Block::Two)
    }

    /// `V+`.
    pub fn plus(&self) -> CMat {
        plus(&self.matrix)
    }

    pub fn apply(&self, f: &KVector) -> Result<KVector> {
        if f.space != self.source {
            return Err(Error::DimensionMismatch { expected: self.source.dim(), found: f.space.dim() });
        }
        Ok(KVector { space: self.target, coords: &self.matrix * &f.coords })
    }

    /// Composition `self * rhs`.
    pub fn compose(&self, rhs: &BogoliubovOperator) -> Result<BogoliubovOperator> {
        if rhs.target != self.source {
            return Err(Error::DimensionMismatch { expected: self.source.dim(), found: rhs.target.dim() });
        }
        Ok(Self::from_trusted(&self.matrix * &rhs.matrix))
    }

    /// Fredholm index, `-2(M - m)`.
    pub fn index(&self) -> i64 {
        -2 * (self.target.m as i64 - self.source.m as i64)
    }

    /// Nullity of `V+` from its singular values.
    pub fn numerical_nullity(&self) -> usize {
        let vp = self.plus();
        vp.ncols() - linalg::numerical_rank(&vp)
    }

    pub fn kernel_of_adjoint(&self) -> KernelData {
        let q = linalg::nullspace(&self.plus());
        let gram = q.adjoint() * oneparticle::c_raw(self.target.m) * &q;
        let smallest = if q.ncols() == 0 { f64::INFINITY } else { linalg::min_singular_value(&gram) };
        let basis = (0..q.ncols())
            .map(|k| KVector { space: self.target, coords: q.column(k).into_owned() })
            .collect();
        KernelData { basis, columns: q, gamma_gram: gram, smallest_singular_value: smallest }
    }

    /// Residuals of the four componentwise forms of `V+ V = 1`.
    pub fn check_relations(&self) -> RelationResiduals {
        let (v11, v12, v21, v22) = (self.v11(), self.v12(), self.v21(), self.v22());
        let id = linalg::eye(self.source.m);
        RelationResiduals {
            rel1: linalg::diff(&(v11.adjoint() * &v11 - v21.adjoint() * &v21), &id),
            rel2: linalg::diff(&(v22.adjoint() * &v22 - v12.adjoint() * &v12), &id),
            rel3: linalg::fro(&(v11.adjoint() * &v12 - v21.adjoint() * &v22)),
            rel4: linalg::fro(&(v22.adjoint() * &v21 - v12.adjoint() * &v11)),
        }
    }

    /// `S = V+ P1 V` and `S~ = V^dagger P1 V`.
    pub fn state_operators(&self) -> QuasiFreeStateData {
        let p1 = oneparticle::p1_raw(self.target.m);
        QuasiFreeStateData {
            s: self.plus() * &p1 * &self.matrix,
            s_tilde: self.matrix.adjoint() * &p1 * &self.matrix,
        }
    }

    /// `(||S^2 - S||, ||[P1, V V+]||)`.
    pub fn purity_equivalence(&self) -> PurityDefects {
        let s = self.state_operators().s;
        let p1 = oneparticle::p1_raw(self.target.m);
        let vvp = &self.matrix * self.plus();
        PurityDefects {
            idempotency: linalg::diff(&(&s * &s), &s),
            commutator: linalg::fro(&linalg::commutator(&p1, &vvp)),
        }
    }

    /// Hilbert-Schmidt norms `||V12||` and `|| |V| - 1 ||`.
    pub fn shale_diagnostics(&self) -> ShaleDiagnostics {
        ShaleDiagnostics {
            hs_offdiag: linalg::fro(&self.v12()),
            hs_polar_defect: linalg::diff(&linalg::abs(&self.matrix), &linalg::eye(2 * self.source.m)),
        }
    }

    /// `||V - V'|| + ||V12 - V'12||_HS`.
    pub fn distance(&self, other: &BogoliubovOperator) -> Result<f64> {
        if self.matrix.shape() != other.matrix.shape() {
            return Err(Error::Shape("operators have different shapes".into()));
        }
        Ok(linalg::op_norm(&(&self.matrix - &other.matrix))
            + linalg::diff(&self.v12(), &other.v12()))
    }

    /// `U_Z W` with a random disk point of norm at most `z_norm_bound` and a
    /// diagonal `W` from a random isometry `C^m -> C^M`.
    pub fn random(m: usize, big_m: usize, z_norm_bound: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&z_norm_bound) {
            return Err(Error::InvalidBound(z_norm_bound));
        }
        if m == 0 || big_m < m {
            return Err(Error::Shape(format!("need 1 <= m <= M, got m={m}, M={big_m}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DiskPoint::random(big_m, z_norm_bound, &mut rng)?;
        let w = random_isometry(big_m, m, &mut rng);
        let zero = linalg::zeros(big_m, m);
        let diag = from_blocks(&w, &zero, &zero, &linalg::conj(&w));
        let u = disk::u_from_z(&z);
        Self::validate(u.matrix() * diag, m, big_m, 1e-9)
    }

    pub fn to_json(&self) -> BogoliubovJson {
        BogoliubovJson {
            m: self.source.m,
            big_m: self.target.m,
            matrix: Some(linalg::to_pairs(&self.matrix)),
            blocks: None,
        }
    }

    pub fn from_json(json: &BogoliubovJson, tol: f64) -> Result<Self> {
        match (&json.matrix, &json.blocks) {
            (Some(rows), _) => Self::validate(linalg::from_pairs(rows)?, json.m, json.big_m, tol),
            (None, Some(b)) => {
                let a = linalg::from_pairs(&b.a)?;
                let bb = linalg::from_pairs(&b.b)?;
                if a.shape() != (json.big_m, json.m) {
                    return Err(Error::Shape(format!(
                        "block A must be {}x{}, found {}x{}",
                        json.big_m,
                        json.m,
                        a.nrows(),
                        a.ncols()
                    )));
                }
                Self::from_blocks(&a, &bb, tol)
            }
            (None, None) => Err(Error::Shape("expected `matrix` or `blocks`".into())),
        }
    }
}

/// Haar-like random isometry `C^cols -> C^rows` from the QR factor of a
/// complex Gaussian matrix.
pub(crate) fn random_isometry(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    g.qr().q()
}

/// Wire form: `{"m", "M", "matrix"}` or `{"m", "M", "blocks": {"A", "B"}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BogoliubovJson {
    pub m: usize,
    #[serde(rename = "M")]
    pub big_m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockJson {
    #[serde(rename = "A")]
    pub a: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug)]
pub struct KernelData {
    pub basis: Vec<KVector>,
    /// Same basis as matrix columns.
    pub columns: CMat,
    pub gamma_gram: CMat,
    pub smallest_singular_value: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RelationResiduals {
    pub rel1: f64,
    pub rel2: f64,
    pub rel3: f64,
    pub rel4: f64,
}

impl RelationResiduals {
    pub fn max(&self) -> f64 {
        self.rel1.max(self.rel2).max(self.rel3).max(self.rel4)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiFreeStateData {
    #[serde(with = "linalg::serde_cmat")]
    pub s: CMat,
    #[serde(with = "linalg::serde_cmat")]
    pub s_tilde: CMat,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PurityDefects {
    pub idempotency: f64,
    pub commutator: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShaleDiagnostics {
    pub hs_offdiag: f64,
    pub hs_polar_defect: f64,
}

/// Pseudo-inverse of an injective block: inverse on the range, zero on
/// `ker B^dagger`.
pub fn pseudo_inverse_block(b: &CMat) -> Result<CMat> {
    linalg::pinv_injective(b)
}

pub fn squeeze_fixture() -> BogoliubovOperator {
    BogoliubovOperator::from_trusted(linalg::from_real_rows(2, 2, &[1.25, 0.75, 0.75, 1.25]))
}

/// `e1 -> e1'`, `e1* -> e1'*` from `m = 1` into `M = 2`.
pub fn embedding_fixture() -> BogoliubovOperator {
    let mut v = linalg::zeros(4, 2);
    v[(0, 0)] = linalg::ONE;
    v[(2, 1)] = linalg::ONE;
    BogoliubovOperator::from_trusted(v)
}

/// Isometric embedding of `m` modes into the first `m` of `M` modes.
pub fn embedding(m: usize, big_m: usize) -> BogoliubovOperator {
    let mut v = linalg::zeros(2 * big_m, 2 * m);
    for j in 0..m {
        v[(j, j)] = linalg::ONE;
        v[(big_m + j, m + j)] = linalg::ONE;
    }
    BogoliubovOperator::from_trusted(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diff, from_real_rows};

    #[test]
    fn validate_examples() {
        assert!(BogoliubovOperator::validate(linalg::eye(2), 1, 1, DEFAULT_TOL).is_ok());
        let sq = from_real_rows(2, 2, &[1.25, 0.75, 0.75, 1.25]);
        assert!(BogoliubovOperator::validate(sq, 1, 1, DEFAULT_TOL).is_ok());
        let emb = embedding_fixture();
        let v = BogoliubovOperator::validate(emb.matrix().clone(), 1, 2, DEFAULT_TOL).unwrap();
        assert_eq!(v.index(), -2);
    }

    #[test]
    fn validate_errors() {
        let bad = from_real_rows(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            BogoliubovOperator::validate(bad, 1, 1, DEFAULT_TOL),
            Err(Error::NotConjugationInvariant { .. })
        ));
        let not_iso = linalg::eye(2) * linalg::real(2.0);
        assert!(matches!(
            BogoliubovOperator::validate(not_iso, 1, 1, DEFAULT_TOL),
            Err(Error::NotGammaIsometry { .. })
        ));
        assert!(matches!(
            BogoliubovOperator::validate(linalg::eye(2), 1, 2, DEFAULT_TOL),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn index_examples() {
        assert_eq!(squeeze_fixture().index(), 0);
        assert_eq!(embedding_fixture().index(), -2);
        let e13 = embedding(1, 3);
        assert_eq!(e13.index(), -4);
        assert_eq!(e13.numerical_nullity(), 4);
    }

    #[test]
    fn kernel_examples() {
        assert!(squeeze_fixture().kernel_of_adjoint().basis.is_empty());
        let k = embedding_fixture().kernel_of_adjoint();
        assert_eq!(k.basis.len(), 2);
        // span{e2', e2'*} = coordinates 1 and 3
        let proj = linalg::projector(&k.columns, 4);
        let mut expect = linalg::zeros(4, 4);
        expect[(1, 1)] = linalg::ONE;
        expect[(3, 3)] = linalg::ONE;
        assert!(diff(&proj, &expect) < 1e-12);
        let (vals, _) = linalg::eigh(&k.gamma_gram);
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);

        let v = BogoliubovOperator::random(1, 2, 0.5, 11).unwrap();
        let k = v.kernel_of_adjoint();
        assert_eq!(k.basis.len(), 2);
        assert!(k.smallest_singular_value > 1e-8);
        assert!(linalg::fro(&(v.plus() * &k.columns)) < 1e-10);
    }

    #[test]
    fn relations_examples() {
        assert_eq!(squeeze_fixture().check_relations().rel1, 0.0);
        assert_eq!(BogoliubovOperator::identity(2).check_relations().max(), 0.0);
        for seed in 0..20 {
            let v = BogoliubovOperator::random(2, 3, 0.8, seed).unwrap();
            assert!(v.check_relations().max() <= 1e-10);
        }
    }

    #[test]
    fn pseudo_inverse_examples() {
        let p = pseudo_inverse_block(&from_real_rows(1, 1, &[2.0])).unwrap();
        assert!(diff(&p, &from_real_rows(1, 1, &[0.5])) < 1e-15);
        let p = pseudo_inverse_block(&from_real_rows(2, 1, &[1.0, 0.0])).unwrap();
        assert!(diff(&p, &from_real_rows(1, 2, &[1.0, 0.0])) < 1e-15);
        let v = BogoliubovOperator::random(2, 3, 0.5, 5).unwrap();
        let b = v.v11();
        let bi = pseudo_inverse_block(&b).unwrap();
        assert!(diff(&(&bi * &b), &linalg::eye(2)) < 1e-12);
        let proj = &b * &bi;
        assert!(diff(&(&proj * &proj), &proj) < 1e-12);
        assert!(linalg::hermiticity_defect(&proj) < 1e-12);
    }

    #[test]
    fn state_operator_examples() {
        let id = BogoliubovOperator::identity(1);
        assert!(diff(&id.state_operators().s, &oneparticle::p1_raw(1)) < 1e-15);
        let s = squeeze_fixture().state_operators().s;
        let expect = from_real_rows(2, 2, &[25.0 / 16.0, 15.0 / 16.0, -15.0 / 16.0, -9.0 / 16.0]);
        assert!(diff(&s, &expect) < 1e-15);
        for seed in 0..10 {
            let v = BogoliubovOperator::random(1, 2, 0.7, seed).unwrap();
            let d = v.state_operators();
            assert!(diff(&(&d.s + bar(&d.s)), &linalg::eye(2)) < 1e-12);
            assert!(linalg::hermiticity_defect(&d.s_tilde) < 1e-12);
            assert!(linalg::eigh(&d.s_tilde).0[0] > -1e-12);
        }
    }

    #[test]
    fn purity_examples() {
        let w = embedding_fixture().purity_equivalence();
        assert!(w.idempotency < 1e-14 && w.commutator < 1e-14);
        let sq = squeeze_fixture().purity_equivalence();
        assert!(sq.idempotency < 1e-14 && sq.commutator < 1e-14);
        let v = BogoliubovOperator::random(1, 2, 0.5, 3).unwrap();
        let p = v.purity_equivalence();
        assert!(p.idempotency > 1e-6 && p.commutator > 1e-6, "{p:?}");
    }

    #[test]
    fn shale_examples() {
        let id = BogoliubovOperator::identity(1).shale_diagnostics();
        assert_eq!((id.hs_offdiag, id.hs_polar_defect), (0.0, 0.0));
        let sq = squeeze_fixture().shale_diagnostics();
        assert!((sq.hs_offdiag - 0.75).abs() < 1e-15);
        assert!((sq.hs_polar_defect - 5f64.sqrt() / 2.0).abs() < 1e-12);
        let w = embedding_fixture().shale_diagnostics();
        assert!(w.hs_offdiag < 1e-15 && w.hs_polar_defect < 1e-12);
    }

    #[test]
    fn random_examples() {
        let v = BogoliubovOperator::random(2, 2, 0.0, 1).unwrap();
        assert!(linalg::fro(&v.v12()) < 1e-12);
        let a = BogoliubovOperator::random(1, 2, 0.5, 42).unwrap();
        let b = BogoliubovOperator::random(1, 2, 0.5, 42).unwrap();
        assert_eq!(a, b);
        for seed in 0..10 {
            let v = BogoliubovOperator::random(1, 2, 0.5, seed).unwrap();
            assert_eq!(v.index(), -2);
            assert_eq!(v.numerical_nullity(), 2);
        }
        assert!(matches!(BogoliubovOperator::random(1, 1, 1.0, 0), Err(Error::InvalidBound(_))));
    }

    #[test]
    fn json_forms() {
        let sq = squeeze_fixture();
        let text = serde_json::to_string(&sq.to_json()).unwrap();
        let back: BogoliubovJson = serde_json::from_str(&text).unwrap();
        assert_eq!(BogoliubovOperator::from_json(&back, DEFAULT_TOL).unwrap(), sq);
        let blocks = r#"{"m":1,"M":1,"blocks":{"A":[[[1.25,0.0]]],"B":[[[0.75,0.0]]]}}"#;
        let parsed: BogoliubovJson = serde_json::from_str(blocks).unwrap();
        assert_eq!(BogoliubovOperator::from_json(&parsed, DEFAULT_TOL).unwrap(), sq);
    }

    #[test]
    fn distance_is_zero_on_self() {
        let v = BogoliubovOperator::random(1, 2, 0.4, 9).unwrap();
        assert!(v.distance(&v).unwrap() < 1e-14);
    }
}
