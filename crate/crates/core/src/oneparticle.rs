//! Finite model of the doubled one-particle space `K = K1 (+) K2`.
//!
//! Coordinates `0..m` span `K1`, coordinates `m..2m` span `K2`, and the
//! conjugation is `f* = J conj(f)` with `J` the block swap, so `e_j*` is the
//! basis vector `m + j`. With `C = diag(1, -1)` the hermitian form is
//! `gamma(f, g) = <f, C g>`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubledSpace {
    pub m: usize,
}

impl DoubledSpace {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Shape("half-dimension must be positive".into()));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        2 * self.m
    }

    /// Block swap `J`.
    pub fn swap(&self) -> CMat {
        let m = self.m;
        CMat::from_fn(2 * m, 2 * m, |i, j| {
            if (i + m) % (2 * m) == j {
                linalg::ONE
            } else {
                linalg::ZERO
            }
        })
    }

    /// `C = P1 - P2`.
    pub fn c(&self) -> CMat {
        let m = self.m;
        CMat::from_fn(2 * m, 2 * m, |i, j| {
            if i != j {
                linalg::ZERO
            } else if i < m {
                linalg::ONE
            } else {
                -linalg::ONE
            }
        })
    }

    pub fn p1(&self) -> CMat {
        let m = self.m;
        CMat::from_fn(2 * m, 2 * m, |i, j| {
            if i == j && i < m {
                linalg::ONE
            } else {
                linalg::ZERO
            }
        })
    }

    pub fn p2(&self) -> CMat {
        let m = self.m;
        CMat::from_fn(2 * m, 2 * m, |i, j| {
            if i == j && i >= m {
                linalg::ONE
            } else {
                linalg::ZERO
            }
        })
    }

    /// Basis vector `e_j` of `K1` (zero-based `j`).
    pub fn e(&self, j: usize) -> KVector {
        let mut coords = CVec::zeros(self.dim());
        coords[j] = linalg::ONE;
        KVector { space: *self, coords }
    }

    pub fn zero_vector(&self) -> KVector {
        KVector { space: *self, coords: CVec::zeros(self.dim()) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KVector {
    pub space: DoubledSpace,
    pub coords: CVec,
}

impl KVector {
    pub fn new(space: DoubledSpace, coords: CVec) -> Result<Self> {
        if coords.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: coords.len() });
        }
        Ok(Self { space, coords })
    }

    /// Builds `(x, y)` from its `K1` part `x` and `K2` part `y`.
    pub fn from_parts(x: &CVec, y: &CVec) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
        }
        let m = x.len();
        let space = DoubledSpace::new(m)?;
        let coords = CVec::from_fn(2 * m, |i, _| if i < m { x[i] } else { y[i - m] });
        Ok(Self { space, coords })
    }

    /// Coordinates of `P1 f`.
    pub fn k1_part(&self) -> CVec {
        self.coords.rows(0, self.space.m).into_owned()
    }

    /// Coordinates of `P2 f` in the `e_j*` basis.
    pub fn k2_part(&self) -> CVec {
        self.coords.rows(self.space.m, self.space.m).into_owned()
    }

    pub fn conjugate(&self) -> KVector {
        conjugate_vector(self)
    }

    /// Residual of `f = f*`.
    pub fn reality_defect(&self) -> f64 {
        linalg::vec_norm(&(&self.coords - &conjugate_vector(self).coords))
    }

    pub fn scale(&self, s: Complex64) -> KVector {
        KVector { space: self.space, coords: &self.coords * s }
    }

    pub fn add(&self, other: &KVector) -> Result<KVector> {
        same_space(self, other)?;
        Ok(KVector { space: self.space, coords: &self.coords + &other.coords })
    }
}

fn same_space(f: &KVector, g: &KVector) -> Result<()> {
    if f.space != g.space {
        return Err(Error::DimensionMismatch { expected: f.space.dim(), found: g.space.dim() });
    }
    Ok(())
}

/// `f -> J conj(f)`.
pub fn conjugate_vector(f: &KVector) -> KVector {
    let m = f.space.m;
    let coords = CVec::from_fn(2 * m, |i, _| f.coords[(i + m) % (2 * m)].conj());
    KVector { space: f.space, coords }
}

/// `gamma(f, g) = <f, C g>`.
pub fn gamma_form(f: &KVector, g: &KVector) -> Result<Complex64> {
    same_space(f, g)?;
    let m = f.space.m;
    Ok(f.coords
        .iter()
        .zip(g.coords.iter())
        .enumerate()
        .map(|(i, (a, b))| {
            let s = if i < m { 1.0 } else { -1.0 };
            a.conj() * b * s
        })
        .sum())
}

/// `gamma` evaluated on raw coordinate vectors of even length.
pub fn gamma_raw(f: &CVec, g: &CVec) -> Complex64 {
    let m = f.len() / 2;
    f.iter()
        .zip(g.iter())
        .enumerate()
        .map(|(i, (a, b))| if i < m { a.conj() * b } else { -(a.conj() * b) })
        .sum()
}

/// Row `1|2`, column `1|2` block selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    One,
    Two,
}

/// `A_{row,col}` of a `2M x 2m` matrix as an `M x m` matrix.
pub fn block(a: &CMat, row: Block, col: Block) -> CMat {
    let (r, c) = (a.nrows() / 2, a.ncols() / 2);
    let r0 = if row == Block::One { 0 } else { r };
    let c0 = if col == Block::One { 0 } else { c };
    a.view((r0, c0), (r, c)).into_owned()
}

/// Reassembles `[[a11, a12], [a21, a22]]`.
pub fn from_blocks(a11: &CMat, a12: &CMat, a21: &CMat, a22: &CMat) -> CMat {
    let (r, c) = a11.shape();
    assert_eq!(a12.shape(), (r, c));
    assert_eq!(a21.shape(), (r, c));
    assert_eq!(a22.shape(), (r, c));
    let mut out = CMat::zeros(2 * r, 2 * c);
    out.view_mut((0, 0), (r, c)).copy_from(a11);
    out.view_mut((0, c), (r, c)).copy_from(a12);
    out.view_mut((r, 0), (r, c)).copy_from(a21);
    out.view_mut((r, c), (r, c)).copy_from(a22);
    out
}

/// `A+ = C_dom A^dagger C_cod` on a raw `2M x 2m` matrix.
pub fn plus(a: &CMat) -> CMat {
    let adj = a.adjoint();
    let (r, c) = (adj.nrows() / 2, adj.ncols() / 2);
    CMat::from_fn(adj.nrows(), adj.ncols(), |i, j| {
        if (i < r) == (j < c) {
            adj[(i, j)]
        } else {
            -adj[(i, j)]
        }
    })
}

/// `bar(A) = J_cod conj(A) J_dom` on a raw matrix.
pub fn bar(a: &CMat) -> CMat {
    let (r, c) = (a.nrows() / 2, a.ncols() / 2);
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[((i + r) % (2 * r), (j + c) % (2 * c))].conj())
}

/// `P1` of a doubled space of half-dimension `m` as a raw matrix.
pub fn p1_raw(m: usize) -> CMat {
    DoubledSpace { m }.p1()
}

pub fn c_raw(m: usize) -> CMat {
    DoubledSpace { m }.c()
}

/// Operator `K(2m) -> K(2M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KOperator {
    pub domain: DoubledSpace,
    pub codomain: DoubledSpace,
    pub matrix: CMat,
}

impl KOperator {
    pub fn new(matrix: CMat) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r % 2 != 0 || c % 2 != 0 || r == 0 || c == 0 {
            return Err(Error::Shape(format!("{r}x{c} is not a doubled-space operator")));
        }
        Ok(Self {
            domain: DoubledSpace { m: c / 2 },
            codomain: DoubledSpace { m: r / 2 },
            matrix,
        })
    }

    pub fn identity(space: DoubledSpace) -> Self {
        Self { domain: space, codomain: space, matrix: linalg::eye(space.dim()) }
    }

    pub fn apply(&self, f: &KVector) -> Result<KVector> {
        if f.space != self.domain {
            return Err(Error::DimensionMismatch { expected: self.domain.dim(), found: f.space.dim() });
        }
        Ok(KVector { space: self.codomain, coords: &self.matrix * &f.coords })
    }

    pub fn component(&self, row: Block, col: Block) -> CMat {
        block(&self.matrix, row, col)
    }
}

pub fn gamma_adjoint(a: &KOperator) -> KOperator {
    KOperator { domain: a.codomain, codomain: a.domain, matrix: plus(&a.matrix) }
}

pub fn bar_operator(a: &KOperator) -> KOperator {
    KOperator { domain: a.domain, codomain: a.codomain, matrix: bar(&a.matrix) }
}

pub fn component(a: &KOperator, row: Block, col: Block) -> CMat {
    a.component(row, col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diff, from_real_rows};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        CVec::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_mat(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMat {
        CMat::from_fn(r, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn conjugation_examples() {
        let s = DoubledSpace::new(1).unwrap();
        let f = KVector::new(s, CVec::from_vec(vec![c(1.0, 1.0), c(0.0, 0.0)])).unwrap();
        assert_eq!(conjugate_vector(&f).coords, CVec::from_vec(vec![c(0.0, 0.0), c(1.0, -1.0)]));
        let g = KVector::new(s, CVec::from_vec(vec![c(0.0, 0.0), c(2.0, 0.0)])).unwrap();
        assert_eq!(conjugate_vector(&g).coords, CVec::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]));
        let s2 = DoubledSpace::new(2).unwrap();
        let e1 = s2.e(0);
        let mut expect = CVec::zeros(4);
        expect[2] = linalg::ONE;
        assert_eq!(conjugate_vector(&e1).coords, expect);
    }

    #[test]
    fn gamma_examples() {
        let s = DoubledSpace::new(1).unwrap();
        let e1 = s.e(0);
        let e1s = conjugate_vector(&e1);
        assert_eq!(gamma_form(&e1, &e1).unwrap(), c(1.0, 0.0));
        assert_eq!(gamma_form(&e1s, &e1s).unwrap(), c(-1.0, 0.0));
        assert_eq!(gamma_form(&e1, &e1s).unwrap(), c(0.0, 0.0));
        let other = DoubledSpace::new(2).unwrap().e(0);
        assert!(matches!(gamma_form(&e1, &other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gamma_adjoint_examples() {
        let id = KOperator::identity(DoubledSpace::new(2).unwrap());
        assert_eq!(gamma_adjoint(&id), id);
        let a = KOperator::new(from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert_eq!(gamma_adjoint(&a).matrix, from_real_rows(2, 2, &[0.0, 0.0, -1.0, 0.0]));
    }

    #[test]
    fn gamma_adjoint_is_adjoint_for_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (m, big) in [(1, 1), (1, 2), (2, 3), (3, 3)] {
            let a = KOperator::new(random_mat(&mut rng, 2 * big, 2 * m)).unwrap();
            let ap = gamma_adjoint(&a);
            let f = KVector::new(a.domain, random_vec(&mut rng, 2 * m)).unwrap();
            let g = KVector::new(a.codomain, random_vec(&mut rng, 2 * big)).unwrap();
            let lhs = gamma_form(&a.apply(&f).unwrap(), &g).unwrap();
            let rhs = gamma_form(&f, &ap.apply(&g).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn bar_examples() {
        let a = from_real_rows(2, 2, &[3.0, 0.0, 0.0, 5.0]);
        assert_eq!(bar(&a), from_real_rows(2, 2, &[5.0, 0.0, 0.0, 3.0]));
        let ii = linalg::eye(2) * linalg::I;
        assert_eq!(bar(&ii), linalg::eye(2) * (-linalg::I));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_mat(&mut rng, 4, 4);
        let rb = bar(&r);
        assert!(diff(&block(&rb, Block::One, Block::One), &linalg::conj(&block(&r, Block::Two, Block::Two))) < 1e-15);
        assert!(diff(&block(&rb, Block::One, Block::Two), &linalg::conj(&block(&r, Block::Two, Block::One))) < 1e-15);
    }

    #[test]
    fn component_examples() {
        let s = DoubledSpace::new(2).unwrap();
        let id = KOperator::identity(s);
        assert_eq!(component(&id, Block::One, Block::One), linalg::eye(2));
        assert_eq!(component(&id, Block::One, Block::Two), linalg::zeros(2, 2));
        let j = KOperator::new(s.swap()).unwrap();
        assert_eq!(component(&j, Block::One, Block::Two), linalg::eye(2));
    }

    #[test]
    fn structural_relations() {
        let s = DoubledSpace::new(3).unwrap();
        assert!(diff(&(s.p1() + s.p2()), &linalg::eye(6)) < 1e-15);
        assert!(diff(&(s.p1() - s.p2()), &s.c()) < 1e-15);
        assert!(diff(&(s.c() * s.c()), &linalg::eye(6)) < 1e-15);
        assert!(diff(&bar(&s.p2()), &s.p1()) < 1e-15);
        assert!(diff(&bar(&s.c()), &(-s.c())) < 1e-15);
    }

    proptest! {
        #[test]
        fn conjugation_reverses_gamma(seed in any::<u64>(), m in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = DoubledSpace::new(m).unwrap();
            let f = KVector::new(s, random_vec(&mut rng, 2 * m)).unwrap();
            let g = KVector::new(s, random_vec(&mut rng, 2 * m)).unwrap();
            let lhs = gamma_form(&conjugate_vector(&f), &conjugate_vector(&g)).unwrap();
            let rhs = gamma_form(&f, &g).unwrap().conj();
            prop_assert!((lhs + rhs).norm() < 1e-12);
            prop_assert_eq!(conjugate_vector(&conjugate_vector(&f)), f);
        }

        #[test]
        fn adjoint_and_bar_algebra(seed in any::<u64>(), m in 1usize..4, extra in 0usize..2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = KOperator::new(random_mat(&mut rng, 2 * (m + extra), 2 * m)).unwrap();
            prop_assert!(diff(&gamma_adjoint(&gamma_adjoint(&a)).matrix, &a.matrix) < 1e-14);
            prop_assert!(diff(&bar_operator(&bar_operator(&a)).matrix, &a.matrix) < 1e-14);
            prop_assert!(diff(
                &bar_operator(&gamma_adjoint(&a)).matrix,
                &gamma_adjoint(&bar_operator(&a)).matrix
            ) < 1e-14);
            let back = from_blocks(
                &a.component(Block::One, Block::One),
                &a.component(Block::One, Block::Two),
                &a.component(Block::Two, Block::One),
                &a.component(Block::Two, Block::Two),
            );
            prop_assert_eq!(back, a.matrix);
        }
    }
}
