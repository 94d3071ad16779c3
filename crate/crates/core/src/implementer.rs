//! Quadratic Hamiltonians, their Wick-ordered exponentials, and the
//! implementing isometries `Psi_alpha(V)` with their verification suite.
//!
//! For a Bogoliubov operator `V: K(2m) -> K(2M)` the implementers map the
//! truncated Fock space over `m` modes (the *source*) into the one over `M`
//! modes (the *target*), both with the same cutoff. The first `m` target
//! modes are identified with the source modes through the inclusion
//! `iota: C^m -> C^M`; for automorphisms `iota` is the identity.
//!
//! A Hamiltonian is stored by its four coordinate blocks
//! `H11: M x m`, `H12: M x M`, `H21: m x m`, `H22: m x M`, and the
//! bilinear form reads `b(H) = sum H12_pq a*_p a*_q + 2 sum H11_pq a*_p a_q
//! + sum H21_pq a_p a_q`. Annihilators with a vector subscript are linear,
//! `a_g = sum g_p a_p`.

use num_complex::Complex64;
use serde::Serialize;

use crate::bogoliubov::{pseudo_inverse_block, BogoliubovOperator};
use crate::decomposition::{self, DecompositionResult};
use crate::disk::{self, DiskPoint};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::fock::{self, compress, FockOperator, FockSpace, MultiIndex};
use crate::linalg::{self, CMat, CVec};
use crate::oneparticle::{self, DoubledSpace, KVector};
use crate::report::{self, tol, Check};

/// Tolerance for the coordinate symmetries of a Hamiltonian.
pub const SYMH_TOL: f64 = 1e-9;
/// Tolerance on `||Z V11 - V21||` accepted by [`h_from_vz`].
pub const ZV_TOL: f64 = 1e-9;

/// `iota`: the first `m` of `M` modes.
pub fn inclusion(m: usize, big_m: usize) -> CMat {
    CMat::from_fn(big_m, m, |i, j| if i == j { linalg::ONE } else { linalg::ZERO })
}

#[derive(Clone, Debug)]
pub struct QuadraticHamiltonian {
    h11: CMat,
    h12: CMat,
    h21: CMat,
    h22: CMat,
}

impl QuadraticHamiltonian {
    /// Validates shapes, the symmetry `H22 = H11^T` with `H12`, `H21`
    /// complex-symmetric, and `||H12|| < 1`.
    pub fn new(h11: CMat, h12: CMat, h21: CMat, h22: CMat) -> Result<Self> {
        let big = h12.nrows();
        let m = h21.nrows();
        let shapes_ok = h12.ncols() == big
            && h21.ncols() == m
            && h11.shape() == (big, m)
            && h22.shape() == (m, big)
            && m > 0
            && m <= big;
        if !shapes_ok {
            return Err(Error::InvalidHamiltonian(format!(
                "block shapes H11 {:?}, H12 {:?}, H21 {:?}, H22 {:?} do not fit",
                h11.shape(),
                h12.shape(),
                h21.shape(),
                h22.shape()
            )));
        }
        let h = Self { h11, h12, h21, h22 };
        let sym = h.symmetry_residual();
        if sym.is_nan() || sym > SYMH_TOL {
            return Err(Error::InvalidHamiltonian(format!("symmetry residual {sym:.3e}")));
        }
        let norm = linalg::op_norm(&h.h12);
        if norm.is_nan() || norm >= 1.0 {
            return Err(Error::InvalidHamiltonian(format!("||H12|| = {norm} is not below 1")));
        }
        Ok(h)
    }

    /// Builds `H22 = H11^T`.
    pub fn from_parts(h11: CMat, h12: CMat, h21: CMat) -> Result<Self> {
        let h22 = h11.transpose();
        Self::new(h11, h12, h21, h22)
    }

    pub fn zero(m: usize, big_m: usize) -> Self {
        Self {
            h11: linalg::zeros(big_m, m),
            h12: linalg::zeros(big_m, big_m),
            h21: linalg::zeros(m, m),
            h22: linalg::zeros(m, big_m),
        }
    }

    /// Random Hamiltonian with `||H12||` uniform in `[bound/4, bound]` and
    /// the other blocks of size about `0.3`.
    pub fn random(m: usize, big_m: usize, h12_bound: f64, rng: &mut impl rand::Rng) -> Result<Self> {
        use rand_distr::{Distribution, StandardNormal};
        let mut gauss = |r: usize, c: usize| {
            CMat::from_fn(r, c, |_, _| {
                let re: f64 = StandardNormal.sample(&mut *rng);
                let im: f64 = StandardNormal.sample(&mut *rng);
                linalg::c(re, im)
            })
        };
        let h11 = gauss(big_m, m) * linalg::real(0.3 / (big_m as f64).sqrt());
        let a = gauss(m, m);
        let h21 = (&a + a.transpose()) * linalg::real(0.15 / (m as f64).sqrt());
        let b = gauss(big_m, big_m);
        let sym = &b + b.transpose();
        let target = h12_bound * rng.random_range(0.25..=1.0);
        let norm = linalg::op_norm(&sym);
        let h12 = if norm > 0.0 { sym * linalg::real(target / norm) } else { sym };
        Self::from_parts(h11, h12, h21)
    }

    pub fn h11(&self) -> &CMat {
        &self.h11
    }
    pub fn h12(&self) -> &CMat {
        &self.h12
    }
    pub fn h21(&self) -> &CMat {
        &self.h21
    }
    pub fn h22(&self) -> &CMat {
        &self.h22
    }

    /// Number of source modes.
    pub fn m(&self) -> usize {
        self.h21.nrows()
    }

    /// Number of target modes.
    pub fn big_m(&self) -> usize {
        self.h12.nrows()
    }

    pub fn symmetry_residual(&self) -> f64 {
        linalg::diff(&self.h22, &self.h11.transpose())
            .max(linalg::symmetry_defect(&self.h12))
            .max(linalg::symmetry_defect(&self.h21))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        linalg::diff(&self.h11, &other.h11)
            .max(linalg::diff(&self.h12, &other.h12))
            .max(linalg::diff(&self.h21, &other.h21))
            .max(linalg::diff(&self.h22, &other.h22))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "m": self.m(),
            "M": self.big_m(),
            "H11": linalg::to_pairs(&self.h11),
            "H12": linalg::to_pairs(&self.h12),
            "H21": linalg::to_pairs(&self.h21),
            "H22": linalg::to_pairs(&self.h22),
        })
    }

    fn check_spaces(&self, source: &FockSpace, target: &FockSpace) -> Result<()> {
        if source.modes() != self.m() || target.modes() != self.big_m() {
            return Err(Error::Shape(format!(
                "Hamiltonian maps {} to {} modes, spaces have {} and {}",
                self.m(),
                self.big_m(),
                source.modes(),
                target.modes()
            )));
        }
        if source.cutoff() != target.cutoff() {
            return Err(Error::InvalidConfig("source and target cutoffs differ".into()));
        }
        Ok(())
    }
}

/// `H_V` for a disk point solving `Z V11 = V21`, with `Z+ = -Z^dagger`:
/// `H11 = V11 - iota + Z+ V21`, `H12 = Z+`, `H21 = (V22^* + V12^* Z+) V21`,
/// `H22 = V22^* - iota^T + V12^* Z+`.
pub fn h_from_vz(v: &BogoliubovOperator, z: &DiskPoint) -> Result<QuadraticHamiltonian> {
    if z.modes() != v.big_m() {
        return Err(Error::DimensionMismatch { expected: v.big_m(), found: z.modes() });
    }
    let residual = linalg::diff(&(z.z() * v.v11()), &v.v21());
    if residual > ZV_TOL {
        return Err(Error::ZNotCompatible { residual });
    }
    let iota = inclusion(v.m(), v.big_m());
    let zp = -z.z().adjoint();
    let h11 = v.v11() - &iota + &zp * v.v21();
    let h21 = (v.v22().adjoint() + v.v12().adjoint() * &zp) * v.v21();
    let h22 = v.v22().adjoint() - iota.transpose() + v.v12().adjoint() * &zp;
    QuadraticHamiltonian::new(h11, zp, h21, h22)
}

/// The expanded component formulas obtained by inserting the general
/// solution for `Z` (with free part `Z'`) into [`h_from_vz`].
pub fn h_expanded(v: &BogoliubovOperator, zprime: Option<&CMat>) -> Result<QuadraticHamiltonian> {
    // Surface NormExceeded and Z' validation errors first.
    decomposition::general_z(v, zprime)?;
    let big = v.big_m();
    let iota = inclusion(v.m(), big);
    let v11_inv = pseudo_inverse_block(&v.v11())?;
    let v22_inv = pseudo_inverse_block(&v.v22())?;
    let (k11, k22) = decomposition::cokernel_projectors(v)?;
    let zpp = match zprime {
        Some(zp) => -zp.adjoint(),
        None => linalg::zeros(big, big),
    };
    let v12 = v.v12();
    let v21 = v.v21();
    let v11_inv_star = v11_inv.adjoint();
    let tail = &v11_inv_star * v21.adjoint() * &k22;
    let h11 = &v11_inv_star - &iota - &k11 * &v12 * &v22_inv * &v21 + &zpp * &v21;
    let h12 = -(&v12 * &v22_inv) - &tail + &zpp;
    let h21 = (&v22_inv - v12.adjoint() * &tail) * &v21 + v12.adjoint() * &zpp * &v21;
    let h22 = &v22_inv - iota.transpose() - v12.adjoint() * &tail + v12.adjoint() * &zpp;
    QuadraticHamiltonian::new(h11, h12, h21, h22)
}

/// Residuals of the four relations tying `H` to `V`:
/// `V12 + H12 V22`, `iota + H11 - V11 - H12 V21`,
/// `H21 - (iota^T + H22) V21`, `1 - (iota^T + H22) V22`.
pub fn intertwining_relations(v: &BogoliubovOperator, h: &QuadraticHamiltonian) -> [f64; 4] {
    let iota = inclusion(v.m(), v.big_m());
    let left = iota.transpose() + h.h22();
    [
        linalg::fro(&(v.v12() + h.h12() * v.v22())),
        linalg::fro(&(&iota + h.h11() - v.v11() - h.h12() * v.v21())),
        linalg::diff(h.h21(), &(&left * v.v21())),
        linalg::diff(&linalg::eye(v.m()), &(&left * v.v22())),
    ]
}

fn unit(n: usize, j: usize) -> Vec<Complex64> {
    let mut e = vec![linalg::ZERO; n];
    e[j] = linalg::ONE;
    e
}

fn column(a: &CMat, j: usize) -> Vec<Complex64> {
    a.column(j).iter().copied().collect()
}

/// `sum_pq h_pq a*_p a*_q v`.
fn double_creation(space: &FockSpace, h: &CMat, v: &CVec) -> CVec {
    let n = space.modes();
    let zero = vec![linalg::ZERO; n];
    let mut out = CVec::zeros(space.dim());
    for q in 0..n {
        let t = space.ladder_apply(&unit(n, q), &zero, v);
        space.ladder_into(&column(h, q), &zero, t.as_slice(), out.as_mut_slice());
    }
    out
}

/// `sum_pq h_pq a_p a_q v`.
fn double_annihilation(space: &FockSpace, h: &CMat, v: &CVec) -> CVec {
    let n = space.modes();
    let zero = vec![linalg::ZERO; n];
    let mut out = CVec::zeros(space.dim());
    for q in 0..n {
        let t = space.ladder_apply(&zero, &unit(n, q), v);
        space.ladder_into(&zero, &column(h, q), t.as_slice(), out.as_mut_slice());
    }
    out
}

/// `exp(X/2) v` for a nilpotent `X` that shifts particle number by two.
fn exp_half(v: &CVec, steps: usize, x: impl Fn(&CVec) -> CVec) -> CVec {
    let mut sum = v.clone();
    let mut term = v.clone();
    for k in 1..=steps {
        term = x(&term) * linalg::real(0.5 / k as f64);
        if term.iter().all(|z| *z == linalg::ZERO) {
            break;
        }
        sum += &term;
    }
    sum
}

/// Multiplies by a number-preserving operator using only its sector blocks.
fn apply_sector_diagonal(g: &FockOperator, v: &CVec) -> CVec {
    let (dom, cod) = (g.domain(), g.codomain());
    let mut out = CVec::zeros(cod.dim());
    for n in 0..=dom.cutoff() {
        let (c0, r0) = if n == 0 { (0, 0) } else { (dom.sector_dim(n - 1), cod.sector_dim(n - 1)) };
        let (c1, r1) = (dom.sector_dim(n), cod.sector_dim(n));
        let blk = g.matrix().view((r0, c0), (r1 - r0, c1 - c0));
        let piece = blk * v.rows(c0, c1 - c0);
        out.rows_mut(r0, r1 - r0).copy_from(&piece);
    }
    out
}

/// `:exp(b(H)/2): Omega = exp(H12 a* a* / 2) Omega` on the target space.
pub fn gaussian_vector(h: &QuadraticHamiltonian, target: &FockSpace) -> Result<CVec> {
    if target.modes() != h.big_m() {
        return Err(Error::DimensionMismatch { expected: h.big_m(), found: target.modes() });
    }
    Ok(exp_half(&target.vacuum(), target.cutoff() / 2, |w| double_creation(target, h.h12(), w)))
}

/// Fast path: `exp(H12 a*a*/2) Gamma(iota + H11) exp(H21 aa/2)`, built
/// column by column.
pub fn wick_exp_factored(
    h: &QuadraticHamiltonian,
    source: &FockSpace,
    target: &FockSpace,
    exec: Execution,
) -> Result<FockOperator> {
    h.check_spaces(source, target)?;
    let t = inclusion(h.m(), h.big_m()) + h.h11();
    let gamma = fock::gamma_functor(source, target, &t, exec)?;
    let half = source.cutoff() / 2;
    let columns = exec::map_range(exec, source.dim(), |i| {
        let lowered = exp_half(&source.basis_vector(i), half, |w| double_annihilation(source, h.h21(), w));
        let mid = apply_sector_diagonal(&gamma, &lowered);
        exp_half(&mid, half, |w| double_creation(target, h.h12(), w))
    });
    FockOperator::new(source.clone(), target.clone(), CMat::from_columns(&columns))
}

/// Dense building blocks of the normal-ordered powers: powers of the
/// double-creation and double-annihilation matrices, and the middle terms
/// `M_l = sum_q a*(H11 e_q) M_{l-1} a_q` with `M_0 = Gamma(iota)`.
struct WickPieces {
    creation_powers: Vec<CMat>,
    middle: Vec<CMat>,
    annihilation_powers: Vec<CMat>,
}

fn dense_pair_matrix(space: &FockSpace, h: &CMat, creation: bool) -> CMat {
    let cols: Vec<CVec> = (0..space.dim())
        .map(|i| {
            let e = space.basis_vector(i);
            if creation { double_creation(space, h, &e) } else { double_annihilation(space, h, &e) }
        })
        .collect();
    CMat::from_columns(&cols)
}

fn wick_pieces(h: &QuadraticHamiltonian, source: &FockSpace, target: &FockSpace) -> Result<WickPieces> {
    h.check_spaces(source, target)?;
    let n = source.cutoff();
    let x12 = dense_pair_matrix(target, h.h12(), true);
    let x21 = dense_pair_matrix(source, h.h21(), false);
    let mut creation_powers = vec![linalg::eye(target.dim())];
    let mut annihilation_powers = vec![linalg::eye(source.dim())];
    for k in 1..=n / 2 {
        creation_powers.push(&x12 * &creation_powers[k - 1]);
        annihilation_powers.push(&annihilation_powers[k - 1] * &x21);
    }
    let zero_t = vec![linalg::ZERO; target.modes()];
    let zero_s = vec![linalg::ZERO; source.modes()];
    let mut middle = vec![fock::embedding_operator(source, target)?.into_matrix()];
    for l in 1..=n {
        let prev = &middle[l - 1];
        let mut next = linalg::zeros(target.dim(), source.dim());
        for q in 0..source.modes() {
            let right = source.ladder_right(&zero_s, &unit(source.modes(), q), prev);
            next += target.ladder_left(&column(h.h11(), q), &zero_t, &right);
        }
        middle.push(next);
    }
    Ok(WickPieces { creation_powers, middle, annihilation_powers })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl WickPieces {
    /// `:b(H)^l: = l! sum_{l1+l2+l3=l} 2^{l2} / (l1! l2! l3!) H_{l1,l2,l3}`.
    fn power(&self, l: usize) -> CMat {
        let (rows, cols) = self.middle[0].shape();
        let mut out = linalg::zeros(rows, cols);
        for l1 in 0..self.creation_powers.len().min(l + 1) {
            for l3 in 0..self.annihilation_powers.len().min(l + 1 - l1) {
                let l2 = l - l1 - l3;
                if l2 >= self.middle.len() {
                    continue;
                }
                let weight = factorial(l) * 2f64.powi(l2 as i32) / (factorial(l1) * factorial(l2) * factorial(l3));
                let term = &self.creation_powers[l1] * &self.middle[l2] * &self.annihilation_powers[l3];
                out += term * linalg::real(weight);
            }
        }
        out
    }

    fn max_power(&self) -> usize {
        self.creation_powers.len() - 1 + self.middle.len() - 1 + self.annihilation_powers.len() - 1
    }
}

/// Normal-ordered power `:b(H)^l:` as a matrix from source to target.
pub fn wick_power(h: &QuadraticHamiltonian, source: &FockSpace, target: &FockSpace, l: usize) -> Result<FockOperator> {
    let pieces = wick_pieces(h, source, target)?;
    FockOperator::new(source.clone(), target.clone(), pieces.power(l))
}

/// Brute-force oracle `sum_l :b(H)^l: / (l! 2^l)`, summed until every
/// term vanishes on the truncated space.
pub fn wick_exp_series(h: &QuadraticHamiltonian, source: &FockSpace, target: &FockSpace) -> Result<FockOperator> {
    let pieces = wick_pieces(h, source, target)?;
    let mut out = linalg::zeros(target.dim(), source.dim());
    for l in 0..=pieces.max_power() {
        out += pieces.power(l) * linalg::real(1.0 / (factorial(l) * 2f64.powi(l as i32)));
    }
    FockOperator::new(source.clone(), target.clone(), out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaussianNormCheck {
    /// `||:exp(b(H)/2): Omega||` on the truncated space.
    pub lhs: f64,
    /// `det(1 - H12 H12^dagger)^{-1/4}`.
    pub rhs: f64,
    /// Bound on `rhs - lhs` from the discarded sectors.
    pub tail_bound: f64,
}

impl GaussianNormCheck {
    pub fn defect(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn within_tail(&self) -> bool {
        self.defect() <= self.tail_bound + 1e-13 * self.rhs
    }
}

/// Upper bound for `rhs - lhs` when `H12` has norm `r` on `modes` modes and
/// the vacuum orbit is cut at `cutoff` particles. The squared norm is a sum
/// over pair numbers `k` dominated by the coefficients of
/// `(1 - t)^{-modes/2}` at `t = r^2`; everything beyond `k = cutoff/2` is
/// lost, and since both norms are at least one the norm defect is at most
/// half the lost squared mass.
pub fn gaussian_tail_bound(r: f64, modes: usize, cutoff: usize) -> f64 {
    if r >= 1.0 {
        return f64::INFINITY;
    }
    if r == 0.0 {
        return 0.0;
    }
    let t = r * r;
    let half_modes = modes as f64 / 2.0;
    let kept = cutoff / 2;
    let mut coeff = 1.0;
    let mut power = 1.0;
    let mut lost: f64 = 0.0;
    for k in 0..100_000usize {
        if k > kept {
            let term = coeff * power;
            lost += term;
            if term < 1e-18 * lost.max(1e-300) {
                break;
            }
        }
        coeff *= (k as f64 + half_modes) / (k as f64 + 1.0);
        power *= t;
    }
    0.5 * lost
}

/// `det(1 - X^dagger X)^{1/4}` for `||X|| < 1`.
pub fn det_quarter(x: &CMat) -> f64 {
    let n = x.ncols();
    let (vals, _) = linalg::eigh(&(linalg::eye(n) - x.adjoint() * x));
    vals.iter().product::<f64>().powf(0.25)
}

pub fn gaussian_vacuum_norm_check(h: &QuadraticHamiltonian, target: &FockSpace) -> Result<GaussianNormCheck> {
    let lhs = linalg::vec_norm(&gaussian_vector(h, target)?);
    let rhs = 1.0 / det_quarter(h.h12());
    let tail_bound = gaussian_tail_bound(linalg::op_norm(h.h12()), target.modes(), target.cutoff());
    Ok(GaussianNormCheck { lhs, rhs, tail_bound })
}

/// Options for [`build_family_with`].
#[derive(Clone, Debug)]
pub struct FamilyOptions {
    pub cutoff: usize,
    pub exec: Execution,
    /// Replaces the Gram-Schmidt basis of `P_V(ker V+)` by a given one
    /// (used to transport a basis along `U_V`).
    pub f_basis: Option<Vec<KVector>>,
}

impl FamilyOptions {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff, exec: Execution::default(), f_basis: None }
    }
}

#[derive(Clone, Debug)]
pub struct ImplementerFamily {
    pub v: BogoliubovOperator,
    pub decomposition: DecompositionResult,
    pub h: QuadraticHamiltonian,
    pub f_basis: Vec<KVector>,
    pub source: FockSpace,
    pub target: FockSpace,
    /// `psi_j`, the isometric parts of the truncated fields `pi(f_j)`.
    pub psi: Vec<FockOperator>,
    /// `det(1 - Z_V^dagger Z_V)^{1/4}`.
    pub normalization: f64,
    /// `:exp(b(H_V)/2):` from source to target.
    pub gaussian: FockOperator,
}

pub fn build_family(v: &BogoliubovOperator, cutoff: usize) -> Result<ImplementerFamily> {
    build_family_with(v, &FamilyOptions::new(cutoff))
}

/// Tolerance on gamma-orthonormality and range membership of a supplied
/// `f` basis.
pub const BASIS_TOL: f64 = 1e-9;

pub fn build_family_with(v: &BogoliubovOperator, opts: &FamilyOptions) -> Result<ImplementerFamily> {
    if opts.cutoff < 2 {
        return Err(Error::InvalidConfig(format!("cutoff {} is below 2", opts.cutoff)));
    }
    let decomposition = decomposition::canonical_decomposition(v)?;
    let h = h_from_vz(v, &decomposition.z_v)?;
    let f_basis = match &opts.f_basis {
        Some(basis) => {
            check_f_basis(v, &decomposition, basis)?;
            basis.clone()
        }
        None => decomposition::gamma_orthonormal_kernel_basis(v)?,
    };
    let source = FockSpace::new(v.m(), opts.cutoff)?;
    let target = FockSpace::new(v.big_m(), opts.cutoff)?;
    let fields = f_basis.iter().map(|f| fock::field(&target, f)).collect::<Result<Vec<_>>>()?;
    let (psi, gaussian) = exec::join(
        opts.exec,
        || exec::map(opts.exec, &fields, fock::isometric_part),
        || wick_exp_factored(&h, &source, &target, opts.exec),
    );
    Ok(ImplementerFamily {
        v: v.clone(),
        normalization: det_quarter(decomposition.z_v.z()),
        decomposition,
        h,
        f_basis,
        source,
        target,
        psi,
        gaussian: gaussian?,
    })
}

fn check_f_basis(v: &BogoliubovOperator, d: &DecompositionResult, basis: &[KVector]) -> Result<()> {
    let expected = v.big_m() - v.m();
    if basis.len() != expected {
        return Err(Error::InvalidConfig(format!("f basis has {} vectors, expected {expected}", basis.len())));
    }
    for (j, f) in basis.iter().enumerate() {
        if f.space.m != v.big_m() {
            return Err(Error::DimensionMismatch { expected: 2 * v.big_m(), found: f.coords.len() });
        }
        let in_kernel = linalg::vec_norm(&(v.plus() * &f.coords));
        let in_range = linalg::vec_norm(&(d.p_v.matrix() * &f.coords - &f.coords));
        if in_kernel > BASIS_TOL || in_range > BASIS_TOL {
            return Err(Error::InvalidConfig(format!("f_{} is not in P_V(ker V+)", j + 1)));
        }
        for (k, g) in basis.iter().enumerate() {
            let want = if j == k { 1.0 } else { 0.0 };
            if (oneparticle::gamma_raw(&f.coords, &g.coords) - linalg::real(want)).norm() > BASIS_TOL {
                return Err(Error::InvalidConfig("f basis is not gamma-orthonormal".into()));
            }
        }
    }
    Ok(())
}

impl ImplementerFamily {
    /// Number of isometries `psi_j`, equal to `M - m`.
    pub fn n(&self) -> usize {
        self.psi.len()
    }

    pub fn cutoff(&self) -> usize {
        self.source.cutoff()
    }

    pub fn psi0(&self) -> FockOperator {
        self.gaussian.scale(linalg::real(self.normalization))
    }

    /// `Psi_alpha = norm * psi_{alpha_1} .. psi_{alpha_l} :exp(b(H_V)/2):`.
    pub fn psi_alpha(&self, alpha: &MultiIndex) -> Result<FockOperator> {
        if alpha.max_entry() > self.n() {
            return Err(Error::InvalidMultiIndex(format!("{alpha} needs {} isometries, family has {}", alpha.max_entry(), self.n())));
        }
        let mut out = self.psi0();
        for &a in alpha.entries().iter().rev() {
            out = self.psi[a - 1].compose(&out)?;
        }
        Ok(out)
    }

    /// Internal consistency of the family: gamma-orthonormality of the `f`
    /// basis, the normalization in `(0, 1]`, and `||Psi_0 Omega|| = 1` up to
    /// the Gaussian tail bound.
    pub fn invariants(&self) -> Result<Vec<Check>> {
        let mut ortho: f64 = 0.0;
        for (j, f) in self.f_basis.iter().enumerate() {
            for (k, g) in self.f_basis.iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                ortho = ortho.max((oneparticle::gamma_raw(&f.coords, &g.coords) - linalg::real(want)).norm());
            }
        }
        let norm_check = gaussian_vacuum_norm_check(&self.h, &self.target)?;
        let psi0_omega = self.normalization * norm_check.lhs;
        let slack = norm_check.tail_bound * self.normalization;
        Ok(vec![
            Check::at_most("f_basis_gamma_orthonormal", ortho, tol::STRUCTURAL),
            Check::holds("normalization_in_unit_interval", self.normalization > 0.0 && self.normalization <= 1.0 + 1e-15),
            Check::at_most(
                "normalization_matches_h12",
                (self.normalization - det_quarter(self.h.h12())).abs(),
                tol::STRUCTURAL,
            ),
            Check::at_most("psi0_vacuum_unit_norm", (psi0_omega - 1.0).abs(), slack.max(tol::STRUCTURAL)),
        ])
    }

    /// JSON bundle with every matrix of the family plus a report object.
    pub fn to_json(&self, report: &[Check]) -> serde_json::Value {
        let report_obj: serde_json::Map<String, serde_json::Value> =
            report.iter().map(|c| (c.name.clone(), serde_json::json!(c.residual))).collect();
        serde_json::json!({
            "V": self.v.to_json(),
            "decomposition": self.decomposition.to_json(),
            "H_V": self.h.to_json(),
            "f_basis": self.f_basis.iter().map(|f| linalg::vec_to_pairs(&f.coords)).collect::<Vec<_>>(),
            "normalization": self.normalization,
            "source": {"modes": self.source.modes(), "cutoff": self.source.cutoff(), "ordering": fock::ORDERING},
            "target": {"modes": self.target.modes(), "cutoff": self.target.cutoff(), "ordering": fock::ORDERING},
            "gaussian": self.gaussian.to_json(),
            "psi": self.psi.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
            "report": report_obj,
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CommutatorResiduals {
    /// `eta a*(f) - a*(iota f) eta - a*(H11 f) eta - eta a_{H21 f}`
    pub creation: f64,
    /// `a_g eta - eta a_{iota^T g} - a*(H12 g) eta - eta a_{H11^T g}`
    pub annihilation: f64,
}

impl CommutatorResiduals {
    pub fn max(&self) -> f64 {
        self.creation.max(self.annihilation)
    }
}

/// Both commutator identities of `eta = :exp(b(H)/2):`, compressed to at
/// most `N - 3` particles; `f` has source coordinates, `g` target ones.
pub fn verify_commutators(
    h: &QuadraticHamiltonian,
    source: &FockSpace,
    target: &FockSpace,
    f: &CVec,
    g: &CVec,
    exec: Execution,
) -> Result<CommutatorResiduals> {
    if source.cutoff() < 3 {
        return Err(Error::InvalidConfig("commutator checks need a cutoff of at least 3".into()));
    }
    if f.len() != h.m() || g.len() != h.big_m() {
        return Err(Error::DimensionMismatch { expected: h.m(), found: f.len() });
    }
    let eta = wick_exp_factored(h, source, target, exec)?;
    let eta = eta.matrix();
    let k = source.cutoff() - 3;
    let zs = vec![linalg::ZERO; h.m()];
    let zt = vec![linalg::ZERO; h.big_m()];
    let iota = inclusion(h.m(), h.big_m());
    let t = &iota + h.h11();

    let f_s: Vec<Complex64> = f.iter().copied().collect();
    let tf: Vec<Complex64> = (&t * f).iter().copied().collect();
    let h21f: Vec<Complex64> = (h.h21() * f).iter().copied().collect();
    let first = source.ladder_right(&f_s, &zs, eta)
        - target.ladder_left(&tf, &zt, eta)
        - source.ladder_right(&zs, &h21f, eta);

    let g_t: Vec<Complex64> = g.iter().copied().collect();
    let ttg: Vec<Complex64> = (t.transpose() * g).iter().copied().collect();
    let h12g: Vec<Complex64> = (h.h12() * g).iter().copied().collect();
    let second = target.ladder_left(&zt, &g_t, eta)
        - source.ladder_right(&zs, &ttg, eta)
        - target.ladder_left(&h12g, &zt, eta);

    Ok(CommutatorResiduals {
        creation: linalg::fro(&compress(&first, target, source, k, k)),
        annihilation: linalg::fro(&compress(&second, target, source, k, k)),
    })
}

fn parts(f: &KVector) -> (Vec<Complex64>, Vec<Complex64>) {
    (f.k1_part().iter().copied().collect(), f.k2_part().iter().copied().collect())
}

fn check_source_vector(family: &ImplementerFamily, f: &KVector) -> Result<()> {
    if f.space.m != family.v.m() {
        return Err(Error::DimensionMismatch { expected: 2 * family.v.m(), found: f.coords.len() });
    }
    Ok(())
}

fn check_sector(family: &ImplementerFamily, k: usize, margin: usize) -> Result<()> {
    if k + margin > family.cutoff() {
        return Err(Error::CutoffExceeded { requested: k + margin, cutoff: family.cutoff() });
    }
    Ok(())
}

/// `max_alpha ||P_k (Psi_alpha pi(f) - pi(Vf) Psi_alpha) P_k||`, `k <= N - 3`.
pub fn verify_intertwiner(family: &ImplementerFamily, f: &KVector, k: usize, alphas: &[MultiIndex]) -> Result<f64> {
    check_source_vector(family, f)?;
    check_sector(family, k, 3)?;
    let vf = family.v.apply(f)?;
    let (x, y) = parts(f);
    let (vx, vy) = parts(&vf);
    let psis = alphas.iter().map(|a| family.psi_alpha(a)).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for psi in &psis {
        let d = family.source.ladder_right(&x, &y, psi.matrix()) - family.target.ladder_left(&vx, &vy, psi.matrix());
        worst = worst.max(linalg::fro(&compress(&d, &family.target, &family.source, k, k)));
    }
    Ok(worst)
}

/// Weyl form: `max_alpha ||P_k (Psi_alpha w(f) - w(Vf) Psi_alpha) P_k||`
/// for real `f`; truncation-limited, meant for small `||f||`.
pub fn verify_intertwiner_weyl(family: &ImplementerFamily, f: &KVector, k: usize, alphas: &[MultiIndex]) -> Result<f64> {
    check_source_vector(family, f)?;
    check_sector(family, k, 3)?;
    let vf = family.v.apply(f)?;
    let ws = fock::weyl(&family.source, f)?;
    let wt = fock::weyl(&family.target, &vf)?;
    let mut worst: f64 = 0.0;
    for a in alphas {
        let psi = family.psi_alpha(a)?;
        let d = psi.matrix() * ws.matrix() - wt.matrix() * psi.matrix();
        worst = worst.max(linalg::fro(&compress(&d, &family.target, &family.source, k, k)));
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct CuntzReport {
    /// `max_{alpha,beta} ||P_k (Psi_alpha^dagger Psi_beta - delta) P_k||`.
    pub orthogonality: f64,
    /// Per probe: partial sums `sum ||Psi_alpha^dagger phi||^2 / ||phi||^2`
    /// along the multi-index list.
    pub parseval: Vec<Vec<f64>>,
    /// Per probe: `||(sum Psi_alpha w(f) Psi_alpha^dagger - w(Vf)) phi||`
    /// along the list (empty without a Weyl probe).
    pub imp: Vec<Vec<f64>>,
}

impl CuntzReport {
    pub fn parseval_monotone(&self) -> bool {
        self.parseval.iter().all(|s| report::nondecreasing(s, 1e-14))
    }

    pub fn parseval_bounded(&self, tolerance: f64) -> bool {
        self.parseval.iter().all(|s| s.iter().all(|&x| x <= 1.0 + tolerance))
    }

    pub fn parseval_final(&self) -> Vec<f64> {
        self.parseval.iter().map(|s| s.last().copied().unwrap_or(0.0)).collect()
    }

    pub fn imp_monotone(&self, slack: f64) -> bool {
        self.imp.iter().all(|s| report::nonincreasing(s, slack))
    }
}

/// Cuntz relations on the protected sector, Parseval partial sums on the
/// target probes, and the implementation formula applied to the probes.
pub fn verify_cuntz(
    family: &ImplementerFamily,
    alphas: &[MultiIndex],
    k: usize,
    probes: &[CVec],
    weyl_f: Option<&KVector>,
) -> Result<CuntzReport> {
    check_sector(family, 2 * k, 0)?;
    let psis = alphas.iter().map(|a| family.psi_alpha(a)).collect::<Result<Vec<_>>>()?;
    let dk = family.source.sector_dim(k);
    let cols: Vec<CMat> = psis.iter().map(|p| p.matrix().columns(0, dk).into_owned()).collect();
    let mut orthogonality: f64 = 0.0;
    for (i, a) in cols.iter().enumerate() {
        for (j, b) in cols.iter().enumerate() {
            let gram = a.adjoint() * b;
            let want = if i == j { linalg::eye(dk) } else { linalg::zeros(dk, dk) };
            orthogonality = orthogonality.max(linalg::diff(&gram, &want));
        }
    }
    for p in probes {
        if p.len() != family.target.dim() {
            return Err(Error::DimensionMismatch { expected: family.target.dim(), found: p.len() });
        }
    }
    let parseval = probes
        .iter()
        .map(|phi| {
            let norm2 = phi.norm_squared();
            let mut acc = 0.0;
            psis.iter()
                .map(|psi| {
                    acc += (psi.matrix().adjoint() * phi).norm_squared() / norm2;
                    acc
                })
                .collect()
        })
        .collect();
    let imp = match weyl_f {
        None => Vec::new(),
        Some(f) => {
            check_source_vector(family, f)?;
            let ws = fock::weyl(&family.source, f)?;
            let wt = fock::weyl(&family.target, &family.v.apply(f)?)?;
            probes
                .iter()
                .map(|phi| {
                    let want = wt.matrix() * phi;
                    let mut acc = CVec::zeros(family.target.dim());
                    psis.iter()
                        .map(|psi| {
                            acc += psi.matrix() * (ws.matrix() * (psi.matrix().adjoint() * phi));
                            linalg::vec_norm(&(&acc - &want))
                        })
                        .collect()
                })
                .collect()
        }
    };
    Ok(CuntzReport { orthogonality, parseval, imp })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AnnihilationReport {
    /// `max_j ||P_k psi_j^dagger Psi_0 P_k||`.
    pub psi0: f64,
    /// `max_j ||(P1 + H12) f_j*||`.
    pub prime_creation: f64,
    /// `max_j ||(iota + H11)^dagger P1 f_j||`.
    pub prime_annihilation: f64,
}

pub fn verify_annihilation(family: &ImplementerFamily, k: usize) -> Result<AnnihilationReport> {
    check_sector(family, k, 3)?;
    let psi0 = family.psi0();
    let iota = inclusion(family.v.m(), family.v.big_m());
    let t_adj = (&iota + family.h.h11()).adjoint();
    let mut report = AnnihilationReport { psi0: 0.0, prime_creation: 0.0, prime_annihilation: 0.0 };
    for (psi, f) in family.psi.iter().zip(&family.f_basis) {
        let d = psi.matrix().adjoint() * psi0.matrix();
        report.psi0 = report.psi0.max(linalg::fro(&compress(&d, &family.target, &family.source, k, k)));
        let x = f.k1_part();
        let y = f.k2_part();
        let first = y.map(|z| z.conj()) + family.h.h12() * x.map(|z| z.conj());
        report.prime_creation = report.prime_creation.max(linalg::vec_norm(&first));
        report.prime_annihilation = report.prime_annihilation.max(linalg::vec_norm(&(&t_adj * &x)));
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CompositionReport {
    /// `max_alpha ||P_k (Psi_alpha(V) - Psi(U_V) Psi_alpha(W_V)) P_k||`.
    pub comp: f64,
    /// `||Psi_0(V) Omega - Psi(U_V) Omega||`.
    pub psiu: f64,
}

/// Builds families for `V`, `U_V` and `W_V` and compares. The basis of
/// `W_V` is the transport `U_V+ f_j` of the one used for `V`, so that both
/// sides label their isometries identically.
pub fn verify_composition(
    v: &BogoliubovOperator,
    cutoff: usize,
    k: usize,
    alphas: &[MultiIndex],
    exec: Execution,
) -> Result<CompositionReport> {
    let opts = FamilyOptions { cutoff, exec, f_basis: None };
    let fam_v = build_family_with(v, &opts)?;
    check_sector(&fam_v, k, 4)?;
    let u = fam_v.decomposition.u_v.clone();
    let w = fam_v.decomposition.w_v.clone();
    let u_plus = u.plus();
    let transported: Vec<KVector> = fam_v
        .f_basis
        .iter()
        .map(|f| KVector { space: f.space, coords: &u_plus * &f.coords })
        .collect();
    let (fam_u, fam_w) = exec::join(
        exec,
        || build_family_with(&u, &opts),
        || build_family_with(&w, &FamilyOptions { cutoff, exec, f_basis: Some(transported) }),
    );
    let (fam_u, fam_w) = (fam_u?, fam_w?);
    let psi_u = fam_u.psi0();
    let mut comp: f64 = 0.0;
    for a in alphas {
        let lhs = fam_v.psi_alpha(a)?;
        let rhs = psi_u.compose(&fam_w.psi_alpha(a)?)?;
        let d = lhs.matrix() - rhs.matrix();
        comp = comp.max(linalg::fro(&compress(&d, &fam_v.target, &fam_v.source, k, k)));
    }
    let omega = fam_v.source.vacuum();
    let psiu = linalg::vec_norm(&(fam_v.psi0().apply(&omega)? - psi_u.apply(&fam_u.source.vacuum())?));
    Ok(CompositionReport { comp, psiu })
}

/// Orthonormal basis of `K1 cap ker V+`, as target vectors `(x; 0)`.
pub fn k1_kernel_basis(v: &BogoliubovOperator) -> Vec<KVector> {
    let stacked = {
        let a = v.v11().adjoint();
        let b = v.v12().adjoint();
        let mut s = linalg::zeros(2 * v.m(), v.big_m());
        s.view_mut((0, 0), (v.m(), v.big_m())).copy_from(&a);
        s.view_mut((v.m(), 0), (v.m(), v.big_m())).copy_from(&b);
        s
    };
    let q = linalg::nullspace(&stacked);
    let space = v.target();
    q.column_iter()
        .map(|x| {
            let mut coords = CVec::zeros(2 * v.big_m());
            coords.rows_mut(0, v.big_m()).copy_from(&x);
            KVector { space, coords }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GnsReport {
    /// `max |<phi_a, w(Vf) phi_a> - <Omega, w(Vf) Omega>|`.
    pub diagonal: f64,
    /// `max_{a != b} |<phi_a, w(Vf) phi_b>|`.
    pub cross: f64,
}

/// Vector states `phi_alpha` built on `K1 cap ker V+` reproduce the vacuum
/// expectation of `w(Vf)` and are mutually orthogonal under it.
pub fn verify_gns(v: &BogoliubovOperator, cutoff: usize, alphas: &[MultiIndex], fs: &[KVector]) -> Result<GnsReport> {
    let target = FockSpace::new(v.big_m(), cutoff)?;
    let basis = k1_kernel_basis(v);
    let phis = alphas.iter().map(|a| fock::phi_alpha(&target, &basis, a)).collect::<Result<Vec<_>>>()?;
    let mut report = GnsReport { diagonal: 0.0, cross: 0.0 };
    for f in fs {
        let w = fock::weyl(&target, &v.apply(f)?)?;
        let vac = w.matrix()[(0, 0)];
        let images: Vec<CVec> = phis.iter().map(|p| w.matrix() * p).collect();
        for (i, p) in phis.iter().enumerate() {
            for (j, img) in images.iter().enumerate() {
                let value = p.dotc(img);
                if i == j {
                    report.diagonal = report.diagonal.max((value - vac).norm());
                } else {
                    report.cross = report.cross.max(value.norm());
                }
            }
        }
    }
    Ok(report)
}

/// `|<Omega, pi(Vf)^dagger pi(Vg) Omega> - gamma(f, S g)|` with
/// `S = V+ P1 V`: the two-point function of the transformed vacuum.
pub fn state_consistency(v: &BogoliubovOperator, f: &KVector, g: &KVector, cutoff: usize) -> Result<f64> {
    let target = FockSpace::new(v.big_m(), cutoff.max(2))?;
    let pf = fock::field(&target, &v.apply(f)?)?;
    let pg = fock::field(&target, &v.apply(g)?)?;
    let omega = target.vacuum();
    let lhs = (pf.matrix() * &omega).dotc(&(pg.matrix() * &omega));
    let s = v.state_operators().s;
    let rhs = oneparticle::gamma_raw(&f.coords, &(s * &g.coords));
    Ok((lhs - rhs).norm())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PsiConvergencePoint {
    pub cutoff: usize,
    pub annihilation: f64,
    pub orthogonality: f64,
    pub intertwiner: f64,
}

/// ψ-dependent residuals on the sector `k` along increasing cutoffs.
pub fn psi_convergence(
    v: &BogoliubovOperator,
    cutoffs: &[usize],
    k: usize,
    f: &KVector,
    exec: Execution,
) -> Result<Vec<PsiConvergencePoint>> {
    let mut out = Vec::with_capacity(cutoffs.len());
    for &n in cutoffs {
        let fam = build_family_with(v, &FamilyOptions { cutoff: n, exec, f_basis: None })?;
        let alphas = MultiIndex::enumerate(fam.n(), 1);
        let annihilation = verify_annihilation(&fam, k)?.psi0;
        let orthogonality = verify_cuntz(&fam, &alphas, k.min(n / 2), &[], None)?.orthogonality;
        let intertwiner = verify_intertwiner(&fam, f, k, &alphas)?;
        out.push(PsiConvergencePoint { cutoff: n, annihilation, orthogonality, intertwiner });
    }
    Ok(out)
}

/// The embedding-type helper used by fixtures: `V = U_Z W` with scalar
/// `Z = z 1` on `M` modes and `W = diag(w, conj w)` for an isometry `w`.
pub fn scalar_z_fixture(m: usize, big_m: usize, z: f64, w: &CMat) -> Result<BogoliubovOperator> {
    let zp = DiskPoint::new(linalg::eye(big_m) * linalg::real(z))?;
    let u = disk::u_from_z(&zp);
    let zero = linalg::zeros(big_m, m);
    let wm = oneparticle::from_blocks(w, &zero, &zero, &linalg::conj(w));
    BogoliubovOperator::validate(u.matrix() * wm, m, big_m, 1e-10)
}

/// Doubled space of a family's source, for building test vectors.
pub fn source_space(family: &ImplementerFamily) -> DoubledSpace {
    family.v.source()
}
