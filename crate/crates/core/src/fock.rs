//! Particle-number-truncated bosonic Fock space over `K1`.
//!
//! Basis states are occupation tuples `(n_1, .., n_M)` with total number at
//! most the cutoff `N`, ranked graded-lexicographically: first by total
//! number, then in *descending* lexicographic order inside each sector, so
//! for two modes the one-particle states come as `(1,0), (0,1)`. Because the
//! ranking is graded, the states with at most `k` particles form a prefix of
//! the basis and a compression `P_k X P_k` is a top-left sub-block.
//!
//! All operators are compressions `P_N X P_N` of their untruncated versions.
//! Ladder coefficients use the linear convention
//! `L(x, y) = sum_p x_p a*_p + sum_p y_p a_p`, so the field of
//! `f = (x; y)` is `L(x, y)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{self, CMat, CVec};
use crate::oneparticle::KVector;

/// Largest basis dimension accepted by [`FockSpace::new`].
pub const MAX_DIMENSION: usize = 6000;

const NONE: usize = usize::MAX;

struct Inner {
    modes: usize,
    cutoff: usize,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    /// `raise[p][i]`: index of `state_i + delta_p`, or `NONE` past the cutoff.
    raise: Vec<Vec<usize>>,
    lower: Vec<Vec<usize>>,
    /// `sector_end[k]` = number of states with at most `k` particles.
    sector_end: Vec<usize>,
}

/// Immutable, cheaply clonable truncated Fock space.
#[derive(Clone)]
pub struct FockSpace(Arc<Inner>);

impl PartialEq for FockSpace {
    fn eq(&self, other: &Self) -> bool {
        self.modes() == other.modes() && self.cutoff() == other.cutoff()
    }
}

impl fmt::Debug for FockSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FockSpace(modes={}, cutoff={})", self.modes(), self.cutoff())
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Occupation tuples of `modes` modes with total `n`, descending lex order.
fn sector_states(modes: usize, n: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == modes {
        prefix.push(n as u32);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=n).rev() {
        prefix.push(first as u32);
        sector_states(modes, n - first, prefix, out);
        prefix.pop();
    }
}

impl FockSpace {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Shape("Fock space needs at least one mode".into()));
        }
        let dim = binomial(modes + cutoff, modes);
        if dim > MAX_DIMENSION {
            return Err(Error::InvalidConfig(format!(
                "Fock dimension {dim} for {modes} modes and cutoff {cutoff} exceeds {MAX_DIMENSION}"
            )));
        }
        let mut states = Vec::with_capacity(dim);
        let mut sector_end = Vec::with_capacity(cutoff + 1);
        for n in 0..=cutoff {
            sector_states(modes, n, &mut Vec::with_capacity(modes), &mut states);
            sector_end.push(states.len());
        }
        let index: HashMap<Vec<u32>, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut raise = vec![vec![NONE; dim]; modes];
        let mut lower = vec![vec![NONE; dim]; modes];
        for (i, s) in states.iter().enumerate() {
            for p in 0..modes {
                let mut t = s.clone();
                t[p] += 1;
                if let Some(&j) = index.get(&t) {
                    raise[p][i] = j;
                    lower[p][j] = i;
                }
            }
        }
        Ok(FockSpace(Arc::new(Inner { modes, cutoff, states, index, raise, lower, sector_end })))
    }

    pub fn modes(&self) -> usize {
        self.0.modes
    }

    pub fn cutoff(&self) -> usize {
        self.0.cutoff
    }

    pub fn dim(&self) -> usize {
        self.0.states.len()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.0.states[i]
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.0.index.get(occupation).copied()
    }

    pub fn number(&self, i: usize) -> usize {
        self.0.states[i].iter().map(|&n| n as usize).sum()
    }

    /// Dimension of the subspace with at most `k` particles.
    pub fn sector_dim(&self, k: usize) -> usize {
        self.0.sector_end[k.min(self.cutoff())]
    }

    pub fn vacuum(&self) -> CVec {
        self.basis_vector(0)
    }

    pub fn basis_vector(&self, i: usize) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[i] = linalg::ONE;
        v
    }

    fn check_mode(&self, j: usize) -> Result<()> {
        if j >= self.modes() {
            return Err(Error::ModeOutOfRange { mode: j, modes: self.modes() });
        }
        Ok(())
    }

    /// `out += L(x, y) v`.
    pub fn ladder_into(&self, x: &[Complex64], y: &[Complex64], v: &[Complex64], out: &mut [Complex64]) {
        for (i, &vi) in v.iter().enumerate() {
            if vi == linalg::ZERO {
                continue;
            }
            let s = &self.0.states[i];
            for p in 0..self.modes() {
                let up = self.0.raise[p][i];
                if up != NONE && x[p] != linalg::ZERO {
                    out[up] += x[p] * vi * ((s[p] + 1) as f64).sqrt();
                }
                let down = self.0.lower[p][i];
                if down != NONE && y[p] != linalg::ZERO {
                    out[down] += y[p] * vi * (s[p] as f64).sqrt();
                }
            }
        }
    }

    /// `L(x, y) v` as a new vector.
    pub fn ladder_apply(&self, x: &[Complex64], y: &[Complex64], v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim());
        self.ladder_into(x, y, v.as_slice(), out.as_mut_slice());
        out
    }

    /// `L(x, y) X` for a matrix whose rows are indexed by this space.
    pub fn ladder_left(&self, x: &[Complex64], y: &[Complex64], a: &CMat) -> CMat {
        let mut out = linalg::zeros(self.dim(), a.ncols());
        for j in 0..a.ncols() {
            let col = a.column(j);
            let mut dst = out.column_mut(j);
            self.ladder_into(x, y, col.as_slice(), dst.as_mut_slice());
        }
        out
    }

    /// `X L(x, y)` for a matrix whose columns are indexed by this space.
    pub fn ladder_right(&self, x: &[Complex64], y: &[Complex64], a: &CMat) -> CMat {
        let xc: Vec<Complex64> = x.iter().map(|z| z.conj()).collect();
        let yc: Vec<Complex64> = y.iter().map(|z| z.conj()).collect();
        // L(x, y)^dagger = L(conj y, conj x)
        self.ladder_left(&yc, &xc, &a.adjoint()).adjoint()
    }

    fn unit(&self, j: usize) -> Vec<Complex64> {
        let mut e = vec![linalg::ZERO; self.modes()];
        e[j] = linalg::ONE;
        e
    }

    fn zero_coeffs(&self) -> Vec<Complex64> {
        vec![linalg::ZERO; self.modes()]
    }
}

/// Dense operator between two truncated Fock spaces.
#[derive(Clone, Debug)]
pub struct FockOperator {
    domain: FockSpace,
    codomain: FockSpace,
    matrix: CMat,
}

impl FockOperator {
    pub fn new(domain: FockSpace, codomain: FockSpace, matrix: CMat) -> Result<Self> {
        if matrix.shape() != (codomain.dim(), domain.dim()) {
            return Err(Error::Shape(format!(
                "operator matrix is {}x{}, spaces need {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(Self { domain, codomain, matrix })
    }

    pub fn on(space: &FockSpace, matrix: CMat) -> Result<Self> {
        Self::new(space.clone(), space.clone(), matrix)
    }

    pub fn identity(space: &FockSpace) -> Self {
        Self { domain: space.clone(), codomain: space.clone(), matrix: linalg::eye(space.dim()) }
    }

    pub fn zero(domain: &FockSpace, codomain: &FockSpace) -> Self {
        Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix: linalg::zeros(codomain.dim(), domain.dim()),
        }
    }

    pub fn domain(&self) -> &FockSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &FockSpace {
        &self.codomain
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { domain: self.codomain.clone(), codomain: self.domain.clone(), matrix: self.matrix.adjoint() }
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &FockOperator) -> Result<Self> {
        if rhs.codomain != self.domain {
            return Err(Error::Shape(format!("cannot compose {:?} after {:?}", self.domain, rhs.codomain)));
        }
        Ok(Self { domain: rhs.domain.clone(), codomain: self.codomain.clone(), matrix: &self.matrix * &rhs.matrix })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { domain: self.domain.clone(), codomain: self.codomain.clone(), matrix: &self.matrix * s }
    }

    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        if v.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch { expected: self.domain.dim(), found: v.len() });
        }
        Ok(&self.matrix * v)
    }

    /// Top-left block `P_k X P_l`, columns restricted to at most `l`
    /// particles and rows to at most `k`.
    pub fn compressed(&self, row_sector: usize, col_sector: usize) -> CMat {
        compress(&self.matrix, &self.codomain, &self.domain, row_sector, col_sector)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "modes": self.codomain.modes(),
            "domain_modes": self.domain.modes(),
            "cutoff": self.codomain.cutoff(),
            "ordering": ORDERING,
            "data": linalg::to_pairs(&self.matrix),
        })
    }
}

pub const ORDERING: &str = "graded-lex";

/// Top-left block of `a` keeping rows with at most `k` particles in
/// `rows` and columns with at most `l` in `cols`.
pub fn compress(a: &CMat, rows: &FockSpace, cols: &FockSpace, k: usize, l: usize) -> CMat {
    a.view((0, 0), (rows.sector_dim(k), cols.sector_dim(l))).into_owned()
}

/// JSON form of a Fock vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FockVectorJson {
    pub modes: usize,
    pub cutoff: usize,
    pub ordering: String,
    pub data: Vec<[f64; 2]>,
}

pub fn vector_to_json(space: &FockSpace, v: &CVec) -> FockVectorJson {
    FockVectorJson {
        modes: space.modes(),
        cutoff: space.cutoff(),
        ordering: ORDERING.to_string(),
        data: linalg::vec_to_pairs(v),
    }
}

/// Compression of `a*_j` (zero-based mode).
pub fn creation(space: &FockSpace, j: usize) -> Result<FockOperator> {
    space.check_mode(j)?;
    Ok(ladder(space, &space.unit(j), &space.zero_coeffs()))
}

pub fn annihilation(space: &FockSpace, j: usize) -> Result<FockOperator> {
    space.check_mode(j)?;
    Ok(ladder(space, &space.zero_coeffs(), &space.unit(j)))
}

/// Matrix of `L(x, y)`.
pub fn ladder(space: &FockSpace, x: &[Complex64], y: &[Complex64]) -> FockOperator {
    let n = space.dim();
    let mut m = linalg::zeros(n, n);
    for i in 0..n {
        let s = space.state(i);
        for p in 0..space.modes() {
            let up = space.0.raise[p][i];
            if up != NONE {
                m[(up, i)] += x[p] * ((s[p] + 1) as f64).sqrt();
            }
            let down = space.0.lower[p][i];
            if down != NONE {
                m[(down, i)] += y[p] * (s[p] as f64).sqrt();
            }
        }
    }
    FockOperator::on(space, m).expect("square by construction")
}

fn check_field_vector(space: &FockSpace, f: &KVector) -> Result<()> {
    if f.space.m != space.modes() {
        return Err(Error::DimensionMismatch { expected: 2 * space.modes(), found: f.coords.len() });
    }
    Ok(())
}

/// Field `pi(f) = a*(P1 f) + a(P1 f*)`.
pub fn field(space: &FockSpace, f: &KVector) -> Result<FockOperator> {
    check_field_vector(space, f)?;
    let x = f.k1_part();
    let y = f.k2_part();
    Ok(ladder(space, x.as_slice(), y.as_slice()))
}

/// Tolerance on `||f - f*||` for [`weyl`].
pub const REALITY_TOL: f64 = 1e-12;

/// `w(f) = exp(i pi(f))` for `f = f*`, from the spectrum of the hermitian
/// truncated field.
pub fn weyl(space: &FockSpace, f: &KVector) -> Result<FockOperator> {
    check_field_vector(space, f)?;
    let residual = f.reality_defect();
    if residual > REALITY_TOL * (1.0 + linalg::vec_norm(&f.coords)) {
        return Err(Error::NotReal { residual });
    }
    let pi = field(space, f)?;
    let w = linalg::hermitian_fn(pi.matrix(), |lam| Complex64::new(0.0, lam).exp());
    FockOperator::on(space, w)
}

/// Second quantization `Gamma(T)` of `T: C^m -> C^M`, mapping the `m`-mode
/// space into the `M`-mode space with the same cutoff: the `n`-particle
/// sector maps by the symmetrized tensor power of `T`.
pub fn gamma_functor(domain: &FockSpace, codomain: &FockSpace, t: &CMat, exec: Execution) -> Result<FockOperator> {
    if t.shape() != (codomain.modes(), domain.modes()) {
        return Err(Error::Shape(format!(
            "Gamma(T) needs T of shape {}x{}, got {}x{}",
            codomain.modes(),
            domain.modes(),
            t.nrows(),
            t.ncols()
        )));
    }
    if domain.cutoff() != codomain.cutoff() {
        return Err(Error::InvalidConfig("Gamma(T) needs equal cutoffs".into()));
    }
    let images: Vec<Vec<Complex64>> = (0..domain.modes()).map(|q| t.column(q).iter().copied().collect()).collect();
    let zero = codomain.zero_coeffs();
    let columns = exec::map_range(exec, domain.dim(), |i| {
        let occ = domain.state(i);
        let mut v = codomain.vacuum();
        let mut norm = 1.0;
        for (q, &nq) in occ.iter().enumerate() {
            for k in 1..=nq {
                v = codomain.ladder_apply(&images[q], &zero, &v);
                norm *= k as f64;
            }
        }
        v / linalg::real(norm.sqrt())
    });
    let m = CMat::from_columns(&columns);
    FockOperator::new(domain.clone(), codomain.clone(), m)
}

/// Isometric embedding `Gamma(iota)` of an `m`-mode space into the first
/// `m` modes of an `M`-mode space, built by index lookup.
pub fn embedding_operator(domain: &FockSpace, codomain: &FockSpace) -> Result<FockOperator> {
    if domain.modes() > codomain.modes() || domain.cutoff() != codomain.cutoff() {
        return Err(Error::InvalidConfig("embedding needs fewer source modes and equal cutoffs".into()));
    }
    let mut m = linalg::zeros(codomain.dim(), domain.dim());
    for i in 0..domain.dim() {
        let mut occ = domain.state(i).to_vec();
        occ.resize(codomain.modes(), 0);
        let j = codomain.index_of(&occ).expect("same cutoff");
        m[(j, i)] = linalg::ONE;
    }
    FockOperator::new(domain.clone(), codomain.clone(), m)
}

/// Orthogonal projector onto states with at most `k` particles.
pub fn sector_projector(space: &FockSpace, k: usize) -> Result<FockOperator> {
    if k > space.cutoff() {
        return Err(Error::CutoffExceeded { requested: k, cutoff: space.cutoff() });
    }
    let mut m = linalg::zeros(space.dim(), space.dim());
    for i in 0..space.sector_dim(k) {
        m[(i, i)] = linalg::ONE;
    }
    FockOperator::on(space, m)
}

/// Relative threshold below which singular values count as zero in
/// [`isometric_part`].
pub const ISOMETRY_RTOL: f64 = 1e-12;

/// Partial-isometry factor of the polar decomposition, from the SVD.
pub fn isometric_part(a: &FockOperator) -> FockOperator {
    let (u, s, v) = linalg::svd_sorted(a.matrix());
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().take_while(|&&x| x > ISOMETRY_RTOL * smax && x > 0.0).count();
    let matrix = u.columns(0, rank) * v.columns(0, rank).adjoint();
    FockOperator { domain: a.domain.clone(), codomain: a.codomain.clone(), matrix }
}

/// Nondecreasing multi-index with entries in `1..=n` (one-based, as the
/// labels of `f_1, .., f_n`). The empty index is allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if entries.contains(&0) {
            return Err(Error::InvalidMultiIndex("entries are one-based".into()));
        }
        if entries.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMultiIndex(format!("{entries:?} is not nondecreasing")));
        }
        Ok(Self(entries))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Parses `"1,1,2"`; the empty string (or `"0"`) is the empty index.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "0" {
            return Ok(Self::empty());
        }
        let entries = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| Error::InvalidMultiIndex(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_entry(&self) -> usize {
        self.0.last().copied().unwrap_or(0)
    }

    /// Multiplicities `(l_1, .., l_r)` of the distinct values.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 && self.0[i - 1] == *a {
                *out.last_mut().unwrap() += 1;
            } else {
                out.push(1);
            }
        }
        out
    }

    /// `l_1! .. l_r!`
    pub fn multiplicity_factorial(&self) -> f64 {
        self.multiplicities().iter().map(|&l| (1..=l).map(|k| k as f64).product::<f64>()).product()
    }

    /// All indices over `1..=n` of length at most `max_len`, by length then
    /// lexicographically.
    pub fn enumerate(n: usize, max_len: usize) -> Vec<MultiIndex> {
        let mut out = vec![Self::empty()];
        if n == 0 {
            return out;
        }
        let mut layer = vec![Vec::<usize>::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for prefix in &layer {
                let start = prefix.last().copied().unwrap_or(1);
                for a in start..=n {
                    let mut e = prefix.clone();
                    e.push(a);
                    next.push(e);
                }
            }
            out.extend(next.iter().cloned().map(MultiIndex));
            layer = next;
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// `phi_alpha = (l_1! .. l_r!)^{-1/2} a*(e_{alpha_1}) .. a*(e_{alpha_l}) Omega`
/// for an orthonormal family `e_basis` of `K1` vectors.
pub fn phi_alpha(space: &FockSpace, e_basis: &[KVector], alpha: &MultiIndex) -> Result<CVec> {
    if alpha.len() > space.cutoff() {
        return Err(Error::CutoffExceeded { requested: alpha.len(), cutoff: space.cutoff() });
    }
    if alpha.max_entry() > e_basis.len() {
        return Err(Error::InvalidMultiIndex(format!("{alpha} exceeds the {} basis vectors", e_basis.len())));
    }
    let zero = space.zero_coeffs();
    let mut v = space.vacuum();
    for &a in alpha.entries().iter().rev() {
        let e = &e_basis[a - 1];
        check_field_vector(space, e)?;
        v = space.ladder_apply(e.k1_part().as_slice(), &zero, &v);
    }
    Ok(v / linalg::real(alpha.multiplicity_factorial().sqrt()))
}
