//! Finite-dimensional C*-algebras `⊕ M_{n_b}(ℂ)` and their *-automorphisms.
//!
//! Elements are coordinate vectors in the matrix-unit basis, ordered block by
//! block and row-major inside each block. The [`StarAlgebra`] trait abstracts
//! over the coordinate arithmetic so that the crossed-product algebra in
//! [`crate::crossed`] can reuse the verifiers here and in [`crate::maps`].

use std::fmt;

use crate::check::{Check, CheckList, Worst};
use crate::error::{Error, Result};
use crate::numkit::{
    c, identity, op_norm, range_basis, rank, zeros, CMatrix, CVector, TolerancePolicy, ONE, ZERO,
};

/// Coordinate-level interface of a finite-dimensional unital *-algebra with a
/// distinguished basis.
pub trait StarAlgebra: Clone + fmt::Debug {
    fn dim(&self) -> usize;
    fn mul(&self, a: &CVector, b: &CVector) -> CVector;
    fn star(&self, a: &CVector) -> CVector;
    fn unit(&self) -> CVector;
    /// A faithful *-representation; the C*-norm is its operator norm.
    fn represent(&self, a: &CVector) -> CMatrix;

    fn norm(&self, a: &CVector) -> f64 {
        op_norm(&self.represent(a))
    }

    fn basis(&self, i: usize) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[i] = ONE;
        v
    }

    /// Matrix of `b ↦ a·b` on coordinates.
    fn left_mult(&self, a: &CVector) -> CMatrix {
        let n = self.dim();
        let mut m = zeros(n, n);
        for j in 0..n {
            m.set_column(j, &self.mul(a, &self.basis(j)));
        }
        m
    }

    /// Product table `e_i·e_j` for all basis pairs, row-major in `(i, j)`.
    fn basis_products(&self) -> Vec<CVector> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let ei = self.basis(i);
            for j in 0..n {
                out.push(self.mul(&ei, &self.basis(j)));
            }
        }
        out
    }

    fn describe(&self) -> String;
}

/// `⊕_b M_{n_b}(ℂ)` with the matrix-unit basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteCStarAlgebra {
    block_sizes: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

impl FiniteCStarAlgebra {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::Dimension(format!("invalid block sizes {block_sizes:?}")));
        }
        let mut offsets = Vec::with_capacity(block_sizes.len());
        let mut dim = 0;
        for &n in &block_sizes {
            offsets.push(dim);
            dim += n * n;
        }
        Ok(FiniteCStarAlgebra { block_sizes, offsets, dim })
    }

    /// `ℂ^m`.
    pub fn commutative(m: usize) -> Result<Self> {
        Self::new(vec![1; m])
    }

    /// `M_n(ℂ)`.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Size of the block-diagonal realisation.
    pub fn matrix_size(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// `(block, row, col)` of basis element `i`.
    pub fn basis_label(&self, i: usize) -> (usize, usize, usize) {
        let b = self.offsets.iter().rposition(|&o| o <= i).unwrap();
        let n = self.block_sizes[b];
        let k = i - self.offsets[b];
        (b, k / n, k % n)
    }

    pub fn index_of(&self, block: usize, row: usize, col: usize) -> usize {
        self.offsets[block] + row * self.block_sizes[block] + col
    }

    pub fn block(&self, a: &CVector, b: usize) -> CMatrix {
        let n = self.block_sizes[b];
        let off = self.offsets[b];
        CMatrix::from_fn(n, n, |r, col| a[off + r * n + col])
    }

    pub fn from_blocks(&self, blocks: &[CMatrix]) -> Result<CVector> {
        if blocks.len() != self.block_sizes.len() {
            return Err(Error::AlgebraMismatch(format!(
                "{} blocks given for an algebra with {}",
                blocks.len(),
                self.block_sizes.len()
            )));
        }
        let mut v = CVector::zeros(self.dim);
        for (b, m) in blocks.iter().enumerate() {
            let n = self.block_sizes[b];
            if m.shape() != (n, n) {
                return Err(Error::AlgebraMismatch(format!("block {b} must be {n}x{n}")));
            }
            for r in 0..n {
                for col in 0..n {
                    v[self.offsets[b] + r * n + col] = m[(r, col)];
                }
            }
        }
        Ok(v)
    }

    /// Block-diagonal matrix realisation.
    pub fn to_matrix(&self, a: &CVector) -> CMatrix {
        let size = self.matrix_size();
        let mut m = zeros(size, size);
        let mut at = 0;
        for (b, &n) in self.block_sizes.iter().enumerate() {
            m.view_mut((at, at), (n, n)).copy_from(&self.block(a, b));
            at += n;
        }
        m
    }

    pub fn element(&self, coords: CVector) -> Result<AlgebraElement> {
        if coords.len() != self.dim {
            return Err(Error::AlgebraMismatch(format!(
                "{} coordinates for an algebra of dimension {}",
                coords.len(),
                self.dim
            )));
        }
        Ok(AlgebraElement { algebra: self.clone(), coords })
    }

    pub fn basis_element(&self, i: usize) -> AlgebraElement {
        AlgebraElement { algebra: self.clone(), coords: self.basis(i) }
    }

    pub fn one(&self) -> AlgebraElement {
        AlgebraElement { algebra: self.clone(), coords: self.unit() }
    }

    pub fn multiply(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_parent(a)?;
        self.check_parent(b)?;
        Ok(AlgebraElement { algebra: self.clone(), coords: self.mul(&a.coords, &b.coords) })
    }

    fn check_parent(&self, a: &AlgebraElement) -> Result<()> {
        if a.algebra != *self {
            return Err(Error::AlgebraMismatch(format!(
                "element of {} used in {}",
                a.algebra.describe(),
                self.describe()
            )));
        }
        Ok(())
    }
}

impl StarAlgebra for FiniteCStarAlgebra {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mul(&self, a: &CVector, b: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for (blk, &n) in self.block_sizes.iter().enumerate() {
            let off = self.offsets[blk];
            for r in 0..n {
                for col in 0..n {
                    let mut acc = ZERO;
                    for k in 0..n {
                        acc += a[off + r * n + k] * b[off + k * n + col];
                    }
                    out[off + r * n + col] = acc;
                }
            }
        }
        out
    }

    fn star(&self, a: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for (blk, &n) in self.block_sizes.iter().enumerate() {
            let off = self.offsets[blk];
            for r in 0..n {
                for col in 0..n {
                    out[off + r * n + col] = a[off + col * n + r].conj();
                }
            }
        }
        out
    }

    fn unit(&self) -> CVector {
        let mut v = CVector::zeros(self.dim);
        for (blk, &n) in self.block_sizes.iter().enumerate() {
            for r in 0..n {
                v[self.offsets[blk] + r * n + r] = ONE;
            }
        }
        v
    }

    fn represent(&self, a: &CVector) -> CMatrix {
        self.to_matrix(a)
    }

    fn norm(&self, a: &CVector) -> f64 {
        (0..self.block_sizes.len())
            .map(|b| op_norm(&self.block(a, b)))
            .fold(0.0, f64::max)
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .block_sizes
            .iter()
            .map(|&n| if n == 1 { "C".to_string() } else { format!("M{n}") })
            .collect();
        parts.join("+")
    }
}

/// An element of a [`FiniteCStarAlgebra`] together with its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    algebra: FiniteCStarAlgebra,
    pub coords: CVector,
}

impl AlgebraElement {
    pub fn algebra(&self) -> &FiniteCStarAlgebra {
        &self.algebra
    }

    pub fn star(&self) -> AlgebraElement {
        AlgebraElement { algebra: self.algebra.clone(), coords: self.algebra.star(&self.coords) }
    }

    pub fn norm(&self) -> f64 {
        self.algebra.norm(&self.coords)
    }

    pub fn to_matrix(&self) -> CMatrix {
        self.algebra.to_matrix(&self.coords)
    }
}

/// A *-automorphism given by its coordinate matrix (columns are images of basis elements).
#[derive(Debug, Clone, PartialEq)]
pub struct StarAutomorphism {
    pub matrix: CMatrix,
    pub checks: CheckList,
}

impl StarAutomorphism {
    pub fn apply(&self, a: &CVector) -> CVector {
        &self.matrix * a
    }

    pub fn identity(n: usize) -> Self {
        StarAutomorphism { matrix: identity(n), checks: CheckList::new() }
    }
}

/// A *-automorphism with `α² = id`, together with its ±1 eigenspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct StarInvolutiveAutomorphism {
    pub matrix: CMatrix,
    /// Orthonormal basis (columns) of `A₊ = ker(α − id)`.
    pub plus_basis: CMatrix,
    /// Orthonormal basis (columns) of `A₋ = ker(α + id)`.
    pub minus_basis: CMatrix,
    pub checks: CheckList,
}

impl StarInvolutiveAutomorphism {
    pub fn apply(&self, a: &CVector) -> CVector {
        &self.matrix * a
    }

    /// `a^# = α(a*)`.
    pub fn sharp<A: StarAlgebra>(&self, algebra: &A, a: &CVector) -> CVector {
        self.apply(&algebra.star(a))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Measure the *-automorphism axioms of a coordinate matrix on basis elements.
pub fn automorphism_checks<A: StarAlgebra>(
    matrix: &CMatrix,
    algebra: &A,
    tol: &TolerancePolicy,
    require_involutive: bool,
) -> Result<CheckList> {
    let n = algebra.dim();
    if matrix.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "automorphism matrix is {}x{}, algebra dimension {n}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let scale = op_norm(matrix).max(1.0);
    let mut list = CheckList::new();

    let r = rank(matrix, tol.rank_cutoff);
    list.push(
        Check::hard("bijective", "α is bijective", (n - r) as f64, 0.0).with_value(r as f64),
    );

    let images: Vec<CVector> = (0..n).map(|i| matrix.column(i).into_owned()).collect();
    let mut mult = Worst::default();
    let mut star = Worst::default();
    for i in 0..n {
        let ei = algebra.basis(i);
        let lhs = matrix * algebra.star(&ei);
        let rhs = algebra.star(&images[i]);
        star.update((lhs - rhs).norm(), (i, i));
        for j in 0..n {
            let prod = algebra.mul(&ei, &algebra.basis(j));
            let lhs = matrix * prod;
            let rhs = algebra.mul(&images[i], &images[j]);
            mult.update((lhs - rhs).norm(), (i, j));
        }
    }
    let thr = tol.bound(scale * scale);
    list.push(Check::hard("multiplicative", "α(ab) = α(a)α(b)", mult.residual, thr));
    list.push(Check::hard("star", "α(a*) = α(a)*", star.residual, tol.bound(scale)));
    let unit = algebra.unit();
    list.push(Check::hard(
        "unital",
        "α(1) = 1",
        (matrix * &unit - &unit).norm(),
        tol.bound(scale * unit.norm()),
    ));
    if require_involutive {
        list.push(Check::hard(
            "involutive",
            "α² = id",
            op_norm(&(matrix * matrix - identity(n))),
            tol.bound(scale * scale),
        ));
    }
    Ok(list)
}

fn first_failure_to_error(list: &CheckList) -> Result<()> {
    match list.first_hard_failure() {
        Some(c) => Err(Error::NotAutomorphism { axiom: c.name.clone(), residual: c.residual }),
        None => Ok(()),
    }
}

/// Verify a (not necessarily involutive) *-automorphism.
pub fn verify_star_automorphism<A: StarAlgebra>(
    matrix: &CMatrix,
    algebra: &A,
    tol: &TolerancePolicy,
) -> Result<StarAutomorphism> {
    let checks = automorphism_checks(matrix, algebra, tol, false)?;
    first_failure_to_error(&checks)?;
    Ok(StarAutomorphism { matrix: matrix.clone(), checks })
}

/// Verify that `matrix` is an involutive *-automorphism and split `A = A₊ ⊕ A₋`.
pub fn verify_automorphism<A: StarAlgebra>(
    matrix: &CMatrix,
    algebra: &A,
    tol: &TolerancePolicy,
) -> Result<StarInvolutiveAutomorphism> {
    let mut checks = automorphism_checks(matrix, algebra, tol, true)?;
    first_failure_to_error(&checks)?;
    let n = algebra.dim();
    let half = c(0.5, 0.0);
    let plus_basis = range_basis(&((identity(n) + matrix) * half), 1e-8);
    let minus_basis = range_basis(&((identity(n) - matrix) * half), 1e-8);
    let total = plus_basis.ncols() + minus_basis.ncols();
    checks.push(
        Check::hard("eigenspace split", "dim A₊ + dim A₋ = dim A", (n as f64 - total as f64).abs(), 0.0)
            .with_value(plus_basis.ncols() as f64),
    );
    first_failure_to_error(&checks)?;
    Ok(StarInvolutiveAutomorphism { matrix: matrix.clone(), plus_basis, minus_basis, checks })
}

/// Orthonormal bases of `A₊` and `A₋`.
pub fn alpha_fixed_split(alpha: &StarInvolutiveAutomorphism) -> (CMatrix, CMatrix) {
    (alpha.plus_basis.clone(), alpha.minus_basis.clone())
}

/// Coordinate matrix of a basis permutation `e_i ↦ e_{perm[i]}`.
pub fn permutation_matrix(perm: &[usize]) -> Result<CMatrix> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Schema(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let mut m = zeros(n, n);
    for (i, &p) in perm.iter().enumerate() {
        m[(p, i)] = ONE;
    }
    Ok(m)
}

/// Coordinate matrix of `a ↦ U a U*` with one matrix `U` per block.
pub fn inner_matrix(algebra: &FiniteCStarAlgebra, unitaries: &[CMatrix]) -> Result<CMatrix> {
    if unitaries.len() != algebra.block_sizes().len() {
        return Err(Error::Dimension(format!(
            "{} conjugating matrices for {} blocks",
            unitaries.len(),
            algebra.block_sizes().len()
        )));
    }
    for (b, u) in unitaries.iter().enumerate() {
        let nb = algebra.block_sizes()[b];
        if u.shape() != (nb, nb) {
            return Err(Error::Dimension(format!("conjugating matrix for block {b} must be {nb}x{nb}")));
        }
    }
    let n = algebra.dim();
    let mut m = zeros(n, n);
    for i in 0..n {
        let ei = algebra.basis(i);
        let blocks: Vec<CMatrix> = unitaries
            .iter()
            .enumerate()
            .map(|(b, u)| u * algebra.block(&ei, b) * u.adjoint())
            .collect();
        m.set_column(i, &algebra.from_blocks(&blocks)?);
    }
    Ok(m)
}

/// `α = 2P − id` for a conditional expectation `P`, checked to be a *-automorphism.
pub fn alpha_from_expectation(
    p: &CMatrix,
    algebra: &FiniteCStarAlgebra,
    tol: &TolerancePolicy,
) -> Result<StarInvolutiveAutomorphism> {
    let n = algebra.dim();
    if p.shape() != (n, n) {
        return Err(Error::Dimension(format!("expectation matrix must be {n}x{n}")));
    }
    let scale = op_norm(p).max(1.0);
    let idem = op_norm(&(p * p - p));
    if idem > tol.bound(scale * scale) {
        return Err(Error::NotExpectation { property: "idempotent".into(), residual: idem });
    }
    let unit = algebra.unit();
    let unital = (p * &unit - &unit).norm();
    if unital > tol.bound(scale) {
        return Err(Error::NotExpectation { property: "unital".into(), residual: unital });
    }
    let mut herm: f64 = 0.0;
    for i in 0..n {
        let ei = algebra.basis(i);
        let lhs = p * algebra.star(&ei);
        let rhs = algebra.star(&(p * &ei));
        herm = herm.max((lhs - rhs).norm());
    }
    if herm > tol.bound(scale) {
        return Err(Error::NotExpectation { property: "Hermitian-preserving".into(), residual: herm });
    }
    let alpha = p * c(2.0, 0.0) - identity(n);
    verify_automorphism(&alpha, algebra, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{diag, I};

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn multiply_examples() {
        let c3 = FiniteCStarAlgebra::commutative(3).unwrap();
        let p = c3.multiply(&c3.basis_element(0), &c3.basis_element(1)).unwrap();
        assert_eq!(p.coords.norm(), 0.0);

        let m2 = FiniteCStarAlgebra::full(2).unwrap();
        let p = m2.multiply(&m2.basis_element(0), &m2.basis_element(1)).unwrap();
        assert_eq!(p.coords, m2.basis(1));

        let a = FiniteCStarAlgebra::new(vec![1, 2]).unwrap();
        let x = a.element(a.basis(0) + a.basis(1)).unwrap();
        let y = a.element(a.basis(0) + a.basis(2)).unwrap();
        assert_eq!(a.multiply(&x, &y).unwrap().coords, a.basis(0) + a.basis(2));

        assert!(matches!(c3.multiply(&c3.one(), &m2.one()), Err(Error::AlgebraMismatch(_))));
    }

    #[test]
    fn star_examples() {
        let c3 = FiniteCStarAlgebra::commutative(3).unwrap();
        let a = c3.element(c3.basis(0) * I).unwrap();
        assert_eq!(a.star().coords, c3.basis(0) * -I);
        let m2 = FiniteCStarAlgebra::full(2).unwrap();
        assert_eq!(m2.basis_element(1).star().coords, m2.basis(2));
    }

    #[test]
    fn automorphism_examples() {
        let c3 = FiniteCStarAlgebra::commutative(3).unwrap();
        let id = verify_automorphism(&identity(3), &c3, &tol()).unwrap();
        assert_eq!((id.plus_basis.ncols(), id.minus_basis.ncols()), (3, 0));

        let flip = verify_automorphism(&permutation_matrix(&[2, 1, 0]).unwrap(), &c3, &tol()).unwrap();
        assert_eq!((flip.plus_basis.ncols(), flip.minus_basis.ncols()), (2, 1));
        let minus = flip.minus_basis.column(0);
        assert!((minus[0] + minus[2]).norm() < 1e-12 && minus[1].norm() < 1e-12);

        let m2 = FiniteCStarAlgebra::full(2).unwrap();
        let s = diag(&[ONE, I]);
        let m = inner_matrix(&m2, &[s]).unwrap();
        match verify_automorphism(&m, &m2, &tol()) {
            Err(Error::NotAutomorphism { axiom, .. }) => assert_eq!(axiom, "involutive"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expectation_examples() {
        let m2 = FiniteCStarAlgebra::full(2).unwrap();
        // compression to the diagonal
        let p = crate::numkit::real_diag(&[1.0, 0.0, 0.0, 1.0]);
        let alpha = alpha_from_expectation(&p, &m2, &tol()).unwrap();
        let expected = inner_matrix(&m2, &[crate::numkit::real_diag(&[1.0, -1.0])]).unwrap();
        assert!((&alpha.matrix - expected).norm() < 1e-14);
        assert_eq!((alpha.plus_basis.ncols(), alpha.minus_basis.ncols()), (2, 2));

        // normalised trace
        let unit = m2.unit();
        let mut p = zeros(4, 4);
        for i in [0, 3] {
            p.set_column(i, &(&unit * c(0.5, 0.0)));
        }
        match alpha_from_expectation(&p, &m2, &tol()) {
            Err(Error::NotAutomorphism { axiom, .. }) => assert_eq!(axiom, "multiplicative"),
            other => panic!("unexpected {other:?}"),
        }

        assert!(alpha_from_expectation(&identity(4), &m2, &tol()).is_ok());
    }

    #[test]
    fn rejects_bad_permutation() {
        assert!(permutation_matrix(&[0, 0, 1]).is_err());
    }

    #[test]
    fn basis_labels_round_trip() {
        let a = FiniteCStarAlgebra::new(vec![1, 2, 3]).unwrap();
        for i in 0..a.dim() {
            let (b, r, col) = a.basis_label(i);
            assert_eq!(a.index_of(b, r, col), i);
        }
        assert_eq!(a.dim(), 14);
    }
}
