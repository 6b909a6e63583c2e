//! Krein spaces `(H, J)` over the complex scalars, the sharp adjoint and
//! (pseudo-)unitarity tests.

use crate::algebra::StarAlgebra;
use crate::check::{Check, CheckList, Worst};
use crate::error::{Error, Result};
use crate::numkit::{combine, eigh, identity, op_norm, re, CMatrix, CVector, TolerancePolicy, C64};

/// A finite-dimensional Krein space: `ℂ^d` with a fundamental symmetry `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinSpace {
    pub j: CMatrix,
    /// `(rank P₊, rank P₋)`.
    pub signature: (usize, usize),
}

impl KreinSpace {
    /// `ℂ^d` with `J = I`.
    pub fn hilbert(dim: usize) -> Self {
        KreinSpace { j: identity(dim), signature: (dim, 0) }
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn is_hilbert(&self) -> bool {
        self.signature.1 == 0
    }

    /// `P₊ = (I + J)/2`.
    pub fn positive_projection(&self) -> CMatrix {
        (identity(self.dim()) + &self.j) * re(0.5)
    }

    /// `P₋ = (I − J)/2`.
    pub fn negative_projection(&self) -> CMatrix {
        (identity(self.dim()) - &self.j) * re(0.5)
    }

    /// Indefinite form `[x, y] = ⟨Jx, y⟩`, linear in `x`.
    pub fn form(&self, x: &CVector, y: &CVector) -> C64 {
        y.dotc(&(&self.j * x))
    }
}

/// Check `J = J* = J⁻¹` and compute the signature.
pub fn verify_fundamental_symmetry(j: &CMatrix, tol: &TolerancePolicy) -> Result<KreinSpace> {
    if !j.is_square() {
        return Err(Error::Dimension(format!("J is {}x{}, expected square", j.nrows(), j.ncols())));
    }
    let n = j.nrows();
    let selfadj = op_norm(&(j - j.adjoint()));
    if selfadj > tol.bound(op_norm(j)) {
        return Err(Error::NotSymmetry { property: "J = J*".into(), residual: selfadj });
    }
    let square = op_norm(&(j * j - identity(n)));
    if square > tol.bound(1.0) {
        return Err(Error::NotSymmetry { property: "J² = I".into(), residual: square });
    }
    let values = eigh(j).values;
    let plus = values.iter().filter(|&&v| v > 0.0).count();
    Ok(KreinSpace { j: j.clone(), signature: (plus, n - plus) })
}

/// A bounded operator between Krein spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinOperator {
    pub source: KreinSpace,
    pub target: KreinSpace,
    pub matrix: CMatrix,
}

impl KreinOperator {
    pub fn new(source: KreinSpace, target: KreinSpace, matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (target.dim(), source.dim()) {
            return Err(Error::Dimension(format!(
                "operator is {}x{} between spaces of dimension {} -> {}",
                matrix.nrows(),
                matrix.ncols(),
                source.dim(),
                target.dim()
            )));
        }
        Ok(KreinOperator { source, target, matrix })
    }

    /// `T^# = J_source T* J_target`, mapping target to source.
    pub fn sharp(&self) -> KreinOperator {
        KreinOperator {
            source: self.target.clone(),
            target: self.source.clone(),
            matrix: sharp_matrix(&self.matrix, &self.source.j, &self.target.j),
        }
    }
}

/// `J_source T* J_target` for a plain matrix `T`.
pub fn sharp_matrix(t: &CMatrix, j_source: &CMatrix, j_target: &CMatrix) -> CMatrix {
    j_source * t.adjoint() * j_target
}

/// Checks that a basis-indexed table of operators is a Krein *-representation on `k`.
pub fn representation_checks<A: StarAlgebra>(
    pi: &[CMatrix],
    algebra: &A,
    k: &KreinSpace,
    tol: &TolerancePolicy,
) -> Result<(CheckList, [Worst; 3])> {
    let n = algebra.dim();
    let d = k.dim();
    if pi.len() != n {
        return Err(Error::Dimension(format!("{} representation values for algebra of dimension {n}", pi.len())));
    }
    if let Some(bad) = pi.iter().position(|m| m.shape() != (d, d)) {
        return Err(Error::Dimension(format!("representation value {bad} is not {d}x{d}")));
    }
    let scale = pi.iter().map(op_norm).fold(1.0, f64::max);
    let shape = (d, d);
    let mut mult = Worst::default();
    let mut sharp = Worst::default();
    for i in 0..n {
        let ei = algebra.basis(i);
        let star_val = combine(pi, &algebra.star(&ei), shape);
        let sharp_val = sharp_matrix(&pi[i], &k.j, &k.j);
        sharp.update(op_norm(&(star_val - sharp_val)), (i, i));
        for j in 0..n {
            let prod = algebra.mul(&ei, &algebra.basis(j));
            let lhs = combine(pi, &prod, shape);
            let rhs = &pi[i] * &pi[j];
            mult.update(op_norm(&(lhs - rhs)), (i, j));
        }
    }
    let unit = combine(pi, &algebra.unit(), shape);
    let unital = op_norm(&(unit - identity(d)));
    let mut list = CheckList::new();
    list.push(Check::hard("multiplicative", "π(ab) = π(a)π(b)", mult.residual, tol.bound(scale * scale)));
    list.push(Check::hard("unital", "π(1) = I", unital, tol.bound(1.0)));
    list.push(Check::hard("sharp", "π(a*) = π(a)^#", sharp.residual, tol.bound(scale)));
    let unit_worst = Worst { residual: unital, at: (0, 0) };
    Ok((list, [mult, unit_worst, sharp]))
}

/// Verify a Krein representation, failing with the first violated axiom.
pub fn verify_krein_representation<A: StarAlgebra>(
    pi: &[CMatrix],
    algebra: &A,
    k: &KreinSpace,
    tol: &TolerancePolicy,
) -> Result<CheckList> {
    let (list, worst) = representation_checks(pi, algebra, k, tol)?;
    for (check, w) in list.iter().zip(worst.iter()) {
        if check.is_hard_failure() {
            return Err(Error::NotRepresentation {
                axiom: check.name.clone(),
                residual: check.residual,
                witness: format!("basis pair ({}, {})", w.at.0, w.at.1),
            });
        }
    }
    Ok(list)
}

/// Checks `u^#u = uu^# = I`, and when `require_simultaneous` also `u*u = I`, `uJ = Ju`.
pub fn pseudo_unitary_checks(u: &CMatrix, k: &KreinSpace, require_simultaneous: bool, tol: &TolerancePolicy) -> Result<CheckList> {
    let d = k.dim();
    if u.shape() != (d, d) {
        return Err(Error::Dimension(format!("operator is {}x{}, space has dimension {d}", u.nrows(), u.ncols())));
    }
    let us = sharp_matrix(u, &k.j, &k.j);
    let scale = op_norm(u).max(1.0);
    let thr = tol.bound(scale * scale);
    let pseudo = op_norm(&(&us * u - identity(d))).max(op_norm(&(u * &us - identity(d))));
    let mut list = CheckList::new();
    list.push(Check::hard("pseudo-unitary", "u^#u = uu^# = I", pseudo, thr));
    if require_simultaneous {
        let unitary = op_norm(&(u.adjoint() * u - identity(d)));
        let commute = op_norm(&(u * &k.j - &k.j * u));
        list.push(Check::hard("unitary", "u*u = I", unitary, thr));
        list.push(Check::hard("commutes with J", "uJ = Ju", commute, tol.bound(scale)));
    }
    Ok(list)
}

pub fn verify_pseudo_unitary(u: &KreinOperator, require_simultaneous: bool, tol: &TolerancePolicy) -> Result<CheckList> {
    if u.source != u.target {
        return Err(Error::Dimension("pseudo-unitarity needs an endomorphism".into()));
    }
    let list = pseudo_unitary_checks(&u.matrix, &u.source, require_simultaneous, tol)?;
    if let Some(c) = list.first_hard_failure() {
        return Err(if c.name == "pseudo-unitary" {
            Error::NotPseudoUnitary { residual: c.residual }
        } else {
            Error::NotSimultaneous { residual: c.residual }
        });
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FiniteCStarAlgebra;
    use crate::numkit::{c, real_diag, zeros, CMatrix, ONE, ZERO};

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn signed() -> KreinSpace {
        verify_fundamental_symmetry(&real_diag(&[1.0, -1.0]), &tol()).unwrap()
    }

    #[test]
    fn sharp_examples() {
        let h = KreinSpace::hilbert(2);
        let t = CMatrix::from_row_slice(2, 2, &[c(1.0, 2.0), ONE, ZERO, c(0.0, -1.0)]);
        let op = KreinOperator::new(h.clone(), h, t.clone()).unwrap();
        assert_eq!(op.sharp().matrix, t.adjoint());

        let k = signed();
        let e12 = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let op = KreinOperator::new(k.clone(), k, e12.clone()).unwrap();
        assert_eq!(op.sharp().matrix, -e12.transpose());
        assert_eq!(op.sharp().sharp().matrix, e12);
    }

    #[test]
    fn symmetry_examples() {
        assert_eq!(verify_fundamental_symmetry(&identity(2), &tol()).unwrap().signature, (2, 0));
        let swap = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert_eq!(verify_fundamental_symmetry(&swap, &tol()).unwrap().signature, (1, 1));
        assert!(matches!(
            verify_fundamental_symmetry(&real_diag(&[1.0, 2.0]), &tol()),
            Err(Error::NotSymmetry { .. })
        ));
    }

    #[test]
    fn representation_examples() {
        let m2 = FiniteCStarAlgebra::full(2).unwrap();
        let pi: Vec<CMatrix> = (0..4).map(|i| m2.to_matrix(&m2.basis(i))).collect();
        assert!(verify_krein_representation(&pi, &m2, &KreinSpace::hilbert(2), &tol()).is_ok());
        match verify_krein_representation(&pi, &m2, &signed(), &tol()) {
            Err(Error::NotRepresentation { axiom, .. }) => assert_eq!(axiom, "sharp"),
            other => panic!("unexpected {other:?}"),
        }

        let c3 = FiniteCStarAlgebra::commutative(3).unwrap();
        let mut ev = vec![zeros(1, 1); 3];
        ev[1] = identity(1);
        assert!(verify_krein_representation(&ev, &c3, &KreinSpace::hilbert(1), &tol()).is_ok());
    }

    #[test]
    fn pseudo_unitary_examples() {
        let k = signed();
        let id = KreinOperator::new(k.clone(), k.clone(), identity(2)).unwrap();
        assert!(verify_pseudo_unitary(&id, true, &tol()).is_ok());

        let th: f64 = 0.7;
        let phase = crate::numkit::diag(&[c(th.cos(), th.sin()), c(th.cos(), -th.sin())]);
        let op = KreinOperator::new(k.clone(), k.clone(), phase).unwrap();
        assert!(verify_pseudo_unitary(&op, true, &tol()).is_ok());

        let s: f64 = 0.4;
        let boost = CMatrix::from_row_slice(2, 2, &[re(s.cosh()), re(s.sinh()), re(s.sinh()), re(s.cosh())]);
        let op = KreinOperator::new(k.clone(), k, boost).unwrap();
        assert!(verify_pseudo_unitary(&op, false, &tol()).is_ok());
        assert!(matches!(verify_pseudo_unitary(&op, true, &tol()), Err(Error::NotSimultaneous { .. })));
    }
}
