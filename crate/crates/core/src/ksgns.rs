//! The KSGNS dilation of a φ-map, its verification and uniqueness up to unitaries.
//!
//! `K₁` is realised as `ℂ^r` through the Gram quotient of `A ⊗ H₁`; a class
//! `a ⊗ ξ + N_φ` has coordinates `Q·(a ⊗ ξ)`. `K₂` is the span of
//! `Φ(X)H₁` inside `H₂`, with orthonormal basis the columns of `W*`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{FiniteCStarAlgebra, StarAlgebra};
use crate::check::{Check, CheckList, Worst};
use crate::error::{Error, Result};
use crate::krein::{representation_checks, sharp_matrix, verify_fundamental_symmetry, KreinSpace};
use crate::maps::{AlphaCpMap, PhiMap};
use crate::numkit::{
    combine, descend, gram_quotient, hermitian_part, identity, kron, json, op_norm, pinv, polar_unitary, pushforward,
    random, range_basis, rank, zeros, CMatrix, CVector, GramQuotient, TolerancePolicy,
};

/// The part of the dilation that depends on `φ` only.
#[derive(Debug, Clone)]
pub struct PhiDilation {
    pub quotient: GramQuotient,
    /// `(K₁, J₃)`.
    pub k1: KreinSpace,
    pub pi_phi: Vec<CMatrix>,
    /// `V: H₁ → K₁`.
    pub v: CMatrix,
}

/// `(π_X, π_φ, V, W, (K₁, J₃), K₂)` for a φ-map.
#[derive(Debug, Clone)]
pub struct KsgnsDilation {
    pub quotient: GramQuotient,
    pub k1: KreinSpace,
    pub k2_dim: usize,
    pub pi_phi: Vec<CMatrix>,
    /// `π_X(x_m): K₁ → K₂` on the module basis.
    pub pi_x: Vec<CMatrix>,
    pub v: CMatrix,
    /// Coisometry `W: H₂ → K₂`; `W*` is the inclusion.
    pub w: CMatrix,
    pub minimal: bool,
}

impl KsgnsDilation {
    pub fn k1_dim(&self) -> usize {
        self.k1.dim()
    }

    pub fn pi_phi_of(&self, a: &CVector) -> CMatrix {
        combine(&self.pi_phi, a, (self.k1_dim(), self.k1_dim()))
    }

    pub fn pi_x_of(&self, x: &CVector) -> CMatrix {
        combine(&self.pi_x, x, (self.k2_dim, self.k1_dim()))
    }

    /// `V^# = J₁V*J₃`.
    pub fn v_sharp(&self, j1: &CMatrix) -> CMatrix {
        sharp_matrix(&self.v, j1, &self.k1.j)
    }
}

/// Build `K₁`, `J₃`, `π_φ` and `V` from the Gram quotient of `A ⊗ H₁`.
pub fn dilate_phi<A: StarAlgebra>(phi: &AlphaCpMap<A>, tol: &TolerancePolicy) -> Result<PhiDilation> {
    let alg = &phi.algebra;
    let n = alg.dim();
    let d = phi.d();
    let j1 = &phi.h1.j;
    let g = phi.alpha_gram(tol)?;
    let quotient = gram_quotient(&g, tol)?;
    let id_d = identity(d);
    let pi_phi = (0..n)
        .map(|k| pushforward(&kron(&alg.left_mult(&alg.basis(k)), &id_d), &quotient, tol))
        .collect::<Result<Vec<_>>>()?;
    let j3 = hermitian_part(&pushforward(&kron(&phi.alpha.matrix, j1), &quotient, tol)?);
    let k1 = verify_fundamental_symmetry(&j3, tol)
        .map_err(|e| Error::InternalInconsistency(format!("induced J₃ is not a fundamental symmetry: {e}")))?;
    let unit = CMatrix::from_column_slice(n, 1, alg.unit().as_slice());
    let v = &quotient.quotient_map * kron(&unit, j1);
    Ok(PhiDilation { quotient, k1, pi_phi, v })
}

/// Minimal KSGNS construction for `Φ`.
pub fn construct_ksgns(big_phi: &PhiMap, tol: &TolerancePolicy) -> Result<KsgnsDilation> {
    let phi = &big_phi.phi;
    crate::maps::verify_alpha_cp(phi, &[], tol, 0)?;
    crate::maps::verify_phi_map(big_phi, tol)?;
    let base = dilate_phi(phi, tol)?;
    let alg = &phi.algebra;
    let module = &big_phi.module;
    let n = alg.dim();
    let d = phi.d();
    let d2 = big_phi.h2_dim;
    let dim_x = module.dim();
    let j1 = &phi.h1.j;

    let mut columns = zeros(d2, dim_x * d);
    for m in 0..dim_x {
        columns.view_mut((0, m * d), (d2, d)).copy_from(&big_phi.values[m]);
    }
    let basis = range_basis(&columns, tol.rank_cutoff);
    let w = basis.adjoint();
    let s = w.nrows();

    let mut pi_x = Vec::with_capacity(dim_x);
    for m in 0..dim_x {
        let xm = module.basis(m);
        let mut image = zeros(d2, n * d);
        for i in 0..n {
            let block = big_phi.apply(&module.act(&xm, &alg.basis(i))) * j1;
            image.view_mut((0, i * d), (d2, d)).copy_from(&block);
        }
        let outside = op_norm(&(&image - w.adjoint() * (&w * &image)));
        if outside > tol.bound(op_norm(&image)) {
            return Err(Error::InternalInconsistency(format!("Φ(X)H₁ leaves its own span (residual {outside:e})")));
        }
        pi_x.push(&w * descend(&image, &base.quotient, tol)?);
    }

    let mut dil = KsgnsDilation {
        quotient: base.quotient,
        k1: base.k1,
        k2_dim: s,
        pi_phi: base.pi_phi,
        pi_x,
        v: base.v,
        w,
        minimal: false,
    };
    let (a_rank, x_rank, _) = minimality_ranks(&dil, tol);
    dil.minimal = a_rank == dil.k1_dim() && x_rank == s;
    Ok(dil)
}

/// Ranks of `[π_φ(A)VH₁]`, `[π_X(X)VH₁]` and `[π_φ(A)*VH₁]`.
pub fn minimality_ranks(d: &KsgnsDilation, tol: &TolerancePolicy) -> (usize, usize, usize) {
    let r = d.k1_dim();
    let h1 = d.v.ncols();
    let n = d.pi_phi.len();
    let mut span_a = zeros(r, n * h1);
    let mut span_star = zeros(r, n * h1);
    for (i, p) in d.pi_phi.iter().enumerate() {
        span_a.view_mut((0, i * h1), (r, h1)).copy_from(&(p * &d.v));
        span_star.view_mut((0, i * h1), (r, h1)).copy_from(&(p.adjoint() * &d.v));
    }
    let mut span_x = zeros(d.k2_dim, d.pi_x.len() * h1);
    for (m, p) in d.pi_x.iter().enumerate() {
        span_x.view_mut((0, m * h1), (d.k2_dim, h1)).copy_from(&(p * &d.v));
    }
    (rank(&span_a, tol.rank_cutoff), rank(&span_x, tol.rank_cutoff), rank(&span_star, tol.rank_cutoff))
}

/// Residual table for every identity the dilation must satisfy.
pub fn verify_ksgns(d: &KsgnsDilation, big_phi: &PhiMap, tol: &TolerancePolicy) -> Result<CheckList> {
    let phi = &big_phi.phi;
    let alg = &phi.algebra;
    let module = &big_phi.module;
    let n = alg.dim();
    let d1 = phi.d();
    let r = d.k1_dim();
    let s = d.k2_dim;
    let dim_x = module.dim();
    if d.pi_phi.len() != n || d.pi_x.len() != dim_x || d.v.shape() != (r, d1) || d.w.shape() != (s, big_phi.h2_dim) {
        return Err(Error::Dimension("dilation does not match the φ-map".into()));
    }
    let j1 = &phi.h1.j;
    let j3 = &d.k1.j;
    let mut list = CheckList::new();

    let j3_res = op_norm(&(j3 - j3.adjoint())).max(op_norm(&(j3 * j3 - identity(r))));
    list.push(Check::hard("J3 symmetry", "J₃ = J₃* = J₃⁻¹", j3_res, tol.bound(1.0)));

    let vnorm = op_norm(&d.v).max(1.0);
    let v_sharp = d.v_sharp(j1);
    list.push(Check::hard("V sharp", "V^# = V*", op_norm(&(&v_sharp - d.v.adjoint())), tol.bound(vnorm)));

    let mut twist = 0.0f64;
    for i in 0..n {
        let lhs = d.pi_phi_of(&phi.alpha.apply(&alg.basis(i))) * &d.v;
        let rhs = j3 * &d.pi_phi[i] * &d.v * j1;
        twist = twist.max(op_norm(&(lhs - rhs)));
    }
    let pscale = d.pi_phi.iter().map(op_norm).fold(1.0, f64::max);
    list.push(Check::hard(
        "twisted intertwining",
        "π_φ(α(a))V = J₃π_φ(a)VJ₁",
        twist,
        tol.bound(pscale * vnorm),
    ));

    let coiso = op_norm(&(&d.w * d.w.adjoint() - identity(s)));
    list.push(Check::hard("W coisometry", "WW* = I, W^# = W*", coiso, tol.bound(1.0)));

    let (reps, _) = representation_checks(&d.pi_phi, alg, &d.k1, tol)?;
    for c in reps.iter() {
        let mut c = c.clone();
        c.name = format!("pi_phi {}", c.name);
        c.anchor = format!("π_φ: {}", c.anchor);
        list.push(c);
    }

    let mut recon = 0.0f64;
    let mut phi_scale = 1.0f64;
    for i in 0..n {
        let diff = &phi.values[i] - &v_sharp * &d.pi_phi[i] * &d.v;
        recon = recon.max(op_norm(&diff));
        phi_scale = phi_scale.max(op_norm(&phi.values[i]));
    }
    list.push(Check::hard("reconstruction phi", "φ(a) = V^#π_φ(a)V", recon, tol.bound(phi_scale)));

    let mut recon_x = 0.0f64;
    let mut xscale = 1.0f64;
    for m in 0..dim_x {
        let diff = &big_phi.values[m] - d.w.adjoint() * &d.pi_x[m] * &d.v;
        recon_x = recon_x.max(op_norm(&diff));
        xscale = xscale.max(op_norm(&big_phi.values[m]));
    }
    list.push(Check::hard("reconstruction Phi", "Φ(x) = W^#π_X(x)V", recon_x, tol.bound(xscale)));

    let mut inner = Worst::default();
    for m in 0..dim_x {
        let left = sharp_matrix(&d.pi_x[m], j3, &identity(s));
        for p in 0..dim_x {
            let rhs = d.pi_phi_of(&module.inner(&module.basis(m), &module.basis(p)));
            inner.update(op_norm(&(&left * &d.pi_x[p] - rhs)), (m, p));
        }
    }
    let xnorm = d.pi_x.iter().map(op_norm).fold(1.0, f64::max);
    list.push(Check::hard("pi_X inner product", "π_X(x)^#π_X(y) = π_φ(⟨x,y⟩)", inner.residual, tol.bound(xnorm * xnorm)));

    let mut right = 0.0f64;
    let mut m5 = 0.0f64;
    for m in 0..dim_x {
        let xm = module.basis(m);
        for i in 0..n {
            let xa = module.act(&xm, &alg.basis(i));
            let prod = &d.pi_x[m] * &d.pi_phi[i];
            right = right.max(op_norm(&(d.pi_x_of(&xa) - &prod)));
            m5 = m5.max(op_norm(&(&prod * &d.v - &d.w * big_phi.apply(&xa))));
        }
    }
    list.push(Check::hard("pi_X module map", "π_X(xa) = π_X(x)π_φ(a)", right, tol.bound(xnorm * pscale)));
    list.push(Check::hard("spanning action", "π_X(x)π_φ(a)Vξ = Φ(xa)ξ", m5, tol.bound(xscale)));

    // V*(a ⊗ ξ + N_φ) = J₁φ(a)ξ
    let q = &d.quotient.quotient_map;
    let mut vq = 0.0f64;
    if q.ncols() == n * d1 && q.nrows() == r {
        let lhs = d.v.adjoint() * q;
        for i in 0..n {
            let block = lhs.columns(i * d1, d1).into_owned();
            vq = vq.max(op_norm(&(block - j1 * &phi.values[i])));
        }
    }
    list.push(Check::hard("V adjoint on classes", "V*(a⊗ξ + N_φ) = J₁φ(a)ξ", vq, tol.bound(phi_scale)));

    let unit_phi = phi.apply(&alg.unit());
    if op_norm(&(&unit_phi - identity(d1))) <= tol.bound(1.0) {
        let iso = op_norm(&(d.v.adjoint() * &d.v - identity(d1)));
        list.push(Check::hard("V isometry", "φ(1) = I ⇒ V*V = I", iso, tol.bound(1.0)));
    }

    let (a_rank, x_rank, star_rank) = minimality_ranks(d, tol);
    list.push(
        Check::hard("minimal K1", "K₁ = [π_φ(A)VH₁]", (r as f64 - a_rank as f64).abs(), 0.0).with_value(a_rank as f64),
    );
    list.push(
        Check::hard("minimal K2", "K₂ = [π_X(X)VH₁]", (s as f64 - x_rank as f64).abs(), 0.0).with_value(x_rank as f64),
    );
    list.push(
        Check::hard("minimal K1 adjoint", "K₁ = [π_φ(A)*VH₁]", (r as f64 - star_rank as f64).abs(), 0.0)
            .with_value(star_rank as f64),
    );
    Ok(list)
}

/// Unitaries relating two minimal dilations of the same φ-map.
#[derive(Debug, Clone)]
pub struct Equivalence {
    pub u1: CMatrix,
    pub u2: CMatrix,
    pub checks: CheckList,
}

fn spanning_family(ops: &[CMatrix], v: &CMatrix) -> CMatrix {
    let rows = ops.first().map_or(0, |p| p.nrows());
    let h1 = v.ncols();
    let mut f = zeros(rows, ops.len() * h1);
    for (i, p) in ops.iter().enumerate() {
        f.view_mut((0, i * h1), (rows, h1)).copy_from(&(p * v));
    }
    f
}

fn solve_unitary(from: &CMatrix, to: &CMatrix, cutoff: f64) -> Result<CMatrix> {
    if from.nrows() == 0 {
        return Ok(zeros(0, 0));
    }
    polar_unitary(&(to * pinv(from, cutoff)))
        .map_err(|_| Error::DimensionMismatch("spanning families do not have full rank".into()))
}

/// Solve for `U₁: K₁ → K₁'` and `U₂: K₂ → K₂'` and check all intertwining identities.
pub fn unitary_equivalence(
    d1: &KsgnsDilation,
    d2: &KsgnsDilation,
    big_phi: &PhiMap,
    tol: &TolerancePolicy,
) -> Result<Equivalence> {
    if d1.k1_dim() != d2.k1_dim() {
        return Err(Error::DimensionMismatch(format!("dim K₁ = {} vs {}", d1.k1_dim(), d2.k1_dim())));
    }
    if d1.k2_dim != d2.k2_dim {
        return Err(Error::DimensionMismatch(format!("dim K₂ = {} vs {}", d1.k2_dim, d2.k2_dim)));
    }
    for d in [d1, d2] {
        let checks = verify_ksgns(d, big_phi, tol)?;
        if let Some(c) = checks.first_hard_failure() {
            return Err(Error::ResidualTooLarge { identity: c.anchor.clone(), residual: c.residual, threshold: c.threshold });
        }
    }
    let r = d1.k1_dim();
    let s = d1.k2_dim;
    let u1 = solve_unitary(&spanning_family(&d1.pi_phi, &d1.v), &spanning_family(&d2.pi_phi, &d2.v), tol.rank_cutoff)?;
    let u2 = if s == 0 {
        zeros(0, 0)
    } else {
        solve_unitary(&spanning_family(&d1.pi_x, &d1.v), &spanning_family(&d2.pi_x, &d2.v), tol.rank_cutoff)?
    };
    let u1_sharp = sharp_matrix(&u1, &d1.k1.j, &d2.k1.j);
    let mut list = CheckList::new();
    let unit_thr = 10.0 * tol.rel_tol;
    list.push(Check::hard("U1 unitary", "U₁*U₁ = I", op_norm(&(u1.adjoint() * &u1 - identity(r))), unit_thr));
    list.push(Check::hard("U2 unitary", "U₂*U₂ = I", op_norm(&(u2.adjoint() * &u2 - identity(s))), unit_thr));

    let vscale = op_norm(&d1.v).max(1.0);
    list.push(Check::hard("U1 V", "U₁V = V'", op_norm(&(&u1 * &d1.v - &d2.v)), tol.bound(vscale)));
    let mut pi = 0.0f64;
    let mut pscale = 1.0f64;
    for (p1, p2) in d1.pi_phi.iter().zip(&d2.pi_phi) {
        pi = pi.max(op_norm(&(&u1 * p1 * &u1_sharp - p2)));
        pscale = pscale.max(op_norm(p1));
    }
    list.push(Check::hard("U1 pi_phi", "U₁π_φ(a)U₁^# = π_φ'(a)", pi, tol.bound(pscale)));
    let wscale = op_norm(&d1.w).max(1.0);
    list.push(Check::hard("U2 W", "U₂W = W'", op_norm(&(&u2 * &d1.w - &d2.w)), tol.bound(wscale)));
    let mut px = 0.0f64;
    let mut xscale = 1.0f64;
    for (p1, p2) in d1.pi_x.iter().zip(&d2.pi_x) {
        px = px.max(op_norm(&(&u2 * p1 * &u1_sharp - p2)));
        xscale = xscale.max(op_norm(p1));
    }
    list.push(Check::hard("U2 pi_X", "U₂π_X(x)U₁^# = π_X'(x)", px, tol.bound(xscale)));

    if let Some(c) = list.first_hard_failure() {
        return Err(Error::ResidualTooLarge { identity: c.anchor.clone(), residual: c.residual, threshold: c.threshold });
    }
    Ok(Equivalence { u1, u2, checks: list })
}

/// The dilation transported by unitaries `R₁` on `K₁` and `R₂` on `K₂`.
pub fn conjugate(d: &KsgnsDilation, r1: &CMatrix, r2: &CMatrix, tol: &TolerancePolicy) -> Result<KsgnsDilation> {
    let r1_inv = r1.adjoint();
    let j3 = hermitian_part(&(r1 * &d.k1.j * &r1_inv));
    let k1 = verify_fundamental_symmetry(&j3, tol)?;
    let mut quotient = d.quotient.clone();
    quotient.quotient_map = r1 * &d.quotient.quotient_map;
    quotient.section = &d.quotient.section * &r1_inv;
    Ok(KsgnsDilation {
        quotient,
        k1,
        k2_dim: d.k2_dim,
        pi_phi: d.pi_phi.iter().map(|p| r1 * p * &r1_inv).collect(),
        pi_x: d.pi_x.iter().map(|p| r2 * p * &r1_inv).collect(),
        v: r1 * &d.v,
        w: r2 * &d.w,
        minimal: d.minimal,
    })
}

/// [`conjugate`] with Haar-random unitaries.
pub fn random_conjugate<R: Rng>(d: &KsgnsDilation, rng: &mut R, tol: &TolerancePolicy) -> Result<KsgnsDilation> {
    let r1 = random::unitary(rng, d.k1_dim());
    let r2 = random::unitary(rng, d.k2_dim);
    conjugate(d, &r1, &r2, tol)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct K1Dump {
    pub dim: usize,
    #[serde(rename = "J3", with = "json::matrix")]
    pub j3: CMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct K2Dump {
    pub dim: usize,
}

/// Serialised form of a dilation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DilationDump {
    #[serde(rename = "K1")]
    pub k1: K1Dump,
    #[serde(rename = "K2")]
    pub k2: K2Dump,
    #[serde(with = "json::matrices")]
    pub pi_phi: Vec<CMatrix>,
    #[serde(rename = "pi_X", with = "json::matrices")]
    pub pi_x: Vec<CMatrix>,
    #[serde(rename = "V", with = "json::matrix")]
    pub v: CMatrix,
    #[serde(rename = "W", with = "json::matrix")]
    pub w: CMatrix,
    pub minimal: bool,
    pub residuals: BTreeMap<String, f64>,
}

impl DilationDump {
    pub fn new(d: &KsgnsDilation, checks: &CheckList) -> Self {
        DilationDump {
            k1: K1Dump { dim: d.k1_dim(), j3: d.k1.j.clone() },
            k2: K2Dump { dim: d.k2_dim },
            pi_phi: d.pi_phi.clone(),
            pi_x: d.pi_x.clone(),
            v: d.v.clone(),
            w: d.w.clone(),
            minimal: d.minimal,
            residuals: checks.iter().map(|c| (c.name.clone(), c.residual)).collect(),
        }
    }

    /// Rebuild a dilation of `big_phi` from a dump, restoring empty shapes and the quotient.
    pub fn into_dilation(self, big_phi: &PhiMap, tol: &TolerancePolicy) -> Result<KsgnsDilation> {
        let r = self.k1.dim;
        let s = self.k2.dim;
        let d1 = big_phi.phi.d();
        let d2 = big_phi.h2_dim;
        let reshape = |m: CMatrix, rows: usize, cols: usize| -> Result<CMatrix> {
            if m.shape() == (rows, cols) {
                Ok(m)
            } else if m.is_empty() && rows * cols == 0 {
                Ok(zeros(rows, cols))
            } else {
                Err(Error::Dimension(format!("dump matrix is {}x{}, expected {rows}x{cols}", m.nrows(), m.ncols())))
            }
        };
        let j3 = reshape(self.k1.j3, r, r)?;
        let k1 = verify_fundamental_symmetry(&j3, tol)?;
        let pi_phi = self.pi_phi.into_iter().map(|m| reshape(m, r, r)).collect::<Result<Vec<_>>>()?;
        let pi_x = self.pi_x.into_iter().map(|m| reshape(m, s, r)).collect::<Result<Vec<_>>>()?;
        let v = reshape(self.v, r, d1)?;
        let w = reshape(self.w, s, d2)?;
        if pi_phi.len() != big_phi.phi.algebra.dim() || pi_x.len() != big_phi.module.dim() {
            return Err(Error::Dimension("dump tables do not match the instance".into()));
        }
        // Recover the quotient map from V*Q = [J₁φ(e_i)] through the spanning family.
        let reference = construct_ksgns(big_phi, tol)?;
        if reference.k1_dim() != r {
            return Err(Error::DimensionMismatch(format!("dim K₁ = {} vs {r}", reference.k1_dim())));
        }
        let f_ref = spanning_family(&reference.pi_phi, &reference.v);
        let f_dump = spanning_family(&pi_phi, &v);
        let map = &f_dump * pinv(&f_ref, tol.rank_cutoff);
        let mut quotient = reference.quotient.clone();
        quotient.quotient_map = &map * &reference.quotient.quotient_map;
        quotient.section = &reference.quotient.section * pinv(&map, tol.rank_cutoff);
        Ok(KsgnsDilation { quotient, k1, k2_dim: s, pi_phi, pi_x, v, w, minimal: self.minimal })
    }
}

/// Convenience for callers holding only `φ`: the KSGNS construction of the empty φ-map.
pub fn construct_phi_only(phi: &AlphaCpMap<FiniteCStarAlgebra>, tol: &TolerancePolicy) -> Result<KsgnsDilation> {
    construct_ksgns(&PhiMap::empty(phi.clone()), tol)
}
