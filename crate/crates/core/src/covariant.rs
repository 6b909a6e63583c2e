//! Pseudo-unitary representations of finite groups and the covariant KSGNS construction.

pub use crate::group::FiniteGroup;

use crate::algebra::StarAlgebra;
use crate::check::{Check, CheckList};
use crate::error::{Error, Result};
use crate::hmodule::ModuleAction;
use crate::krein::{pseudo_unitary_checks, sharp_matrix, verify_pseudo_unitary, KreinOperator, KreinSpace};
use crate::ksgns::{construct_ksgns, unitary_equivalence, verify_ksgns, Equivalence, KsgnsDilation};
use crate::maps::PhiMap;
use crate::numkit::{identity, kron, op_norm, pushforward, CMatrix, TolerancePolicy};

/// `t ↦ u_t` on a Krein space with `u_{st} = u_s u_t` and `u_{t⁻¹} = u_t^#`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoUnitaryRep {
    pub group: FiniteGroup,
    pub space: KreinSpace,
    pub u: Vec<CMatrix>,
    /// Every `u_t` is unitary and commutes with `J`.
    pub simultaneous: bool,
    pub checks: CheckList,
}

impl PseudoUnitaryRep {
    /// `u_t^#`.
    pub fn sharp(&self, t: usize) -> CMatrix {
        sharp_matrix(&self.u[t], &self.space.j, &self.space.j)
    }
}

/// Representation axioms with the element or pair that realises each maximum.
pub fn rep_checks(u: &[CMatrix], group: &FiniteGroup, space: &KreinSpace, tol: &TolerancePolicy) -> Result<(CheckList, bool)> {
    let d = space.dim();
    if u.len() != group.order() {
        return Err(Error::Dimension(format!("{} operators for a group of order {}", u.len(), group.order())));
    }
    if u.iter().any(|m| m.shape() != (d, d)) {
        return Err(Error::Dimension(format!("representation operators must be {d}x{d}")));
    }
    let scale = u.iter().map(op_norm).fold(1.0, f64::max);
    let thr = tol.bound(scale * scale);
    let mut list = CheckList::new();
    let e = group.identity();
    list.push(Check::hard("rep identity", "u_e = I", op_norm(&(&u[e] - identity(d))), tol.bound(1.0)));
    let mut hom = (0.0f64, (0, 0));
    for s in group.elements() {
        for t in group.elements() {
            let r = op_norm(&(&u[group.mul(s, t)] - &u[s] * &u[t]));
            if r > hom.0 || r.is_nan() {
                hom = (r, (s, t));
            }
        }
    }
    list.push(Check::hard("rep homomorphism", "u_st = u_s u_t", hom.0, thr));
    let mut inv = (0.0f64, 0);
    let mut simultaneous = true;
    let mut pseudo = 0.0f64;
    for t in group.elements() {
        let r = op_norm(&(&u[group.inv(t)] - sharp_matrix(&u[t], &space.j, &space.j)));
        if r > inv.0 || r.is_nan() {
            inv = (r, t);
        }
        let pu = pseudo_unitary_checks(&u[t], space, true, tol)?;
        pseudo = pseudo.max(pu.residual("pseudo-unitary").unwrap_or(0.0));
        simultaneous &= pu.all_hard_pass();
    }
    list.push(Check::hard("rep inverse", "u_{t⁻¹} = u_t^#", inv.0, thr));
    list.push(Check::hard("rep pseudo-unitary", "u_t^#u_t = I", pseudo, thr));
    Ok((list, simultaneous))
}

/// Verify a pseudo-unitary representation, optionally requiring simultaneity.
pub fn verify_rep(
    u: Vec<CMatrix>,
    group: &FiniteGroup,
    space: &KreinSpace,
    require_simultaneous: bool,
    tol: &TolerancePolicy,
) -> Result<PseudoUnitaryRep> {
    let (list, simultaneous) = rep_checks(&u, group, space, tol)?;
    if let Some(c) = list.first_hard_failure() {
        if c.name != "rep pseudo-unitary" {
            return Err(Error::NotRepresentation {
                axiom: c.name.clone(),
                residual: c.residual,
                witness: "group table".into(),
            });
        }
    }
    for t in group.elements() {
        let op = KreinOperator::new(space.clone(), space.clone(), u[t].clone())?;
        verify_pseudo_unitary(&op, require_simultaneous, tol)?;
    }
    Ok(PseudoUnitaryRep { group: group.clone(), space: space.clone(), u, simultaneous, checks: list })
}

/// Covariance identities with witnesses `(identity, t, basis, residual)`.
fn covariance_table(
    big_phi: &PhiMap,
    act: &ModuleAction,
    u: &PseudoUnitaryRep,
    u_prime: &PseudoUnitaryRep,
) -> Vec<(&'static str, &'static str, usize, usize, f64)> {
    let phi = &big_phi.phi;
    let alg = &phi.algebra;
    let module = &big_phi.module;
    let alpha = &phi.alpha.matrix;
    let mut comm = (0.0f64, 0, 0);
    let mut phicov = (0.0f64, 0, 0);
    let mut bigcov = (0.0f64, 0, 0);
    let upd = |w: &mut (f64, usize, usize), r: f64, t: usize, i: usize| {
        if r > w.0 || r.is_nan() {
            *w = (r, t, i);
        }
    };
    for t in act.group.elements() {
        let beta = &act.beta[t].matrix;
        let diff = beta * alpha - alpha * beta;
        let ut_sharp = u.sharp(t);
        for i in 0..alg.dim() {
            upd(&mut comm, diff.column(i).norm(), t, i);
            let lhs = phi.apply(&act.apply_beta(t, &alg.basis(i)));
            let rhs = &u.u[t] * &phi.values[i] * &ut_sharp;
            upd(&mut phicov, op_norm(&(lhs - rhs)), t, i);
        }
        for m in 0..module.dim() {
            let lhs = big_phi.apply(&act.apply_eta(t, &module.basis(m)));
            let rhs = &u_prime.u[t] * &big_phi.values[m] * &ut_sharp;
            upd(&mut bigcov, op_norm(&(lhs - rhs)), t, m);
        }
    }
    vec![
        ("alpha beta commute", "β_t∘α = α∘β_t", comm.1, comm.2, comm.0),
        ("phi covariance", "φ(β_t(a)) = u_tφ(a)u_t^#", phicov.1, phicov.2, phicov.0),
        ("Phi covariance", "Φ(η_t(x)) = u'_tΦ(x)u_t^#", bigcov.1, bigcov.2, bigcov.0),
    ]
}

/// Residuals of the covariance identities; fails with the first violated one.
pub fn verify_covariance(
    big_phi: &PhiMap,
    act: &ModuleAction,
    u: &PseudoUnitaryRep,
    u_prime: &PseudoUnitaryRep,
    tol: &TolerancePolicy,
) -> Result<CheckList> {
    let list = covariance_checks(big_phi, act, u, u_prime, tol)?;
    if let Some(c) = list.first_hard_failure() {
        let table = covariance_table(big_phi, act, u, u_prime);
        let row = table.iter().find(|r| r.0 == c.name).unwrap();
        return Err(Error::NotCovariant { identity: row.1.to_string(), element: row.2, basis: row.3, residual: row.4 });
    }
    Ok(list)
}

/// Covariance residuals as a report.
pub fn covariance_checks(
    big_phi: &PhiMap,
    act: &ModuleAction,
    u: &PseudoUnitaryRep,
    u_prime: &PseudoUnitaryRep,
    tol: &TolerancePolicy,
) -> Result<CheckList> {
    let phi = &big_phi.phi;
    if act.module != big_phi.module || u.group != act.group || u_prime.group != act.group {
        return Err(Error::ModuleMismatch("action, representations and φ-map do not fit together".into()));
    }
    if u.space.dim() != phi.d() || u_prime.space.dim() != big_phi.h2_dim {
        return Err(Error::Dimension("u must act on H₁ and u' on H₂".into()));
    }
    let scale = phi.values.iter().chain(&big_phi.values).map(op_norm).fold(1.0, f64::max);
    Ok(covariance_table(big_phi, act, u, u_prime)
        .into_iter()
        .map(|(name, anchor, _, _, r)| Check::hard(name, anchor, r, tol.bound(scale)))
        .collect())
}

/// `v_t(a ⊗ ξ + N_φ) = β_t(a) ⊗ u_tξ + N_φ` on `K₁`.
pub fn induce_v(d: &KsgnsDilation, act: &ModuleAction, u: &PseudoUnitaryRep, tol: &TolerancePolicy) -> Result<PseudoUnitaryRep> {
    let v = act
        .group
        .elements()
        .map(|t| pushforward(&kron(&act.beta[t].matrix, &u.u[t]), &d.quotient, tol))
        .collect::<Result<Vec<_>>>()?;
    let rep = verify_rep(v, &act.group, &d.k1, true, tol)?;
    for t in act.group.elements() {
        let r = op_norm(&(&d.v * &u.u[t] - &rep.u[t] * &d.v));
        if r > tol.bound(op_norm(&d.v).max(1.0)) {
            return Err(Error::RepIntertwiningFailed { identity: "Vu_t = v_tV".into(), element: t, residual: r });
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone)]
pub struct CovariantDilation {
    pub base: KsgnsDilation,
    pub v: PseudoUnitaryRep,
    pub v_prime: PseudoUnitaryRep,
}

/// `v'_t = W u'_t W*` after checking that `K₂` is invariant under `u'_t` and `u'_t*`.
pub fn restrict_u_prime(d: &KsgnsDilation, u_prime: &PseudoUnitaryRep, tol: &TolerancePolicy) -> Result<Vec<CMatrix>> {
    let inclusion = d.w.adjoint();
    let proj_perp = identity(d.w.ncols()) - &inclusion * &d.w;
    let mut out = Vec::with_capacity(u_prime.u.len());
    for (t, ut) in u_prime.u.iter().enumerate() {
        let leak = op_norm(&(&proj_perp * ut * &inclusion)).max(op_norm(&(&proj_perp * ut.adjoint() * &inclusion)));
        if leak > tol.bound(op_norm(ut).max(1.0)) {
            return Err(Error::NotInvariant { element: t, residual: leak });
        }
        out.push(&d.w * ut * &inclusion);
    }
    Ok(out)
}

/// The covariant KSGNS construction. Covariance of `Φ` itself is not re-checked
/// here; see [`verify_covariance`].
pub fn covariant_construct(
    big_phi: &PhiMap,
    act: &ModuleAction,
    u: &PseudoUnitaryRep,
    u_prime: &PseudoUnitaryRep,
    tol: &TolerancePolicy,
) -> Result<CovariantDilation> {
    if !u.simultaneous {
        return Err(Error::NotSimultaneous { residual: u.checks.max_residual() });
    }
    let base = construct_ksgns(big_phi, tol)?;
    let vp = restrict_u_prime(&base, u_prime, tol)?;
    let v = induce_v(&base, act, u, tol)?;
    let k2 = KreinSpace::hilbert(base.k2_dim);
    let v_prime = verify_rep(vp, &act.group, &k2, true, tol)?;
    Ok(CovariantDilation { base, v, v_prime })
}

/// Residuals of the covariant-dilation identities on top of [`verify_ksgns`].
pub fn verify_covariant_dilation(
    c: &CovariantDilation,
    big_phi: &PhiMap,
    act: &ModuleAction,
    u: &PseudoUnitaryRep,
    u_prime: &PseudoUnitaryRep,
    tol: &TolerancePolicy,
) -> Result<CheckList> {
    let d = &c.base;
    let mut list = verify_ksgns(d, big_phi, tol)?;
    let alg = &big_phi.phi.algebra;
    let module = &big_phi.module;
    let mut sharp_star = 0.0f64;
    let mut sharp_star_p = 0.0f64;
    let mut v_int = 0.0f64;
    let mut w_int = 0.0f64;
    let mut pi_cov = 0.0f64;
    let mut pix_cov = 0.0f64;
    let mut simult = 0.0f64;
    for t in act.group.elements() {
        let vt = &c.v.u[t];
        let vpt = &c.v_prime.u[t];
        let vt_sharp = c.v.sharp(t);
        sharp_star = sharp_star.max(op_norm(&(&vt_sharp - vt.adjoint())));
        sharp_star_p = sharp_star_p.max(op_norm(&(c.v_prime.sharp(t) - vpt.adjoint())));
        v_int = v_int.max(op_norm(&(&d.v * &u.u[t] - vt * &d.v)));
        w_int = w_int.max(op_norm(&(&d.w * &u_prime.u[t] - vpt * &d.w)));
        simult = simult.max(op_norm(&(vt * &d.k1.j - &d.k1.j * vt)));
        for i in 0..alg.dim() {
            let lhs = d.pi_phi_of(&act.apply_beta(t, &alg.basis(i)));
            pi_cov = pi_cov.max(op_norm(&(lhs - vt * &d.pi_phi[i] * &vt_sharp)));
        }
        for m in 0..module.dim() {
            let lhs = d.pi_x_of(&act.apply_eta(t, &module.basis(m)));
            pix_cov = pix_cov.max(op_norm(&(lhs - vpt * &d.pi_x[m] * &vt_sharp)));
        }
    }
    let scale = d.pi_phi.iter().chain(&d.pi_x).map(op_norm).fold(op_norm(&d.v).max(1.0), f64::max);
    let thr = tol.bound(scale);
    list.push(Check::hard("v sharp", "v_t^# = v_t*", sharp_star, thr));
    list.push(Check::hard("v' sharp", "v'_t^# = v'_t*", sharp_star_p, thr));
    list.push(Check::hard("V intertwines", "Vu_t = v_tV", v_int, thr));
    list.push(Check::hard("W intertwines", "Wu'_t = v'_tW", w_int, thr));
    list.push(Check::hard("v commutes with J3", "v_tJ₃ = J₃v_t", simult, thr));
    list.push(Check::hard("pi_phi covariance", "π_φ(β_t(a)) = v_tπ_φ(a)v_t^#", pi_cov, thr));
    list.push(Check::hard("pi_X covariance", "π_X(η_t(x)) = v'_tπ_X(x)v_t^#", pix_cov, thr));
    Ok(list)
}

#[derive(Debug, Clone)]
pub struct CovariantEquivalence {
    pub base: Equivalence,
    pub checks: CheckList,
}

/// Unitaries relating two minimal covariant dilations, checked against the group representations.
pub fn covariant_equivalence(
    c1: &CovariantDilation,
    c2: &CovariantDilation,
    big_phi: &PhiMap,
    tol: &TolerancePolicy,
) -> Result<CovariantEquivalence> {
    let base = unitary_equivalence(&c1.base, &c2.base, big_phi, tol)?;
    let u1_sharp = sharp_matrix(&base.u1, &c1.base.k1.j, &c2.base.k1.j);
    let u2_sharp = base.u2.adjoint();
    let mut list = base.checks.clone();
    let mut worst_v = (0.0f64, 0);
    let mut worst_vp = (0.0f64, 0);
    for t in c1.v.group.elements() {
        let r = op_norm(&(&base.u1 * &c1.v.u[t] * &u1_sharp - &c2.v.u[t]));
        if r > worst_v.0 {
            worst_v = (r, t);
        }
        let r = op_norm(&(&base.u2 * &c1.v_prime.u[t] * &u2_sharp - &c2.v_prime.u[t]));
        if r > worst_vp.0 {
            worst_vp = (r, t);
        }
    }
    let thr = tol.bound(1.0);
    for (name, anchor, w) in [
        ("U1 v", "U₁v_tU₁^# = w_t", worst_v),
        ("U2 v'", "U₂v'_tU₂^# = w'_t", worst_vp),
    ] {
        let check = Check::hard(name, anchor, w.0, thr);
        if check.is_hard_failure() {
            return Err(Error::RepIntertwiningFailed { identity: anchor.into(), element: w.1, residual: w.0 });
        }
        list.push(check);
    }
    Ok(CovariantEquivalence { base, checks: list })
}

/// Transport a covariant dilation by unitaries `R₁` on `K₁` and `R₂` on `K₂`.
pub fn conjugate_covariant(
    c: &CovariantDilation,
    r1: &CMatrix,
    r2: &CMatrix,
    tol: &TolerancePolicy,
) -> Result<CovariantDilation> {
    let base = crate::ksgns::conjugate(&c.base, r1, r2, tol)?;
    let v = c.v.u.iter().map(|m| r1 * m * r1.adjoint()).collect();
    let vp = c.v_prime.u.iter().map(|m| r2 * m * r2.adjoint()).collect();
    let v = verify_rep(v, &c.v.group, &base.k1, true, tol)?;
    let v_prime = verify_rep(vp, &c.v.group, &KreinSpace::hilbert(base.k2_dim), true, tol)?;
    Ok(CovariantDilation { base, v, v_prime })
}
