//! Crossed products by a finite group and the maps induced by a covariant dilation.
//!
//! The group carries counting measure. Elements of `G ×_β A` are functions
//! `G → A` stored as `|G|·N` coordinates, block `t` holding `f(t)`, with
//! `(f∗g)(s) = Σ_t f(t)β_t(g(t⁻¹s))` and `f*(t) = β_t(f(t⁻¹)*)`.

use serde::{Deserialize, Serialize};

use crate::algebra::{verify_automorphism, FiniteCStarAlgebra, StarAlgebra, StarInvolutiveAutomorphism};
use crate::check::{Check, CheckList, Worst};
use crate::covariant::{verify_covariance, CovariantDilation, FiniteGroup, PseudoUnitaryRep};
use crate::error::{Error, Result};
use crate::hmodule::{FreeHilbertModule, ModuleAction};
use crate::krein::{representation_checks, sharp_matrix};
use crate::maps::{verify_alpha_cp, AlphaCpMap, AlphaCpReport, PhiMap};
use crate::numkit::json::{vector_from_pairs, vector_to_pairs};
use crate::numkit::{combine, identity, kron, op_norm, rank, zeros, CMatrix, CVector, TolerancePolicy};

/// `G ×_β A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossedAlgebra {
    group: FiniteGroup,
    base: FiniteCStarAlgebra,
    beta: Vec<CMatrix>,
}

impl CrossedAlgebra {
    pub fn new(group: FiniteGroup, base: FiniteCStarAlgebra, beta: Vec<CMatrix>) -> Result<Self> {
        let n = base.dim();
        if beta.len() != group.order() || beta.iter().any(|b| b.shape() != (n, n)) {
            return Err(Error::Dimension(format!("need {} beta matrices of size {n}x{n}", group.order())));
        }
        Ok(CrossedAlgebra { group, base, beta })
    }

    pub fn from_action(act: &ModuleAction) -> Self {
        CrossedAlgebra {
            group: act.group.clone(),
            base: act.module.algebra().clone(),
            beta: act.beta.iter().map(|b| b.matrix.clone()).collect(),
        }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn base(&self) -> &FiniteCStarAlgebra {
        &self.base
    }

    pub fn beta(&self, t: usize) -> &CMatrix {
        &self.beta[t]
    }

    /// `f(t)`.
    pub fn part(&self, f: &CVector, t: usize) -> CVector {
        let n = self.base.dim();
        f.rows(t * n, n).into_owned()
    }

    /// Assemble `f` from its values `f(t)`.
    pub fn from_parts(&self, parts: &[CVector]) -> Result<CVector> {
        let n = self.base.dim();
        if parts.len() != self.group.order() || parts.iter().any(|p| p.len() != n) {
            return Err(Error::Dimension(format!("need {} parts of length {n}", self.group.order())));
        }
        let mut out = CVector::zeros(self.dim());
        for (t, p) in parts.iter().enumerate() {
            out.rows_mut(t * n, n).copy_from(p);
        }
        Ok(out)
    }

    /// `δ_t·a`.
    pub fn delta(&self, t: usize, a: &CVector) -> CVector {
        let n = self.base.dim();
        let mut out = CVector::zeros(self.dim());
        out.rows_mut(t * n, n).copy_from(a);
        out
    }

    /// `α̃(f) = α∘f`.
    pub fn lift(&self, alpha: &CMatrix) -> CMatrix {
        kron(&identity(self.group.order()), alpha)
    }
}

impl StarAlgebra for CrossedAlgebra {
    fn dim(&self) -> usize {
        self.group.order() * self.base.dim()
    }

    fn mul(&self, f: &CVector, g: &CVector) -> CVector {
        let n = self.base.dim();
        let mut out = CVector::zeros(self.dim());
        for t in self.group.elements() {
            let ft = self.part(f, t);
            if ft.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            for s in self.group.elements() {
                let term = self.base.mul(&ft, &(&self.beta[t] * self.part(g, s)));
                let r = self.group.mul(t, s);
                let mut slot = out.rows_mut(r * n, n);
                slot += term;
            }
        }
        out
    }

    fn star(&self, f: &CVector) -> CVector {
        let n = self.base.dim();
        let mut out = CVector::zeros(self.dim());
        for t in self.group.elements() {
            let v = &self.beta[t] * self.base.star(&self.part(f, self.group.inv(t)));
            out.rows_mut(t * n, n).copy_from(&v);
        }
        out
    }

    fn unit(&self) -> CVector {
        self.delta(self.group.identity(), &self.base.unit())
    }

    /// Regular representation on `ℓ²(G) ⊗ ℂ^m`:
    /// `(π(a)ξ)(s) = β_{s⁻¹}(a)ξ(s)` and `(λ_tξ)(s) = ξ(t⁻¹s)`.
    fn represent(&self, f: &CVector) -> CMatrix {
        let m = self.base.matrix_size();
        let g = self.group.order();
        let mut out = zeros(g * m, g * m);
        for t in self.group.elements() {
            let ft = self.part(f, t);
            for s in self.group.elements() {
                let block = self.base.to_matrix(&(&self.beta[self.group.inv(s)] * &ft));
                let col = self.group.mul(self.group.inv(t), s);
                let mut view = out.view_mut((s * m, col * m), (m, m));
                view += block;
            }
        }
        out
    }

    fn describe(&self) -> String {
        format!("G{}x{}", self.group.order(), self.base.describe())
    }
}

/// `G ×_η X`: functions `G → X`, block `t` holding `x̂(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossedModule {
    pub algebra: CrossedAlgebra,
    pub module: FreeHilbertModule,
}

impl CrossedModule {
    pub fn new(act: &ModuleAction) -> Self {
        CrossedModule { algebra: CrossedAlgebra::from_action(act), module: act.module.clone() }
    }

    pub fn dim(&self) -> usize {
        self.algebra.group.order() * self.module.dim()
    }

    pub fn part(&self, x: &CVector, t: usize) -> CVector {
        let k = self.module.dim();
        x.rows(t * k, k).into_owned()
    }

    pub fn delta(&self, t: usize, x: &CVector) -> CVector {
        let k = self.module.dim();
        let mut out = CVector::zeros(self.dim());
        out.rows_mut(t * k, k).copy_from(x);
        out
    }

    pub fn basis(&self, i: usize) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[i] = crate::numkit::ONE;
        v
    }

    /// `⟨x̂, ŷ⟩(s) = Σ_t β_{t⁻¹}(⟨x̂(t), ŷ(ts)⟩)`.
    pub fn inner(&self, x: &CVector, y: &CVector) -> CVector {
        let g = &self.algebra.group;
        let n = self.algebra.base.dim();
        let mut out = CVector::zeros(self.algebra.dim());
        for t in g.elements() {
            let xt = self.part(x, t);
            let beta_inv = &self.algebra.beta[g.inv(t)];
            for s in g.elements() {
                let v = beta_inv * self.module.inner(&xt, &self.part(y, g.mul(t, s)));
                let mut slot = out.rows_mut(s * n, n);
                slot += v;
            }
        }
        out
    }

    /// `(x̂f)(s) = Σ_t x̂(t)β_t(f(t⁻¹s))`.
    pub fn act(&self, x: &CVector, f: &CVector) -> CVector {
        let g = &self.algebra.group;
        let k = self.module.dim();
        let mut out = CVector::zeros(self.dim());
        for t in g.elements() {
            let xt = self.part(x, t);
            for s in g.elements() {
                let a = &self.algebra.beta[t] * self.algebra.part(f, g.mul(g.inv(t), s));
                let mut slot = out.rows_mut(s * k, k);
                slot += self.module.act(&xt, &a);
            }
        }
        out
    }
}

/// A crossed element in JSON form, `{"f": [coords per group index]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossedElementJson {
    pub f: Vec<Vec<[f64; 2]>>,
}

impl CrossedElementJson {
    pub fn from_coords(algebra: &CrossedAlgebra, f: &CVector) -> Self {
        CrossedElementJson { f: algebra.group.elements().map(|t| vector_to_pairs(&algebra.part(f, t))).collect() }
    }

    pub fn to_coords(&self, algebra: &CrossedAlgebra) -> Result<CVector> {
        let parts = self.f.iter().map(|p| vector_from_pairs(p)).collect::<Result<Vec<_>>>()?;
        algebra.from_parts(&parts)
    }
}

/// `φ̃`, `π̂_φ`, `π̂_X` and `Φ̃` on the crossed bases, with their residual table.
#[derive(Debug, Clone)]
pub struct InducedMaps {
    pub module: CrossedModule,
    pub phi_tilde: AlphaCpMap<CrossedAlgebra>,
    pub pi_hat_phi: Vec<CMatrix>,
    pub pi_hat_x: Vec<CMatrix>,
    /// `Φ̃` on the crossed-module basis.
    pub big_phi_tilde: Vec<CMatrix>,
    pub report: AlphaCpReport,
    pub checks: CheckList,
}

impl InducedMaps {
    pub fn algebra(&self) -> &CrossedAlgebra {
        &self.phi_tilde.algebra
    }

    pub fn phi_tilde_of(&self, f: &CVector) -> CMatrix {
        self.phi_tilde.apply(f)
    }

    pub fn big_phi_tilde_of(&self, x: &CVector) -> CMatrix {
        let d2 = self.big_phi_tilde.first().map_or(0, |m| m.nrows());
        combine(&self.big_phi_tilde, x, (d2, self.phi_tilde.d()))
    }
}

fn table(values: &[CMatrix], ops: &[CMatrix], group_order: usize) -> Vec<CMatrix> {
    (0..group_order).flat_map(|t| values.iter().map(move |v| v * &ops[t])).collect()
}

/// Build the induced maps of a covariant dilation and check every identity they must satisfy.
pub fn induce_crossed_maps(
    c: &CovariantDilation,
    big_phi: &PhiMap,
    act: &ModuleAction,
    u: &PseudoUnitaryRep,
    u_prime: &PseudoUnitaryRep,
    tol: &TolerancePolicy,
) -> Result<InducedMaps> {
    let mut checks = verify_covariance(big_phi, act, u, u_prime, tol)?;
    let phi = &big_phi.phi;
    let module = CrossedModule::new(act);
    let crossed = module.algebra.clone();
    let g = crossed.group.order();
    let alpha_tilde: StarInvolutiveAutomorphism = verify_automorphism(&crossed.lift(&phi.alpha.matrix), &crossed, tol)?;

    let phi_tilde = AlphaCpMap::new(crossed.clone(), alpha_tilde, phi.h1.clone(), table(&phi.values, &u.u, g))?;
    let report = verify_alpha_cp(&phi_tilde, &[], tol, 0)?;
    checks.extend(report.checks.clone());

    let d = &c.base;
    let pi_hat_phi = table(&d.pi_phi, &c.v.u, g);
    let pi_hat_x = table(&d.pi_x, &c.v.u, g);
    let big_phi_tilde = table(&big_phi.values, &u.u, g);
    let j1 = &phi.h1.j;
    let dim_z = module.dim();

    // Φ̃(z₁)^#Φ̃(z₂) = φ̃(⟨z₁, z₂⟩) on crossed-module basis pairs.
    let mut ident = Worst::default();
    for a in 0..dim_z {
        let left = j1 * big_phi_tilde[a].adjoint();
        for b in 0..dim_z {
            let rhs = phi_tilde.apply(&module.inner(&module.basis(a), &module.basis(b)));
            ident.update(op_norm(&(&left * &big_phi_tilde[b] - rhs)), (a, b));
        }
    }
    let scale = big_phi_tilde.iter().map(op_norm).fold(1.0, f64::max);
    let id_check = Check::hard("crossed phi-map", "Φ̃(z₁)^#Φ̃(z₂) = φ̃(⟨z₁,z₂⟩)", ident.residual, tol.bound(scale * scale));
    if id_check.is_hard_failure() {
        return Err(Error::IdentityResidualTooLarge {
            identity: id_check.anchor,
            residual: ident.residual,
            left: ident.at.0,
            right: ident.at.1,
        });
    }
    checks.push(id_check);

    let v_sharp = d.v_sharp(j1);
    let mut recon = 0.0f64;
    for (i, p) in pi_hat_phi.iter().enumerate() {
        recon = recon.max(op_norm(&(&phi_tilde.values[i] - &v_sharp * p * &d.v)));
    }
    let pscale = phi_tilde.values.iter().map(op_norm).fold(1.0, f64::max);
    checks.push(Check::hard("crossed reconstruction phi", "φ̃(f) = V^#π̂_φ(f)V", recon, tol.bound(pscale)));

    let mut recon_x = 0.0f64;
    for (m, p) in pi_hat_x.iter().enumerate() {
        recon_x = recon_x.max(op_norm(&(&big_phi_tilde[m] - d.w.adjoint() * p * &d.v)));
    }
    checks.push(Check::hard("crossed reconstruction Phi", "Φ̃(x̂) = W^#π̂_X(x̂)V", recon_x, tol.bound(scale)));

    let (reps, _) = representation_checks(&pi_hat_phi, &crossed, &d.k1, tol)?;
    for ch in reps.iter() {
        let mut ch = ch.clone();
        ch.name = format!("pi_hat_phi {}", ch.name);
        checks.push(ch);
    }

    let mut inner = 0.0f64;
    let s = d.k2_dim;
    for a in 0..dim_z {
        let left = sharp_matrix(&pi_hat_x[a], &d.k1.j, &identity(s));
        for b in 0..dim_z {
            let rhs = combine(&pi_hat_phi, &module.inner(&module.basis(a), &module.basis(b)), (d.k1_dim(), d.k1_dim()));
            inner = inner.max(op_norm(&(&left * &pi_hat_x[b] - rhs)));
        }
    }
    let xscale = pi_hat_x.iter().map(op_norm).fold(1.0, f64::max);
    checks.push(Check::hard("pi_hat_X inner product", "π̂_X(z₁)^#π̂_X(z₂) = π̂_φ(⟨z₁,z₂⟩)", inner, tol.bound(xscale * xscale)));

    // u_{t₀}φ̃(f)u_{t₀}^# = φ̃(f') with f'(t) = β_{t₀}(f(t₀⁻¹tt₀)).
    let grp = &crossed.group;
    let mut cov = 0.0f64;
    for t0 in grp.elements() {
        let us = u.sharp(t0);
        for idx in 0..crossed.dim() {
            let f = crossed.basis(idx);
            let parts: Vec<CVector> = grp
                .elements()
                .map(|t| &crossed.beta[t0] * crossed.part(&f, grp.mul(grp.mul(grp.inv(t0), t), t0)))
                .collect();
            let shifted = crossed.from_parts(&parts)?;
            let lhs = &u.u[t0] * &phi_tilde.values[idx] * &us;
            cov = cov.max(op_norm(&(lhs - phi_tilde.apply(&shifted))));
        }
    }
    checks.push(Check::hard("phi_tilde covariance", "u_tφ̃(f)u_t^# = φ̃(Ad δ_t(f))", cov, tol.bound(pscale)));

    let h1 = d.v.ncols();
    let mut span_a = zeros(d.k1_dim(), pi_hat_phi.len() * h1);
    for (i, p) in pi_hat_phi.iter().enumerate() {
        span_a.view_mut((0, i * h1), (d.k1_dim(), h1)).copy_from(&(p * &d.v));
    }
    let mut span_x = zeros(s, pi_hat_x.len() * h1);
    for (i, p) in pi_hat_x.iter().enumerate() {
        span_x.view_mut((0, i * h1), (s, h1)).copy_from(&(p * &d.v));
    }
    let ra = rank(&span_a, tol.rank_cutoff);
    let rx = rank(&span_x, tol.rank_cutoff);
    checks.push(
        Check::hard("crossed minimal K1", "K₁ = [π̂_φ(G×A)VH₁]", (d.k1_dim() as f64 - ra as f64).abs(), 0.0)
            .with_value(ra as f64),
    );
    checks.push(
        Check::hard("crossed minimal K2", "K₂ = [π̂_X(G×X)VH₁]", (s as f64 - rx as f64).abs(), 0.0).with_value(rx as f64),
    );

    Ok(InducedMaps { module, phi_tilde, pi_hat_phi, pi_hat_x, big_phi_tilde, report, checks })
}
