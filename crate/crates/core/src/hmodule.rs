//! Free Hilbert modules `A^k` and group actions on them.
//!
//! A module element is a coordinate vector of length `k·N`; component `c`
//! occupies coordinates `c·N .. (c+1)·N`. The module basis element with flat
//! index `m` is `e_{m mod N}` placed in component `m / N`.

use crate::algebra::{verify_star_automorphism, FiniteCStarAlgebra, StarAlgebra, StarAutomorphism};
use crate::check::{Check, CheckList};
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::numkit::{identity, kron, op_norm, pinv, zeros, CMatrix, CVector, TolerancePolicy};

/// `A^k` with `⟨x, y⟩ = Σ_i x_i* y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeHilbertModule {
    algebra: FiniteCStarAlgebra,
    rank: usize,
}

impl FreeHilbertModule {
    pub fn new(algebra: FiniteCStarAlgebra, rank: usize) -> Self {
        FreeHilbertModule { algebra, rank }
    }

    pub fn algebra(&self) -> &FiniteCStarAlgebra {
        &self.algebra
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `k·N`, also the number of module basis elements.
    pub fn dim(&self) -> usize {
        self.rank * self.algebra.dim()
    }

    pub fn component(&self, x: &CVector, c: usize) -> CVector {
        let n = self.algebra.dim();
        x.rows(c * n, n).into_owned()
    }

    pub fn basis(&self, m: usize) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[m] = crate::numkit::ONE;
        v
    }

    /// Coordinate-level inner product.
    pub fn inner(&self, x: &CVector, y: &CVector) -> CVector {
        let mut acc = CVector::zeros(self.algebra.dim());
        for c in 0..self.rank {
            let xc = self.algebra.star(&self.component(x, c));
            acc += self.algebra.mul(&xc, &self.component(y, c));
        }
        acc
    }

    /// Coordinate-level right action `x·a`.
    pub fn act(&self, x: &CVector, a: &CVector) -> CVector {
        let n = self.algebra.dim();
        let mut out = CVector::zeros(self.dim());
        for c in 0..self.rank {
            let prod = self.algebra.mul(&self.component(x, c), a);
            out.rows_mut(c * n, n).copy_from(&prod);
        }
        out
    }

    pub fn element(&self, coords: CVector) -> Result<ModuleElement> {
        if coords.len() != self.dim() {
            return Err(Error::ModuleMismatch(format!(
                "{} coordinates for a module of dimension {}",
                coords.len(),
                self.dim()
            )));
        }
        Ok(ModuleElement { module: self.clone(), coords })
    }

    pub fn inner_product(&self, x: &ModuleElement, y: &ModuleElement) -> Result<crate::algebra::AlgebraElement> {
        self.check_parent(x)?;
        self.check_parent(y)?;
        self.algebra.element(self.inner(&x.coords, &y.coords))
    }

    pub fn right_action(&self, x: &ModuleElement, a: &crate::algebra::AlgebraElement) -> Result<ModuleElement> {
        self.check_parent(x)?;
        if a.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch("module coefficient from a different algebra".into()));
        }
        Ok(ModuleElement { module: self.clone(), coords: self.act(&x.coords, &a.coords) })
    }

    /// Distance from the unit to the span of all basis inner products; zero iff the module is full.
    pub fn fullness_residual(&self) -> f64 {
        let n = self.algebra.dim();
        let dim = self.dim();
        if dim == 0 {
            return self.algebra.unit().norm();
        }
        let mut span = zeros(n, dim * dim);
        for m in 0..dim {
            for p in 0..dim {
                span.set_column(m * dim + p, &self.inner(&self.basis(m), &self.basis(p)));
            }
        }
        let unit = self.algebra.unit();
        let proj = &span * pinv(&span, 1e-12) * &unit;
        (proj - unit).norm()
    }

    fn check_parent(&self, x: &ModuleElement) -> Result<()> {
        if x.module != *self {
            return Err(Error::ModuleMismatch("element of a different module".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleElement {
    module: FreeHilbertModule,
    pub coords: CVector,
}

impl ModuleElement {
    pub fn module(&self) -> &FreeHilbertModule {
        &self.module
    }

    /// `‖x‖ = ‖⟨x, x⟩‖^{1/2}`.
    pub fn norm(&self) -> f64 {
        let a = self.module.algebra();
        a.norm(&self.module.inner(&self.coords, &self.coords)).sqrt()
    }
}

/// A group action `η` on a free module with its induced action `β` on the algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleAction {
    pub group: FiniteGroup,
    pub module: FreeHilbertModule,
    /// `kN × kN` coordinate matrix per group element.
    pub eta: Vec<CMatrix>,
    pub beta: Vec<StarAutomorphism>,
}

impl ModuleAction {
    /// The trivial action of `group`.
    pub fn trivial(group: FiniteGroup, module: FreeHilbertModule) -> Self {
        let n = module.algebra().dim();
        let order = group.order();
        ModuleAction {
            eta: vec![identity(module.dim()); order],
            beta: vec![StarAutomorphism::identity(n); order],
            group,
            module,
        }
    }

    /// `η_t(x)_c = Σ_{c'} w_t[c, c'] β_t(x_{c'})` for a unitary representation `w` on `ℂ^k`.
    /// With `w = None` the action is componentwise.
    pub fn from_beta(
        group: FiniteGroup,
        module: FreeHilbertModule,
        beta: Vec<CMatrix>,
        w: Option<Vec<CMatrix>>,
        tol: &TolerancePolicy,
    ) -> Result<Self> {
        let k = module.rank();
        if beta.len() != group.order() {
            return Err(Error::Dimension(format!("{} beta maps for a group of order {}", beta.len(), group.order())));
        }
        let beta: Vec<StarAutomorphism> = beta
            .iter()
            .map(|m| verify_star_automorphism(m, module.algebra(), tol))
            .collect::<Result<_>>()?;
        let eta = beta
            .iter()
            .enumerate()
            .map(|(t, b)| {
                let wt = w.as_ref().map_or_else(|| identity(k), |w| w[t].clone());
                kron(&wt, &b.matrix)
            })
            .collect();
        Ok(ModuleAction { group, module, eta, beta })
    }

    pub fn apply_eta(&self, t: usize, x: &CVector) -> CVector {
        &self.eta[t] * x
    }

    pub fn apply_beta(&self, t: usize, a: &CVector) -> CVector {
        self.beta[t].apply(a)
    }
}

/// Recover `β_t(a) = ⟨η_t(1·δ₀), η_t(a·δ₀)⟩` from the module action.
pub fn infer_beta(module: &FreeHilbertModule, eta: &[CMatrix], tol: &TolerancePolicy) -> Result<Vec<StarAutomorphism>> {
    if module.rank() == 0 {
        return Err(Error::Schema("beta cannot be inferred on the zero module; give it explicitly".into()));
    }
    let a = module.algebra();
    let n = a.dim();
    let mut one = CVector::zeros(module.dim());
    one.rows_mut(0, n).copy_from(&a.unit());
    eta.iter()
        .map(|et| {
            let lhs = et * &one;
            let mut m = zeros(n, n);
            for i in 0..n {
                let mut x = CVector::zeros(module.dim());
                x.rows_mut(0, n).copy_from(&a.basis(i));
                m.set_column(i, &module.inner(&lhs, &(et * x)));
            }
            verify_star_automorphism(&m, a, tol)
        })
        .collect()
}

/// Measure the dynamical-system identities of a module action.
pub fn action_checks(act: &ModuleAction, tol: &TolerancePolicy) -> Result<(CheckList, Vec<(String, usize, f64)>)> {
    let g = &act.group;
    let module = &act.module;
    let a = module.algebra();
    let n = a.dim();
    let dim = module.dim();
    if act.eta.len() != g.order() || act.beta.len() != g.order() {
        return Err(Error::Dimension("one eta and one beta per group element required".into()));
    }
    if act.eta.iter().any(|m| m.shape() != (dim, dim)) || act.beta.iter().any(|b| b.matrix.shape() != (n, n)) {
        return Err(Error::Dimension("eta must be kN x kN and beta N x N".into()));
    }
    let scale = act.eta.iter().map(op_norm).fold(1.0, f64::max);
    let mut worst: Vec<(String, usize, f64)> = Vec::new();
    let mut record = |name: &str, t: usize, r: f64| match worst.iter_mut().find(|w| w.0 == name) {
        Some(w) if r > w.2 || r.is_nan() => {
            w.1 = t;
            w.2 = r;
        }
        Some(_) => {}
        None => worst.push((name.to_string(), t, r)),
    };

    for t in g.elements() {
        let checks = crate::algebra::automorphism_checks(&act.beta[t].matrix, a, tol, false)?;
        let r = checks.iter().filter(|c| !c.passed()).map(|c| c.residual).fold(0.0, f64::max);
        record("beta automorphism", t, r);
    }
    let e = g.identity();
    record("eta identity", e, op_norm(&(&act.eta[e] - identity(dim))));
    for s in g.elements() {
        for t in g.elements() {
            let st = g.mul(s, t);
            let r = op_norm(&(&act.eta[st] - &act.eta[s] * &act.eta[t]));
            record("eta homomorphism", st, r);
            let r = op_norm(&(&act.beta[st].matrix - &act.beta[s].matrix * &act.beta[t].matrix));
            record("beta homomorphism", st, r);
        }
    }
    for t in g.elements() {
        let images: Vec<CVector> = (0..dim).map(|m| act.eta[t].column(m).into_owned()).collect();
        let mut inner = 0.0f64;
        let mut action = 0.0f64;
        for m in 0..dim {
            let xm = module.basis(m);
            for p in 0..dim {
                let lhs = module.inner(&images[m], &images[p]);
                let rhs = act.apply_beta(t, &module.inner(&xm, &module.basis(p)));
                inner = inner.max((lhs - rhs).norm());
            }
            for i in 0..n {
                let ai = a.basis(i);
                let lhs = &act.eta[t] * module.act(&xm, &ai);
                let rhs = module.act(&images[m], &act.apply_beta(t, &ai));
                action = action.max((lhs - rhs).norm());
            }
        }
        record("inner product", t, inner);
        record("right action", t, action);
    }
    let thr = tol.bound(scale * scale);
    let labels = [
        ("beta automorphism", "β_t is a *-automorphism"),
        ("eta identity", "η_e = id"),
        ("eta homomorphism", "η_st = η_s η_t"),
        ("beta homomorphism", "β_st = β_s β_t"),
        ("inner product", "⟨η_t x, η_t y⟩ = β_t(⟨x, y⟩)"),
        ("right action", "η_t(xa) = η_t(x)β_t(a)"),
    ];
    let list = labels
        .iter()
        .map(|(name, anchor)| {
            let r = worst.iter().find(|w| w.0 == *name).map_or(0.0, |w| w.2);
            Check::hard(*name, *anchor, r, thr)
        })
        .collect();
    Ok((list, worst))
}

/// Verify a module action, failing with the first violated identity.
pub fn verify_action_compatibility(act: &ModuleAction, tol: &TolerancePolicy) -> Result<CheckList> {
    let (list, worst) = action_checks(act, tol)?;
    if let Some(c) = list.first_hard_failure() {
        let element = worst.iter().find(|w| w.0 == c.name).map_or(0, |w| w.1);
        return Err(Error::NotDynamicalSystem { identity: c.name.clone(), element, residual: c.residual });
    }
    Ok(list)
}
