//! α-CP maps `φ: A → L(H₁)` and φ-maps `Φ: X → L(H₁, H₂)`.
//!
//! Both maps are stored by their values on a basis. The twisted Gram matrix of
//! `φ` uses the coordinate convention `(i, j) ↦ e_i ⊗ ξ_j` on `A ⊗ H₁`, flat
//! index `i·d + j`; its block `(i, j)` is `φ(α(e_i)*·e_j)`.

mod generate;

pub use generate::{generate_instances, phi_map_for, GeneratorOutput, RigidityCertificate};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{FiniteCStarAlgebra, StarAlgebra, StarInvolutiveAutomorphism};
use crate::check::{Check, CheckList, Worst};
use crate::error::{Error, Result};
use crate::hmodule::FreeHilbertModule;
use crate::krein::{representation_checks, sharp_matrix, KreinSpace};
use crate::numkit::{
    combine, domination_bound, hermitian_residual, op_norm, psd_check, random, zeros, CMatrix, CVector,
    TolerancePolicy,
};

/// Number of seeded random elements added to the condition (iii) samples.
pub const RANDOM_SAMPLES: usize = 4;

/// A linear map `φ: A → L(H₁)` given on the basis of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCpMap<A: StarAlgebra = FiniteCStarAlgebra> {
    pub algebra: A,
    pub alpha: StarInvolutiveAutomorphism,
    pub h1: KreinSpace,
    pub values: Vec<CMatrix>,
}

impl<A: StarAlgebra> AlphaCpMap<A> {
    pub fn new(algebra: A, alpha: StarInvolutiveAutomorphism, h1: KreinSpace, values: Vec<CMatrix>) -> Result<Self> {
        let n = algebra.dim();
        let d = h1.dim();
        if alpha.dim() != n {
            return Err(Error::Dimension(format!("alpha acts on dimension {}, algebra has {n}", alpha.dim())));
        }
        if values.len() != n {
            return Err(Error::Dimension(format!("{} phi values for an algebra of dimension {n}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| v.shape() != (d, d)) {
            return Err(Error::Dimension(format!("phi value {i} is not {d}x{d}")));
        }
        Ok(AlphaCpMap { algebra, alpha, h1, values })
    }

    pub fn zero(algebra: A, alpha: StarInvolutiveAutomorphism, h1: KreinSpace) -> Self {
        let d = h1.dim();
        let values = vec![zeros(d, d); algebra.dim()];
        AlphaCpMap { algebra, alpha, h1, values }
    }

    pub fn d(&self) -> usize {
        self.h1.dim()
    }

    pub fn apply(&self, a: &CVector) -> CMatrix {
        combine(&self.values, a, (self.d(), self.d()))
    }

    /// Block matrix `[φ(α(b_i)*·b_j)]` for a tuple of algebra elements.
    pub fn gram_of(&self, tuple: &[CVector]) -> CMatrix {
        let d = self.d();
        let n = tuple.len();
        let left: Vec<CVector> = tuple.iter().map(|b| self.algebra.star(&self.alpha.apply(b))).collect();
        let mut g = zeros(n * d, n * d);
        for i in 0..n {
            for j in 0..n {
                let block = self.apply(&self.algebra.mul(&left[i], &tuple[j]));
                g.view_mut((i * d, j * d), (d, d)).copy_from(&block);
            }
        }
        g
    }

    fn basis_tuple(&self) -> Vec<CVector> {
        (0..self.algebra.dim()).map(|i| self.algebra.basis(i)).collect()
    }

    /// The twisted Gram matrix without the Hermiticity check.
    pub fn alpha_gram_unchecked(&self) -> CMatrix {
        self.gram_of(&self.basis_tuple())
    }

    /// The twisted Gram matrix; fails if it is not Hermitian.
    pub fn alpha_gram(&self, tol: &TolerancePolicy) -> Result<CMatrix> {
        let g = self.alpha_gram_unchecked();
        let residual = hermitian_residual(&g);
        if residual > tol.bound(op_norm(&g)) {
            return Err(Error::ConditionOneViolated(format!("twisted Gram matrix is not Hermitian (residual {residual:e})")));
        }
        Ok(crate::numkit::hermitian_part(&g))
    }

    /// `[φ(α(a·e_i)*·a·e_j)]`.
    pub fn shifted_gram(&self, a: &CVector) -> CMatrix {
        let tuple: Vec<CVector> = (0..self.algebra.dim()).map(|i| self.algebra.mul(a, &self.algebra.basis(i))).collect();
        self.gram_of(&tuple)
    }

    fn scale(&self) -> f64 {
        self.values.iter().map(op_norm).fold(1.0, f64::max)
    }

    /// Hermiticity and α/J-invariance, measured on the basis.
    pub fn condition_one_checks(&self, tol: &TolerancePolicy) -> CheckList {
        let j = &self.h1.j;
        let mut herm = 0.0f64;
        let mut alpha = 0.0f64;
        let mut jinv = 0.0f64;
        for (i, v) in self.values.iter().enumerate() {
            let ei = self.algebra.basis(i);
            herm = herm.max(op_norm(&(self.apply(&self.algebra.star(&ei)) - v.adjoint())));
            alpha = alpha.max(op_norm(&(self.apply(&self.alpha.apply(&ei)) - v)));
            jinv = jinv.max(op_norm(&(j * v * j - v)));
        }
        let thr = tol.bound(self.scale());
        vec![
            Check::hard("condition (i): hermitian", "φ(a*) = φ(a)*", herm, thr),
            Check::hard("condition (i): alpha-invariant", "φ(α(a)) = φ(a)", alpha, thr),
            Check::hard("condition (i): J-invariant", "J₁φ(a)J₁ = φ(a)", jinv, thr),
        ]
        .into_iter()
        .collect()
    }
}

impl AlphaCpMap<FiniteCStarAlgebra> {
    pub fn apply_element(&self, a: &crate::algebra::AlgebraElement) -> Result<CMatrix> {
        if a.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch("element of a different algebra".into()));
        }
        Ok(self.apply(&a.coords))
    }
}

/// Domination data for one sampled element.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBound {
    pub label: String,
    pub norm: f64,
    /// Minimal `M(a)`; `None` when the kernel condition fails.
    pub bound: Option<f64>,
    pub kernel_residual: f64,
}

impl SampleBound {
    /// `M(a)/‖a‖²`.
    pub fn ratio(&self) -> Option<f64> {
        self.bound.map(|m| if self.norm > 0.0 { m / (self.norm * self.norm) } else { 0.0 })
    }

    /// `K(a) = M(a)/‖a‖`.
    pub fn k(&self) -> Option<f64> {
        self.bound.map(|m| if self.norm > 0.0 { m / self.norm } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCpReport {
    pub checks: CheckList,
    pub min_eigenvalue: Option<f64>,
    pub samples: Vec<SampleBound>,
}

impl AlphaCpReport {
    pub fn passed(&self) -> bool {
        self.checks.all_hard_pass()
    }

    pub fn worst_ratio(&self) -> Option<f64> {
        self.samples.iter().filter_map(SampleBound::ratio).reduce(f64::max)
    }

    fn into_result(self) -> Result<Self> {
        if let Some(c) = self.checks.first_hard_failure() {
            if c.name.starts_with("condition (ii)") {
                return Err(Error::ConditionTwoViolated { min_eigenvalue: self.min_eigenvalue.unwrap_or(f64::NAN) });
            }
            return Err(Error::ConditionOneViolated(format!("`{}` residual {:e}", c.anchor, c.residual)));
        }
        Ok(self)
    }
}

/// Measure conditions (i)–(iii). Only malformed input is an error; failures are recorded in the report.
///
/// Condition (iii) is sampled on the basis, on `samples` and on
/// [`RANDOM_SAMPLES`] seeded random elements, and reported as a warning.
pub fn alpha_cp_report<A: StarAlgebra>(
    phi: &AlphaCpMap<A>,
    samples: &[CVector],
    tol: &TolerancePolicy,
    seed: u64,
) -> Result<AlphaCpReport> {
    let n = phi.algebra.dim();
    if let Some(s) = samples.iter().find(|s| s.len() != n) {
        return Err(Error::Dimension(format!("sample with {} coordinates, algebra dimension {n}", s.len())));
    }
    let mut checks = phi.condition_one_checks(tol);
    let raw = phi.alpha_gram_unchecked();
    let herm = hermitian_residual(&raw);
    let herm_thr = tol.bound(op_norm(&raw));
    checks.push(Check::hard("gram hermitian", "G = G*", herm, herm_thr));
    if herm > herm_thr {
        return Ok(AlphaCpReport { checks, min_eigenvalue: None, samples: vec![] });
    }
    let g = crate::numkit::hermitian_part(&raw);
    let psd = psd_check(&g, tol)?;
    let floor = tol.negativity_floor(op_norm(&g));
    checks.push(
        Check::hard("condition (ii)", "[φ(α(a_i)*a_j)] ⪰ 0", (-psd.min_eigenvalue).max(0.0), floor)
            .with_value(psd.min_eigenvalue),
    );
    if !psd.is_psd {
        return Ok(AlphaCpReport { checks, min_eigenvalue: Some(psd.min_eigenvalue), samples: vec![] });
    }

    let mut elements: Vec<(String, CVector)> = (0..n).map(|i| (format!("e{i}"), phi.algebra.basis(i))).collect();
    elements.extend(samples.iter().enumerate().map(|(k, s)| (format!("sample {k}"), s.clone())));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..RANDOM_SAMPLES {
        let v = random::gaussian(&mut rng, n, 1).column(0).into_owned();
        elements.push((format!("random {k}"), v));
    }
    let mut bounds = Vec::with_capacity(elements.len());
    let mut worst_kernel = (0.0f64, tol.abs_tol);
    for (label, a) in elements {
        let l = crate::numkit::hermitian_part(&phi.shifted_gram(&a));
        let norm = phi.algebra.norm(&a);
        let sb = match domination_bound(&l, &g, tol) {
            Ok(b) => SampleBound { label, norm, bound: Some(b.bound.max(0.0)), kernel_residual: b.kernel_residual },
            Err(Error::Undominated { residual, threshold }) => {
                if residual / threshold > worst_kernel.0 / worst_kernel.1 {
                    worst_kernel = (residual, threshold);
                }
                SampleBound { label, norm, bound: None, kernel_residual: residual }
            }
            Err(e) => return Err(e),
        };
        bounds.push(sb);
    }
    let mut check = Check::warning("condition (iii)", "φ(α(ae_i)*ae_j) ⪯ M(a)[φ(α(e_i)*e_j)]", worst_kernel.0, worst_kernel.1);
    let report = AlphaCpReport { checks: CheckList::new(), min_eigenvalue: Some(psd.min_eigenvalue), samples: bounds };
    if let Some(r) = report.worst_ratio() {
        check = check.with_value(r);
    }
    checks.push(check);
    Ok(AlphaCpReport { checks, ..report })
}

/// Verify conditions (i) and (ii), failing with the violated condition.
pub fn verify_alpha_cp<A: StarAlgebra>(
    phi: &AlphaCpMap<A>,
    samples: &[CVector],
    tol: &TolerancePolicy,
    seed: u64,
) -> Result<AlphaCpReport> {
    alpha_cp_report(phi, samples, tol, seed)?.into_result()
}

/// A linear map `Φ: X → L(H₁, H₂)` on a free module, given on the module basis.
/// `H₂` is a Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMap {
    pub phi: AlphaCpMap,
    pub module: FreeHilbertModule,
    pub h2_dim: usize,
    pub values: Vec<CMatrix>,
}

impl PhiMap {
    pub fn new(phi: AlphaCpMap, module: FreeHilbertModule, h2_dim: usize, values: Vec<CMatrix>) -> Result<Self> {
        if module.algebra() != &phi.algebra {
            return Err(Error::ModuleMismatch("module and phi live over different algebras".into()));
        }
        if values.len() != module.dim() {
            return Err(Error::Dimension(format!(
                "{} Phi values for a module of dimension {}",
                values.len(),
                module.dim()
            )));
        }
        let d1 = phi.d();
        if let Some(m) = values.iter().position(|v| v.shape() != (h2_dim, d1)) {
            return Err(Error::Dimension(format!("Phi value {m} is not {h2_dim}x{d1}")));
        }
        Ok(PhiMap { phi, module, h2_dim, values })
    }

    /// The map with no module (`k = 0`), which is a φ-map for every `φ`.
    pub fn empty(phi: AlphaCpMap) -> Self {
        let module = FreeHilbertModule::new(phi.algebra.clone(), 0);
        PhiMap { phi, module, h2_dim: 0, values: vec![] }
    }

    pub fn apply(&self, x: &CVector) -> CMatrix {
        combine(&self.values, x, (self.h2_dim, self.phi.d()))
    }

    /// `T^# = J₁T*` for `T: H₁ → H₂`.
    pub fn sharp(&self, t: &CMatrix) -> CMatrix {
        &self.phi.h1.j * t.adjoint()
    }

    /// Worst residual of `Φ(x)^#Φ(y) = φ(⟨x, y⟩)` over module basis pairs.
    pub fn identity_residual(&self, tol: &TolerancePolicy) -> (Check, Worst) {
        let dim = self.module.dim();
        let mut worst = Worst::default();
        for m in 0..dim {
            let lhs_left = self.sharp(&self.values[m]);
            for p in 0..dim {
                let lhs = &lhs_left * &self.values[p];
                let rhs = self.phi.apply(&self.module.inner(&self.module.basis(m), &self.module.basis(p)));
                worst.update(op_norm(&(lhs - rhs)), (m, p));
            }
        }
        let scale = self.values.iter().map(op_norm).fold(1.0, f64::max);
        let check = Check::hard("phi-map", "Φ(x)^#Φ(y) = φ(⟨x,y⟩)", worst.residual, tol.bound(scale * scale));
        (check, worst)
    }
}

pub fn verify_phi_map(map: &PhiMap, tol: &TolerancePolicy) -> Result<CheckList> {
    let (check, worst) = map.identity_residual(tol);
    if check.is_hard_failure() {
        return Err(Error::NotPhiMap { residual: worst.residual, left: worst.at.0, right: worst.at.1 });
    }
    Ok(std::iter::once(check).collect())
}

/// Operators of a dilation fed to [`build_from_dilation`].
#[derive(Debug, Clone)]
pub struct DilationInput<'a> {
    pub algebra: &'a FiniteCStarAlgebra,
    pub alpha: &'a StarInvolutiveAutomorphism,
    pub h1: &'a KreinSpace,
    pub module: &'a FreeHilbertModule,
    pub h2_dim: usize,
    /// Representation of `A` on `K₁`.
    pub pi_a: &'a [CMatrix],
    /// Representation of the module, `K₁ → K₂`.
    pub pi_x: &'a [CMatrix],
    pub k1: &'a KreinSpace,
    /// `V: H₁ → K₁`.
    pub v: &'a CMatrix,
    /// `W: H₂ → K₂`.
    pub w: &'a CMatrix,
}

fn premise(list: &mut CheckList, name: &str, anchor: &str, residual: f64, threshold: f64) -> Result<()> {
    let check = Check::hard(name, anchor, residual, threshold);
    let failed = check.is_hard_failure();
    list.push(check);
    if failed {
        return Err(Error::HypothesisViolated { premise: anchor.to_string(), residual });
    }
    Ok(())
}

/// `φ(a) = V^#π_A(a)V` and `Φ(x) = W^#π_X(x)V` from a representation on Hilbert spaces `K₁`, `K₂`.
///
/// Every premise is checked first; the resulting maps are then verified.
pub fn build_from_dilation(input: &DilationInput<'_>, tol: &TolerancePolicy) -> Result<(AlphaCpMap, PhiMap, CheckList)> {
    let alg = input.algebra;
    let n = alg.dim();
    let d1 = input.h1.dim();
    let r = input.k1.dim();
    let dim_x = input.module.dim();
    let s = input.w.nrows();
    if input.v.shape() != (r, d1) || input.w.ncols() != input.h2_dim {
        return Err(Error::Dimension("V must be dim K₁ x dim H₁ and W must have dim H₂ columns".into()));
    }
    if input.pi_a.len() != n || input.pi_x.len() != dim_x || input.pi_x.iter().any(|m| m.shape() != (s, r)) {
        return Err(Error::Dimension("representation tables do not match the algebra, module or spaces".into()));
    }
    let mut list = CheckList::new();
    let j1 = &input.h1.j;
    premise(&mut list, "K1 hilbert", "K₁ is a Hilbert space", op_norm(&(&input.k1.j - crate::numkit::identity(r))), tol.bound(1.0))?;

    let (reps, _) = representation_checks(input.pi_a, alg, input.k1, tol)?;
    for c in reps.iter() {
        premise(&mut list, &format!("pi_A {}", c.name), &format!("π_A: {}", c.anchor), c.residual, c.threshold)?;
    }

    let mut pix = Worst::default();
    for m in 0..dim_x {
        for p in 0..dim_x {
            let lhs = input.pi_x[m].adjoint() * &input.pi_x[p];
            let rhs = combine(input.pi_a, &input.module.inner(&input.module.basis(m), &input.module.basis(p)), (r, r));
            pix.update(op_norm(&(lhs - rhs)), (m, p));
        }
    }
    let scale = input.pi_x.iter().map(op_norm).fold(1.0, f64::max);
    premise(&mut list, "pi_X representation", "π_X(x)^#π_X(y) = π_A(⟨x,y⟩)", pix.residual, tol.bound(scale * scale))?;

    let vnorm = op_norm(input.v).max(1.0);
    let v_sharp = sharp_matrix(input.v, j1, &input.k1.j);
    premise(&mut list, "V sharp", "V^# = V*", op_norm(&(&v_sharp - input.v.adjoint())), tol.bound(vnorm))?;

    let mut twist = 0.0f64;
    for i in 0..n {
        let lhs = combine(input.pi_a, &input.alpha.apply(&alg.basis(i)), (r, r)) * input.v;
        let rhs = &input.k1.j * &input.pi_a[i] * input.v * j1;
        twist = twist.max(op_norm(&(lhs - rhs)));
    }
    premise(&mut list, "twisted intertwining", "π_A(α(a))V = J π_A(a)VJ₁", twist, tol.bound(vnorm * vnorm))?;

    let coiso = op_norm(&(input.w * input.w.adjoint() - crate::numkit::identity(s)));
    premise(&mut list, "W coisometry", "WW* = I", coiso, tol.bound(1.0))?;

    let phi_values: Vec<CMatrix> = input.pi_a.iter().map(|p| &v_sharp * p * input.v).collect();
    let phi = AlphaCpMap::new(alg.clone(), input.alpha.clone(), input.h1.clone(), phi_values)?;
    let big_phi_values: Vec<CMatrix> = input.pi_x.iter().map(|p| input.w.adjoint() * p * input.v).collect();
    let big_phi = PhiMap::new(phi.clone(), input.module.clone(), input.h2_dim, big_phi_values)?;

    let report = alpha_cp_report(&phi, &[], tol, 0)?;
    if !report.passed() {
        let c = report.checks.first_hard_failure().unwrap();
        return Err(Error::InternalInconsistency(format!("constructed φ fails `{}` (residual {:e})", c.anchor, c.residual)));
    }
    list.extend(report.checks);
    let (check, _) = big_phi.identity_residual(tol);
    if check.is_hard_failure() {
        return Err(Error::InternalInconsistency(format!("constructed Φ fails the φ-map identity (residual {:e})", check.residual)));
    }
    list.push(check);
    Ok((phi, big_phi, list))
}
