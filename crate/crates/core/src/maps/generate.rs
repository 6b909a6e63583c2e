//! Seeded generation of α-CP maps.
//!
//! Condition (i) cuts out a real subspace `S` of basis tables; its image under
//! the twisted Gram map is a subspace `G(S)` of Hermitian matrices. Instances
//! are points of `G(S) ∩ PSD` found by alternating projection (normalised to
//! unit trace), followed by a facial polish that snaps near-zero eigenvalues
//! to exact zeros. When `G(S)` meets the PSD cone only at zero a positive
//! definite `Z ⟂ G(S)` certifies it, and only the zero map is emitted.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{alpha_cp_report, AlphaCpMap, PhiMap};
use crate::algebra::{FiniteCStarAlgebra, StarAlgebra, StarInvolutiveAutomorphism};
use crate::error::{Error, Result};
use crate::hmodule::FreeHilbertModule;
use crate::krein::KreinSpace;
use crate::numkit::{c, combine, eigh, hermitian_part, identity, random, re, zeros, CMatrix, TolerancePolicy};

type RMatrix = DMatrix<f64>;
type RVector = DVector<f64>;

const PRIMAL_ITERATIONS: usize = 400;
const POLISH_EVERY: usize = 10;
const DUAL_ITERATIONS: usize = 300;
const STARTS_PER_INSTANCE: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct RigidityCertificate {
    /// Positive definite, trace one, orthogonal to every admissible twisted Gram matrix.
    pub z: CMatrix,
    pub min_eigenvalue: f64,
    pub orthogonality_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOutput<A: StarAlgebra = FiniteCStarAlgebra> {
    pub maps: Vec<AlphaCpMap<A>>,
    /// Set when the only admissible map is zero.
    pub rigid: bool,
    pub certificate: Option<RigidityCertificate>,
    /// Real dimension of the space of maps satisfying condition (i).
    pub condition_one_dim: usize,
}

struct Problem<A: StarAlgebra> {
    template: AlphaCpMap<A>,
    /// Orthonormal real basis of `S`, one column per direction.
    basis: RMatrix,
    /// `G(s_k)` for each basis direction.
    grams: Vec<CMatrix>,
    /// Real vectorisation of `grams`, one column each.
    b: RMatrix,
    b_pinv: RMatrix,
    traces: RVector,
}

fn table_len(n: usize, d: usize) -> usize {
    2 * n * d * d
}

fn to_values(theta: &RVector, n: usize, d: usize) -> Vec<CMatrix> {
    (0..n)
        .map(|i| {
            CMatrix::from_fn(d, d, |p, q| {
                let k = ((i * d + p) * d + q) * 2;
                c(theta[k], theta[k + 1])
            })
        })
        .collect()
}

fn from_values(values: &[CMatrix], d: usize) -> RVector {
    let n = values.len();
    let mut theta = RVector::zeros(table_len(n, d));
    for (i, v) in values.iter().enumerate() {
        for p in 0..d {
            for q in 0..d {
                let k = ((i * d + p) * d + q) * 2;
                theta[k] = v[(p, q)].re;
                theta[k + 1] = v[(p, q)].im;
            }
        }
    }
    theta
}

fn vectorise(h: &CMatrix) -> RVector {
    let m = h.len();
    let mut out = RVector::zeros(2 * m);
    for (k, z) in h.iter().enumerate() {
        out[k] = z.re;
        out[m + k] = z.im;
    }
    out
}

fn devectorise(v: &RVector, n: usize) -> CMatrix {
    let m = n * n;
    CMatrix::from_iterator(n, n, (0..m).map(|k| c(v[k], v[m + k])))
}

/// Orthogonal projection onto condition (i): `P_J P_α P_herm`.
fn project_condition_one<A: StarAlgebra>(template: &AlphaCpMap<A>, values: &[CMatrix]) -> Vec<CMatrix> {
    let alg = &template.algebra;
    let d = template.d();
    let j = &template.h1.j;
    let n = alg.dim();
    let half = re(0.5);
    let herm: Vec<CMatrix> = (0..n)
        .map(|i| (&values[i] + combine(values, &alg.star(&alg.basis(i)), (d, d)).adjoint()) * half)
        .collect();
    let inv: Vec<CMatrix> = (0..n)
        .map(|i| (&herm[i] + combine(&herm, &template.alpha.apply(&alg.basis(i)), (d, d))) * half)
        .collect();
    inv.iter().map(|v| (v + j * v * j) * half).collect()
}

fn real_range_basis(m: &RMatrix) -> RMatrix {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
    let mut out = RMatrix::zeros(m.nrows(), keep.len());
    for (col, &k) in keep.iter().enumerate() {
        out.set_column(col, &eig.eigenvectors.column(k));
    }
    out
}

impl<A: StarAlgebra> Problem<A> {
    fn new(algebra: &A, alpha: &StarInvolutiveAutomorphism, h1: &KreinSpace) -> Self {
        let template = AlphaCpMap::zero(algebra.clone(), alpha.clone(), h1.clone());
        let n = algebra.dim();
        let d = h1.dim();
        let len = table_len(n, d);
        let mut proj = RMatrix::zeros(len, len);
        for k in 0..len {
            let mut e = RVector::zeros(len);
            e[k] = 1.0;
            let projected = project_condition_one(&template, &to_values(&e, n, d));
            proj.set_column(k, &from_values(&projected, d));
        }
        let basis = real_range_basis(&proj);
        let grams: Vec<CMatrix> = (0..basis.ncols())
            .map(|k| {
                let phi = AlphaCpMap { values: to_values(&basis.column(k).into_owned(), n, d), ..template.clone() };
                hermitian_part(&phi.alpha_gram_unchecked())
            })
            .collect();
        let size = n * d;
        let mut b = RMatrix::zeros(2 * size * size, grams.len());
        for (k, g) in grams.iter().enumerate() {
            b.set_column(k, &vectorise(g));
        }
        let b_pinv = b.clone().pseudo_inverse(1e-12).expect("pseudo-inverse with non-negative epsilon");
        let traces = RVector::from_iterator(grams.len(), grams.iter().map(|g| g.trace().re));
        Problem { template, basis, grams, b, b_pinv, traces }
    }

    fn dim(&self) -> usize {
        self.basis.ncols()
    }

    fn gram(&self, coeffs: &RVector) -> CMatrix {
        let n = self.template.algebra.dim() * self.template.d();
        let mut g = zeros(n, n);
        for (k, gk) in self.grams.iter().enumerate() {
            if coeffs[k] != 0.0 {
                g += gk * re(coeffs[k]);
            }
        }
        g
    }

    fn map(&self, coeffs: &RVector) -> AlphaCpMap<A> {
        let theta = &self.basis * coeffs;
        AlphaCpMap {
            values: to_values(&theta, self.template.algebra.dim(), self.template.d()),
            ..self.template.clone()
        }
    }

    /// Least-squares coefficients for `target` subject to unit trace.
    fn fit(&self, target: &CMatrix) -> Option<RVector> {
        let c0 = &self.b_pinv * vectorise(target);
        let btb_pinv_t = &self.b_pinv * self.b_pinv.transpose() * &self.traces;
        let denom = self.traces.dot(&btb_pinv_t);
        if denom.abs() < 1e-14 {
            return None;
        }
        let lambda = (1.0 - self.traces.dot(&c0)) / denom;
        Some(c0 + btb_pinv_t * lambda)
    }

    /// Minimal change of `coeffs` making `G(coeffs)` vanish on its near-kernel, keeping unit trace.
    fn polish(&self, coeffs: &RVector) -> Option<RVector> {
        let g = self.gram(coeffs);
        let eig = eigh(&g);
        let lmax = eig.values.first().copied().unwrap_or(0.0);
        if lmax <= 0.0 {
            return None;
        }
        let kernel: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] < 1e-6 * lmax).collect();
        let n = g.nrows();
        let dim = self.dim();
        let rows = 2 * n * kernel.len() + 1;
        let mut cons = RMatrix::zeros(rows, dim);
        let mut rhs = RVector::zeros(rows);
        for (l, gl) in self.grams.iter().enumerate() {
            for (kk, &k) in kernel.iter().enumerate() {
                let col = gl * eig.vectors.column(k);
                for r in 0..n {
                    cons[(2 * (kk * n + r), l)] = col[r].re;
                    cons[(2 * (kk * n + r) + 1, l)] = col[r].im;
                }
            }
            cons[(rows - 1, l)] = self.traces[l];
        }
        rhs[rows - 1] = 1.0;
        let pinv = cons.clone().pseudo_inverse(1e-12).ok()?;
        let resid = &cons * coeffs - rhs;
        Some(coeffs - pinv * resid)
    }

    fn min_relative_eigenvalue(&self, coeffs: &RVector) -> f64 {
        let values = eigh(&self.gram(coeffs)).values;
        let lmax = values.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        values.last().copied().unwrap_or(0.0) / lmax
    }

    fn admissible(&self, coeffs: &RVector) -> bool {
        self.min_relative_eigenvalue(coeffs) >= -1e-13
    }

    /// One alternating-projection run from a random start.
    fn primal<R: Rng>(&self, rng: &mut R) -> Option<RVector> {
        let start = RVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let mut coeffs = self.fit(&self.gram(&start))?;
        for it in 0..PRIMAL_ITERATIONS {
            if self.admissible(&coeffs) {
                return Some(coeffs);
            }
            if it % POLISH_EVERY == POLISH_EVERY - 1 {
                if let Some(p) = self.polish(&coeffs) {
                    if self.admissible(&p) {
                        return Some(p);
                    }
                }
            }
            let eig = eigh(&self.gram(&coeffs));
            let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
            let target = &eig.vectors * crate::numkit::real_diag(&clipped) * eig.vectors.adjoint();
            coeffs = self.fit(&target)?;
        }
        None
    }

    /// Alternating projection between `G(S)^⊥ ∩ {tr = 1}` and `{Z ⪰ εI}`.
    fn dual(&self) -> Option<RigidityCertificate> {
        let n = self.template.algebra.dim() * self.template.d();
        let floor = 1e-4 / n as f64;
        let vid = vectorise(&identity(n));
        let project_perp = |v: &RVector| v - &self.b * (&self.b_pinv * v);
        let id_perp = project_perp(&vid);
        let norm2 = id_perp.norm_squared();
        if norm2 < 1e-20 {
            return None;
        }
        let affine = |v: &RVector| {
            let p = project_perp(v);
            let shift = (1.0 - id_perp.dot(&p)) / norm2;
            p + &id_perp * shift
        };
        let mut z = affine(&(vid / n as f64));
        for _ in 0..DUAL_ITERATIONS {
            let zm = hermitian_part(&devectorise(&z, n));
            let eig = eigh(&zm);
            let min = *eig.values.last().unwrap();
            if min > 1e-8 {
                let orth = (0..self.grams.len())
                    .map(|k| (zm.adjoint() * &self.grams[k]).trace().re.abs())
                    .fold(0.0, f64::max);
                return Some(RigidityCertificate { z: zm, min_eigenvalue: min, orthogonality_residual: orth });
            }
            let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(floor)).collect();
            let target = &eig.vectors * crate::numkit::real_diag(&clipped) * eig.vectors.adjoint();
            z = affine(&vectorise(&target));
        }
        None
    }
}

/// Generate `count` seeded α-CP maps on `(algebra, α, H₁)`.
///
/// Every emitted map passes conditions (i) and (ii). When the cone of
/// admissible maps is `{0}` the zero map is emitted with `rigid` set.
pub fn generate_instances<A: StarAlgebra>(
    algebra: &A,
    alpha: &StarInvolutiveAutomorphism,
    h1: &KreinSpace,
    seed: u64,
    count: usize,
    tol: &TolerancePolicy,
) -> Result<GeneratorOutput<A>> {
    let problem = Problem::new(algebra, alpha, h1);
    let condition_one_dim = problem.dim();
    let zero_output = |certificate| GeneratorOutput {
        maps: vec![problem.template.clone()],
        rigid: true,
        certificate,
        condition_one_dim,
    };
    if problem.dim() == 0 {
        let n = algebra.dim() * h1.dim();
        let z = identity(n) * re(1.0 / n as f64);
        let cert = RigidityCertificate { z, min_eigenvalue: 1.0 / n as f64, orthogonality_residual: 0.0 };
        return Ok(zero_output(Some(cert)));
    }
    if let Some(cert) = problem.dual() {
        return Ok(zero_output(Some(cert)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: Vec<RVector> = Vec::with_capacity(count);
    let mut maps = Vec::with_capacity(count);
    let mut failures = 0;
    while maps.len() < count {
        let candidate = if found.len() >= 2 && rng.random_bool(0.25) {
            // convex combination of earlier instances reaches the interior of the cone
            let i = rng.random_range(0..found.len());
            let j = rng.random_range(0..found.len());
            let t: f64 = rng.random_range(0.1..0.9);
            Some(&found[i] * t + &found[j] * (1.0 - t))
        } else {
            problem.primal(&mut rng)
        };
        let Some(coeffs) = candidate else {
            failures += 1;
            if failures > STARTS_PER_INSTANCE * (count + 1) {
                return Err(Error::NoInstanceFound(format!(
                    "alternating projection found no admissible map after {failures} starts"
                )));
            }
            continue;
        };
        let scale: f64 = rng.random_range(0.5..2.0);
        let phi = problem.map(&(&coeffs * scale));
        if alpha_cp_report(&phi, &[], tol, seed)?.passed() {
            found.push(coeffs);
            maps.push(phi);
        } else {
            failures += 1;
        }
    }
    Ok(GeneratorOutput { maps, rigid: false, certificate: None, condition_one_dim })
}

/// A φ-map on the free module of rank `k` into `H₂` of dimension
/// `k·rank(H) + extra`, where `H = [J₁φ(e_i* e_j)]`. Returns `None` when `H`
/// is not positive semidefinite (no φ-map into a Hilbert space exists).
pub fn phi_map_for<R: Rng>(phi: &AlphaCpMap, k: usize, extra: usize, rng: &mut R, tol: &TolerancePolicy) -> Option<PhiMap> {
    let alg = &phi.algebra;
    let n = alg.dim();
    let d = phi.d();
    let mut h = zeros(n * d, n * d);
    for i in 0..n {
        let ei_star = alg.star(&alg.basis(i));
        for j in 0..n {
            let block = &phi.h1.j * phi.apply(&alg.mul(&ei_star, &alg.basis(j)));
            h.view_mut((i * d, j * d), (d, d)).copy_from(&block);
        }
    }
    let q = crate::numkit::gram_quotient(&hermitian_part(&h), tol).ok()?;
    let r = q.rank;
    let d2 = k * r + extra;
    let u = random::unitary(rng, d2);
    let module = FreeHilbertModule::new(alg.clone(), k);
    let mut values = Vec::with_capacity(k * n);
    for comp in 0..k {
        let mut embed = zeros(d2, r);
        embed.view_mut((comp * r, 0), (r, r)).copy_from(&identity(r));
        let factor = &u * embed * &q.quotient_map;
        for i in 0..n {
            values.push(factor.columns(i * d, d).into_owned());
        }
    }
    PhiMap::new(phi.clone(), module, d2, values).ok()
}
