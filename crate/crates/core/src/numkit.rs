//! Dense complex-matrix kernels.
//!
//! Everything the dilation machinery needs reduces to a handful of
//! operations on Hermitian matrices: eigendecomposition with a reproducible
//! ordering, positivity tests, the coordinate realisation of the quotient of a
//! positive semidefinite form by its null space ([`GramQuotient`]), pushing
//! operators through that quotient, and generalized domination bounds.
//!
//! Non-Hermitian matrices are only ever decomposed through their Hermitian
//! dilation `[[0, C], [C*, 0]]` (see [`svd`]).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Absolute/relative tolerances used by every verifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub rank_cutoff: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            rank_cutoff: 1e-10,
        }
    }
}

impl TolerancePolicy {
    pub fn new(abs_tol: f64, rel_tol: f64, rank_cutoff: f64) -> Result<Self> {
        let policy = TolerancePolicy { abs_tol, rel_tol, rank_cutoff };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("rank_cutoff", self.rank_cutoff),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidTolerance(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    /// Threshold `abs_tol + rel_tol * scale`.
    pub fn bound(&self, scale: f64) -> f64 {
        self.abs_tol + self.rel_tol * scale
    }

    /// `‖x − y‖ ≤ abs_tol + rel_tol·max(‖x‖,‖y‖)` in operator norm.
    pub fn close(&self, x: &CMatrix, y: &CMatrix) -> bool {
        if x.shape() != y.shape() {
            return false;
        }
        op_norm(&(x - y)) <= self.bound(op_norm(x).max(op_norm(y)))
    }

    /// Threshold below which an eigenvalue of a PSD matrix with norm `norm` counts as negative.
    pub fn negativity_floor(&self, norm: f64) -> f64 {
        self.abs_tol * norm.max(1.0)
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn diag(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_row_slice(entries))
}

pub fn real_diag(entries: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(entries.len(), entries.iter().map(|&x| re(x))))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * re(0.5)
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    op_norm(&(m - m.adjoint()))
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `Σ_i coords[i]·values[i]`; `shape` is used when `values` is empty.
pub fn combine(values: &[CMatrix], coords: &CVector, shape: (usize, usize)) -> CMatrix {
    let mut out = zeros(shape.0, shape.1);
    for (v, &x) in values.iter().zip(coords.iter()) {
        if x != ZERO {
            out += v * x;
        }
    }
    out
}

/// Operator (spectral) norm. Zero for empty matrices.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let (r, cdim) = m.shape();
    if r == 1 || cdim == 1 {
        return m.norm();
    }
    let gram = if r <= cdim { m * m.adjoint() } else { m.adjoint() * m };
    let values = hermitian_part(&gram).symmetric_eigenvalues();
    values.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order; each eigenvector is normalised
/// so that its first non-negligible component is real and positive.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn eigh(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen { values: vec![], vectors: zeros(0, 0) };
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the solver's order among exact ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vectors = zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        values.push(eig.eigenvalues[idx]);
        let mut col = eig.eigenvectors.column(idx).into_owned();
        normalize_phase(&mut col);
        vectors.set_column(k, &col);
    }
    HermitianEigen { values, vectors }
}

/// Rotate a vector so its first component above `1e-10·‖v‖` is real positive.
pub fn normalize_phase(v: &mut CVector) {
    let scale = v.norm();
    if scale == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-10 * scale).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

/// Thin singular value decomposition `C = U diag(σ) V*` keeping only the
/// singular values above `cutoff·max(σ_max, 1)`, computed from the Hermitian
/// dilation of `C`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix, cutoff: f64) -> ThinSvd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return ThinSvd { u: zeros(rows, 0), singular_values: vec![], v: zeros(cols, 0) };
    }
    let n = rows + cols;
    let mut dilation = zeros(n, n);
    dilation.view_mut((0, rows), (rows, cols)).copy_from(m);
    dilation.view_mut((rows, 0), (cols, rows)).copy_from(&m.adjoint());
    let eig = eigh(&dilation);
    let sigma_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = cutoff * sigma_max.max(1.0);
    let kept: Vec<usize> = (0..n).filter(|&k| eig.values[k] > floor).collect();
    let r = kept.len();
    let mut u = zeros(rows, r);
    let mut v = zeros(cols, r);
    let sqrt2 = re(std::f64::consts::SQRT_2);
    for (k, &idx) in kept.iter().enumerate() {
        let col = eig.vectors.column(idx);
        let mut uk = col.rows(0, rows).into_owned() * sqrt2;
        let mut vk = col.rows(rows, cols).into_owned() * sqrt2;
        // Re-orthonormalise against roundoff, keeping u and v paired.
        let nu = uk.norm();
        let nv = vk.norm();
        if nu > 0.0 {
            uk /= re(nu);
        }
        if nv > 0.0 {
            vk /= re(nv);
        }
        u.set_column(k, &uk);
        v.set_column(k, &vk);
    }
    let singular_values = kept.iter().map(|&k| eig.values[k]).collect();
    ThinSvd { u, singular_values, v }
}

/// Numerical rank with the relative cutoff convention of [`svd`].
pub fn rank(m: &CMatrix, cutoff: f64) -> usize {
    svd(m, cutoff).singular_values.len()
}

/// Orthonormal basis (columns) of the column space of `m`.
pub fn range_basis(m: &CMatrix, cutoff: f64) -> CMatrix {
    let mut u = svd(m, cutoff).u;
    for k in 0..u.ncols() {
        let mut col = u.column(k).into_owned();
        normalize_phase(&mut col);
        u.set_column(k, &col);
    }
    u
}

/// Moore–Penrose pseudoinverse with the relative cutoff convention of [`svd`].
pub fn pinv(m: &CMatrix, cutoff: f64) -> CMatrix {
    let s = svd(m, cutoff);
    let inv = CMatrix::from_diagonal(&CVector::from_iterator(
        s.singular_values.len(),
        s.singular_values.iter().map(|&x| re(1.0 / x)),
    ));
    &s.v * inv * s.u.adjoint()
}

/// Unitary factor of the polar decomposition of a square matrix.
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::MalformedMatrix(format!("polar factor of non-square {}x{} matrix", m.nrows(), m.ncols())));
    }
    let s = svd(m, 1e-14);
    if s.singular_values.len() != m.nrows() {
        return Err(Error::MalformedMatrix("polar factor of a singular matrix".into()));
    }
    Ok(&s.u * s.v.adjoint())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

fn require_square(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::MalformedMatrix(format!("{what} is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    if !is_finite(m) {
        return Err(Error::MalformedMatrix(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn require_hermitian(m: &CMatrix, tol: &TolerancePolicy, what: &str) -> Result<()> {
    require_square(m, what)?;
    let residual = hermitian_residual(m);
    if residual > tol.bound(op_norm(m)) {
        return Err(Error::MalformedMatrix(format!("{what} is not Hermitian (residual {residual:e})")));
    }
    Ok(())
}

pub fn psd_check(g: &CMatrix, tol: &TolerancePolicy) -> Result<PsdReport> {
    require_hermitian(g, tol, "Gram matrix")?;
    if g.nrows() == 0 {
        return Ok(PsdReport { is_psd: true, min_eigenvalue: 0.0 });
    }
    let eig = eigh(g);
    let min_eigenvalue = *eig.values.last().unwrap();
    let norm = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(PsdReport {
        is_psd: min_eigenvalue >= -tol.negativity_floor(norm),
        min_eigenvalue,
    })
}

/// Coordinates for the quotient of `ℂ^n` with the form `⟨u, v⟩ = u*Gv` by the
/// null space of `G`.
///
/// `quotient_map` (`Q`, `r × n`) sends a vector to its class; the standard inner
/// product on `ℂ^r` then reproduces the form. `section` (`Q⁺`, `n × r`) is a
/// right inverse of `Q`.
#[derive(Debug, Clone)]
pub struct GramQuotient {
    pub ambient_dim: usize,
    pub rank: usize,
    pub quotient_map: CMatrix,
    pub section: CMatrix,
    pub gram: CMatrix,
    pub eigenvalues: Vec<f64>,
}

impl GramQuotient {
    /// Orthogonal projection onto the (numerical) null space of the Gram matrix.
    pub fn kernel_projector(&self) -> CMatrix {
        identity(self.ambient_dim) - &self.section * &self.quotient_map
    }

    pub fn map_norm(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0).max(0.0).sqrt()
    }
}

pub fn gram_quotient(g: &CMatrix, tol: &TolerancePolicy) -> Result<GramQuotient> {
    require_hermitian(g, tol, "Gram matrix")?;
    let n = g.nrows();
    let eig = eigh(g);
    let lambda_max = eig.values.first().copied().unwrap_or(0.0);
    let norm = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(&min) = eig.values.last() {
        let floor = tol.negativity_floor(norm);
        if min < -floor {
            return Err(Error::NotPositive { min_eigenvalue: min, threshold: floor });
        }
    }
    let cutoff = tol.rank_cutoff * lambda_max.max(1.0);
    let r = eig.values.iter().take_while(|&&v| v > cutoff).count();
    let mut q = zeros(r, n);
    let mut section = zeros(n, r);
    for k in 0..r {
        let s = eig.values[k].sqrt();
        let col = eig.vectors.column(k);
        section.set_column(k, &(col * re(1.0 / s)));
        q.set_row(k, &(col.adjoint() * re(s)));
    }
    Ok(GramQuotient {
        ambient_dim: n,
        rank: r,
        quotient_map: q,
        section,
        gram: g.clone(),
        eigenvalues: eig.values,
    })
}

/// Residual of the well-definedness test `‖Q·L·(I − Q⁺Q)‖` and its threshold.
pub fn pushforward_residual(l: &CMatrix, q: &GramQuotient, tol: &TolerancePolicy) -> (f64, f64) {
    let leak = &q.quotient_map * l * q.kernel_projector();
    let residual = op_norm(&leak);
    let threshold = tol.bound(q.map_norm() * op_norm(l));
    (residual, threshold)
}

/// Operator induced on the quotient by `L`, i.e. `Q·L·Q⁺`, after checking that
/// `L` maps the null space of the form into itself.
pub fn pushforward(l: &CMatrix, q: &GramQuotient, tol: &TolerancePolicy) -> Result<CMatrix> {
    if l.nrows() != q.ambient_dim || l.ncols() != q.ambient_dim {
        return Err(Error::MalformedMatrix(format!(
            "pushforward of {}x{} operator through quotient of dimension {}",
            l.nrows(),
            l.ncols(),
            q.ambient_dim
        )));
    }
    let (residual, threshold) = pushforward_residual(l, q, tol);
    if residual > threshold {
        return Err(Error::NotQuotientCompatible { residual, threshold });
    }
    Ok(&q.quotient_map * l * &q.section)
}

/// Like [`pushforward`] for a map from the quotient into another space:
/// `M·Q⁺` after checking `‖M·(I − Q⁺Q)‖`.
pub fn descend(m: &CMatrix, q: &GramQuotient, tol: &TolerancePolicy) -> Result<CMatrix> {
    if m.ncols() != q.ambient_dim {
        return Err(Error::MalformedMatrix(format!(
            "map with {} columns on quotient of dimension {}",
            m.ncols(),
            q.ambient_dim
        )));
    }
    let residual = op_norm(&(m * q.kernel_projector()));
    let threshold = tol.bound(op_norm(m));
    if residual > threshold {
        return Err(Error::NotQuotientCompatible { residual, threshold });
    }
    Ok(m * &q.section)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominationBound {
    /// Smallest `M` with `L ⪯ M·G` (zero when `G = 0`).
    pub bound: f64,
    pub kernel_residual: f64,
}

/// Smallest `M` with `L ⪯ M·G`, found as the largest eigenvalue of the
/// compression `Q⁺* L Q⁺` to the range of `G`.
pub fn domination_bound(l: &CMatrix, g: &CMatrix, tol: &TolerancePolicy) -> Result<DominationBound> {
    require_hermitian(l, tol, "dominated form")?;
    if l.shape() != g.shape() {
        return Err(Error::MalformedMatrix(format!(
            "forms of different sizes: {}x{} vs {}x{}",
            l.nrows(),
            l.ncols(),
            g.nrows(),
            g.ncols()
        )));
    }
    let q = gram_quotient(g, tol)?;
    let kernel_residual = op_norm(&(l * q.kernel_projector()));
    let threshold = tol.bound(op_norm(l));
    if kernel_residual > threshold {
        return Err(Error::Undominated { residual: kernel_residual, threshold });
    }
    if q.rank == 0 {
        return Ok(DominationBound { bound: 0.0, kernel_residual });
    }
    let compressed = q.section.adjoint() * l * &q.section;
    let bound = eigh(&compressed).values[0];
    Ok(DominationBound { bound, kernel_residual })
}

/// Seeded random matrices for instance generation and tests.
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            c(a, b) * std::f64::consts::FRAC_1_SQRT_2
        })
    }

    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        hermitian_part(&gaussian(rng, n, n))
    }

    /// `B*B` for a Gaussian `B` with `rank` rows.
    pub fn psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
        let b = gaussian(rng, rank, n);
        hermitian_part(&(b.adjoint() * b))
    }

    /// Haar-distributed unitary (QR of a Gaussian matrix with phase correction).
    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        if n == 0 {
            return zeros(0, 0);
        }
        let qr = gaussian(rng, n, n).qr();
        let mut q = qr.q();
        let r = qr.r();
        for k in 0..n {
            let d = r[(k, k)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
            let col = q.column(k) * phase;
            q.set_column(k, &col);
        }
        q
    }
}

/// JSON encoding of complex matrices as row-major nested `[re, im]` pairs.
pub mod json {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub type Rows = Vec<Vec<[f64; 2]>>;

    pub fn to_rows(m: &CMatrix) -> Rows {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect()
    }

    pub fn from_rows(rows: &Rows) -> Result<CMatrix> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        let mut m = zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                if !z[0].is_finite() || !z[1].is_finite() {
                    return Err(Error::Schema(format!("non-finite matrix entry at ({i}, {j})")));
                }
                m[(i, j)] = c(z[0], z[1]);
            }
        }
        Ok(m)
    }

    pub fn vector_to_pairs(v: &CVector) -> Vec<[f64; 2]> {
        v.iter().map(|z| [z.re, z.im]).collect()
    }

    pub fn vector_from_pairs(p: &[[f64; 2]]) -> Result<CVector> {
        if p.iter().any(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return Err(Error::Schema("non-finite vector entry".into()));
        }
        Ok(CVector::from_iterator(p.len(), p.iter().map(|z| c(z[0], z[1]))))
    }

    /// `#[serde(with = "numkit::json::matrix")]`
    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
            to_rows(m).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
            let rows = Rows::deserialize(d)?;
            from_rows(&rows).map_err(serde::de::Error::custom)
        }
    }

    /// `#[serde(with = "numkit::json::matrices")]`
    pub mod matrices {
        use super::*;

        pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
            ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
            let all = Vec::<Rows>::deserialize(d)?;
            all.iter().map(|r| from_rows(r).map_err(serde::de::Error::custom)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn psd_check_examples() {
        let z = psd_check(&zeros(3, 3), &tol()).unwrap();
        assert!(z.is_psd);
        assert_eq!(z.min_eigenvalue, 0.0);

        let anti = CMatrix::from_row_slice(2, 2, &[ZERO, re(0.5), re(0.5), ZERO]);
        let r = psd_check(&anti, &tol()).unwrap();
        assert!(!r.is_psd);
        assert!((r.min_eigenvalue + 0.5).abs() < 1e-14);

        let id = psd_check(&identity(4), &tol()).unwrap();
        assert!(id.is_psd);
        assert!((id.min_eigenvalue - 1.0).abs() < 1e-14);
    }

    #[test]
    fn psd_check_rejects_malformed() {
        assert!(matches!(psd_check(&zeros(2, 3), &tol()), Err(Error::MalformedMatrix(_))));
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(psd_check(&m, &tol()), Err(Error::MalformedMatrix(_))));
    }

    #[test]
    fn gram_quotient_examples() {
        let q0 = gram_quotient(&zeros(4, 4), &tol()).unwrap();
        assert_eq!(q0.rank, 0);
        assert_eq!(q0.quotient_map.shape(), (0, 4));

        let q3 = gram_quotient(&identity(3), &tol()).unwrap();
        assert_eq!(q3.rank, 3);
        assert!((&q3.quotient_map * q3.quotient_map.adjoint() - identity(3)).norm() < 1e-14);

        let g = real_diag(&[0.0, 1.0, 0.0]);
        let q = gram_quotient(&g, &tol()).unwrap();
        assert_eq!(q.rank, 1);
        let expected = CMatrix::from_row_slice(1, 3, &[ZERO, ONE, ZERO]);
        assert!((&q.quotient_map - expected).norm() < 1e-15);
    }

    #[test]
    fn gram_quotient_rejects_negative() {
        let g = real_diag(&[1.0, -0.25]);
        assert!(matches!(gram_quotient(&g, &tol()), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn pushforward_examples() {
        let g = real_diag(&[0.0, 1.0, 0.0]);
        let q = gram_quotient(&g, &tol()).unwrap();
        let id = pushforward(&identity(3), &q, &tol()).unwrap();
        assert!((id - identity(1)).norm() < 1e-15);

        // left multiplication by a = (2, 3, 5) on ℂ³
        let l = real_diag(&[2.0, 3.0, 5.0]);
        let hat = pushforward(&l, &q, &tol()).unwrap();
        assert!((hat[(0, 0)] - re(3.0)).norm() < 1e-14);

        let q2 = gram_quotient(&real_diag(&[1.0, 0.0]), &tol()).unwrap();
        let nil = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(pushforward(&nil, &q2, &tol()), Err(Error::NotQuotientCompatible { .. })));
    }

    #[test]
    fn domination_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random::psd(&mut rng, 5, 3);
        let b = domination_bound(&(&g * re(2.0)), &g, &tol()).unwrap();
        assert!((b.bound - 2.0).abs() < 1e-9);

        let g = real_diag(&[0.0, 1.0, 0.0]);
        let b = domination_bound(&(&g * re(9.0)), &g, &tol()).unwrap();
        assert!((b.bound - 9.0).abs() < 1e-12);

        let err = domination_bound(&real_diag(&[0.0, 1.0]), &real_diag(&[1.0, 0.0]), &tol());
        assert!(matches!(err, Err(Error::Undominated { .. })));
    }

    #[test]
    fn eigh_is_sorted_and_phase_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random::hermitian(&mut rng, 6);
        let e = eigh(&h);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for k in 0..6 {
            let col = e.vectors.column(k);
            let first = col.iter().find(|z| z.norm() > 1e-10).unwrap();
            assert!(first.im.abs() < 1e-14 && first.re > 0.0);
        }
        let recon = &e.vectors * real_diag(&e.values) * e.vectors.adjoint();
        assert!((recon - h).norm() < 1e-12);
    }

    #[test]
    fn svd_via_dilation_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random::gaussian(&mut rng, 4, 2) * random::gaussian(&mut rng, 2, 6);
        let s = svd(&b, 1e-12);
        assert_eq!(s.singular_values.len(), 2);
        let recon = &s.u * real_diag(&s.singular_values) * s.v.adjoint();
        assert!((recon - &b).norm() < 1e-12);
        assert!((s.u.adjoint() * &s.u - identity(2)).norm() < 1e-12);
        assert!((pinv(&b, 1e-12) * &b * pinv(&b, 1e-12) - pinv(&b, 1e-12)).norm() < 1e-10);
    }

    #[test]
    fn op_norm_matches_largest_singular_value() {
        let m = real_diag(&[1.0, -3.0, 2.0]);
        assert!((op_norm(&m) - 3.0).abs() < 1e-14);
        assert_eq!(op_norm(&zeros(0, 3)), 0.0);
    }

    #[test]
    fn polar_factor_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random::gaussian(&mut rng, 4, 4);
        let u = polar_unitary(&m).unwrap();
        assert!((u.adjoint() * &u - identity(4)).norm() < 1e-12);
        let u0 = random::unitary(&mut rng, 3);
        assert!((polar_unitary(&u0).unwrap() - &u0).norm() < 1e-12);
    }

    #[test]
    fn tolerance_validation() {
        assert!(TolerancePolicy::new(0.0, 1e-9, 1e-10).is_err());
        assert!(TolerancePolicy::new(1e-10, 1.5, 1e-10).is_err());
        assert!(TolerancePolicy::new(1e-10, 1e-9, 1e-10).is_ok());
    }

    #[test]
    fn json_rows_reject_non_finite_and_ragged() {
        assert!(json::from_rows(&vec![vec![[f64::NAN, 0.0]]]).is_err());
        assert!(json::from_rows(&vec![vec![[0.0, 0.0]], vec![]]).is_err());
        let m = CMatrix::from_row_slice(1, 2, &[c(1.0, -2.0), c(0.5, 0.0)]);
        assert_eq!(json::from_rows(&json::to_rows(&m)).unwrap(), m);
    }
}
