//! Naive oracles shared by the crossed-product tests and the acceptance suite.

use kdil::algebra::{FiniteCStarAlgebra, StarAlgebra};
use kdil::instance::Instance;
use kdil::numkit::{c, CMatrix, CVector};

/// Matrix of `Σ_k coords[k]·values[k]`, term by term.
pub fn naive_combine(values: &[CMatrix], coords: &CVector, rows: usize, cols: usize) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    for (k, v) in values.iter().enumerate() {
        for r in 0..rows {
            for s in 0..cols {
                out[(r, s)] += coords[k] * v[(r, s)];
            }
        }
    }
    out
}

/// Both sides of the crossed φ-map identity on `(δ_t x_m, δ_s x_p)`, from the
/// instance data only: module components as matrices, sums as explicit loops.
pub fn naive_sides(inst: &Instance, a: usize, b: usize) -> (CMatrix, CMatrix) {
    let cov = inst.covariant.as_ref().unwrap();
    let g = &cov.action.group;
    let alg = inst.algebra();
    let n = alg.dim();
    let k = inst.big_phi.module.rank();
    let dx = k * n;
    let d1 = inst.phi().d();
    let (t1, m1) = (a / dx, a % dx);
    let (t2, m2) = (b / dx, b % dx);
    let j1 = &inst.phi().h1.j;

    let phi_tilde_1 = &inst.big_phi.values[m1] * &cov.u.u[t1];
    let phi_tilde_2 = &inst.big_phi.values[m2] * &cov.u.u[t2];
    let lhs = j1 * phi_tilde_1.adjoint() * phi_tilde_2;

    // ⟨δ_{t1} x, δ_{t2} y⟩ lives at s = t1⁻¹t2 with value β_{t1⁻¹}(⟨x, y⟩).
    let mut rhs = CMatrix::zeros(d1, d1);
    for t in g.elements() {
        for s in g.elements() {
            if t != t1 || g.mul(t, s) != t2 {
                continue;
            }
            let mut ip = CMatrix::zeros(alg.matrix_size(), alg.matrix_size());
            for comp in 0..k {
                let mut xv = CVector::zeros(n);
                let mut yv = CVector::zeros(n);
                if m1 / n == comp {
                    xv[m1 % n] = c(1.0, 0.0);
                }
                if m2 / n == comp {
                    yv[m2 % n] = c(1.0, 0.0);
                }
                ip += alg.to_matrix(&xv).adjoint() * alg.to_matrix(&yv);
            }
            let coords = alg.from_blocks(&split_blocks(alg, &ip)).unwrap();
            let twisted = &cov.action.beta[g.inv(t)].matrix * coords;
            let val = naive_combine(&inst.phi().values, &twisted, d1, d1);
            rhs += val * &cov.u.u[s];
        }
    }
    (lhs, rhs)
}

pub fn split_blocks(alg: &FiniteCStarAlgebra, m: &CMatrix) -> Vec<CMatrix> {
    let mut off = 0;
    alg.block_sizes()
        .iter()
        .map(|&nb| {
            let b = m.view((off, off), (nb, nb)).into_owned();
            off += nb;
            b
        })
        .collect()
}
