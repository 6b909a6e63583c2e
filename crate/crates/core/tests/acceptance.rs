//! Acceptance criteria, one line per criterion. Runs without the libtest harness
//! so the lines always appear in `cargo test` output.

use std::process::{Command, ExitCode};
use std::time::Instant;

use kdil::algebra::{inner_matrix, permutation_matrix, verify_automorphism, FiniteCStarAlgebra, StarAlgebra};
use kdil::covariant::{covariant_construct, verify_covariance, verify_covariant_dilation};
use kdil::crossed::induce_crossed_maps;
use kdil::error::Error;
use kdil::instance::{preset, AlphaSpec, Instance};
use kdil::krein::{verify_fundamental_symmetry, KreinSpace};
use kdil::ksgns::{construct_ksgns, construct_phi_only, random_conjugate, unitary_equivalence, verify_ksgns};
use kdil::maps::{alpha_cp_report, generate_instances, phi_map_for, verify_alpha_cp, AlphaCpMap, PhiMap};
use kdil::numkit::json::to_rows;
use kdil::numkit::{c, identity, op_norm, random, re, real_diag, CMatrix, TolerancePolicy};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

type Outcome = Result<String, String>;

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn fixture(name: &str) -> Instance {
    preset(name).unwrap().build(&tol()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Eigenvalues of a Hermitian matrix straight from nalgebra.
fn oracle_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().copied().collect()
}

fn oracle_rank(m: &DMatrix<Complex64>, cutoff: f64) -> usize {
    let ev = oracle_eigenvalues(m);
    let top = ev.iter().map(|x| x.abs()).fold(1.0, f64::max);
    ev.iter().filter(|&&l| l > cutoff * top).count()
}

fn unit(n: usize, p: usize, q: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    e[(p, q)] = c(1.0, 0.0);
    e
}

/// 1. α = id, J₁ = I: condition (ii) agrees with the Choi matrix, dim K₁ with the Gram rank.
fn classical_reduction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut draws, mut cp) = (0, 0);
    for n in 1..=3usize {
        let alg = FiniteCStarAlgebra::full(n).unwrap();
        let alpha = verify_automorphism(&identity(n * n), &alg, &tol()).unwrap();
        for d in 1..=3usize {
            for _ in 0..14 {
                let terms = rng.random_range(1..=3usize);
                let kraus: Vec<(f64, CMatrix)> = (0..terms)
                    .map(|k| {
                        let sign = if k > 0 && rng.random_bool(0.3) { -1.0 } else { 1.0 };
                        (sign, random::gaussian(&mut rng, n, d))
                    })
                    .collect();
                let apply = |x: &CMatrix| -> CMatrix {
                    kraus.iter().map(|(s, k)| k.adjoint() * x * k * re(*s)).sum()
                };
                let values: Vec<CMatrix> = (0..n * n).map(|i| apply(&unit(n, i / n, i % n))).collect();
                let phi = AlphaCpMap::new(alg.clone(), alpha.clone(), KreinSpace::hilbert(d), values).unwrap();

                let mut choi = DMatrix::<Complex64>::zeros(n * d, n * d);
                for p in 0..n {
                    for q in 0..n {
                        choi.view_mut((p * d, q * d), (d, d)).copy_from(&apply(&unit(n, p, q)));
                    }
                }
                let choi_ev = oracle_eigenvalues(&choi);
                let scale = choi_ev.iter().map(|x| x.abs()).fold(1.0, f64::max);
                let choi_psd = choi_ev.iter().all(|&l| l >= -1e-9 * scale);
                let passes = verify_alpha_cp(&phi, &[], &tol(), 0).is_ok();
                ensure(passes == choi_psd, || format!("n={n} d={d}: verify {passes}, Choi PSD {choi_psd}"))?;
                draws += 1;
                if !passes {
                    continue;
                }
                cp += 1;
                // Gram [⟨ξ_a, φ(e_i*e_j)ξ_b⟩] assembled term by term from matrix units.
                let mut gram = DMatrix::<Complex64>::zeros(n * n * d, n * n * d);
                for i in 0..n * n {
                    for j in 0..n * n {
                        let ei = unit(n, i / n, i % n);
                        let ej = unit(n, j / n, j % n);
                        gram.view_mut((i * d, j * d), (d, d)).copy_from(&apply(&(ei.adjoint() * ej)));
                    }
                }
                let expect = oracle_rank(&gram, 1e-10);
                let got = construct_phi_only(&phi, &tol()).map_err(|e| e.to_string())?.k1_dim();
                ensure(got == expect && expect == n * oracle_rank(&choi, 1e-10), || {
                    format!("n={n} d={d}: dim K1 {got}, Gram rank {expect}")
                })?;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(draws >= 100 && cp >= 60, || format!("only {draws} draws, {cp} CP"))?;
    ensure(secs < 30.0, || format!("runtime {secs:.1}s"))?;
    Ok(format!("{draws} draws ({cp} CP), ranks match, {secs:.2}s"))
}

/// 2. φ(X) = 2tr(X)I − X on M₃ fails condition (ii) with minimum Gram eigenvalue −1.
fn intro_counterexample() -> Outcome {
    let alg = FiniteCStarAlgebra::full(3).unwrap();
    let alpha = verify_automorphism(&identity(9), &alg, &tol()).unwrap();
    let values = (0..9)
        .map(|i| {
            let x = unit(3, i / 3, i % 3);
            identity(3) * x.trace() * re(2.0) - x
        })
        .collect();
    let phi = AlphaCpMap::new(alg, alpha, KreinSpace::hilbert(3), values).unwrap();
    let mut omega = DMatrix::<Complex64>::zeros(9, 1);
    for p in 0..3 {
        omega[(p * 3 + p, 0)] = Complex64::new(1.0, 0.0);
    }
    let choi = DMatrix::<Complex64>::identity(9, 9) * Complex64::new(2.0, 0.0) - &omega * omega.adjoint();
    let oracle_min = oracle_eigenvalues(&choi).into_iter().fold(f64::INFINITY, f64::min);
    let report = alpha_cp_report(&phi, &[], &tol(), 0).map_err(|e| e.to_string())?;
    let min = report.min_eigenvalue.ok_or("no eigenvalue reported")?;
    ensure((oracle_min + 1.0).abs() <= 1e-8, || format!("oracle minimum {oracle_min}"))?;
    ensure((min + 1.0).abs() <= 1e-8, || format!("reported minimum {min}"))?;
    match verify_alpha_cp(&phi, &[], &tol(), 0) {
        Err(Error::ConditionTwoViolated { .. }) => Ok(format!("min eigenvalue {min:.12}, oracle {oracle_min:.12}")),
        other => Err(format!("expected condition (ii) failure, got {other:?}")),
    }
}

/// 3. Flip fixture end to end.
fn flip_fixture() -> Outcome {
    let start = Instant::now();
    let inst = fixture("fix-c");
    let d = construct_ksgns(&inst.big_phi, &tol()).map_err(|e| e.to_string())?;
    ensure(d.k1_dim() == 1, || format!("dim K1 = {}", d.k1_dim()))?;
    ensure((d.k1.j[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12, || "J3 != [1]".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let a = random::gaussian(&mut rng, 3, 1).column(0).into_owned();
        let p = d.pi_phi_of(&a);
        ensure((p[(0, 0)] - a[1]).norm() < 1e-12, || "pi_phi(a) != [a2]".into())?;
    }
    let checks = verify_ksgns(&d, &inst.big_phi, &tol()).map_err(|e| e.to_string())?;
    for name in ["V isometry", "pi_X module map", "minimal K1 adjoint", "spanning action"] {
        ensure(checks.get(name).is_some(), || format!("missing check {name}"))?;
    }
    let worst = checks.max_residual();
    ensure(checks.all_hard_pass() && worst <= 1e-9, || format!("worst residual {worst:e}"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("runtime {secs:.3}s"))?;
    Ok(format!("dim K1 = 1, J3 = [1], {} residuals <= {worst:.1e}, {secs:.3}s", checks.len()))
}

struct Shape {
    blocks: Vec<usize>,
    alpha: CMatrix,
    j: Vec<f64>,
}

fn shapes() -> Vec<Shape> {
    let z = real_diag(&[1.0, -1.0]);
    let mut out = Vec::new();
    for m in 2..=4usize {
        let ident: Vec<usize> = (0..m).collect();
        let mut rev = ident.clone();
        rev.reverse();
        for perm in [ident, rev] {
            for j in [vec![1.0], vec![1.0, 1.0]] {
                out.push(Shape { blocks: vec![1; m], alpha: permutation_matrix(&perm).unwrap(), j });
            }
        }
    }
    let m2 = FiniteCStarAlgebra::full(2).unwrap();
    let c_m2 = FiniteCStarAlgebra::new(vec![1, 2]).unwrap();
    for j in [vec![1.0], vec![1.0, 1.0], vec![1.0, -1.0]] {
        out.push(Shape { blocks: vec![2], alpha: identity(4), j: j.clone() });
        out.push(Shape { blocks: vec![2], alpha: inner_matrix(&m2, &[z.clone()]).unwrap(), j: j.clone() });
        out.push(Shape { blocks: vec![1, 2], alpha: identity(5), j: j.clone() });
        out.push(Shape {
            blocks: vec![1, 2],
            alpha: inner_matrix(&c_m2, &[identity(1), z.clone()]).unwrap(),
            j,
        });
    }
    out.push(Shape { blocks: vec![2], alpha: identity(4), j: vec![1.0, 1.0, 1.0] });
    out
}

/// 4. Reconstruction on generated instances.
fn reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut count, mut worst) = (0usize, 0.0f64);
    for (k, shape) in shapes().iter().enumerate() {
        let alg = FiniteCStarAlgebra::new(shape.blocks.clone()).unwrap();
        let alpha = verify_automorphism(&shape.alpha, &alg, &tol()).map_err(|e| e.to_string())?;
        let h1 = verify_fundamental_symmetry(&real_diag(&shape.j), &tol()).unwrap();
        let out = generate_instances(&alg, &alpha, &h1, 100 + k as u64, 12, &tol()).map_err(|e| e.to_string())?;
        for phi in out.maps {
            let big = phi_map_for(&phi, 1 + count % 2, count % 3, &mut rng, &tol()).unwrap_or_else(|| PhiMap::empty(phi.clone()));
            let d = construct_ksgns(&big, &tol()).map_err(|e| format!("shape {k}: {e}"))?;
            let v_sharp = d.v_sharp(&phi.h1.j);
            for i in 0..alg.dim() {
                let r = op_norm(&(&phi.values[i] - &v_sharp * &d.pi_phi[i] * &d.v));
                let rel = r / (1.0 + op_norm(&phi.values[i]));
                worst = worst.max(rel);
                ensure(rel <= 1e-9, || format!("shape {k}: phi residual {r:e}"))?;
            }
            for m in 0..big.module.dim() {
                let r = op_norm(&(&big.values[m] - d.w.adjoint() * &d.pi_x[m] * &d.v));
                let rel = r / (1.0 + op_norm(&big.values[m]));
                worst = worst.max(rel);
                ensure(rel <= 1e-9, || format!("shape {k}: Phi residual {r:e}"))?;
            }
            count += 1;
        }
    }
    ensure(count >= 200, || format!("only {count} instances"))?;
    Ok(format!("{count} instances, worst relative residual {worst:.1e}"))
}

/// 5. Random conjugates of fixture dilations are recovered.
fn uniqueness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut copies, mut worst, mut worst_unit) = (0usize, 0.0f64, 0.0f64);
    for name in ["fix-a", "fix-b", "fix-c", "fix-e", "m2-swap", "m3-cyclic"] {
        let inst = fixture(name);
        let d = construct_ksgns(&inst.big_phi, &tol()).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let d2 = random_conjugate(&d, &mut rng, &tol()).map_err(|e| e.to_string())?;
            let eq = unitary_equivalence(&d, &d2, &inst.big_phi, &tol()).map_err(|e| format!("{name}: {e}"))?;
            for key in ["U1 V", "U1 pi_phi", "U2 W", "U2 pi_X"] {
                worst = worst.max(eq.checks.residual(key).ok_or("missing residual")?);
            }
            let u1 = op_norm(&(eq.u1.adjoint() * &eq.u1 - identity(d.k1_dim())));
            let u2 = op_norm(&(eq.u2.adjoint() * &eq.u2 - identity(d.k2_dim)));
            worst_unit = worst_unit.max(u1).max(u2);
            copies += 1;
        }
    }
    ensure(worst <= 1e-9, || format!("intertwining residual {worst:e}"))?;
    ensure(worst_unit <= 1e-8, || format!("unitarity residual {worst_unit:e}"))?;
    ensure(copies >= 50, || format!("only {copies} copies"))?;
    Ok(format!("{copies} copies, intertwining <= {worst:.1e}, unitarity <= {worst_unit:.1e}"))
}

/// 6. Covariant identities on fix-e and the S₃ flip; both negative controls rejected.
fn covariant_suite() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["fix-e", "s3-flip"] {
        let inst = fixture(name);
        let cov = inst.covariant.as_ref().unwrap();
        let c = covariant_construct(&inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &tol()).map_err(|e| e.to_string())?;
        let checks = verify_covariant_dilation(&c, &inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &tol())
            .map_err(|e| e.to_string())?;
        for key in ["v sharp", "v' sharp", "V intertwines", "W intertwines", "pi_phi covariance", "pi_X covariance"] {
            ensure(checks.get(key).is_some(), || format!("missing {key}"))?;
        }
        worst = worst.max(checks.max_residual());
        ensure(checks.all_hard_pass() && worst <= 1e-9, || format!("{name}: residual {worst:e}"))?;
    }

    let mut f = preset("fix-e").unwrap();
    f.beta = Some(vec![AlphaSpec::Identity, AlphaSpec::Permutation { perm: vec![1, 0, 2] }]);
    let inst = f.build(&tol()).unwrap();
    let cov = inst.covariant.as_ref().unwrap();
    match verify_covariance(&inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &tol()) {
        Err(Error::NotCovariant { identity, .. }) if identity.contains("α") => {}
        other => return Err(format!("non-commuting control: {other:?}")),
    }

    let mut f = preset("fix-e").unwrap();
    let swap = CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]);
    f.uprime = Some(vec![to_rows(&identity(2)), to_rows(&swap)]);
    let inst = f.build(&tol()).unwrap();
    let cov = inst.covariant.as_ref().unwrap();
    match covariant_construct(&inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &tol()) {
        Err(Error::NotInvariant { .. }) => {}
        other => return Err(format!("non-invariant control: {:?}", other.map(|_| ()))),
    }
    Ok(format!("fix-e and s3-flip residuals <= {worst:.1e}; NotCovariant and NotInvariant raised"))
}

/// 7. Crossed-product φ-map identity against the naive oracle.
fn crossed_identity() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut oracle_gap, mut pairs) = (0.0f64, 0.0f64, 0usize);
    let mut orders = Vec::new();
    for name in ["fix-e", "m2-swap", "m3-cyclic", "s3-flip"] {
        let inst = fixture(name);
        let cov = inst.covariant.as_ref().unwrap();
        let cd = covariant_construct(&inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &tol()).map_err(|e| e.to_string())?;
        let maps = induce_crossed_maps(&cd, &inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &tol())
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(inst.algebra().dim() <= 9 && inst.phi().d() <= 3, || format!("{name} too large"))?;
        orders.push(cov.action.group.order());
        let module = &maps.module;
        let j1 = &inst.phi().h1.j;
        for a in 0..module.dim() {
            for b in 0..module.dim() {
                let lhs = j1 * maps.big_phi_tilde[a].adjoint() * &maps.big_phi_tilde[b];
                let rhs = maps.phi_tilde_of(&module.inner(&module.basis(a), &module.basis(b)));
                worst = worst.max(op_norm(&(&lhs - &rhs)));
                let (nl, nr) = common::naive_sides(&inst, a, b);
                oracle_gap = oracle_gap.max(op_norm(&(lhs - nl))).max(op_norm(&(rhs - nr)));
                pairs += 1;
            }
        }
    }
    orders.sort();
    orders.dedup();
    let secs = start.elapsed().as_secs_f64();
    ensure(orders == [2, 3, 6], || format!("group orders {orders:?}"))?;
    ensure(worst <= 1e-8, || format!("identity residual {worst:e}"))?;
    ensure(oracle_gap <= 1e-12, || format!("oracle gap {oracle_gap:e}"))?;
    ensure(secs < 10.0, || format!("runtime {secs:.1}s"))?;
    Ok(format!("{pairs} pairs over |G| in {{2,3,6}}, residual <= {worst:.1e}, oracle gap {oracle_gap:.1e}, {secs:.2}s"))
}

/// 8. ℂ² with the swap admits only φ = 0.
fn rigidity() -> Outcome {
    let alg = FiniteCStarAlgebra::commutative(2).unwrap();
    let alpha = verify_automorphism(&permutation_matrix(&[1, 0]).unwrap(), &alg, &tol()).unwrap();
    let h1 = KreinSpace::hilbert(1);
    let out = generate_instances(&alg, &alpha, &h1, 8, 3, &tol()).map_err(|e| e.to_string())?;
    ensure(out.rigid && out.certificate.is_some(), || "generator did not certify rigidity".into())?;
    ensure(out.maps.iter().all(|m| m.values.iter().all(|v| v.norm() == 0.0)), || "nonzero map emitted".into())?;

    // Grid over the Hermitian family φ(e₁) = x, φ(e₂) = y.
    let steps = 200;
    let mut accepted = Vec::new();
    for i in 0..=steps {
        for k in 0..=steps {
            let x = -1.0 + 2.0 * i as f64 / steps as f64;
            let y = -1.0 + 2.0 * k as f64 / steps as f64;
            let values = vec![CMatrix::from_element(1, 1, re(x)), CMatrix::from_element(1, 1, re(y))];
            let phi = AlphaCpMap::new(alg.clone(), alpha.clone(), h1.clone(), values).unwrap();
            let lib = verify_alpha_cp(&phi, &[], &tol(), 0).is_ok();
            // G = [[φ(e₂e₁), φ(e₂e₂)], [φ(e₁e₁), φ(e₁e₂)]] = [[0, y], [x, 0]]
            let g = DMatrix::from_row_slice(2, 2, &[0.0, y, x, 0.0].map(|v| Complex64::new(v, 0.0)));
            let oracle = (x - y).abs() < 1e-12 && oracle_eigenvalues(&g).iter().all(|&l| l >= -1e-12);
            ensure(lib == oracle, || format!("disagreement at ({x}, {y})"))?;
            if lib {
                accepted.push((x, y));
            }
        }
    }
    ensure(accepted == [(0.0, 0.0)], || format!("accepted {accepted:?}"))?;
    Ok(format!("certified rigid; {} grid points, only (0, 0) accepted", (steps + 1) * (steps + 1)))
}

/// 9. `dilate` is byte-for-byte reproducible.
fn determinism() -> Outcome {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut n = 0;
    for name in kdil::instance::PRESETS {
        let path = dir.join(format!("{name}.json"));
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_kdil"))
                .env_remove("KDIL_TOL_REL")
                .args(["dilate", path.to_str().unwrap(), "--seed", "7", "--tol-rel", "1e-9"])
                .output()
                .map_err(|e| e.to_string())
        };
        let (a, b) = (run()?, run()?);
        ensure(a.stdout == b.stdout && a.status == b.status, || format!("{name} differs between runs"))?;
        ensure(!a.stdout.is_empty(), || format!("{name} produced no output"))?;
        n += 1;
    }
    Ok(format!("{n} fixtures, identical output across two runs"))
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("classical reduction", classical_reduction),
        ("indefinite counterexample", intro_counterexample),
        ("flip fixture end-to-end", flip_fixture),
        ("reconstruction identity", reconstruction),
        ("uniqueness up to unitaries", uniqueness),
        ("covariant suite", covariant_suite),
        ("crossed-product identity", crossed_identity),
        ("rigidity of the swap", rigidity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

