use kdil::algebra::{verify_automorphism, FiniteCStarAlgebra, StarAlgebra};
use kdil::covariant::{covariant_construct, FiniteGroup};
use kdil::crossed::{induce_crossed_maps, CrossedAlgebra, CrossedElementJson, CrossedModule, InducedMaps};
use kdil::instance::{preset, Instance};
use kdil::numkit::{c, identity, CVector, TolerancePolicy};
use proptest::prelude::*;
use std::time::Instant;

mod common;
use common::naive_sides;

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn fixture(name: &str) -> Instance {
    preset(name).unwrap().build(&tol()).unwrap()
}

fn induced(inst: &Instance) -> InducedMaps {
    let cov = inst.covariant.as_ref().unwrap();
    let c = covariant_construct(&inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &tol()).unwrap();
    induce_crossed_maps(&c, &inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &tol()).unwrap()
}

#[test]
fn crossed_identity_matches_naive_oracle() {
    let start = Instant::now();
    for (name, order) in [("fix-e", 2), ("m2-swap", 2), ("m3-cyclic", 3), ("s3-flip", 6)] {
        let inst = fixture(name);
        let maps = induced(&inst);
        assert_eq!(maps.algebra().group().order(), order);
        assert!(maps.checks.all_hard_pass(), "{name}: {:?}", maps.checks.first_hard_failure());
        let module = &maps.module;
        let j1 = &inst.phi().h1.j;
        for a in 0..module.dim() {
            for b in 0..module.dim() {
                let lhs = j1 * maps.big_phi_tilde[a].adjoint() * &maps.big_phi_tilde[b];
                let rhs = maps.phi_tilde_of(&module.inner(&module.basis(a), &module.basis(b)));
                assert!((&lhs - &rhs).norm() <= 1e-8, "{name} ({a},{b})");
                let (nl, nr) = naive_sides(&inst, a, b);
                assert!((lhs - nl).norm() <= 1e-12, "{name} lhs ({a},{b})");
                assert!((rhs - nr).norm() <= 1e-12, "{name} rhs ({a},{b})");
            }
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn flip_fixture_phi_tilde() {
    let inst = fixture("fix-e");
    let maps = induced(&inst);
    assert_eq!(maps.module.dim(), 6);
    let f = CVector::from_fn(6, |i, _| c(i as f64 + 1.0, 0.5 * i as f64));
    let expect = f[1] + f[4];
    assert!((maps.phi_tilde_of(&f)[(0, 0)] - expect).norm() < 1e-12);
}

#[test]
fn trivial_group_reproduces_base_maps() {
    let inst = fixture("fix-c");
    let g = FiniteGroup::trivial();
    let act = kdil::hmodule::ModuleAction::trivial(g.clone(), inst.big_phi.module.clone());
    let u = kdil::covariant::verify_rep(vec![identity(1)], &g, &inst.phi().h1, true, &tol()).unwrap();
    let h2 = kdil::krein::KreinSpace::hilbert(2);
    let up = kdil::covariant::verify_rep(vec![identity(2)], &g, &h2, true, &tol()).unwrap();
    let c = covariant_construct(&inst.big_phi, &act, &u, &up, &tol()).unwrap();
    let maps = induce_crossed_maps(&c, &inst.big_phi, &act, &u, &up, &tol()).unwrap();
    assert_eq!(maps.phi_tilde.values, inst.phi().values);
    assert_eq!(maps.big_phi_tilde, inst.big_phi.values);
    assert_eq!(maps.pi_hat_phi, c.base.pi_phi);
}

#[test]
fn z2_inner_product_bookkeeping() {
    let inst = fixture("fix-e");
    let module = CrossedModule::new(&inst.covariant.as_ref().unwrap().action);
    let x = CVector::from_vec(vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, 3.0)]);
    let xh = module.delta(1, &x);
    let ip = module.inner(&xh, &xh);
    let base = module.module.inner(&x, &x);
    let flipped = CVector::from_vec(vec![base[2], base[1], base[0]]);
    assert!((module.algebra.part(&ip, 0) - flipped).norm() < 1e-14);
    assert!(module.algebra.part(&ip, 1).norm() < 1e-14);

    let e = module.delta(0, &x);
    let ip = module.inner(&e, &e);
    assert!((module.algebra.part(&ip, 0) - base).norm() < 1e-14);
}

#[test]
fn crossed_json_round_trip() {
    let inst = fixture("s3-flip");
    let alg = CrossedAlgebra::from_action(&inst.covariant.as_ref().unwrap().action);
    let f = CVector::from_fn(alg.dim(), |i, _| c(i as f64 * 0.25, -1.0));
    let json = CrossedElementJson::from_coords(&alg, &f);
    let text = serde_json::to_string(&json).unwrap();
    let back: CrossedElementJson = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_coords(&alg).unwrap(), f);
}

#[test]
fn alpha_tilde_needs_commuting_beta() {
    let alg = FiniteCStarAlgebra::commutative(3).unwrap();
    let flip = kdil::algebra::permutation_matrix(&[2, 1, 0]).unwrap();
    let swap01 = kdil::algebra::permutation_matrix(&[1, 0, 2]).unwrap();
    let good = CrossedAlgebra::new(FiniteGroup::cyclic(2), alg.clone(), vec![identity(3), flip.clone()]).unwrap();
    assert!(verify_automorphism(&good.lift(&flip), &good, &tol()).is_ok());
    let bad = CrossedAlgebra::new(FiniteGroup::cyclic(2), alg, vec![identity(3), swap01]).unwrap();
    assert!(verify_automorphism(&bad.lift(&flip), &bad, &tol()).is_err());
}

fn s3_crossed() -> (CrossedAlgebra, CrossedModule) {
    let inst = fixture("s3-flip");
    let act = inst.covariant.unwrap().action;
    (CrossedAlgebra::from_action(&act), CrossedModule::new(&act))
}

fn vec_strategy(len: usize) -> impl Strategy<Value = CVector> {
    proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), len)
        .prop_map(|v| CVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| c(a, b))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_is_associative(f in vec_strategy(18), g in vec_strategy(18), h in vec_strategy(18)) {
        let (a, _) = s3_crossed();
        let lhs = a.mul(&a.mul(&f, &g), &h);
        let rhs = a.mul(&f, &a.mul(&g, &h));
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn involution_is_antimultiplicative(f in vec_strategy(18), g in vec_strategy(18)) {
        let (a, _) = s3_crossed();
        let lhs = a.star(&a.mul(&f, &g));
        let rhs = a.mul(&a.star(&g), &a.star(&f));
        prop_assert!((lhs - rhs).norm() <= 1e-10);
        prop_assert!((a.star(&a.star(&f)) - &f).norm() <= 1e-12);
    }

    #[test]
    fn c_star_identity(f in vec_strategy(18)) {
        let (a, _) = s3_crossed();
        let n = a.norm(&f);
        let nn = a.norm(&a.mul(&a.star(&f), &f));
        prop_assert!((nn - n * n).abs() <= 1e-9 * (1.0 + n * n));
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(x in vec_strategy(18), y in vec_strategy(18)) {
        let (a, m) = s3_crossed();
        let lhs = a.star(&m.inner(&x, &y));
        prop_assert!((lhs - m.inner(&y, &x)).norm() <= 1e-10);
    }

    #[test]
    fn inner_product_is_right_linear(x in vec_strategy(18), y in vec_strategy(18), f in vec_strategy(18)) {
        let (a, m) = s3_crossed();
        let lhs = m.inner(&x, &m.act(&y, &f));
        let rhs = a.mul(&m.inner(&x, &y), &f);
        prop_assert!((lhs - rhs).norm() <= 1e-9);
    }
}
