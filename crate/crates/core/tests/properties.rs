use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ncricci::flow::{log_det_rate, rhs, scalar_curvature};
use ncricci::matcore::random::{random_cmatrix, random_hermitian, random_unitary};
use ncricci::matcore::{eigh, frechet_log, mat_exp, mat_log, CMatrix, HermMatrix};
use ncricci::metric::{random_metric, Metric};
use ncricci::torus::{coprime_residues, Derivations, FuzzyTorus, TorusParams, XChoice};
use ncricci::verify::exp_pairing;

fn torus_strategy() -> impl Strategy<Value = (usize, usize, bool)> {
    (2usize..=9)
        .prop_flat_map(|n| (Just(n), proptest::sample::select(coprime_residues(n)), any::<bool>()))
}

fn build(n: usize, m: usize, mod_n: bool) -> FuzzyTorus {
    let x = if mod_n { XChoice::ModN } else { XChoice::Standard };
    FuzzyTorus::build(TorusParams::new(n, m).with_x_choice(x)).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigh_reconstructs(n in 1usize..=12, seed: u64, spread in 0.01f64..10.0) {
        let a = random_hermitian(&mut rng(seed), n, spread);
        let e = eigh(&a).unwrap();
        let back = e.with_values(&e.values);
        prop_assert!(back.max_abs_diff(&a) <= 1e-12 * a.max_abs().max(1.0));
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let u = &e.vectors;
        prop_assert!((&u.adjoint() * u).max_abs_diff(&CMatrix::identity(n)) <= 1e-12);
    }

    #[test]
    fn exp_log_round_trip(n in 1usize..=10, seed: u64, lo in -20.0f64..8.0, width in 0.0f64..12.0) {
        // exp loses eigenvalues below ε·e^{λ_max}, so only the width of the spectrum is limited
        let mut r = rng(seed);
        let d: Vec<f64> = (0..n).map(|j| lo + width * j as f64 / (n.max(2) - 1) as f64).collect();
        let u = random_unitary(&mut r, n);
        let a = HermMatrix::from_hermitian_part(&(&(&u * &CMatrix::from_real_diag(&d)) * &u.adjoint()));
        let back = mat_log(&mat_exp(&a).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&a) <= 1e-10);
    }

    #[test]
    fn derivation_identities((n, m, mod_n) in torus_strategy(), seed: u64) {
        let t = build(n, m, mod_n);
        let mut r = rng(seed);
        let a = random_cmatrix(&mut r, n);
        let b = random_cmatrix(&mut r, n);
        let ab = &a * &b;
        for mu in 0..2 {
            let d = |x: &CMatrix| if mu == 0 { t.delta1(x).unwrap() } else { t.delta2(x).unwrap() };
            let leibniz = &(&d(&a) * &b) + &(&a * &d(&b));
            prop_assert!(d(&ab).max_abs_diff(&leibniz) <= 1e-10 * (n * n) as f64);
            let parts = (&a * &d(&b)).trace() + (&d(&a) * &b).trace();
            prop_assert!(parts.norm() <= 1e-10 * (n * n) as f64);
        }
        let lap = t.laplacian(&a).unwrap();
        prop_assert!(a.hs_inner(&lap).unwrap().re >= -1e-10);
    }

    #[test]
    fn rhs_is_scale_invariant((n, m, mod_n) in torus_strategy(), seed: u64, kappa in 1e-3f64..1e3) {
        let t = build(n, m, mod_n);
        let c = random_metric(n, 0.8, seed).unwrap();
        let kc = c.scaled(kappa).unwrap();
        let v = rhs(&t, &c);
        prop_assert!(rhs(&t, &kc).max_abs_diff(&v) <= 1e-10 * v.max_abs().max(1.0));
        // R scales as 1/κ
        let r = scalar_curvature(&t, &c);
        prop_assert!(scalar_curvature(&t, &kc).scale(kappa).max_abs_diff(&r) <= 1e-9 * r.max_abs().max(1.0));
    }

    #[test]
    fn monotone_rates_are_nonnegative((n, m, mod_n) in torus_strategy(), seed: u64, spread in 0.05f64..2.0) {
        let t = build(n, m, mod_n);
        let c = random_metric(n, spread, seed).unwrap();
        let v = rhs(&t, &c);
        prop_assert!(v.trace().norm() <= 1e-10 * v.norm_hs().max(1.0));
        prop_assert!(log_det_rate(&t, &c) >= -1e-10);
        let a = random_hermitian(&mut rng(seed ^ 1), n, spread);
        prop_assert!(exp_pairing(&t, &a).unwrap() >= -1e-10);
    }

    #[test]
    fn frechet_log_matches_central_difference(n in 1usize..=8, seed: u64) {
        let mut r = rng(seed);
        let c = mat_exp(&random_hermitian(&mut r, n, 0.6)).unwrap();
        let h = random_hermitian(&mut r, n, 1.0);
        let eps = 1e-5;
        let up = mat_log(&c.add_scaled(eps, &h)).unwrap();
        let down = mat_log(&c.add_scaled(-eps, &h)).unwrap();
        let fd = (&up.into_cmatrix() - &down.into_cmatrix()).scale(0.5 / eps);
        let exact = frechet_log(&c, &h).unwrap();
        prop_assert!(fd.max_abs_diff(&exact) <= 1e-6 * exact.max_abs().max(1.0));
    }

    #[test]
    fn metric_json_round_trip(n in 1usize..=7, seed: u64, spread in 0.01f64..2.0) {
        let c = random_metric(n, spread, seed).unwrap();
        let back = Metric::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(back.c().as_slice(), c.c().as_slice());
    }

    #[test]
    fn hermitian_constructor_symmetrises(n in 1usize..=6, seed: u64) {
        let a = random_cmatrix(&mut rng(seed), n);
        let h = HermMatrix::from_hermitian_part(&a);
        prop_assert_eq!(h.hermitian_defect(), 0.0);
        prop_assert!(HermMatrix::new(h.clone().into_cmatrix()).is_ok());
    }
}
