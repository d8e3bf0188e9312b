use eso_core::eso::{
    certify, eso_conservative, eso_coupled, eso_generic_tau, eso_specialized, eso_uncoupled,
};
use eso_core::fixtures::{random_proper_spec, random_sparse_matrix, random_spec, random_vector};
use eso_core::rng::stream_rng;
use eso_core::solver::optimal_serial_sampling;
use eso_core::spectral::{lambda_bounds, lambda_prime, EigenMethod, RestrictedMethod};
use eso_core::{Matrix, ProbMatrix, ProbMethod};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn prob_matrix_is_a_psd_probability_matrix(seed in any::<u64>(), n in 1usize..7) {
        let spec = random_spec(&mut stream_rng(seed, 0), n);
        let p = ProbMatrix::compute(&spec, ProbMethod::Auto).unwrap();
        let m = &p.matrix;
        prop_assert!(m.is_symmetric(0.0));
        for i in 0..n {
            for j in 0..n {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&m[(i, j)]));
                prop_assert!(m[(i, j)] <= m[(i, i)].min(m[(j, j)]) + 1e-12);
            }
        }
        prop_assert!(p.min_eigenvalue().unwrap() >= -1e-12);
    }

    #[test]
    fn auto_matches_enumeration(seed in any::<u64>(), n in 1usize..7) {
        let spec = random_spec(&mut stream_rng(seed, 0), n);
        let a = ProbMatrix::compute(&spec, ProbMethod::Auto).unwrap().matrix;
        let e = ProbMatrix::compute(&spec, ProbMethod::Enumerate).unwrap().matrix;
        prop_assert!(a.max_abs_diff(&e) <= 1e-12);
        let (m1, m2) = spec.cardinality_moments();
        let d = spec.enumerate().unwrap();
        prop_assert!((m1 - d.expect(|s| s.len() as f64)).abs() <= 1e-12);
        prop_assert!((m2 - d.expect(|s| (s.len() * s.len()) as f64)).abs() <= 1e-10);
        prop_assert!((d.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn draws_lie_in_the_support(seed in any::<u64>(), n in 1usize..7) {
        let spec = random_spec(&mut stream_rng(seed, 0), n);
        let d = spec.enumerate().unwrap();
        let cap = spec.cardinality_cap().unwrap();
        let mut rng = stream_rng(seed, 1);
        for _ in 0..20 {
            let s = spec.draw(&mut rng);
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(s.len() <= cap);
            prop_assert!(d.probability_of(&s) > 0.0, "{:?} drew {:?}", spec.kind_name(), s);
        }
    }

    #[test]
    fn eigenvalue_sandwich(seed in any::<u64>(), n in 1usize..7) {
        let spec = random_spec(&mut stream_rng(seed, 0), n);
        let rep = lambda_bounds(&spec).unwrap();
        prop_assert!(rep.violations(1e-9).is_empty(), "{:?}", rep);
    }

    #[test]
    fn lambda_prime_of_nonzero_psd_is_between_one_and_n(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = stream_rng(seed, 0);
        let b = Matrix::from_fn(n + 2, n, |_, _| random_vector(&mut rng, 1)[0]);
        let lp = lambda_prime(&b.gram(), EigenMethod::DenseExact).unwrap().value;
        prop_assert!(lp >= 1.0 - 1e-10 && lp <= n as f64 + 1e-10);
    }

    #[test]
    fn every_formula_is_certified_and_ordered(seed in any::<u64>(), n in 2usize..9, m in 1usize..12) {
        let mut rng = stream_rng(seed, 0);
        let spec = random_proper_spec(&mut rng, n);
        let a = random_sparse_matrix(&mut rng, m, n, 0.35);
        let exact = eso_coupled(&a, &spec, RestrictedMethod::Exact).unwrap();
        let bound = eso_coupled(&a, &spec, RestrictedMethod::Bound).unwrap();
        let generic = eso_generic_tau(&a, &spec).unwrap();
        let cons = eso_conservative(&a, &spec).unwrap();
        for i in 0..n {
            prop_assert!(exact.v[i] <= bound.v[i] + 1e-10);
            prop_assert!(bound.v[i] <= generic.v[i] + 1e-10);
            prop_assert!(generic.v[i] <= cons.v[i] + 1e-10);
        }
        let results = [exact, bound, generic, cons, eso_specialized(&a, &spec).unwrap(), eso_uncoupled(&a, &spec, None).unwrap()];
        for r in results {
            let margin = certify(&a, &spec, &r.v).unwrap();
            prop_assert!(margin >= -1e-8, "{:?} margin {}", r.formula_id, margin);
        }
    }

    #[test]
    fn doubling_data_quadruples_v(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = stream_rng(seed, 0);
        let spec = random_proper_spec(&mut rng, n);
        let a = random_sparse_matrix(&mut rng, 5, n, 0.5);
        let a2 = a.scaled(2.0);
        let w = a.col_sq_norms();
        for (r1, r2) in [
            (eso_coupled(&a, &spec, RestrictedMethod::Exact).unwrap(), eso_coupled(&a2, &spec, RestrictedMethod::Exact).unwrap()),
            (eso_specialized(&a, &spec).unwrap(), eso_specialized(&a2, &spec).unwrap()),
            (eso_uncoupled(&a, &spec, None).unwrap(), eso_uncoupled(&a2, &spec, None).unwrap()),
        ] {
            for (i, &wi) in w.iter().enumerate() {
                if wi > 0.0 {
                    prop_assert!((r2.v[i] - 4.0 * r1.v[i]).abs() <= 1e-10 * r2.v[i].max(1.0));
                }
            }
        }
    }

    #[test]
    fn optimal_serial_never_loses(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = stream_rng(seed, 0);
        let a = random_sparse_matrix(&mut rng, n + 3, n, 0.6);
        let x0 = random_vector(&mut rng, n);
        let design = optimal_serial_sampling(&a, &x0, &vec![0.0; n]);
        if let Ok(d) = design {
            prop_assert!(d.c_opt <= d.c_unif * (1.0 + 1e-12));
            prop_assert!((d.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
