mod common;

use common::{random_system, rng, Shape};
use nicholson_core::model::{DelayRhs, Nonlinearity};
use nicholson_core::structure::{condense, zero_pattern};
use proptest::prelude::*;
use rand::Rng;

fn kinds() -> Vec<Nonlinearity> {
    vec![
        Nonlinearity::Nicholson,
        Nonlinearity::MackeyGlass(1.0),
        Nonlinearity::MackeyGlass(2.5),
        Nonlinearity::Linear,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_systems_validate(seed in any::<u64>()) {
        let sys = random_system(seed, &Shape::default(), None);
        let rep = sys.validate(0.05, 200.0).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn null_map_is_a_solution(seed in any::<u64>(), t in -100.0..100.0f64) {
        let sys = random_system(seed, &Shape::default(), None);
        let zero = vec![0.0; sys.n()];
        for kind in kinds() {
            let sys = sys.with_c(sys.c().to_vec(), kind).unwrap();
            let out = sys.rhs(t, &zero, &zero).unwrap();
            prop_assert!(out.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linearize_commutes_with_subsystem(seed in any::<u64>()) {
        let sys = random_system(seed, &Shape::default(), None);
        let mut r = rng(seed ^ 0x5eed);
        let n = sys.n();
        let indices: Vec<usize> = (0..n).filter(|_| r.random_bool(0.6)).collect();
        prop_assume!(!indices.is_empty());
        prop_assert_eq!(
            sys.subsystem(&indices).unwrap().linearized(),
            sys.linearized().subsystem(&indices).unwrap()
        );
    }

    #[test]
    fn linear_kind_equals_linearization(seed in any::<u64>(), t in 0.0..50.0f64) {
        let sys = random_system(seed, &Shape::default(), Some(Nonlinearity::Linear));
        let lin = sys.linearized();
        let mut r = rng(seed);
        let y: Vec<f64> = (0..sys.n()).map(|_| r.random_range(0.0..5.0)).collect();
        let yd: Vec<f64> = (0..sys.n()).map(|_| r.random_range(0.0..5.0)).collect();
        let a = sys.rhs(t, &y, &yd).unwrap();
        let b = lin.rhs(t, &y, &yd).unwrap();
        for (x, z) in a.iter().zip(&b) {
            prop_assert!((x - z).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn linearization_is_the_derivative_at_zero(seed in any::<u64>(), t in 0.0..50.0f64) {
        let sys = random_system(seed, &Shape::default(), None);
        let lin = sys.linearized();
        let n = sys.n();
        let eps = 1e-8;
        let zero = vec![0.0; n];
        for j in 0..n {
            let mut e = zero.clone();
            e[j] = 1.0;
            let mut pert = zero.clone();
            pert[j] = eps;
            let fd_delayed = sys.rhs(t, &zero, &pert).unwrap();
            let exact_delayed = lin.rhs(t, &zero, &e).unwrap();
            let fd_current = sys.rhs(t, &pert, &zero).unwrap();
            let exact_current = lin.rhs(t, &e, &zero).unwrap();
            for i in 0..n {
                prop_assert!((fd_delayed[i] / eps - exact_delayed[i]).abs() < 1e-6);
                prop_assert!((fd_current[i] / eps - exact_current[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn relabeling_permutes_structure(seed in any::<u64>()) {
        let sys = random_system(seed, &Shape::default(), None);
        let order = common::random_permutation(&mut rng(seed), sys.n());
        let perm = sys.permuted(&order).unwrap();
        let s = condense(&zero_pattern(&sys));
        let sp = condense(&zero_pattern(&perm));
        let mut sizes = s.block_sizes();
        let mut sizes_p = sp.block_sizes();
        sizes.sort();
        sizes_p.sort();
        prop_assert_eq!(sizes, sizes_p);
        prop_assert_eq!(s.i_set.len(), sp.i_set.len());
        prop_assert_eq!(s.j_set.len(), sp.j_set.len());
        prop_assert_eq!(perm.max_delay(), sys.max_delay());
    }
}

/// `g(c, λy) ≥ λ g(c, y)` and `g(c, y) ≤ y` on a 10⁴-point grid per kind.
#[test]
fn sublinear_and_dominated_by_identity() {
    let mut r = rng(3);
    for kind in kinds() {
        for _ in 0..5 {
            let c = r.random_range(0.2..3.0);
            for iy in 0..100 {
                let y = iy as f64 * 0.1;
                let gy = kind.apply(c, y);
                assert!(gy <= y * (1.0 + 1e-15), "{kind:?}: g({y}) = {gy}");
                assert!(gy >= 0.0);
                for il in 1..=100 {
                    let lambda = il as f64 / 100.0;
                    let lhs = kind.apply(c, lambda * y);
                    assert!(lhs >= lambda * gy * (1.0 - 1e-14) - 1e-300, "{kind:?} c={c} y={y} λ={lambda}");
                }
            }
        }
    }
}

#[test]
fn delayed_term_scales_with_beta() {
    let sys = random_system(11, &Shape::default(), Some(Nonlinearity::Nicholson));
    let n = sys.n();
    let y = vec![0.7; n];
    let yd = vec![1.3; n];
    let t = 2.5;
    let out = sys.rhs(t, &y, &yd).unwrap();
    for i in 0..n {
        let migration: f64 = (0..n).map(|j| sys.a()[i][j].eval(t) * y[j]).sum();
        let c = sys.c()[i].eval(t);
        let expect = -sys.d()[i].eval(t) * y[i] + migration + sys.beta()[i].eval(t) * 1.3 * (-c * 1.3).exp();
        assert!((out[i] - expect).abs() < 1e-13, "{} vs {}", out[i], expect);
    }
}
