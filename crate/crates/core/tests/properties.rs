use proptest::prelude::*;
use proptest::strategy::ValueTree;
use sympass_core::{
    compatible_polarizers, embed_constant, lp_norm, polarize, reflect, schwarz, sobolev_seminorm, v_norm, Domain,
    Functional, GridFunction, LambdaFamily, Path, PathFamily,
};

fn line() -> Domain {
    Domain::line(4.0, 33).unwrap()
}

fn square() -> Domain {
    Domain::square(2.0, 9).unwrap()
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp_triangle_inequality(a in values(33), b in values(33), p in 1.0..6.0f64) {
        let (u, v) = (GridFunction::new(line(), a).unwrap(), GridFunction::new(line(), b).unwrap());
        let sum = GridFunction::new(line(), u.values().iter().zip(v.values()).map(|(x, y)| x + y).collect()).unwrap();
        prop_assert!(lp_norm(&sum, p).unwrap() <= lp_norm(&u, p).unwrap() + lp_norm(&v, p).unwrap() + 1e-12);
    }

    #[test]
    fn polarization_contracts_in_2d(a in values(81), b in values(81), k in 0usize..1000) {
        let d = square();
        let pool = compatible_polarizers(&d);
        let h = pool[k % pool.len()];
        let (u, v) = (GridFunction::new(d, a).unwrap(), GridFunction::new(d, b).unwrap());
        let lhs = polarize(&u, &h).unwrap().sub(&polarize(&v, &h).unwrap()).unwrap();
        let rhs = u.sub(&v).unwrap();
        for p in [2.0, 4.0] {
            prop_assert!(lp_norm(&lhs, p).unwrap() <= lp_norm(&rhs, p).unwrap() + 1e-12);
        }
    }

    #[test]
    fn schwarz_is_symmetric_decreasing(a in values(81)) {
        let d = square();
        let s = schwarz(&GridFunction::new(d, a.clone()).unwrap());
        let mut sorted: Vec<f64> = a.iter().map(|v| v.abs()).collect();
        let mut out = s.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        out.sort_by(f64::total_cmp);
        prop_assert_eq!(sorted, out);
        for i in 0..d.len() {
            for j in 0..d.len() {
                if d.radius(i) < d.radius(j) - 1e-12 {
                    prop_assert!(s.values()[i] >= s.values()[j]);
                }
            }
        }
        // u* is a fixed point of every admissible polarizer
        for h in compatible_polarizers(&d) {
            prop_assert_eq!(&polarize(&s, &h).unwrap(), &s);
        }
    }

    #[test]
    fn reflection_is_an_involution(k in 0usize..1000, i in 0usize..81) {
        let d = square();
        let pool = compatible_polarizers(&d);
        let h = pool[k % pool.len()];
        if let Some(j) = reflect(&d, i, &h).unwrap() {
            prop_assert_eq!(reflect(&d, j, &h).unwrap(), Some(i));
        }
    }

    #[test]
    fn nonzero_functions_have_positive_seminorm(a in values(33)) {
        let u = GridFunction::new(line(), a).unwrap();
        prop_assume!(u.values().iter().any(|v| *v != 0.0));
        prop_assert!(sobolev_seminorm(&u, 2.0).unwrap() > 0.0);
    }

    #[test]
    fn energy_is_even(a in values(33), lambda in 0.25..1.0f64) {
        let fam = LambdaFamily::new(Default::default(), line()).unwrap();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        prop_assert_eq!(fam.energy(lambda, &a).unwrap(), fam.energy(lambda, &neg).unwrap());
    }
}

#[test]
fn embedding_constant_dominates_quotients() {
    let d = line();
    let k = embed_constant(&d, 2.0, 4.0, 500, 9).unwrap();
    assert!(k.is_finite() && k > 0.0);
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..500 {
        let a = values(33).new_tree(&mut runner).unwrap().current();
        let u = GridFunction::new(d, a).unwrap();
        let x = lp_norm(&u, 2.0).unwrap() + sobolev_seminorm(&u, 2.0).unwrap();
        assert!(v_norm(&u, 2.0, 4.0).unwrap() <= k * x + 1e-12);
    }
}

#[test]
fn path_endpoints_are_enforced() {
    let fam = LambdaFamily::new(Default::default(), line()).unwrap();
    let v: Vec<f64> = (0..33).map(|i| 3.0 / (-4.0 + 0.25 * i as f64).cosh()).collect();
    assert!(fam.energy(1.0, &v).unwrap() < 0.0);
    let mid: Vec<f64> = v.iter().map(|x| 0.5 * x).collect();
    let path = Path::new(
        vec![vec![0.0; 33], mid.clone(), v.clone()],
        PathFamily::FixedEndpoint(v.clone()),
    )
    .unwrap();
    path.check_membership(&fam, 1.0).unwrap();
    assert!(Path::new(vec![vec![1.0; 33], mid, v.clone()], PathFamily::FixedEndpoint(v)).is_err());
}
