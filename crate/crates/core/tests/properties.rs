use proptest::prelude::*;
use zeroext::adaptive::build_partition;
use zeroext::kernels::apply;
use zeroext::moduli::margin_for;
use zeroext::{omega, omega_big, zeta, GridFunction, KernelFamily, KernelSpec, Lattice};

fn samples(dim: usize, level: u32) -> impl Strategy<Value = GridFunction> {
    proptest::collection::vec(-2.0f64..2.0, 1usize << (dim as u32 * level))
        .prop_map(move |v| GridFunction::new(dim, level, v).unwrap())
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(3.0), 1.0f64..4.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norm_is_homogeneous_and_subadditive(f in samples(2, 3), g in samples(2, 3), c in -3.0f64..3.0, p in exponent()) {
        let nf = f.lp_norm(p).unwrap();
        prop_assert!((f.scaled(c).lp_norm(p).unwrap() - c.abs() * nf).abs() <= 1e-12 * (1.0 + nf));
        let sum = f.zip_with(&g, |a, b| a + b).unwrap();
        prop_assert!(sum.lp_norm(p).unwrap() <= nf + g.lp_norm(p).unwrap() + 1e-12);
    }

    #[test]
    fn interior_below_whole_space(f in samples(1, 6), p in exponent(), j in 1u32..5) {
        let t = (-(j as f64)).exp2();
        let g = f.zero_extend(margin_for(6, t));
        let z = zeta(&f, p, t).unwrap().value;
        let w = omega(&g, p, t).unwrap().value;
        prop_assert!(z <= w + 1e-12);
        prop_assert!(w <= 2.0 * f.lp_norm(p).unwrap() + 1e-12);
    }

    #[test]
    fn interior_modulus_subadditive(f in samples(2, 3), g in samples(2, 3), p in exponent(), t in 0.13f64..1.0) {
        let sum = f.zip_with(&g, |a, b| a + b).unwrap();
        let lhs = zeta(&sum, p, t).unwrap().value;
        prop_assert!(lhs <= zeta(&f, p, t).unwrap().value + zeta(&g, p, t).unwrap().value + 1e-12);
    }

    #[test]
    fn hybrid_functional_bounded_by_norm(f in samples(1, 6), p in exponent(), t in 0.02f64..1.0) {
        let big = omega_big(&f, p, t).unwrap();
        prop_assert!(big.value <= 3.0 * f.lp_norm(p).unwrap() + 1e-12);
    }

    #[test]
    fn refining_threshold_never_coarsens(f in samples(2, 4), p in exponent(), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let fine = build_partition(&f, p, lo).unwrap();
        let coarse = build_partition(&f, p, hi).unwrap();
        fine.validate().unwrap();
        coarse.validate().unwrap();
        prop_assert!(fine.total() >= coarse.total());
    }

    #[test]
    fn smoothing_contracts(f in samples(1, 6), p in exponent(), t in 0.01f64..0.2) {
        for family in KernelFamily::ALL {
            let k = KernelSpec::with_tail(family, t, 0.01).unwrap();
            let g = f.zero_extend(k.required_margin(1, 6));
            prop_assert!(apply(&k, &g).unwrap().lp_norm(p).unwrap() <= g.lp_norm(p).unwrap() + 1e-9);
        }
    }
}
