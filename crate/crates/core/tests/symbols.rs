use num_complex::Complex64;
use proptest::prelude::*;
use ymspec_core::symbols::*;
use OrderingConvention::*;

const D: usize = 3;

/// Random symbol from products of at most four generators `z_m`, `z*_m`.
fn symbol() -> impl Strategy<Value = PolynomialSymbol> {
    let factor = (0..2 * D).prop_map(|i| {
        if i < D {
            PolynomialSymbol::z(D, i)
        } else {
            PolynomialSymbol::z_star(D, i - D)
        }
    });
    let term = (prop::collection::vec(factor, 0..5), -1.0f64..1.0, -1.0f64..1.0).prop_map(|(fs, re, im)| {
        fs.iter().fold(PolynomialSymbol::constant(D, Complex64::new(re, im)), |acc, f| acc.mul(f))
    });
    prop::collection::vec(term, 1..6).prop_map(|ts| ts.iter().fold(PolynomialSymbol::zero(D), |acc, t| acc.add(t)))
}

fn point() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), D)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_is_additive(s in symbol(), t1 in -1.0f64..1.0, t2 in -1.0f64..1.0) {
        let joint = s.weierstrass_flow(t1 + t2);
        let stepped = s.weierstrass_flow(t1).weierstrass_flow(t2);
        prop_assert!(joint.max_abs_diff(&stepped) < 1e-12);
    }

    #[test]
    fn conversions_compose_and_invert(s in symbol()) {
        let direct = s.convert(Normal, AntiNormal);
        let via_weyl = s.convert(Normal, Weyl).convert(Weyl, AntiNormal);
        prop_assert!(direct.max_abs_diff(&via_weyl) < 1e-12);
        prop_assert!(direct.convert(AntiNormal, Normal).max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn flow_preserves_top_degree_and_adjoints(s in symbol(), t in -1.0f64..1.0) {
        let f = s.weierstrass_flow(t);
        prop_assert!(f.homogeneous_part(s.degree()).max_abs_diff(&s.homogeneous_part(s.degree())) < 1e-12);
        prop_assert!(f.adjoint().max_abs_diff(&s.adjoint().weierstrass_flow(t)) < 1e-12);
    }

    #[test]
    fn products_evaluate_pointwise(s in symbol(), r in symbol(), z in point()) {
        let lhs = s.mul(&r).evaluate(&z).unwrap();
        let rhs = s.evaluate(&z).unwrap() * r.evaluate(&z).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0));
    }

    #[test]
    fn real_coordinates_round_trip(z in point()) {
        let (a, e) = complex_to_real(&z);
        let back = real_to_complex(&a, &e).unwrap();
        for (x, y) in z.iter().zip(&back) {
            prop_assert!((x - y).norm() < 1e-15);
        }
    }
}

#[test]
fn number_symbols_shift_by_half_per_mode() {
    let zz = (0..D).fold(PolynomialSymbol::zero(D), |acc, m| {
        acc.add(&PolynomialSymbol::z_star(D, m).mul(&PolynomialSymbol::z(D, m)))
    });
    let shift = |c: f64| zz.add(&PolynomialSymbol::constant(D, Complex64::new(c * D as f64, 0.0)));
    assert!(number_symbol(D, Normal).max_abs_diff(&zz) < 1e-15);
    assert!(number_symbol(D, Weyl).max_abs_diff(&shift(-0.5)) < 1e-15);
    assert!(number_symbol(D, AntiNormal).max_abs_diff(&shift(-1.0)) < 1e-15);
    assert!(zz.convert(AntiNormal, Weyl).max_abs_diff(&shift(0.5)) < 1e-15);
}

#[test]
fn mismatched_mode_counts_are_errors() {
    let a = PolynomialSymbol::z(2, 0);
    let b = PolynomialSymbol::z(3, 0);
    assert!(a.try_add(&b).is_err());
    assert!(a.try_mul(&b).is_err());
    assert!(a.evaluate(&[Complex64::new(1.0, 0.0)]).is_err());
}
