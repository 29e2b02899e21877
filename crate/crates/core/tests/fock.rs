use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use ymspec_core::fock::*;
use ymspec_core::symbols::{OrderingConvention, PolynomialSymbol};

const D: usize = 2;
const N_MAX: usize = 6;

fn symbol() -> impl Strategy<Value = PolynomialSymbol> {
    let factor = (0..2 * D).prop_map(|i| {
        if i < D {
            PolynomialSymbol::z(D, i)
        } else {
            PolynomialSymbol::z_star(D, i - D)
        }
    });
    let term = (prop::collection::vec(factor, 0..4), -1.0f64..1.0, -1.0f64..1.0).prop_map(|(fs, re, im)| {
        fs.iter().fold(PolynomialSymbol::constant(D, Complex64::new(re, im)), |acc, f| acc.mul(f))
    });
    prop::collection::vec(term, 1..5).prop_map(|ts| ts.iter().fold(PolynomialSymbol::zero(D), |acc, t| acc.add(t)))
}

fn safe_states(basis: &Arc<FockBasis>, margin: usize) -> Vec<usize> {
    basis.up_to_degree(N_MAX - margin).collect()
}

#[test]
fn basis_counts_match_binomials() {
    let basis = FockBasis::new(4, 5).unwrap();
    assert_eq!(basis.len(), binomial(9, 4).unwrap());
    for n in 0..=5 {
        assert_eq!(basis.degree_range(n).len(), binomial(n + 3, 3).unwrap());
        assert_eq!(degree_states(4, n).len(), binomial(n + 3, 3).unwrap());
    }
    for i in 0..basis.len() {
        assert_eq!(basis.index_of(basis.state(i)), Some(i));
    }
}

#[test]
fn canonical_commutator_holds_below_the_top_degree() {
    let basis = FockBasis::new(D, N_MAX).unwrap();
    let safe = safe_states(&basis, 1);
    for m in 0..D {
        let a = ladder(&basis, m, LadderKind::Annihilate).unwrap();
        let ad = ladder(&basis, m, LadderKind::Create).unwrap();
        let c = a.commutator(&ad).unwrap().restrict(&safe);
        for i in 0..safe.len() {
            for j in 0..safe.len() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((c[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }
    assert!(ladder(&basis, D, LadderKind::Create).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quantization_respects_adjoints(s in symbol()) {
        let basis = FockBasis::new(D, N_MAX).unwrap();
        for conv in OrderingConvention::ALL {
            let q = quantize(&s, conv, &basis).unwrap();
            let qa = quantize(&s.adjoint(), conv, &basis).unwrap();
            let diff = q.adjoint().sub(&qa).unwrap().to_dense();
            prop_assert!(diff.iter().all(|x| x.norm() < 1e-12));
        }
    }

    #[test]
    fn conventions_agree_after_conversion(s in symbol()) {
        let basis = FockBasis::new(D, N_MAX).unwrap();
        let safe = safe_states(&basis, 4);
        let anti = quantize(&s, OrderingConvention::AntiNormal, &basis).unwrap().restrict(&safe);
        for conv in [OrderingConvention::Normal, OrderingConvention::Weyl] {
            let other = quantize(&s.convert(OrderingConvention::AntiNormal, conv), conv, &basis).unwrap().restrict(&safe);
            prop_assert!((&anti - &other).iter().all(|x| x.norm() < 1e-10));
        }
    }

    #[test]
    fn quantization_is_linear(s in symbol(), r in symbol(), c in -2.0f64..2.0) {
        let basis = FockBasis::new(D, N_MAX).unwrap();
        let conv = OrderingConvention::AntiNormal;
        let c = Complex64::new(c, 0.5);
        let lhs = quantize(&s.add(&r.scale(c)), conv, &basis).unwrap();
        let rhs = quantize(&s, conv, &basis).unwrap().add(&quantize(&r, conv, &basis).unwrap().scale(c)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().to_dense().iter().all(|x| x.norm() < 1e-12));
    }
}

#[test]
fn number_operator_quantizes_from_every_convention() {
    let basis = FockBasis::new(D, N_MAX).unwrap();
    let n = number_operator(&basis).to_dense();
    for conv in OrderingConvention::ALL {
        let q = quantize(&ymspec_core::symbols::number_symbol(D, conv), conv, &basis).unwrap().to_dense();
        let safe = safe_states(&basis, 2);
        for &i in &safe {
            for &j in &safe {
                assert!((q[(i, j)] - n[(i, j)]).norm() < 1e-12, "{conv:?}");
            }
        }
    }
}

#[test]
fn coordinate_export_lists_nonzeros() {
    let basis = FockBasis::new(D, 3).unwrap();
    let n = number_operator(&basis);
    let mut buf = Vec::new();
    n.write_coo(&mut buf, OrderingConvention::Normal).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(header["D"], 2);
    assert_eq!(header["N_max"], 3);
    assert_eq!(text.lines().count() - 1, n.nnz());
}
