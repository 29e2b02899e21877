use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ymspec_core::fock::{binomial, degree_states, expectation, number_operator, FockVector};
use ymspec_core::spectrum::*;

fn rayleigh(m: &DMatrix<Complex64>, v: &[Complex64]) -> f64 {
    let x = nalgebra::DVector::from_column_slice(v);
    ((x.adjoint() * m * &x)[(0, 0)] / x.norm_squared()).re
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

#[test]
fn abelian_control_matches_oscillator_oracle() {
    let model = ModelSpec::abelian_control("su2", 8);
    let symbol = model.symbol().unwrap();
    assert_eq!(symbol.degree(), 2);
    assert!(symbol.homogeneous_part(4).is_empty());
    let report = bosonic_spectrum(&model, 6).unwrap();
    let d = model.num_modes().unwrap();
    assert_eq!(d, 3);
    for n in 0..=6 {
        // ½ e_m² compresses to ½ (μ_m + 1) on every occupation state, so
        // each n-block is ½ (n + D) times the identity
        let oracle = degree_states(d, n)
            .iter()
            .map(|mu| mu.iter().map(|&k| 0.5 * (k as f64 + 1.0)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!((report.lambdas[n] - oracle).abs() < 1e-6, "n = {n}");
        assert_eq!(report.multiplicities[n], binomial(n + d - 1, d - 1).unwrap());
    }
    let g = gap_analysis(&report).unwrap();
    assert!((g.slope - 0.5).abs() < 1e-6);
    assert!(g.margin.abs() < 1e-9);
}

#[test]
fn su2_gap_and_growth() {
    let model = ModelSpec::zero_momentum("su2", 8);
    let report = bosonic_spectrum(&model, 5).unwrap();
    assert!(report.converged.iter().all(|&c| c));
    assert!(report.gap > 0.0);
    assert!(report.strictly_increasing());
    assert!(report.multiplicities.iter().all(|&m| m >= 1));
    let g = gap_analysis(&report).unwrap();
    assert!(g.slope > 0.0 && g.support.slope > 0.0);
    assert!(g.support.margin >= -1e-8);
    assert!(g.arithmetic_growth_observed);
}

#[test]
fn gap_positive_for_larger_algebras() {
    for alg in ["su3", "so4"] {
        let model = ModelSpec::zero_momentum(alg, 4);
        let r = bosonic_spectrum(&model, 2).unwrap();
        assert!(r.gap > 0.0, "{alg}: {:?}", r.lambdas);
        assert!(r.strictly_increasing(), "{alg}");
    }
}

#[test]
fn eigenvalue_bounds_rayleigh_quotients() {
    let model = ModelSpec::zero_momentum("su2", 6);
    let h = assemble_hamiltonian(&model).unwrap();
    let report = bosonic_spectrum(&model, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 0..=4 {
        let block = n_boson_block(&h, n).unwrap();
        let lambda = report.lambdas[n];
        let lowest = (0..1000).map(|_| rayleigh(&block, &random_vector(&mut rng, block.nrows()))).fold(f64::INFINITY, f64::min);
        assert!(lowest >= lambda - 1e-8, "n = {n}: {lowest} < {lambda}");
        let (values, vectors) = hermitian_eigen(&block).unwrap();
        let v: Vec<Complex64> = vectors.column(0).iter().copied().collect();
        assert!((rayleigh(&block, &v) - lambda).abs() < 1e-8);
        let count = values.iter().filter(|&&x| x - lambda <= 1e-8).count();
        assert_eq!(count, report.multiplicities[n]);
    }
}

#[test]
fn hamiltonian_blocks_are_hermitian_with_positive_vacuum() {
    let model = ModelSpec::zero_momentum("su2", 6);
    let h = assemble_hamiltonian(&model).unwrap();
    let safe: Vec<usize> = h.basis().up_to_degree(4).collect();
    assert!(h.hermiticity_defect(&safe) < 1e-12);
    let vac = expectation(&h, &FockVector::vacuum(h.basis().clone())).unwrap();
    assert!(vac.re > 0.0 && vac.im == 0.0);
}

#[test]
fn convergence_tables() {
    let t = convergence_study(&ModelSpec::abelian_control("su2", 4), &[4, 6, 8], 4).unwrap();
    assert_eq!(t.rows.len(), 3);
    assert!(t.max_change() < 1e-10);
    let t = convergence_study(&ModelSpec::zero_momentum("su2", 4), &[4, 6, 8], 4).unwrap();
    for w in t.rows.windows(2) {
        for (a, b) in w[0].lambdas.iter().zip(&w[1].lambdas) {
            assert!(b <= &(a + 1e-10));
        }
    }
    let single = convergence_study(&ModelSpec::zero_momentum("su2", 4), &[4], 2).unwrap();
    assert_eq!(single.rows.len(), 1);
    assert!(single.rows[0].change.is_none());
    assert!(convergence_study(&ModelSpec::zero_momentum("su2", 4), &[6, 4], 2).is_err());
}

#[test]
fn expectation_inequality_holds_with_reported_constant() {
    let model = ModelSpec::zero_momentum("su2", 6);
    let check = expectation_inequality_check(&model, 1000, 3).unwrap();
    assert!(check.c_star.is_finite());
    assert!(check.holds);
    assert_eq!(check.safe_dim, binomial(13, 9).unwrap());
    // independent sampling through the full operators
    let h = assemble_hamiltonian(&model).unwrap();
    let n = number_operator(h.basis());
    let safe = h.basis().up_to_degree(4).len();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let mut amps = random_vector(&mut rng, safe);
        amps.resize(h.dim(), Complex64::new(0.0, 0.0));
        let psi = FockVector::new(h.basis().clone(), amps).unwrap();
        let lhs = expectation(&h, &psi).unwrap().re;
        let rhs = expectation(&n, &psi).unwrap().re + check.c_star;
        assert!(lhs >= rhs - 1e-9);
    }
}

#[test]
fn weyl_and_normal_conventions_shift_the_levels() {
    // the quadratic part shifts by a constant between conventions; the
    // abelian levels stay evenly spaced
    for conv in [ymspec_core::symbols::OrderingConvention::Normal, ymspec_core::symbols::OrderingConvention::Weyl] {
        let model = ModelSpec { convention: conv, ..ModelSpec::abelian_control("su2", 6) };
        let r = bosonic_spectrum(&model, 4).unwrap();
        for w in r.lambdas.windows(2) {
            assert!((w[1] - w[0] - 0.5).abs() < 1e-12);
        }
    }
}
