//! Temporal-gauge Yang-Mills evolution of Cauchy data `(a, e)`.
//!
//! The semi-discrete system is
//!
//! ```text
//! ∂_t a_k = e_k
//! ∂_t e_k = Σ_j (D_j F_jk - [a_j, F_jk])
//! F_jk    = D_j a_k - D_k a_j - [a_j, a_k]
//! ```
//!
//! with the same central differences as [`crate::lattice`]. Because `-D` is
//! the adjoint of `D` and the trace form is Ad-invariant, this is exactly the
//! Hamiltonian flow of the lattice energy
//! `½ h³ Σ_x (Σ_{j<k} |F_jk|² + Σ_k |e_k|²)`, which [`energy`] evaluates.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::LieAlgebraBasis;
use crate::error::{Error, Result};
use crate::lattice::{constraint_residual, VectorAlgebraField};

#[derive(Clone, Debug, PartialEq)]
pub struct CauchyState {
    pub a: VectorAlgebraField,
    pub e: VectorAlgebraField,
    pub t: f64,
}

impl CauchyState {
    pub fn new(a: VectorAlgebraField, e: VectorAlgebraField) -> Result<Self> {
        if a.lattice() != e.lattice() || a.dim() != e.dim() {
            return Err(Error::Dimension("a and e live on different lattices or algebras".into()));
        }
        Ok(CauchyState { a, e, t: 0.0 })
    }

    pub fn zeros(a_like: &VectorAlgebraField) -> Self {
        let z = VectorAlgebraField::zeros(*a_like.lattice(), a_like.dim());
        CauchyState { a: z.clone(), e: z, t: 0.0 }
    }

    /// `sqrt(‖a‖² + ‖e‖²)`.
    pub fn norm(&self) -> f64 {
        (self.a.inner(&self.a) + self.e.inner(&self.e)).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.a.is_finite() && self.e.is_finite() && self.t.is_finite()
    }
}

/// Magnetic curvature `F_jk` at every site, stored as a full antisymmetric
/// 3×3 array of algebra elements.
#[derive(Clone, Debug)]
pub struct Curvature {
    dim: usize,
    sites: usize,
    data: Vec<f64>,
}

impl Curvature {
    pub fn at(&self, site: usize, j: usize, k: usize) -> &[f64] {
        let d = self.dim;
        let off = (site * 9 + j * 3 + k) * d;
        &self.data[off..off + d]
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// `Σ_x Σ_{j<k} |F_jk(x)|²` (no volume factor).
    pub fn sum_sq_pairs(&self) -> f64 {
        self.data
            .par_chunks(9 * self.dim)
            .map(|c| {
                let d = self.dim;
                [(0, 1), (0, 2), (1, 2)]
                    .iter()
                    .map(|&(j, k)| c[(j * 3 + k) * d..(j * 3 + k + 1) * d].iter().map(|x| x * x).sum::<f64>())
                    .sum::<f64>()
            })
            .sum()
    }
}

pub fn curvature_magnetic(basis: &LieAlgebraBasis, a: &VectorAlgebraField) -> Result<Curvature> {
    if basis.dim() != a.dim() {
        return Err(Error::Dimension("connection does not match the algebra".into()));
    }
    let lat = *a.lattice();
    let d = a.dim();
    let inv = 1.0 / (2.0 * lat.spacing());
    let mut data = vec![0.0; lat.sites() * 9 * d];
    data.par_chunks_mut(9 * d).enumerate().for_each(|(s, chunk)| {
        let nb = lat.neighbors(s);
        for (j, k) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let (jf, jb, kf, kb) = (nb[2 * j], nb[2 * j + 1], nb[2 * k], nb[2 * k + 1]);
            let (ak_f, ak_b, aj_f, aj_b) = (a.at(jf, k), a.at(jb, k), a.at(kf, j), a.at(kb, j));
            let (lo, hi) = chunk.split_at_mut((k * 3 + j) * d);
            let f = &mut lo[(j * 3 + k) * d..(j * 3 + k + 1) * d];
            for p in 0..d {
                f[p] = (ak_f[p] - ak_b[p] - aj_f[p] + aj_b[p]) * inv;
            }
            basis.bracket_add_scaled(-1.0, a.at(s, j), a.at(s, k), f);
            for p in 0..d {
                hi[p] = -f[p];
            }
        }
    });
    Ok(Curvature { dim: d, sites: lat.sites(), data })
}

/// Lattice energy `½ h³ Σ_x (Σ_{j<k} |F_jk|² + Σ_k |e_k|²)`.
pub fn energy(basis: &LieAlgebraBasis, state: &CauchyState) -> Result<f64> {
    let f = curvature_magnetic(basis, &state.a)?;
    let vol = state.a.lattice().volume_factor();
    let electric: f64 = state.e.data().iter().map(|x| x * x).sum();
    Ok(0.5 * vol * (f.sum_sq_pairs() + electric))
}

/// Per-site energy `½ h³ (Σ_{j<k} |F_jk|² + Σ_k |e_k|²)`; sums to [`energy`].
pub fn energy_density(basis: &LieAlgebraBasis, state: &CauchyState) -> Result<Vec<f64>> {
    let f = curvature_magnetic(basis, &state.a)?;
    let vol = state.a.lattice().volume_factor();
    let d = state.a.dim();
    Ok((0..f.sites)
        .into_par_iter()
        .map(|s| {
            let c = &f.data[s * 9 * d..(s + 1) * 9 * d];
            let mag: f64 = [(0, 1), (0, 2), (1, 2)]
                .iter()
                .map(|&(j, k)| c[(j * 3 + k) * d..(j * 3 + k + 1) * d].iter().map(|x| x * x).sum::<f64>())
                .sum();
            let el: f64 = state.e.site_slice(s).iter().map(|x| x * x).sum();
            0.5 * vol * (mag + el)
        })
        .collect())
}

/// Right-hand side of the evolution system: returns `(∂_t a, ∂_t e)`.
pub fn time_derivative(
    basis: &LieAlgebraBasis,
    a: &VectorAlgebraField,
    e: &VectorAlgebraField,
) -> Result<(VectorAlgebraField, VectorAlgebraField)> {
    let f = curvature_magnetic(basis, a)?;
    let lat = *a.lattice();
    let d = a.dim();
    let inv = 1.0 / (2.0 * lat.spacing());
    let mut de = VectorAlgebraField::zeros(lat, d);
    de.data_mut().par_chunks_mut(3 * d).enumerate().for_each(|(s, chunk)| {
        let nb = lat.neighbors(s);
        for k in 0..3 {
            let out = &mut chunk[k * d..(k + 1) * d];
            for j in 0..3 {
                if j == k {
                    continue;
                }
                let (ff, fb) = (f.at(nb[2 * j], j, k), f.at(nb[2 * j + 1], j, k));
                for p in 0..d {
                    out[p] += (ff[p] - fb[p]) * inv;
                }
                basis.bracket_add_scaled(-1.0, a.at(s, j), f.at(s, j, k), out);
            }
        }
    });
    Ok((e.clone(), de))
}

/// Largest admissible step, `h ≤ spacing / 2`.
pub fn cfl_bound(a: &VectorAlgebraField) -> f64 {
    a.lattice().spacing() / 2.0
}

/// One classical fourth-order Runge-Kutta step. Negative `h` integrates
/// backwards; `|h|` must respect [`cfl_bound`].
pub fn rk4_step(basis: &LieAlgebraBasis, state: &CauchyState, h: f64) -> Result<CauchyState> {
    let bound = cfl_bound(&state.a);
    if !h.is_finite() || h.abs() > bound {
        return Err(Error::Unstable { h, bound });
    }
    let (ka1, ke1) = time_derivative(basis, &state.a, &state.e)?;
    let (ka2, ke2) = time_derivative(basis, &state.a.axpy(h / 2.0, &ka1), &state.e.axpy(h / 2.0, &ke1))?;
    let (ka3, ke3) = time_derivative(basis, &state.a.axpy(h / 2.0, &ka2), &state.e.axpy(h / 2.0, &ke2))?;
    let (ka4, ke4) = time_derivative(basis, &state.a.axpy(h, &ka3), &state.e.axpy(h, &ke3))?;
    let combine = |x: &VectorAlgebraField, k1: &VectorAlgebraField, k2: &VectorAlgebraField, k3: &VectorAlgebraField, k4: &VectorAlgebraField| {
        let mut out = x.clone();
        out.data_mut()
            .par_iter_mut()
            .zip(k1.data().par_iter())
            .zip(k2.data().par_iter())
            .zip(k3.data().par_iter())
            .zip(k4.data().par_iter())
            .for_each(|((((o, a), b), c), d)| *o += h / 6.0 * (a + 2.0 * b + 2.0 * c + d));
        out
    };
    Ok(CauchyState {
        a: combine(&state.a, &ka1, &ka2, &ka3, &ka4),
        e: combine(&state.e, &ke1, &ke2, &ke3, &ke4),
        t: state.t + h,
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EvolutionReport {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub constraint: Vec<f64>,
}

impl EvolutionReport {
    fn push(&mut self, t: f64, e: f64, c: f64) {
        self.times.push(t);
        self.energy.push(e);
        self.constraint.push(c);
    }

    /// `max_t |E(t) - E(0)| / E(0)`; zero for zero initial energy that stays zero.
    pub fn relative_energy_drift(&self) -> f64 {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        let worst = self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        if e0 == 0.0 { worst } else { worst / e0 }
    }

    /// `max_t (residual(t) - residual(0))`, clamped at zero.
    pub fn constraint_growth(&self) -> f64 {
        let c0 = self.constraint.first().copied().unwrap_or(0.0);
        self.constraint.iter().map(|c| c - c0).fold(0.0, f64::max)
    }

    /// CSV with header `t,energy,constraint_residual`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,energy,constraint_residual")?;
        for i in 0..self.times.len() {
            writeln!(w, "{:?},{:?},{:?}", self.times[i], self.energy[i], self.constraint[i])?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub t_final: f64,
    pub h: f64,
    /// Initial data with a larger Gauss-law residual are rejected.
    pub max_initial_residual: f64,
}

/// Integrates to `t_final` with steps of at most `h`, recording energy and
/// constraint residual after every step.
pub fn evolve(
    basis: &LieAlgebraBasis,
    state: &CauchyState,
    opts: &EvolveOptions,
) -> Result<(CauchyState, EvolutionReport)> {
    if !(opts.h > 0.0) || !(opts.t_final >= 0.0) {
        return Err(Error::Malformed(format!(
            "need h > 0 and T >= 0, got h = {}, T = {}",
            opts.h, opts.t_final
        )));
    }
    let bound = cfl_bound(&state.a);
    if opts.h > bound {
        return Err(Error::Unstable { h: opts.h, bound });
    }
    let c0 = constraint_residual(basis, &state.a, &state.e)?;
    if c0 > opts.max_initial_residual {
        return Err(Error::Domain(format!(
            "initial constraint residual {c0:.3e} exceeds {:.3e}",
            opts.max_initial_residual
        )));
    }
    let steps = (opts.t_final / opts.h - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { opts.t_final / steps as f64 };
    let mut report = EvolutionReport::default();
    let mut cur = state.clone();
    report.push(cur.t, energy(basis, &cur)?, c0);
    for _ in 0..steps {
        let next = rk4_step(basis, &cur, h)?;
        if !next.is_finite() {
            return Err(Error::Diverged { t: next.t, last_finite: Box::new(cur) });
        }
        let en = energy(basis, &next)?;
        if !en.is_finite() {
            return Err(Error::Diverged { t: next.t, last_finite: Box::new(cur) });
        }
        report.push(next.t, en, constraint_residual(basis, &next.a, &next.e)?);
        cur = next;
    }
    Ok((cur, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_algebra;
    use crate::lattice::{
        adjoint_field, band_limited_random_field, gauge_transform, grad, transversal_project, GaugeGroupField, LatticeSpec,
        ScalarAlgebraField,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn curvature_examples() {
        let g = build_algebra("su2").unwrap();
        let lat = LatticeSpec::new(4, 0.5).unwrap();
        let zero = VectorAlgebraField::zeros(lat, 3);
        assert!(curvature_magnetic(&g, &zero).unwrap().data.iter().all(|x| *x == 0.0));

        let aligned = VectorAlgebraField::from_fn(lat, 3, |_| [vec![1.0, 0.0, 0.0], vec![-2.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]]);
        assert!(curvature_magnetic(&g, &aligned).unwrap().data.iter().all(|x| x.abs() < 1e-15));

        let a = VectorAlgebraField::from_fn(lat, 3, |_| [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0; 3]]);
        let f = curvature_magnetic(&g, &a).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        for s in 0..lat.sites() {
            let f01 = f.at(s, 0, 1);
            assert!(f01[0] == 0.0 && f01[1] == 0.0 && (f01[2] + c).abs() < 1e-15);
            for j in 0..3 {
                for k in 0..3 {
                    for p in 0..3 {
                        assert_eq!(f.at(s, j, k)[p], -f.at(s, k, j)[p]);
                    }
                }
            }
        }
    }

    #[test]
    fn energy_examples() {
        let g = build_algebra("su2").unwrap();
        let lat = LatticeSpec::new(4, 0.5).unwrap();
        let zero = VectorAlgebraField::zeros(lat, 3);
        assert_eq!(energy(&g, &CauchyState::zeros(&zero)).unwrap(), 0.0);

        let mut e = zero.clone();
        e.data_mut()[7] = 1.0 / lat.volume_factor().sqrt();
        let st = CauchyState::new(zero.clone(), e.clone()).unwrap();
        assert!((energy(&g, &st).unwrap() - 0.5 * e.inner(&e)).abs() < 1e-15);
    }

    /// Scalar Maxwell energy with the same central-difference curl.
    fn maxwell_energy(lat: &LatticeSpec, a: &[[f64; 3]], e: &[[f64; 3]]) -> f64 {
        let inv = 1.0 / (2.0 * lat.spacing());
        let mut total = 0.0;
        for s in 0..lat.sites() {
            let d = |j: usize, k: usize| (a[lat.neighbor(s, j, true)][k] - a[lat.neighbor(s, j, false)][k]) * inv;
            let b = [d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)];
            total += b.iter().map(|x| x * x).sum::<f64>() + e[s].iter().map(|x| x * x).sum::<f64>();
        }
        0.5 * lat.volume_factor() * total
    }

    #[test]
    fn abelian_energy_matches_maxwell() {
        let g = build_algebra("su2").unwrap();
        let lat = LatticeSpec::new(8, 0.3).unwrap();
        let l = lat.length();
        let prof = |x: [f64; 3]| -> ([f64; 3], [f64; 3]) {
            let p = 2.0 * PI * (x[0] + 2.0 * x[1]) / l;
            ([0.3 * p.sin(), 0.7 * p.cos(), -0.2 * (2.0 * PI * x[2] / l).sin()], [p.cos(), 0.1, (p + 0.3).sin()])
        };
        let a = VectorAlgebraField::from_fn(lat, 3, |x| prof(x).0.map(|v| vec![v, 0.0, 0.0]));
        let e = VectorAlgebraField::from_fn(lat, 3, |x| prof(x).1.map(|v| vec![v, 0.0, 0.0]));
        let sa: Vec<[f64; 3]> = (0..lat.sites()).map(|s| prof(lat.position(s)).0).collect();
        let se: Vec<[f64; 3]> = (0..lat.sites()).map(|s| prof(lat.position(s)).1).collect();
        let ours = energy(&g, &CauchyState::new(a, e).unwrap()).unwrap();
        let oracle = maxwell_energy(&lat, &sa, &se);
        assert!((ours - oracle).abs() < 1e-12 * oracle);
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let g = build_algebra("su3").unwrap();
        let lat = LatticeSpec::new(4, 1.0).unwrap();
        let st = CauchyState::zeros(&VectorAlgebraField::zeros(lat, 8));
        let next = rk4_step(&g, &st, 0.1).unwrap();
        assert_eq!(next.a, st.a);
        assert_eq!(next.e, st.e);
        let (fin, rep) = evolve(&g, &st, &EvolveOptions { t_final: 1.0, h: 0.25, max_initial_residual: 1e-12 }).unwrap();
        assert_eq!(fin.a, st.a);
        assert!(rep.energy.iter().all(|e| *e == 0.0));
        assert_eq!(rep.times.len(), 5);
    }

    #[test]
    fn cfl_violation_rejected() {
        let g = build_algebra("su2").unwrap();
        let lat = LatticeSpec::new(4, 0.2).unwrap();
        let st = CauchyState::zeros(&VectorAlgebraField::zeros(lat, 3));
        assert!(matches!(rk4_step(&g, &st, 0.11), Err(Error::Unstable { .. })));
        assert!(matches!(
            evolve(&g, &st, &EvolveOptions { t_final: 1.0, h: 0.2, max_initial_residual: 1.0 }),
            Err(Error::Unstable { .. })
        ));
    }

    /// Closed-form abelian plane wave for the central-difference wave
    /// equation: `a = A ε cos(θ·x - ωt) b_1` with `ω = |sin θ| / h`.
    fn plane_wave(lat: LatticeSpec, t: f64) -> CauchyState {
        let l = lat.length();
        let h = lat.spacing();
        let m = [1.0, 1.0, 0.0];
        let kappa: Vec<f64> = (0..3).map(|k| (2.0 * PI * m[k] * h / l).sin() / h).collect();
        let omega = kappa.iter().map(|x| x * x).sum::<f64>().sqrt();
        let pol = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0]; // ⟂ κ
        let amp = 0.4;
        let phase = |x: [f64; 3]| (0..3).map(|k| 2.0 * PI * m[k] * x[k] / l).sum::<f64>() - omega * t;
        let a = VectorAlgebraField::from_fn(lat, 3, |x| pol.map(|p| vec![amp * p * phase(x).cos(), 0.0, 0.0]));
        let e = VectorAlgebraField::from_fn(lat, 3, |x| pol.map(|p| vec![amp * p * omega * phase(x).sin(), 0.0, 0.0]));
        CauchyState { a, e, t }
    }

    #[test]
    fn abelian_plane_wave_matches_closed_form() {
        let g = build_algebra("su2").unwrap();
        let lat = LatticeSpec::new(8, 0.5).unwrap();
        let s0 = plane_wave(lat, 0.0);
        let mut errs = Vec::new();
        for h in [0.05, 0.025] {
            let (fin, _) = evolve(&g, &s0, &EvolveOptions { t_final: 1.0, h, max_initial_residual: 1e-10 }).unwrap();
            let exact = plane_wave(lat, 1.0);
            errs.push(fin.a.sub(&exact.a).norm() / exact.a.norm());
        }
        assert!(errs[0] < 1e-5, "{errs:?}");
        assert!(errs[0] / errs[1] > 12.0, "fourth order: {errs:?}");
    }

    #[test]
    fn reversed_step_recovers_state() {
        let g = build_algebra("su2").unwrap();
        let lat = LatticeSpec::new(6, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = band_limited_random_field(lat, 3, 1, 0.5, &mut rng);
        let e = band_limited_random_field(lat, 3, 1, 0.5, &mut rng);
        let s0 = CauchyState::new(a, e).unwrap();
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let back = rk4_step(&g, &rk4_step(&g, &s0, h).unwrap(), -h).unwrap();
            errs.push(back.a.sub(&s0.a).norm() + back.e.sub(&s0.e).norm());
        }
        assert!(errs[0] < 1e-4 * s0.norm(), "{errs:?}");
        // the round trip error is odd in h at leading order, O(h^5) or better
        assert!(errs[0] / errs[1] > 25.0, "{errs:?}");
    }

    fn projected_random_state(n: usize, amp: f64, seed: u64) -> (LieAlgebraBasis, CauchyState) {
        let g = build_algebra("su2").unwrap();
        let lat = LatticeSpec::new(n, 1.0 / n as f64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = band_limited_random_field(lat, 3, 1, amp, &mut rng);
        let e0 = band_limited_random_field(lat, 3, 1, amp, &mut rng);
        let e = transversal_project(&g, &a, &e0, 1e-12).unwrap();
        (g, CauchyState::new(a, e).unwrap())
    }

    #[test]
    fn nonabelian_energy_and_constraint_conserved() {
        let (g, st) = projected_random_state(16, 1e-3, 12);
        let h = st.a.lattice().spacing() / 10.0;
        let (_, rep) = evolve(&g, &st, &EvolveOptions { t_final: 1000.0 * h, h, max_initial_residual: 1e-9 }).unwrap();
        assert_eq!(rep.times.len(), 1001);
        assert!(rep.relative_energy_drift() < 1e-6, "{}", rep.relative_energy_drift());
        assert!(rep.constraint_growth() < 1e-6 * st.norm(), "{}", rep.constraint_growth());
    }

    /// The central-difference stencil does not obey the Leibniz rule, so
    /// the Gauss law is only preserved up to a defect cubic in the amplitude
    /// and quadratic in the spacing.
    #[test]
    fn gauss_law_defect_scaling() {
        let growth = |n: usize, amp: f64| {
            let (g, st) = projected_random_state(n, amp, 5);
            let (_, rep) = evolve(&g, &st, &EvolveOptions { t_final: 0.25, h: 0.1 / n as f64, max_initial_residual: 1e-9 })
                .unwrap();
            rep.constraint_growth()
        };
        let amp_ratio = growth(8, 0.2) / growth(8, 0.1);
        assert!((amp_ratio - 8.0).abs() < 1.0, "amplitude exponent: {amp_ratio}");
        let h_ratio = growth(8, 0.05) / growth(16, 0.05);
        assert!(h_ratio > 3.0, "spacing exponent: {h_ratio}");
    }

    #[test]
    fn energy_is_gauge_invariant_for_smooth_gauge() {
        let g = build_algebra("su2").unwrap();
        let mut devs = Vec::new();
        for n in [8, 16] {
            let lat = LatticeSpec::new(n, 1.0 / n as f64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            let a = band_limited_random_field(lat, 3, 1, 1.0, &mut rng);
            let e = band_limited_random_field(lat, 3, 1, 1.0, &mut rng);
            let u = ScalarAlgebraField::from_fn(lat, 3, |x| {
                vec![0.3 * (2.0 * PI * x[0]).sin(), 0.2 * (2.0 * PI * x[1]).cos(), 0.1]
            });
            let gg = GaugeGroupField::exp_of(&g, &u).unwrap();
            let e0 = energy(&g, &CauchyState::new(a.clone(), e.clone()).unwrap()).unwrap();
            let eg = energy(
                &g,
                &CauchyState::new(gauge_transform(&g, &gg, &a).unwrap(), adjoint_field(&g, &gg, &e).unwrap()).unwrap(),
            )
            .unwrap();
            devs.push((eg - e0).abs() / e0);
        }
        assert!(devs[1] < 0.01, "{devs:?}");
        assert!(devs[0] / devs[1] > 3.0, "discretisation error should shrink: {devs:?}");
    }

    #[test]
    fn report_csv_layout() {
        let mut r = EvolutionReport::default();
        r.push(0.0, 1.0, 0.0);
        r.push(0.5, 1.5, 2e-12);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,energy,constraint_residual\n0.0,1.0,0.0\n0.5,1.5,2e-12\n");
        assert_eq!(r.relative_energy_drift(), 0.5);
        assert_eq!(r.constraint_growth(), 2e-12);
    }

    #[test]
    fn energy_density_sums_to_energy() {
        let (g, st) = projected_random_state(6, 0.5, 3);
        let total: f64 = energy_density(&g, &st).unwrap().iter().sum();
        assert!((total - energy(&g, &st).unwrap()).abs() < 1e-12 * total);
    }

    #[test]
    fn finite_propagation_speed() {
        let g = build_algebra("su2").unwrap();
        let n = 64;
        let lat = LatticeSpec::new(n, 1.0 / n as f64).unwrap();
        // smooth bump in x_0 ∈ (0, ½), everything else zero
        let bump = |x: [f64; 3]| {
            if x[0] < 0.5 {
                (2.0 * PI * x[0]).sin().powi(4)
            } else {
                0.0
            }
        };
        // a = 0 and e = curl w with w supported in the bump: the Gauss law
        // holds exactly and the data stay compactly supported
        let w = VectorAlgebraField::from_fn(lat, 3, |x| {
            let b = bump(x);
            let c = (2.0 * PI * x[1]).sin();
            [vec![0.0, 0.3 * b * c, 0.0], vec![0.4 * b, 0.0, 0.2 * b], vec![0.1 * b, 0.3 * b * c, 0.0]]
        });
        let gw = |k: usize| {
            let mut out = ScalarAlgebraField::zeros(lat, 3);
            for site in 0..lat.sites() {
                out.data_mut()[site * 3..site * 3 + 3].copy_from_slice(w.at(site, k));
            }
            grad(&out)
        };
        let dw = [gw(0), gw(1), gw(2)]; // dw[k].at(s, j) = D_j w_k
        let mut e = VectorAlgebraField::zeros(lat, 3);
        for site in 0..lat.sites() {
            for k in 0..3 {
                let (j, l) = ((k + 1) % 3, (k + 2) % 3);
                for p in 0..3 {
                    e.data_mut()[(site * 3 + k) * 3 + p] = dw[l].at(site, j)[p] - dw[j].at(site, l)[p];
                }
            }
        }
        let a = VectorAlgebraField::zeros(lat, 3);
        assert!(constraint_residual(&g, &a, &e).unwrap() < 1e-12);
        let st = CauchyState::new(a, e).unwrap();
        let t = 0.125;
        let (fin, _) = evolve(&g, &st, &EvolveOptions { t_final: t, h: lat.spacing() / 4.0, max_initial_residual: 1e-9 }).unwrap();
        let dens = energy_density(&g, &fin).unwrap();
        let total: f64 = dens.iter().sum();
        // support after time t: x_0 ∈ [-t, ½ + t], plus one stencil cell either side
        let reach = t + 2.0 * lat.spacing();
        let outside: f64 = (0..lat.sites())
            .filter(|&s| {
                let x0 = lat.position(s)[0];
                x0 > 0.5 + reach && x0 < 1.0 - reach
            })
            .map(|s| dens[s])
            .sum();
        assert!(outside < 1e-8 * total, "{:e}", outside / total);
    }
}
