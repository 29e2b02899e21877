//! Gauged vector calculus on a periodic cubic lattice.
//!
//! Fields take values in a Lie algebra (coefficient vectors in an orthonormal
//! basis) and live on the `n³` sites of a torus with spacing `h`. Derivatives
//! are central differences `D_k u(x) = (u(x + e_k) - u(x - e_k)) / 2h`, so
//! that `-grad_a` and `div_a` are exact adjoints for the volume-weighted
//! inner product `⟨u, v⟩ = h³ Σ_x u(x)·v(x)`.
//!
//! Flat storage order is site-major, then spatial component, then algebra
//! index: `((site * 3 + k) * dim + p)` for vector fields and
//! `(site * dim + p)` for scalar fields. Sites are numbered
//! `(i0 * n + i1) * n + i2`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, LieAlgebraBasis, SpatialAlgebraVector};
use crate::error::{Error, Result};

pub mod io;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    n: usize,
    spacing: f64,
}

impl LatticeSpec {
    pub fn new(n: usize, spacing: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Malformed(format!("lattice needs n >= 2, got {n}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Malformed(format!("lattice spacing must be positive, got {spacing}")));
        }
        Ok(LatticeSpec { n, spacing })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Volume of one lattice cell, `h³`.
    pub fn volume_factor(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// Side length of the torus.
    pub fn length(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    pub fn sites(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn coords(&self, site: usize) -> [usize; 3] {
        let n = self.n;
        [site / (n * n), (site / n) % n, site % n]
    }

    #[inline]
    pub fn site(&self, c: [usize; 3]) -> usize {
        (c[0] * self.n + c[1]) * self.n + c[2]
    }

    /// Physical position of a site, in `[0, L)³`.
    pub fn position(&self, site: usize) -> [f64; 3] {
        self.coords(site).map(|i| i as f64 * self.spacing)
    }

    /// Neighbour of `site` one step along `dir` in the `+` or `-` sense.
    #[inline]
    pub fn neighbor(&self, site: usize, dir: usize, forward: bool) -> usize {
        let mut c = self.coords(site);
        c[dir] = if forward { (c[dir] + 1) % self.n } else { (c[dir] + self.n - 1) % self.n };
        self.site(c)
    }

    /// All six neighbours, ordered `[+0, -0, +1, -1, +2, -2]`.
    #[inline]
    pub fn neighbors(&self, site: usize) -> [usize; 6] {
        let n = self.n;
        let [i0, i1, i2] = self.coords(site);
        let up = |i: usize| if i + 1 == n { 0 } else { i + 1 };
        let down = |i: usize| if i == 0 { n - 1 } else { i - 1 };
        [
            self.site([up(i0), i1, i2]),
            self.site([down(i0), i1, i2]),
            self.site([i0, up(i1), i2]),
            self.site([i0, down(i1), i2]),
            self.site([i0, i1, up(i2)]),
            self.site([i0, i1, down(i2)]),
        ]
    }

    fn shifts(&self) -> Vec<[usize; 6]> {
        (0..self.sites()).map(|s| self.neighbors(s)).collect()
    }
}

fn check_lattice(a: &LatticeSpec, b: &LatticeSpec) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!(
            "lattice mismatch: n={} h={} vs n={} h={}",
            a.n, a.spacing, b.n, b.spacing
        )));
    }
    Ok(())
}

fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension(format!(
            "{what} has algebra dimension {got}, expected {expected}"
        )));
    }
    Ok(())
}

/// Algebra-valued function on the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarAlgebraField {
    lattice: LatticeSpec,
    dim: usize,
    data: Vec<f64>,
}

/// Algebra-valued spatial vector field on the lattice (houses `a` and `e`).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorAlgebraField {
    lattice: LatticeSpec,
    dim: usize,
    data: Vec<f64>,
}

macro_rules! field_common {
    ($t:ty, $per_site:expr) => {
        impl $t {
            pub fn zeros(lattice: LatticeSpec, dim: usize) -> Self {
                Self { lattice, dim, data: vec![0.0; lattice.sites() * $per_site * dim] }
            }

            pub fn from_data(lattice: LatticeSpec, dim: usize, data: Vec<f64>) -> Result<Self> {
                let expected = lattice.sites() * $per_site * dim;
                if data.len() != expected {
                    return Err(Error::Dimension(format!(
                        "field data has {} values, expected {expected}",
                        data.len()
                    )));
                }
                Ok(Self { lattice, dim, data })
            }

            pub fn lattice(&self) -> &LatticeSpec {
                &self.lattice
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn data(&self) -> &[f64] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [f64] {
                &mut self.data
            }

            pub fn into_data(self) -> Vec<f64> {
                self.data
            }

            /// Volume-weighted inner product.
            pub fn inner(&self, other: &Self) -> f64 {
                self.lattice.volume_factor()
                    * self.data.iter().zip(&other.data).map(|(x, y)| x * y).sum::<f64>()
            }

            /// Volume-weighted L² norm.
            pub fn norm(&self) -> f64 {
                self.inner(self).sqrt()
            }

            pub fn scaled(&self, s: f64) -> Self {
                Self { lattice: self.lattice, dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
            }

            /// `self + s * other`.
            pub fn axpy(&self, s: f64, other: &Self) -> Self {
                Self {
                    lattice: self.lattice,
                    dim: self.dim,
                    data: self.data.iter().zip(&other.data).map(|(x, y)| x + s * y).collect(),
                }
            }

            pub fn sub(&self, other: &Self) -> Self {
                self.axpy(-1.0, other)
            }

            pub fn is_finite(&self) -> bool {
                self.data.iter().all(|x| x.is_finite())
            }

        }
    };
}

field_common!(ScalarAlgebraField, 1);
field_common!(VectorAlgebraField, 3);

impl ScalarAlgebraField {
    pub fn from_fn(lattice: LatticeSpec, dim: usize, f: impl Fn([f64; 3]) -> Vec<f64>) -> Self {
        let mut out = Self::zeros(lattice, dim);
        for s in 0..lattice.sites() {
            let v = f(lattice.position(s));
            out.data[s * dim..(s + 1) * dim].copy_from_slice(&v[..dim]);
        }
        out
    }

    pub fn at(&self, site: usize) -> &[f64] {
        &self.data[site * self.dim..(site + 1) * self.dim]
    }

    pub fn element(&self, site: usize) -> AlgebraElement {
        AlgebraElement(self.at(site).to_vec())
    }
}

impl VectorAlgebraField {
    /// `f(position)[k]` gives the algebra coefficients of component `k`.
    pub fn from_fn(lattice: LatticeSpec, dim: usize, f: impl Fn([f64; 3]) -> [Vec<f64>; 3]) -> Self {
        let mut out = Self::zeros(lattice, dim);
        for s in 0..lattice.sites() {
            let v = f(lattice.position(s));
            for (k, vk) in v.iter().enumerate() {
                out.data[(s * 3 + k) * dim..(s * 3 + k + 1) * dim].copy_from_slice(&vk[..dim]);
            }
        }
        out
    }

    pub fn at(&self, site: usize, k: usize) -> &[f64] {
        let d = self.dim;
        &self.data[(site * 3 + k) * d..(site * 3 + k + 1) * d]
    }

    pub fn site_slice(&self, site: usize) -> &[f64] {
        let d = self.dim;
        &self.data[site * 3 * d..(site + 1) * 3 * d]
    }

    pub fn vector(&self, site: usize) -> SpatialAlgebraVector {
        SpatialAlgebraVector([0, 1, 2].map(|k| AlgebraElement(self.at(site, k).to_vec())))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == 0.0)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        check_lattice(&self.lattice, &other.lattice)?;
        check_dim(self.dim, other.dim, "field")
    }
}

/// Ordinary central-difference gradient of a scalar field.
pub fn grad(u: &ScalarAlgebraField) -> VectorAlgebraField {
    let lat = u.lattice;
    let d = u.dim;
    let inv = 1.0 / (2.0 * lat.spacing);
    let nb = lat.shifts();
    let mut out = VectorAlgebraField::zeros(lat, d);
    out.data.par_chunks_mut(3 * d).enumerate().for_each(|(s, chunk)| {
        for k in 0..3 {
            let (fwd, bwd) = (u.at(nb[s][2 * k]), u.at(nb[s][2 * k + 1]));
            for p in 0..d {
                chunk[k * d + p] = (fwd[p] - bwd[p]) * inv;
            }
        }
    });
    out
}

/// Ordinary central-difference divergence of a vector field.
pub fn div(e: &VectorAlgebraField) -> ScalarAlgebraField {
    let lat = e.lattice;
    let d = e.dim;
    let inv = 1.0 / (2.0 * lat.spacing);
    let nb = lat.shifts();
    let mut out = ScalarAlgebraField::zeros(lat, d);
    out.data.par_chunks_mut(d).enumerate().for_each(|(s, chunk)| {
        for k in 0..3 {
            let (fwd, bwd) = (e.at(nb[s][2 * k], k), e.at(nb[s][2 * k + 1], k));
            for p in 0..d {
                chunk[p] += (fwd[p] - bwd[p]) * inv;
            }
        }
    });
    out
}

/// `grad_a u = D_k u - [a_k, u]`.
pub fn gauged_grad(
    basis: &LieAlgebraBasis,
    a: &VectorAlgebraField,
    u: &ScalarAlgebraField,
) -> Result<VectorAlgebraField> {
    check_lattice(&a.lattice, &u.lattice)?;
    check_dim(basis.dim(), a.dim, "connection")?;
    check_dim(basis.dim(), u.dim, "scalar field")?;
    let d = u.dim;
    let mut out = grad(u);
    if !a.is_zero() {
        out.data.par_chunks_mut(3 * d).enumerate().for_each(|(s, chunk)| {
            for k in 0..3 {
                basis.bracket_add_scaled(-1.0, a.at(s, k), u.at(s), &mut chunk[k * d..(k + 1) * d]);
            }
        });
    }
    Ok(out)
}

/// `div_a e = Σ_k (D_k e_k - [a_k, e_k])`.
pub fn gauged_div(
    basis: &LieAlgebraBasis,
    a: &VectorAlgebraField,
    e: &VectorAlgebraField,
) -> Result<ScalarAlgebraField> {
    a.same_shape(e)?;
    check_dim(basis.dim(), a.dim, "connection")?;
    let d = e.dim;
    let mut out = div(e);
    if !a.is_zero() {
        out.data.par_chunks_mut(d).enumerate().for_each(|(s, chunk)| {
            for k in 0..3 {
                basis.bracket_add_scaled(-1.0, a.at(s, k), e.at(s, k), chunk);
            }
        });
    }
    Ok(out)
}

/// `Δ_a = div_a ∘ grad_a`.
pub fn gauged_laplacian(
    basis: &LieAlgebraBasis,
    a: &VectorAlgebraField,
    u: &ScalarAlgebraField,
) -> Result<ScalarAlgebraField> {
    gauged_div(basis, a, &gauged_grad(basis, a, u)?)
}

/// Orthonormal basis (in the unweighted site sum) of the kernel of the
/// central-difference gradient: fields `Π_k (-1)^{σ_k x_k}` for parity
/// vectors `σ`, with `σ_k = 1` only allowed along even `n`.
fn free_kernel_profiles(lat: &LatticeSpec) -> Vec<Vec<f64>> {
    let parities: &[usize] = if lat.n % 2 == 0 { &[0, 1] } else { &[0] };
    let mut out = Vec::new();
    let norm = 1.0 / (lat.sites() as f64).sqrt();
    for &s0 in parities {
        for &s1 in parities {
            for &s2 in parities {
                let sig = [s0, s1, s2];
                out.push(
                    (0..lat.sites())
                        .map(|s| {
                            let c = lat.coords(s);
                            let odd: usize = (0..3).map(|k| sig[k] * c[k]).sum();
                            if odd % 2 == 0 { norm } else { -norm }
                        })
                        .collect(),
                );
            }
        }
    }
    out
}

/// Removes the component of `u` along the kernel of the free Laplacian;
/// returns the relative norm of what was removed.
fn project_free_kernel(u: &mut ScalarAlgebraField) -> f64 {
    let before = u.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d = u.dim;
    let mut removed = 0.0;
    for prof in free_kernel_profiles(&u.lattice) {
        for p in 0..d {
            let c: f64 = prof.iter().enumerate().map(|(s, w)| w * u.data[s * d + p]).sum();
            removed += c * c;
            for (s, w) in prof.iter().enumerate() {
                u.data[s * d + p] -= c * w;
            }
        }
    }
    if before == 0.0 { 0.0 } else { removed.sqrt() / before }
}

/// Outcome of a Laplacian solve.
#[derive(Clone, Debug)]
pub struct LaplaceSolution {
    pub u: ScalarAlgebraField,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `Δ_a u = f` by conjugate gradients on `-Δ_a`.
///
/// Iteration stops once the relative residual is below `tol` and a delayed
/// estimate of the relative energy-norm error `‖grad_a(u - u*)‖ / ‖grad_a u‖`
/// is too. The second test matters for projectors: their error is the
/// energy-norm error, which can exceed the residual by `√cond(Δ_a)`.
///
/// For `a = 0` the kernel of the central-difference Laplacian (constants and,
/// for even `n`, the sign-alternating profiles) is removed from the
/// right-hand side and from the solution; a right-hand side with a kernel
/// component above `tol` is rejected. For other `a` the Krylov space stays in
/// the range of `Δ_a` whenever `f` does, as it does for `f = div_a e`.
pub fn invert_laplacian(
    basis: &LieAlgebraBasis,
    a: &VectorAlgebraField,
    f: &ScalarAlgebraField,
    tol: f64,
) -> Result<LaplaceSolution> {
    if !(tol > 0.0) {
        return Err(Error::Malformed(format!("tolerance must be positive, got {tol}")));
    }
    check_lattice(&a.lattice, &f.lattice)?;
    check_dim(basis.dim(), f.dim, "right-hand side")?;
    let free = a.is_zero();
    let mut rhs = f.clone();
    if free {
        let k = project_free_kernel(&mut rhs);
        if k > tol {
            return Err(Error::Inconsistent(k));
        }
    }
    let fnorm = rhs.norm();
    if fnorm == 0.0 {
        return Ok(LaplaceSolution { u: ScalarAlgebraField::zeros(f.lattice, f.dim), iterations: 0, relative_residual: 0.0 });
    }
    let max_iters = 10 * f.lattice.sites();
    let apply = |v: &ScalarAlgebraField| -> Result<ScalarAlgebraField> { Ok(gauged_laplacian(basis, a, v)?.scaled(-1.0)) };
    let b = rhs.scaled(-1.0);
    let mut x = ScalarAlgebraField::zeros(f.lattice, f.dim);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.inner(&r);
    let mut iterations = 0;
    // α_j ‖r_j‖²: their sum is ‖x‖²_A and a window of the last few bounds
    // the energy-norm error of the iterate before it from below
    let mut energy_terms: Vec<f64> = Vec::new();
    const DELAY: usize = 4;
    let energy_converged = |terms: &[f64]| {
        if terms.len() < DELAY {
            return false;
        }
        let total: f64 = terms.iter().sum();
        let recent: f64 = terms[terms.len() - DELAY..].iter().sum();
        recent <= tol * tol * total
    };
    while rr.sqrt() > tol * fnorm || !energy_converged(&energy_terms) {
        if rr == 0.0 {
            break;
        }
        if iterations >= max_iters {
            return Err(Error::NotConverged { iterations, residual: rr.sqrt() / fnorm });
        }
        let residual_ok = rr.sqrt() <= tol * fnorm;
        // at the rounding floor further steps only iterate on noise
        if residual_ok && rr.sqrt() <= 100.0 * f64::EPSILON * fnorm {
            break;
        }
        let ap = apply(&p)?;
        let pap = p.inner(&ap);
        if !(pap > 0.0) {
            // Krylov space exhausted: the iterate is exact to rounding
            if residual_ok {
                break;
            }
            return Err(Error::NotConverged { iterations, residual: rr.sqrt() / fnorm });
        }
        let alpha = rr / pap;
        energy_terms.push(alpha * rr);
        x = x.axpy(alpha, &p);
        r = r.axpy(-alpha, &ap);
        let rr_new = r.inner(&r);
        p = r.axpy(rr_new / rr, &p);
        rr = rr_new;
        iterations += 1;
    }
    if free {
        project_free_kernel(&mut x);
    }
    // true residual, not the recursively updated one
    let resid = gauged_laplacian(basis, a, &x)?.sub(&rhs).norm() / fnorm;
    Ok(LaplaceSolution { u: x, iterations, relative_residual: resid })
}

/// Gauge-longitudinal part `Π_a e = grad_a Δ_a⁻¹ div_a e`.
pub fn longitudinal_project(
    basis: &LieAlgebraBasis,
    a: &VectorAlgebraField,
    e: &VectorAlgebraField,
    tol: f64,
) -> Result<VectorAlgebraField> {
    let f = gauged_div(basis, a, e)?;
    let sol = invert_laplacian(basis, a, &f, tol)?;
    gauged_grad(basis, a, &sol.u)
}

/// Gauge-transversal part `e - Π_a e`, which satisfies the Gauss law.
pub fn transversal_project(
    basis: &LieAlgebraBasis,
    a: &VectorAlgebraField,
    e: &VectorAlgebraField,
    tol: f64,
) -> Result<VectorAlgebraField> {
    Ok(e.sub(&longitudinal_project(basis, a, e, tol)?))
}

/// L² norm of `div_a e`, the Gauss-law violation.
pub fn constraint_residual(basis: &LieAlgebraBasis, a: &VectorAlgebraField, e: &VectorAlgebraField) -> Result<f64> {
    Ok(gauged_div(basis, a, e)?.norm())
}

/// Gauge-group-valued field, one orthogonal matrix per site.
#[derive(Clone, Debug)]
pub struct GaugeGroupField {
    lattice: LatticeSpec,
    values: Vec<DMatrix<f64>>,
}

impl GaugeGroupField {
    pub fn identity(lattice: LatticeSpec, rep_dim: usize) -> Self {
        GaugeGroupField { lattice, values: vec![DMatrix::identity(rep_dim, rep_dim); lattice.sites()] }
    }

    /// Validates orthogonality and unit determinant at every site.
    pub fn new(lattice: LatticeSpec, values: Vec<DMatrix<f64>>) -> Result<Self> {
        if values.len() != lattice.sites() {
            return Err(Error::Dimension(format!(
                "gauge field has {} sites, expected {}",
                values.len(),
                lattice.sites()
            )));
        }
        for (s, g) in values.iter().enumerate() {
            let r = g.nrows();
            if g.ncols() != r {
                return Err(Error::InvalidGauge(format!("non-square value at site {s}")));
            }
            let dev = (g.transpose() * g - DMatrix::<f64>::identity(r, r)).amax();
            if dev > 1e-10 {
                return Err(Error::InvalidGauge(format!("g^T g deviates from identity by {dev:.3e} at site {s}")));
            }
            let det = g.determinant();
            if (det - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidGauge(format!("determinant {det} at site {s}")));
            }
        }
        Ok(GaugeGroupField { lattice, values })
    }

    /// `g(x) = exp(u(x))` in the matrix representation of `basis`.
    pub fn exp_of(basis: &LieAlgebraBasis, u: &ScalarAlgebraField) -> Result<Self> {
        check_dim(basis.dim(), u.dim, "generator field")?;
        let values = (0..u.lattice.sites())
            .into_par_iter()
            .map(|s| basis.matrix_of(u.at(s)).exp())
            .collect();
        Ok(GaugeGroupField { lattice: u.lattice, values })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    /// Pointwise product `self(x) · other(x)`.
    pub fn compose(&self, other: &GaugeGroupField) -> Result<GaugeGroupField> {
        check_lattice(&self.lattice, &other.lattice)?;
        Ok(GaugeGroupField {
            lattice: self.lattice,
            values: self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect(),
        })
    }

    pub fn inverse(&self) -> GaugeGroupField {
        GaugeGroupField { lattice: self.lattice, values: self.values.iter().map(|g| g.transpose()).collect() }
    }
}

/// Pointwise adjoint action `Ad(g(x)) e(x)` (the gauge action on `e`).
pub fn adjoint_field(
    basis: &LieAlgebraBasis,
    g: &GaugeGroupField,
    e: &VectorAlgebraField,
) -> Result<VectorAlgebraField> {
    check_lattice(&g.lattice, &e.lattice)?;
    check_dim(basis.dim(), e.dim, "field")?;
    let d = e.dim;
    let mut out = VectorAlgebraField::zeros(e.lattice, d);
    out.data.par_chunks_mut(3 * d).enumerate().for_each(|(s, chunk)| {
        let gs = &g.values[s];
        for k in 0..3 {
            let m = gs * basis.matrix_of(e.at(s, k)) * gs.transpose();
            chunk[k * d..(k + 1) * d].copy_from_slice(&basis.coefficients_of(&m).0);
        }
    });
    Ok(out)
}

/// `a_k^g = Ad(g) a_k + (D_k g) g⁻¹`, projected onto the algebra. The sign of
/// the inhomogeneous term makes `D_k - [a_k, ·]` covariant: `grad_{a^g}` and
/// `div_{a^g}` intertwine with `Ad(g)` up to discretisation error.
pub fn gauge_transform(
    basis: &LieAlgebraBasis,
    g: &GaugeGroupField,
    a: &VectorAlgebraField,
) -> Result<VectorAlgebraField> {
    let lat = a.lattice;
    let mut out = adjoint_field(basis, g, a)?;
    let d = a.dim;
    let inv = 1.0 / (2.0 * lat.spacing);
    let nb = lat.shifts();
    out.data.par_chunks_mut(3 * d).enumerate().for_each(|(s, chunk)| {
        let gt = g.values[s].transpose();
        for k in 0..3 {
            let dg = (&g.values[nb[s][2 * k]] - &g.values[nb[s][2 * k + 1]]) * inv;
            let c = basis.coefficients_of(&(dg * &gt));
            for p in 0..d {
                chunk[k * d + p] += c.0[p];
            }
        }
    });
    Ok(out)
}

/// Result of the gauge-orbit norm minimisation.
#[derive(Clone, Debug)]
pub struct OrbitMinimum {
    pub a: VectorAlgebraField,
    pub g: GaugeGroupField,
    pub converged: bool,
    pub iterations: usize,
    /// `‖Σ_k D_k ă_k‖ / ‖ă‖` at exit.
    pub relative_divergence: f64,
}

/// Gradient descent of `‖a^g‖²` along the gauge orbit.
///
/// Each step applies `exp(ε u)` with `u = Σ_k D_k a_k`, the first-order
/// descent direction, choosing `ε` by halving from 0.1 until the norm
/// decreases. Stops once `‖div ă‖ ≤ step_tol·‖ă‖`; at the iteration cap the
/// best iterate is returned with `converged = false`.
pub fn minimize_orbit_norm(
    basis: &LieAlgebraBasis,
    a: &VectorAlgebraField,
    step_tol: f64,
    max_iters: usize,
) -> Result<OrbitMinimum> {
    if !(step_tol > 0.0) {
        return Err(Error::Malformed(format!("step tolerance must be positive, got {step_tol}")));
    }
    check_dim(basis.dim(), a.dim, "connection")?;
    let mut cur = a.clone();
    let mut g = GaugeGroupField::identity(a.lattice, basis.rep_dim());
    let mut norm_sq = cur.inner(&cur);
    let rel_div = |f: &VectorAlgebraField, u: &ScalarAlgebraField| {
        let n = f.norm();
        if n == 0.0 { 0.0 } else { u.norm() / n }
    };
    for it in 0..max_iters {
        let u = div(&cur);
        let rd = rel_div(&cur, &u);
        if rd <= step_tol {
            return Ok(OrbitMinimum { a: cur, g, converged: true, iterations: it, relative_divergence: rd });
        }
        let mut eps = 0.1;
        let mut accepted = None;
        for _ in 0..40 {
            let step = GaugeGroupField::exp_of(basis, &u.scaled(eps))?;
            let trial = gauge_transform(basis, &step, &cur)?;
            let t = trial.inner(&trial);
            if t < norm_sq {
                accepted = Some((step, trial, t));
                break;
            }
            eps *= 0.5;
        }
        match accepted {
            Some((step, trial, t)) => {
                g = step.compose(&g)?;
                cur = trial;
                norm_sq = t;
            }
            None => {
                let rd = rel_div(&cur, &u);
                return Ok(OrbitMinimum { a: cur, g, converged: false, iterations: it, relative_divergence: rd });
            }
        }
    }
    let u = div(&cur);
    let rd = rel_div(&cur, &u);
    Ok(OrbitMinimum { converged: rd <= step_tol, a: cur, g, iterations: max_iters, relative_divergence: rd })
}

/// Integer momenta `m` with `1 ≤ |m|₁ ≤ band`, each listed once up to sign.
pub fn band_momenta(band: usize) -> Vec<[i64; 3]> {
    let b = band as i64;
    let mut out = Vec::new();
    for m0 in -b..=b {
        for m1 in -b..=b {
            for m2 in -b..=b {
                let l1 = m0.abs() + m1.abs() + m2.abs();
                if l1 == 0 || l1 > b {
                    continue;
                }
                // keep one representative of ±m
                let first_nonzero = [m0, m1, m2].into_iter().find(|x| *x != 0).unwrap();
                if first_nonzero > 0 {
                    out.push([m0, m1, m2]);
                }
            }
        }
    }
    out
}

/// Smooth random vector field: a combination of `cos` and `sin` plane
/// waves with momenta in [`band_momenta`] and uniform random coefficients,
/// scaled so the pointwise amplitude is of order `amplitude`.
pub fn band_limited_random_field<R: Rng>(
    lattice: LatticeSpec,
    dim: usize,
    band: usize,
    amplitude: f64,
    rng: &mut R,
) -> VectorAlgebraField {
    let momenta = band_momenta(band);
    let mut coeffs = Vec::with_capacity(momenta.len());
    for _ in &momenta {
        let mut c = Vec::with_capacity(3 * dim);
        for _ in 0..3 * dim {
            c.push([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        }
        coeffs.push(c);
    }
    let two_pi_over_l = 2.0 * std::f64::consts::PI / lattice.length();
    let scale = amplitude / (momenta.len().max(1) as f64).sqrt();
    VectorAlgebraField::from_fn(lattice, dim, |x| {
        let mut v = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
        for (m, c) in momenta.iter().zip(&coeffs) {
            let phase = two_pi_over_l * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]);
            let (sn, cs) = phase.sin_cos();
            for k in 0..3 {
                for p in 0..dim {
                    let [ca, cb] = c[k * dim + p];
                    v[k][p] += scale * (ca * cs + cb * sn);
                }
            }
        }
        v
    })
}

/// Smooth random scalar field built like [`band_limited_random_field`].
pub fn band_limited_random_scalar<R: Rng>(
    lattice: LatticeSpec,
    dim: usize,
    band: usize,
    amplitude: f64,
    rng: &mut R,
) -> ScalarAlgebraField {
    let v = band_limited_random_field(lattice, dim, band, amplitude, rng);
    let mut out = ScalarAlgebraField::zeros(lattice, dim);
    for s in 0..lattice.sites() {
        out.data[s * dim..(s + 1) * dim].copy_from_slice(v.at(s, 0));
    }
    out
}
