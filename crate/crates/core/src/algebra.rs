//! Compact semi-simple Lie algebras in an orthonormal skew-symmetric basis.
//!
//! Every algebra is realised as real skew-symmetric matrices `b_i` normalised
//! so that `Trace(b_i^T b_j) = δ_ij`. Elements are carried as coefficient
//! vectors; all production arithmetic goes through the structure constants
//! `c^k_ij = Trace([b_i, b_j]^T b_k)`. The matrix forms are kept for the
//! group exponential and for cross-checks.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Structure constants below this magnitude are treated as exact zeros.
const CLEAN_EPS: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct LieAlgebraBasis {
    name: String,
    dim: usize,
    /// `c[k][i][j]` flattened as `k * dim * dim + i * dim + j`.
    structure: Vec<f64>,
    /// Nonzero entries `(i, j, k, c^k_ij)`.
    nonzero: Vec<(usize, usize, usize, f64)>,
    matrices: Vec<DMatrix<f64>>,
}

/// Coefficients `x^i` of `x = x^i b_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement(pub Vec<f64>);

/// Pointwise value of a spatial algebra-valued vector field, one element per
/// direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialAlgebraVector(pub [AlgebraElement; 3]);

impl AlgebraElement {
    pub fn zeros(dim: usize) -> Self {
        AlgebraElement(vec![0.0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        AlgebraElement(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        AlgebraElement(self.0.iter().map(|x| x * s).collect())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

impl SpatialAlgebraVector {
    pub fn zeros(dim: usize) -> Self {
        SpatialAlgebraVector([
            AlgebraElement::zeros(dim),
            AlgebraElement::zeros(dim),
            AlgebraElement::zeros(dim),
        ])
    }

    pub fn scaled(&self, s: f64) -> Self {
        SpatialAlgebraVector(self.0.clone().map(|x| x.scaled(s)))
    }
}

/// Maximum violation of each basis invariant.
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub algebra: String,
    pub dim: usize,
    pub orthonormality: f64,
    pub skew_symmetry: f64,
    pub closure: f64,
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub ad_invariance: f64,
}

impl StructureReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.orthonormality,
            self.skew_symmetry,
            self.closure,
            self.antisymmetry,
            self.jacobi,
            self.ad_invariance,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Builds the orthonormal basis for an algebra identifier.
///
/// Accepted identifiers: `su2`, `su3`, `su4` (also written `su(n)`) and
/// `so3` ... `so8` (also `so(n)`). Abelian requests (`u1`, `so2`) are
/// rejected since they are not semi-simple.
pub fn build_algebra(name: &str) -> Result<LieAlgebraBasis> {
    let key: String = name
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '(' && *c != ')')
        .collect::<String>()
        .to_ascii_lowercase();
    let unsupported = || Error::UnsupportedAlgebra(name.to_string());
    let (family, n) = key.split_at(key.find(|c: char| c.is_ascii_digit()).ok_or_else(unsupported)?);
    let n: usize = n.parse().map_err(|_| unsupported())?;
    let matrices = match (family, n) {
        ("su", 2) => so_generators(3),
        ("su", 3..=4) => su_generators_realified(n),
        ("so", 3..=8) => so_generators(n),
        _ => return Err(unsupported()),
    };
    LieAlgebraBasis::from_matrices(&key, matrices)
}

/// `(E_pq - E_qp) / √2` for `p < q`, ordered so that so(3) gives
/// `b_1 ∝ L_x, b_2 ∝ L_y, b_3 ∝ L_z` with `[b_1, b_2] = b_3 / √2`.
fn so_generators(n: usize) -> Vec<DMatrix<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    if n == 3 {
        // (L_i)_{jk} = -ε_ijk
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let mut m = DMatrix::zeros(3, 3);
            m[(j, k)] = -s;
            m[(k, j)] = s;
            out.push(m);
        }
        return out;
    }
    for p in 0..n {
        for q in (p + 1)..n {
            let mut m = DMatrix::zeros(n, n);
            m[(p, q)] = s;
            m[(q, p)] = -s;
            out.push(m);
        }
    }
    out
}

/// Generalised Gell-Mann generators `i λ` of su(n), realified into so(2n) via
/// `A + iB ↦ [[A, -B], [B, A]]` and normalised in the trace form.
fn su_generators_realified(n: usize) -> Vec<DMatrix<f64>> {
    // (P, Q) with λ = P + iQ, P symmetric, Q antisymmetric.
    let mut hermitian: Vec<(DMatrix<f64>, DMatrix<f64>)> = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            let mut p = DMatrix::zeros(n, n);
            p[(j, k)] = 1.0;
            p[(k, j)] = 1.0;
            hermitian.push((p, DMatrix::zeros(n, n)));
            let mut q = DMatrix::zeros(n, n);
            q[(j, k)] = -1.0;
            q[(k, j)] = 1.0;
            hermitian.push((DMatrix::zeros(n, n), q));
        }
    }
    for l in 1..n {
        let mut p = DMatrix::zeros(n, n);
        for d in 0..l {
            p[(d, d)] = 1.0;
        }
        p[(l, l)] = -(l as f64);
        hermitian.push((p, DMatrix::zeros(n, n)));
    }
    hermitian
        .into_iter()
        .map(|(p, q)| {
            // iλ = -Q + iP  ⇒  A = -Q, B = P
            let a = -q;
            let b = p;
            let mut r = DMatrix::zeros(2 * n, 2 * n);
            r.view_mut((0, 0), (n, n)).copy_from(&a);
            r.view_mut((0, n), (n, n)).copy_from(&(-&b));
            r.view_mut((n, 0), (n, n)).copy_from(&b);
            r.view_mut((n, n), (n, n)).copy_from(&a);
            let norm = (r.transpose() * &r).trace().sqrt();
            r / norm
        })
        .collect()
}

fn commutator(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    x * y - y * x
}

fn trace_form(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

impl LieAlgebraBasis {
    /// Builds a basis from explicit skew-symmetric matrices, computing the
    /// structure constants from their commutators.
    pub fn from_matrices(name: &str, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let dim = matrices.len();
        if dim == 0 {
            return Err(Error::Malformed("empty basis".into()));
        }
        let rep = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != rep || m.ncols() != rep) {
            return Err(Error::Malformed("basis matrices must be square and of one size".into()));
        }
        let mut structure = vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let br = commutator(&matrices[i], &matrices[j]);
                for k in 0..dim {
                    let c = trace_form(&br, &matrices[k]);
                    structure[k * dim * dim + i * dim + j] = if c.abs() < CLEAN_EPS { 0.0 } else { c };
                }
            }
        }
        Self::from_parts(name, structure, matrices)
    }

    /// Assembles a basis from given structure constants and matrices without
    /// checking the invariants; see [`check_structure`].
    pub fn from_parts(name: &str, structure: Vec<f64>, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let dim = matrices.len();
        if dim == 0 {
            return Err(Error::Malformed("empty basis".into()));
        }
        if structure.len() != dim * dim * dim {
            return Err(Error::Malformed(format!(
                "structure constant array has {} entries, expected {}",
                structure.len(),
                dim * dim * dim
            )));
        }
        let mut nonzero = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let c = structure[k * dim * dim + i * dim + j];
                    if c != 0.0 {
                        nonzero.push((i, j, k, c));
                    }
                }
            }
        }
        Ok(LieAlgebraBasis {
            name: name.to_string(),
            dim,
            structure,
            nonzero,
            matrices,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c^k_ij`.
    #[inline]
    pub fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        self.structure[k * self.dim * self.dim + i * self.dim + j]
    }

    pub fn structure_constants(&self) -> &[f64] {
        &self.structure
    }

    pub fn nonzero_constants(&self) -> &[(usize, usize, usize, f64)] {
        &self.nonzero
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn rep_dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    fn check(&self, x: &AlgebraElement) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "element of length {} used with {} (dim {})",
                x.dim(),
                self.name,
                self.dim
            )));
        }
        Ok(())
    }

    /// `out += [x, y]` on raw coefficient slices.
    #[inline]
    pub fn bracket_add(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for &(i, j, k, c) in &self.nonzero {
            out[k] += c * x[i] * y[j];
        }
    }

    /// `out += s·[x, y]`.
    #[inline]
    pub fn bracket_add_scaled(&self, s: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        for &(i, j, k, c) in &self.nonzero {
            out[k] += s * c * x[i] * y[j];
        }
    }

    pub fn bracket(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        self.check(x)?;
        self.check(y)?;
        let mut out = vec![0.0; self.dim];
        self.bracket_add(&x.0, &y.0, &mut out);
        Ok(AlgebraElement(out))
    }

    /// The trace form `Trace(X^T Y)`, which is the Euclidean product of
    /// coefficients in the orthonormal basis.
    pub fn scalar_product(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(x.0.iter().zip(&y.0).map(|(a, b)| a * b).sum())
    }

    pub fn to_matrix(&self, x: &AlgebraElement) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(self.matrix_of(&x.0))
    }

    pub(crate) fn matrix_of(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.rep_dim();
        let mut m = DMatrix::zeros(n, n);
        for (xi, b) in x.iter().zip(&self.matrices) {
            if *xi != 0.0 {
                m += b * *xi;
            }
        }
        m
    }

    /// Orthogonal projection of a matrix onto the algebra, in coefficients.
    pub fn coefficients_of(&self, m: &DMatrix<f64>) -> AlgebraElement {
        AlgebraElement(self.matrices.iter().map(|b| trace_form(b, m)).collect())
    }

    /// Group element `exp(X)` in the matrix representation.
    pub fn exp(&self, x: &AlgebraElement) -> Result<DMatrix<f64>> {
        Ok(self.to_matrix(x)?.exp())
    }

    /// `Ad(g) X = g X g^{-1}` for orthogonal `g`.
    pub fn adjoint_action(&self, g: &DMatrix<f64>, x: &AlgebraElement) -> Result<AlgebraElement> {
        let m = g * self.to_matrix(x)? * g.transpose();
        Ok(self.coefficients_of(&m))
    }

    /// `Σ_{j,k} [a_j, a_k]·[a_j, a_k]`, summed over all ordered pairs of
    /// spatial directions, evaluated through brackets.
    pub fn quartic_contraction(&self, a: &SpatialAlgebraVector) -> Result<f64> {
        let mut total = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                let b = self.bracket(&a.0[j], &a.0[k])?;
                total += self.scalar_product(&b, &b)?;
            }
        }
        Ok(total)
    }

    /// Same quantity as [`quartic_contraction`](Self::quartic_contraction)
    /// written as the explicit contraction `Σ_{j,k,m} (c^m_pq a_j^p a_k^q)²`
    /// over the dense structure-constant array.
    pub fn quartic_contraction_dense(&self, a: &SpatialAlgebraVector) -> Result<f64> {
        for x in &a.0 {
            self.check(x)?;
        }
        let d = self.dim;
        let mut total = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                for m in 0..d {
                    let mut s = 0.0;
                    for p in 0..d {
                        for q in 0..d {
                            s += self.c(m, p, q) * a.0[j].0[p] * a.0[k].0[q];
                        }
                    }
                    total += s * s;
                }
            }
        }
        Ok(total)
    }
}

/// Reports the maximum violation of each basis invariant.
pub fn check_structure(basis: &LieAlgebraBasis) -> StructureReport {
    let d = basis.dim;
    let mats = &basis.matrices;
    let mut orthonormality: f64 = 0.0;
    let mut skew: f64 = 0.0;
    let mut closure: f64 = 0.0;
    for i in 0..d {
        skew = skew.max((&mats[i] + mats[i].transpose()).amax());
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            orthonormality = orthonormality.max((trace_form(&mats[i], &mats[j]) - target).abs());
            let mut resid = commutator(&mats[i], &mats[j]);
            for k in 0..d {
                resid -= &mats[k] * basis.c(k, i, j);
            }
            closure = closure.max(trace_form(&resid, &resid).sqrt());
        }
    }

    let mut antisymmetry: f64 = 0.0;
    let mut ad_invariance: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let c = basis.c(k, i, j);
                antisymmetry = antisymmetry
                    .max((c + basis.c(k, j, i)).abs())
                    .max((c + basis.c(j, i, k)).abs())
                    .max((c + basis.c(i, k, j)).abs());
                // [b_k, b_i]·b_j + b_i·[b_k, b_j]
                ad_invariance = ad_invariance.max((basis.c(j, k, i) + basis.c(i, k, j)).abs());
            }
        }
    }

    let mut jacobi: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut s = 0.0;
                    for m in 0..d {
                        s += basis.c(m, i, j) * basis.c(l, m, k)
                            + basis.c(m, j, k) * basis.c(l, m, i)
                            + basis.c(m, k, i) * basis.c(l, m, j);
                    }
                    jacobi = jacobi.max(s.abs());
                }
            }
        }
    }

    StructureReport {
        algebra: basis.name.clone(),
        dim: d,
        orthonormality,
        skew_symmetry: skew,
        closure,
        antisymmetry,
        jacobi,
        ad_invariance,
    }
}
