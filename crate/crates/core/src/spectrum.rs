//! Energy operator on a truncated Fock space and its bosonic spectrum.
//!
//! `λ_n` is the lowest eigenvalue of the compression of `Ĥ` to the
//! degree-`n` occupation states. Because [`quantize`] computes exact
//! compressions, the `n`-block does not depend on `N_max` once `n ≤ N_max`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::build_algebra;
use crate::error::{Error, Result};
use crate::fock::{apply_monomial, degree_states, number_operator, quantize, FockBasis, FockOperator};
use crate::lattice::LatticeSpec;
use crate::symbols::{energy_symbol, ModeMap, MomentumTruncation, OrderingConvention, PolynomialSymbol};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Eigenvalues within this distance of the lowest count towards its
    /// multiplicity.
    pub multiplicity_tol: f64,
    /// Relative change allowed between `N_max` and `N_max + 2`.
    pub convergence_tol: f64,
    /// Blocks up to this dimension are diagonalized densely.
    pub dense_threshold: usize,
    pub lanczos_tol: f64,
    pub lanczos_max_iter: usize,
    /// Seed for Lanczos start vectors.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            multiplicity_tol: 1e-8,
            convergence_tol: 1e-2,
            dense_threshold: 2500,
            lanczos_tol: 1e-11,
            lanczos_max_iter: 600,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub algebra: String,
    pub truncation: MomentumTruncation,
    /// Algebra directions kept; `None` keeps all of them.
    #[serde(default)]
    pub generators: Option<Vec<usize>>,
    /// Required for the lowest-shell truncation.
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
    #[serde(default = "default_true")]
    pub include_magnetic: bool,
    #[serde(rename = "N_max")]
    pub fock_n_max: usize,
    #[serde(default = "default_convention")]
    pub convention: OrderingConvention,
    #[serde(default = "default_margin")]
    pub margin: usize,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn default_true() -> bool {
    true
}

fn default_convention() -> OrderingConvention {
    OrderingConvention::AntiNormal
}

fn default_margin() -> usize {
    2
}

impl ModelSpec {
    /// Spatially constant modes of every generator.
    pub fn zero_momentum(algebra: &str, fock_n_max: usize) -> Self {
        ModelSpec {
            algebra: algebra.to_string(),
            truncation: MomentumTruncation::ZeroMomentum,
            generators: None,
            lattice: None,
            include_magnetic: true,
            fock_n_max,
            convention: OrderingConvention::AntiNormal,
            margin: 2,
            solver: SolverOptions::default(),
        }
    }

    /// Zero-momentum modes of a single algebra direction: all brackets
    /// vanish, so the symbol is purely quadratic.
    pub fn abelian_control(algebra: &str, fock_n_max: usize) -> Self {
        ModelSpec { generators: Some(vec![0]), ..Self::zero_momentum(algebra, fock_n_max) }
    }

    pub fn with_n_max(&self, fock_n_max: usize) -> Self {
        ModelSpec { fock_n_max, ..self.clone() }
    }

    pub fn mode_map(&self) -> Result<ModeMap> {
        let basis = build_algebra(&self.algebra)?;
        match &self.generators {
            Some(g) => ModeMap::restricted(&basis, g, self.truncation, self.lattice),
            None => ModeMap::new(&basis, self.truncation, self.lattice),
        }
    }

    /// `D = 3 · (kept generators) · (momentum count)`.
    pub fn num_modes(&self) -> Result<usize> {
        Ok(self.mode_map()?.num_modes())
    }

    pub fn symbol(&self) -> Result<PolynomialSymbol> {
        let basis = build_algebra(&self.algebra)?;
        let map = self.mode_map()?;
        energy_symbol(&basis, &map, self.include_magnetic)
    }

    /// Largest `n` for which the block is away from the truncation edge.
    pub fn safe_degree(&self) -> Result<usize> {
        self.fock_n_max.checked_sub(self.margin).ok_or_else(|| {
            Error::Domain(format!("N_max = {} is below the margin {}", self.fock_n_max, self.margin))
        })
    }
}

/// `Ĥ` on the Fock basis of degree `≤ N_max`.
pub fn assemble_hamiltonian(model: &ModelSpec) -> Result<FockOperator> {
    let symbol = model.symbol()?;
    if symbol.num_modes() == 0 {
        return Err(Error::Domain("model has no modes".into()));
    }
    let basis = FockBasis::new(symbol.num_modes(), model.fock_n_max)?;
    quantize(&symbol, model.convention, &basis)
}

/// `P_n Q P_n` on the degree-`n` states, in basis order.
pub fn n_boson_block(q: &FockOperator, n: usize) -> Result<DMatrix<Complex64>> {
    let basis = q.basis();
    if n > basis.n_max() {
        return Err(Error::OutOfRange(format!("n = {n} above N_max = {}", basis.n_max())));
    }
    let states: Vec<usize> = basis.degree_range(n).collect();
    Ok(q.restrict(&states))
}

/// Degree-`n` block of the quantized symbol built from the degree-`n`
/// states alone, without a Fock basis. Only charge-zero monomials
/// contribute.
pub fn symbol_block(symbol: &PolynomialSymbol, convention: OrderingConvention, n: usize) -> Result<DMatrix<Complex64>> {
    let d = symbol.num_modes();
    if d == 0 {
        return Err(Error::Domain("symbol has no modes".into()));
    }
    let (symbol, anti) = match convention {
        OrderingConvention::Normal => (symbol.clone(), false),
        OrderingConvention::AntiNormal => (symbol.clone(), true),
        OrderingConvention::Weyl => (symbol.convert(OrderingConvention::Weyl, OrderingConvention::Normal), false),
    };
    let terms: Vec<_> = symbol.terms().filter(|(m, _)| m.charge() == 0).collect();
    let states = degree_states(d, n);
    let index: HashMap<&[u8], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let columns: Vec<Vec<(usize, Complex64)>> = states
        .par_iter()
        .map(|mu| {
            terms
                .iter()
                .filter_map(|(m, c)| {
                    let (nu, w) = apply_monomial(mu, m, anti)?;
                    Some((index[nu.as_slice()], **c * w))
                })
                .collect()
        })
        .collect();
    let mut out = DMatrix::from_element(states.len(), states.len(), ZERO);
    for (c, col) in columns.into_iter().enumerate() {
        for (r, v) in col {
            out[(r, c)] += v;
        }
    }
    Ok(out)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// matrix. Real matrices use the symmetric solver directly; complex ones
/// go through the real embedding `[[A, -B], [B, A]]`, whose spectrum is
/// that of `A + iB` doubled.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", n, m.ncols())));
    }
    if n == 0 {
        return Ok((Vec::new(), DMatrix::from_element(0, 0, ZERO)));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let real = m.iter().all(|z| z.im == 0.0);
    if real {
        let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
        let eig = SymmetricEigen::new(a);
        let order = ascending(eig.eigenvalues.as_slice());
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| Complex64::new(eig.eigenvectors[(i, order[j])], 0.0));
        return Ok((values, vectors));
    }
    let h = |i: usize, j: usize| 0.5 * (m[(i, j)] + m[(j, i)].conj());
    let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h(i % n, j % n);
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = SymmetricEigen::new(big);
    let order = ascending(eig.eigenvalues.as_slice());
    // each eigenvalue appears twice: [x; y] and [-y; x] both map to x + iy
    // up to a phase, so Gram-Schmidt keeps exactly one per pair
    let mut values = Vec::with_capacity(n);
    let mut kept: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for &k in &order {
        if kept.len() == n {
            break;
        }
        let col = eig.eigenvectors.column(k);
        let mut w: Vec<Complex64> = (0..n).map(|i| Complex64::new(col[i], col[i + n])).collect();
        for _ in 0..2 {
            for u in &kept {
                let p = inner(u, &w);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= p * ui;
                }
            }
        }
        let norm = norm(&w);
        if norm > 0.5 {
            w.iter_mut().for_each(|x| *x /= norm);
            kept.push(w);
            values.push(eig.eigenvalues[k]);
        }
    }
    if kept.len() != n {
        return Err(Error::Numerical(format!("complex eigenbasis has rank {} of {n}", kept.len())));
    }
    let vectors = DMatrix::from_fn(n, n, |i, j| kept[j][i]);
    Ok((values, vectors))
}

fn ascending(v: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    order
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian matrix stored by rows, used by the Lanczos path.
#[derive(Clone, Debug)]
pub struct SparseHermitian {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseHermitian {
    /// Compression of `q` onto the listed basis states.
    pub fn compress(q: &FockOperator, states: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; q.dim()];
        for (k, &s) in states.iter().enumerate() {
            pos[s] = k;
        }
        let rows = states
            .iter()
            .map(|&s| q.row(s).iter().filter(|(c, _)| pos[*c] != usize::MAX).map(|(c, v)| (pos[*c], *v)).collect())
            .collect();
        SparseHermitian { rows }
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != ZERO).map(|j| (j, m[(i, j)])).collect())
            .collect();
        SparseHermitian { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows.par_iter().map(|row| row.iter().map(|(c, x)| x * v[*c]).sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                m[(i, *j)] = *v;
            }
        }
        m
    }
}

/// Lowest eigenvalue of a block with its multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowestLevel {
    pub value: f64,
    pub multiplicity: usize,
    pub converged: bool,
    pub dense: bool,
}

/// Dense diagonalization up to `dense_threshold`, deflated Lanczos above.
pub fn lowest_level(h: &SparseHermitian, opts: &SolverOptions) -> Result<LowestLevel> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::Domain("empty block".into()));
    }
    if n <= opts.dense_threshold {
        let (values, _) = hermitian_eigen(&h.to_dense())?;
        let value = values[0];
        let multiplicity = values.iter().take_while(|&&v| v - value <= opts.multiplicity_tol).count();
        return Ok(LowestLevel { value, multiplicity, converged: true, dense: true });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (value, x, mut converged) = lanczos_lowest(h, &[], opts, &mut rng)?;
    let mut found = vec![x];
    // single-vector Lanczos sees one direction per eigenspace; deflating the
    // converged vector exposes the next copy of a degenerate level
    while found.len() < n {
        let (next, y, ok) = lanczos_lowest(h, &found, opts, &mut rng)?;
        if next - value > opts.multiplicity_tol {
            break;
        }
        converged &= ok;
        found.push(y);
    }
    Ok(LowestLevel { value, multiplicity: found.len(), converged, dense: false })
}

/// Lanczos with full reorthogonalization in the complement of `deflate`.
/// Returns the lowest Ritz pair and whether its residual met the tolerance.
fn lanczos_lowest(
    h: &SparseHermitian,
    deflate: &[Vec<Complex64>],
    opts: &SolverOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<Complex64>, bool)> {
    let n = h.dim();
    let room = n - deflate.len();
    let m_max = opts.lanczos_max_iter.min(room).max(1);
    let orthogonalize = |w: &mut Vec<Complex64>, basis: &[Vec<Complex64>]| {
        for _ in 0..2 {
            for u in deflate.iter().chain(basis) {
                let p = inner(u, w);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= p * ui;
                }
            }
        }
    };
    let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    orthogonalize(&mut v, &[]);
    let nv = norm(&v);
    if nv == 0.0 {
        return Err(Error::Numerical("Lanczos start vector vanished".into()));
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    loop {
        let j = basis.len() - 1;
        let mut w = h.apply(&basis[j]);
        alphas.push(inner(&basis[j], &w).re);
        orthogonalize(&mut w, &basis);
        let beta = norm(&w);
        if !beta.is_finite() {
            return Err(Error::Numerical("Lanczos recurrence produced non-finite values".into()));
        }
        let k = alphas.len();
        let exhausted = beta <= 1e-14 * alphas.iter().fold(1.0f64, |m, a| m.max(a.abs())) || k == m_max;
        if exhausted || k % 5 == 0 {
            let t = DMatrix::from_fn(k, k, |r, c| {
                if r == c {
                    alphas[r]
                } else if r + 1 == c || c + 1 == r {
                    betas[r.min(c)]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let low = ascending(eig.eigenvalues.as_slice())[0];
            let theta = eig.eigenvalues[low];
            let s = eig.eigenvectors.column(low);
            let residual = beta * s[k - 1].abs();
            let ok = residual <= opts.lanczos_tol * theta.abs().max(1.0);
            if ok || exhausted {
                let mut x = vec![ZERO; n];
                for (b, sv) in basis.iter().zip(s.iter()) {
                    for (xi, bi) in x.iter_mut().zip(b) {
                        *xi += bi * *sv;
                    }
                }
                let nx = norm(&x);
                x.iter_mut().for_each(|xi| *xi /= nx);
                return Ok((theta, x, ok || beta <= 1e-14));
            }
        }
        betas.push(beta);
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub lambdas: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// `λ_1 - λ_0`, `NaN` with fewer than two levels.
    pub gap: f64,
    /// Least-squares line through the converged `(n, λ_n)`.
    pub growth_fit: Option<GrowthFit>,
    pub converged: Vec<bool>,
    pub block_dims: Vec<usize>,
    /// `|λ_n(N_max) - λ_n(N_max + 2)|`, empty when no refinement was run.
    pub refinement_change: Vec<f64>,
    pub num_modes: usize,
    #[serde(rename = "N_max")]
    pub fock_n_max: usize,
}

impl SpectrumReport {
    fn from_levels(
        levels: Vec<LowestLevel>,
        block_dims: Vec<usize>,
        refinement_change: Vec<f64>,
        converged: Vec<bool>,
        num_modes: usize,
        fock_n_max: usize,
    ) -> Self {
        let lambdas: Vec<f64> = levels.iter().map(|l| l.value).collect();
        let gap = if lambdas.len() >= 2 { lambdas[1] - lambdas[0] } else { f64::NAN };
        let points: Vec<(f64, f64)> =
            lambdas.iter().enumerate().filter(|(n, _)| converged[*n]).map(|(n, &l)| (n as f64, l)).collect();
        SpectrumReport {
            multiplicities: levels.iter().map(|l| l.multiplicity).collect(),
            gap,
            growth_fit: least_squares(&points),
            lambdas,
            converged,
            block_dims,
            refinement_change,
            num_modes,
            fock_n_max,
        }
    }

    /// `λ_{n+1} > λ_n` for every consecutive pair.
    pub fn strictly_increasing(&self) -> bool {
        self.lambdas.windows(2).all(|w| w[1] > w[0])
    }

    /// `n,lambda,multiplicity,converged`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,lambda,multiplicity,converged")?;
        for (n, l) in self.lambdas.iter().enumerate() {
            writeln!(w, "{n},{l:?},{},{}", self.multiplicities[n], self.converged[n])?;
        }
        Ok(())
    }
}

fn least_squares(points: &[(f64, f64)]) -> Option<GrowthFit> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(GrowthFit { slope, intercept: my - slope * mx })
}

/// Spectrum of an arbitrary operator on its own Fock basis. No refinement
/// is available, so `converged` reflects the eigensolver only.
pub fn operator_spectrum(q: &FockOperator, n_max: usize, opts: &SolverOptions) -> Result<SpectrumReport> {
    let basis = q.basis().clone();
    if n_max > basis.n_max() {
        return Err(Error::OutOfRange(format!("n_max = {n_max} above N_max = {}", basis.n_max())));
    }
    let levels: Vec<LowestLevel> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let states: Vec<usize> = basis.degree_range(n).collect();
            lowest_level(&SparseHermitian::compress(q, &states), opts)
        })
        .collect::<Result<_>>()?;
    let dims = (0..=n_max).map(|n| basis.degree_range(n).len()).collect();
    let converged = levels.iter().map(|l| l.converged).collect();
    Ok(SpectrumReport::from_levels(levels, dims, Vec::new(), converged, basis.num_modes(), basis.n_max()))
}

/// `λ_0..λ_{n_max}` of the model. Each level is also recomputed from the
/// `N_max + 2` truncation; under exact compression that block is assembled
/// straight from the degree-`n` states, so the comparison cross-checks the
/// two assembly routes and should vanish to rounding.
pub fn bosonic_spectrum(model: &ModelSpec, n_max: usize) -> Result<SpectrumReport> {
    let safe = model.safe_degree()?;
    if n_max > safe {
        return Err(Error::Domain(format!(
            "n_max = {n_max} exceeds N_max - margin = {safe}"
        )));
    }
    let h = assemble_hamiltonian(model)?;
    let symbol = model.symbol()?;
    let opts = &model.solver;
    let basis = h.basis().clone();
    let rows: Vec<(LowestLevel, f64)> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let states: Vec<usize> = basis.degree_range(n).collect();
            let level = lowest_level(&SparseHermitian::compress(&h, &states), opts)?;
            let refined_block = symbol_block(&symbol, model.convention, n)?;
            let refined = lowest_level(&SparseHermitian::from_dense(&refined_block), opts)?;
            let change = (level.value - refined.value).abs();
            Ok((level, change))
        })
        .collect::<Result<_>>()?;
    let converged = rows
        .iter()
        .map(|(l, d)| l.converged && *d <= opts.convergence_tol * l.value.abs().max(1.0))
        .collect();
    let dims = (0..=n_max).map(|n| basis.degree_range(n).len()).collect();
    let (levels, changes): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(SpectrumReport::from_levels(levels, dims, changes, converged, basis.num_modes(), model.fock_n_max))
}

/// Line `λ = s n + C` lying on or below every point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupportLine {
    pub slope: f64,
    pub intercept: f64,
    /// `min_n (λ_n - s n - C)`, zero up to rounding.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapAnalysis {
    pub gap: f64,
    /// Least-squares slope and intercept.
    pub slope: f64,
    pub intercept: f64,
    /// `min_n (λ_n - s n - C)` for the least-squares line. Residuals of a
    /// least-squares fit sum to zero, so this is negative unless the levels
    /// are exactly collinear.
    pub margin: f64,
    /// Lower supporting line closest to the levels in the sum of residuals.
    pub support: SupportLine,
    pub strictly_increasing: bool,
    pub levels_used: usize,
    /// Positive gap, positive supporting slope and every level on or above
    /// the supporting line (within `1e-8`).
    pub arithmetic_growth_observed: bool,
}

pub fn gap_analysis(report: &SpectrumReport) -> Result<GapAnalysis> {
    let points: Vec<(f64, f64)> = report
        .lambdas
        .iter()
        .enumerate()
        .filter(|(n, _)| report.converged[*n])
        .map(|(n, &l)| (n as f64, l))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("{} converged levels, need 3", points.len())));
    }
    let fit = least_squares(&points).expect("at least three points");
    let margin = points.iter().map(|(n, l)| l - fit.slope * n - fit.intercept).fold(f64::INFINITY, f64::min);
    let support = lower_support(&points);
    Ok(GapAnalysis {
        gap: report.gap,
        slope: fit.slope,
        intercept: fit.intercept,
        margin,
        support,
        strictly_increasing: report.strictly_increasing(),
        levels_used: points.len(),
        arithmetic_growth_observed: report.gap > 0.0 && support.slope > 0.0 && support.margin >= -1e-8,
    })
}

/// Among lines through two of the points that stay below all of them, the
/// one minimizing the total residual. The optimum of this two-variable
/// linear program sits on such a line.
pub fn lower_support(points: &[(f64, f64)]) -> SupportLine {
    let scale = points.iter().fold(1.0f64, |m, p| m.max(p.1.abs()));
    let mut best: Option<(f64, SupportLine)> = None;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let (x0, y0) = points[i];
            let (x1, y1) = points[j];
            let slope = (y1 - y0) / (x1 - x0);
            let intercept = y0 - slope * x0;
            let residuals: Vec<f64> = points.iter().map(|(x, y)| y - slope * x - intercept).collect();
            let margin = residuals.iter().copied().fold(f64::INFINITY, f64::min);
            if margin < -1e-12 * scale {
                continue;
            }
            let total: f64 = residuals.iter().sum();
            if best.as_ref().map_or(true, |(t, _)| total < *t) {
                best = Some((total, SupportLine { slope, intercept, margin }));
            }
        }
    }
    best.expect("two points always give a supporting line").1
}

impl GapAnalysis {
    /// `{gap, slope, intercept, margin, ...}` as pretty JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N_max")]
    pub fock_n_max: usize,
    pub lambdas: Vec<f64>,
    /// Relative change of each level against the previous row.
    pub change: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn max_change(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.change.as_ref()).flatten().fold(0.0, |m, &c| m.max(c))
    }

    /// `N_max,n,lambda,relative_change` (empty change on the first row).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "N_max,n,lambda,relative_change")?;
        for row in &self.rows {
            for (n, l) in row.lambdas.iter().enumerate() {
                match &row.change {
                    Some(c) => writeln!(w, "{},{n},{l:?},{:?}", row.fock_n_max, c[n])?,
                    None => writeln!(w, "{},{n},{l:?},", row.fock_n_max)?,
                }
            }
        }
        Ok(())
    }
}

/// `λ_0..λ_levels` for each truncation in the (strictly increasing) list,
/// each from the `n`-blocks of that truncation's `Ĥ`.
pub fn convergence_study(model: &ModelSpec, n_max_list: &[usize], levels: usize) -> Result<ConvergenceTable> {
    if n_max_list.is_empty() || n_max_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Malformed(format!("N_max list {n_max_list:?} must be nonempty and increasing")));
    }
    if levels > n_max_list[0] {
        return Err(Error::OutOfRange(format!("levels up to {levels} need N_max >= {levels}")));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &nm in n_max_list {
        let h = assemble_hamiltonian(&model.with_n_max(nm))?;
        let lambdas: Vec<f64> = (0..=levels)
            .into_par_iter()
            .map(|n| {
                let states: Vec<usize> = h.basis().degree_range(n).collect();
                lowest_level(&SparseHermitian::compress(&h, &states), &model.solver).map(|l| l.value)
            })
            .collect::<Result<_>>()?;
        let change = rows.last().map(|prev| {
            prev.lambdas.iter().zip(&lambdas).map(|(a, b)| (b - a).abs() / a.abs().max(1e-300)).collect()
        });
        rows.push(ConvergenceRow { fock_n_max: nm, lambdas, change });
    }
    Ok(ConvergenceTable { rows })
}

/// Desk check of `⟨Ĥ⟩ ≥ ⟨N̂⟩ + C*` with `C*` the lowest eigenvalue of
/// `Ĥ - N̂` on the states of degree `≤ N_max - margin`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationCheck {
    pub c_star: f64,
    pub samples: usize,
    /// `min (⟨Ĥ⟩ - ⟨N̂⟩ - C*)` over the samples.
    pub min_excess: f64,
    pub holds: bool,
    pub safe_dim: usize,
}

pub fn expectation_inequality_check(model: &ModelSpec, samples: usize, seed: u64) -> Result<ExpectationCheck> {
    let h = assemble_hamiltonian(model)?;
    let basis: Arc<FockBasis> = h.basis().clone();
    let safe: Vec<usize> = basis.up_to_degree(model.safe_degree()?).collect();
    let diff = h.sub(&number_operator(&basis))?;
    let block = SparseHermitian::compress(&diff, &safe);
    let c_star = lowest_level(&block, &model.solver)?.value;
    if !c_star.is_finite() {
        return Err(Error::Numerical("C* is not finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_excess = f64::INFINITY;
    for _ in 0..samples {
        let v: Vec<Complex64> =
            (0..safe.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let q = inner(&v, &block.apply(&v)).re / inner(&v, &v).re;
        min_excess = min_excess.min(q - c_star);
    }
    let tol = 1e-9 * c_star.abs().max(1.0);
    Ok(ExpectationCheck { c_star, samples, min_excess, holds: min_excess >= -tol, safe_dim: safe.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::binomial;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn number_operator_spectrum() {
        let basis = FockBasis::new(3, 5).unwrap();
        let n = number_operator(&basis);
        for k in 0..=5 {
            let block = n_boson_block(&n, k).unwrap();
            let dim = binomial(k + 2, 2).unwrap();
            assert_eq!(block, DMatrix::identity(dim, dim).map(|x: f64| c(x * k as f64)));
        }
        let report = operator_spectrum(&n, 5, &SolverOptions::default()).unwrap();
        assert_eq!(report.lambdas, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(report.multiplicities, report.block_dims);
        let g = gap_analysis(&report).unwrap();
        assert!((g.slope - 1.0).abs() < 1e-12 && g.intercept.abs() < 1e-12 && g.margin.abs() < 1e-12);
        assert!(g.arithmetic_growth_observed);
        assert!(matches!(n_boson_block(&n, 6), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn zero_mode_model_rejected() {
        let m = ModelSpec { generators: Some(vec![]), ..ModelSpec::zero_momentum("su2", 4) };
        assert!(matches!(assemble_hamiltonian(&m), Err(Error::Domain(_))));
    }

    #[test]
    fn su2_block_shapes_and_hermiticity() {
        let model = ModelSpec::zero_momentum("su2", 4);
        let h = assemble_hamiltonian(&model).unwrap();
        assert_eq!(h.basis().num_modes(), 9);
        assert_eq!(n_boson_block(&h, 0).unwrap().shape(), (1, 1));
        let b2 = n_boson_block(&h, 2).unwrap();
        assert_eq!(b2.shape(), (45, 45));
        assert!((&b2 - b2.adjoint()).iter().all(|z| z.norm() < 1e-12));
        let safe: Vec<usize> = h.basis().up_to_degree(2).collect();
        assert!(h.hermiticity_defect(&safe) < 1e-12);
        assert!((0..h.dim()).all(|i| h.entry(i, i).im == 0.0));
        assert!(n_boson_block(&h, 0).unwrap()[(0, 0)].re > 0.0);
    }

    #[test]
    fn symbol_block_matches_operator_block() {
        let model = ModelSpec::zero_momentum("su2", 5);
        let h = assemble_hamiltonian(&model).unwrap();
        let s = model.symbol().unwrap();
        for n in 0..=5 {
            let a = n_boson_block(&h, n).unwrap();
            let b = symbol_block(&s, model.convention, n).unwrap();
            assert!((a - b).iter().all(|z| z.norm() < 1e-12), "n = {n}");
        }
    }

    #[test]
    fn complex_eigen_via_embedding() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[c(2.0), Complex64::new(0.0, 1.0), c(0.0), Complex64::new(0.0, -1.0), c(2.0), c(0.0), c(0.0), c(0.0), c(5.0)],
        );
        let (vals, vecs) = hermitian_eigen(&m).unwrap();
        for (got, want) in vals.iter().zip([1.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let recon = &vecs * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals.iter().map(|&v| c(v)).collect()))
            * vecs.adjoint();
        assert!((recon - m).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn lanczos_matches_dense() {
        let model = ModelSpec::zero_momentum("su2", 4);
        let h = assemble_hamiltonian(&model).unwrap();
        let states: Vec<usize> = h.basis().degree_range(3).collect();
        let block = SparseHermitian::compress(&h, &states);
        let dense = lowest_level(&block, &SolverOptions::default()).unwrap();
        let opts = SolverOptions { dense_threshold: 10, ..SolverOptions::default() };
        let iterative = lowest_level(&block, &opts).unwrap();
        assert!(dense.dense && !iterative.dense && iterative.converged);
        assert!((dense.value - iterative.value).abs() < 1e-9);
        assert_eq!(dense.multiplicity, iterative.multiplicity);
        // N̂ on degree 2 of 4 modes: one level of multiplicity 10
        let basis = FockBasis::new(4, 2).unwrap();
        let n = number_operator(&basis);
        let b = SparseHermitian::compress(&n, &basis.degree_range(2).collect::<Vec<_>>());
        let l = lowest_level(&b, &SolverOptions { dense_threshold: 1, ..SolverOptions::default() }).unwrap();
        assert!((l.value - 2.0).abs() < 1e-12);
        assert_eq!(l.multiplicity, 10);
    }

    #[test]
    fn lower_support_examples() {
        let pts = [(0.0, 0.0), (1.0, 2.0), (2.0, 3.0), (3.0, 5.0)];
        let s = lower_support(&pts);
        assert!(s.margin.abs() < 1e-12);
        for (x, y) in pts {
            assert!(y - s.slope * x - s.intercept >= -1e-12);
        }
        // a concave sequence is supported by its chord
        let s = lower_support(&[(0.0, 0.0), (1.0, 3.0), (2.0, 4.0)]);
        assert!((s.slope - 2.0).abs() < 1e-12 && s.intercept.abs() < 1e-12);
    }

    #[test]
    fn insufficient_levels() {
        let basis = FockBasis::new(2, 3).unwrap();
        let r = operator_spectrum(&number_operator(&basis), 1, &SolverOptions::default()).unwrap();
        assert!(matches!(gap_analysis(&r), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn n_max_beyond_margin_rejected() {
        let model = ModelSpec::zero_momentum("su2", 4);
        assert!(matches!(bosonic_spectrum(&model, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_layout() {
        let basis = FockBasis::new(2, 3).unwrap();
        let r = operator_spectrum(&number_operator(&basis), 2, &SolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,lambda,multiplicity,converged\n0,0.0,1,true\n1,1.0,2,true\n2,2.0,3,true\n");
    }

    #[test]
    fn model_spec_json_defaults() {
        let m: ModelSpec = serde_json::from_str(r#"{"algebra":"su2","truncation":"zero_momentum","N_max":6}"#).unwrap();
        assert_eq!(m, ModelSpec::zero_momentum("su2", 6));
        assert!(serde_json::from_str::<ModelSpec>(r#"{"algebra":"su2","truncation":"zero_momentum","N_max":6,"x":1}"#).is_err());
    }
}
