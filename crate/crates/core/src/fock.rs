//! Truncated bosonic Fock space over `D` modes.
//!
//! States are occupation vectors `μ` with `|μ| ≤ N_max`, enumerated by total
//! degree and then lexicographically. Quantization of a monomial is computed
//! by acting with the ladder operators on occupation vectors directly, so no
//! intermediate state is ever dropped: the matrix of `quantize(s)` is the exact
//! compression `P Q P` of the untruncated operator to the retained states.
//! [`quantize_by_ladder_products`] multiplies truncated ladder matrices
//! instead; the two agree away from the truncation edge.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbols::{Monomial, OrderingConvention, PolynomialSymbol};

/// Default cap on the number of basis states.
pub const DEFAULT_BASIS_CAP: usize = 2_000_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug)]
pub struct FockBasis {
    d: usize,
    n_max: usize,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `offsets[n]..offsets[n+1]` are the degree-`n` states.
    offsets: Vec<usize>,
}

/// `binomial(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n.checked_sub(k)?);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// All occupation vectors of total degree `n` over `d` modes, ascending
/// lexicographic order.
pub fn degree_states(d: usize, n: usize) -> Vec<Vec<u8>> {
    fn rec(d: usize, n: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if d == 1 {
            prefix.push(n as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first as u8);
            rec(d - 1, n - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d > 0 {
        rec(d, n, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

impl FockBasis {
    pub fn new(d: usize, n_max: usize) -> Result<Arc<Self>> {
        Self::with_cap(d, n_max, DEFAULT_BASIS_CAP)
    }

    pub fn with_cap(d: usize, n_max: usize, cap: usize) -> Result<Arc<Self>> {
        if d == 0 {
            return Err(Error::Malformed("a Fock basis needs at least one mode".into()));
        }
        if n_max > 200 {
            return Err(Error::Resource(format!("N_max = {n_max} exceeds the occupation range")));
        }
        let size = binomial(d + n_max, d).filter(|&s| s <= cap).ok_or_else(|| {
            Error::Resource(format!("Fock basis for D = {d}, N_max = {n_max} exceeds the cap of {cap} states"))
        })?;
        let mut states = Vec::with_capacity(size);
        let mut offsets = vec![0];
        for n in 0..=n_max {
            states.extend(degree_states(d, n));
            offsets.push(states.len());
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Arc::new(FockBasis { d, n_max, states, index, offsets }))
    }

    pub fn num_modes(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn degree_of(&self, i: usize) -> usize {
        self.states[i].iter().map(|&x| x as usize).sum()
    }

    /// Indices of the degree-`n` states.
    pub fn degree_range(&self, n: usize) -> std::ops::Range<usize> {
        if n > self.n_max {
            return self.offsets[self.n_max + 1]..self.offsets[self.n_max + 1];
        }
        self.offsets[n]..self.offsets[n + 1]
    }

    /// Indices of all states with degree `≤ k`.
    pub fn up_to_degree(&self, k: usize) -> std::ops::Range<usize> {
        0..self.offsets[k.min(self.n_max) + 1]
    }
}

/// `x (x-1) ··· (x-k+1)`.
fn falling(x: u32, k: u32) -> f64 {
    (0..k).map(|i| (x - i) as f64).product()
}

/// Exact action of a monomial operator on `|μ⟩`: `(a†)^α a^β` for normal
/// order, `a^β (a†)^α` for anti-normal. Returns the image occupation and its
/// coefficient, or `None` when the image is zero.
pub fn apply_monomial(mu: &[u8], m: &Monomial, anti_normal: bool) -> Option<(Vec<u8>, f64)> {
    let mut out = Vec::with_capacity(mu.len());
    // product of squared coefficients, exact in f64 at these sizes
    let mut sq = 1.0;
    for k in 0..mu.len() {
        let (x, a, b) = (mu[k] as u32, m.alpha[k] as u32, m.beta[k] as u32);
        if anti_normal {
            let up = x + a;
            if up < b {
                return None;
            }
            sq *= falling(up, a) * falling(up, b);
            out.push((up - b) as u8);
        } else {
            if x < b {
                return None;
            }
            let down = x - b;
            sq *= falling(x, b) * falling(down + a, a);
            out.push((down + a) as u8);
        }
    }
    Some((out, sq.sqrt()))
}

/// Sparse operator on a truncated Fock space, stored by rows with sorted
/// column indices.
#[derive(Clone, Debug)]
pub struct FockOperator {
    basis: Arc<FockBasis>,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl FockOperator {
    fn from_columns(basis: Arc<FockBasis>, columns: Vec<Vec<(usize, Complex64)>>) -> Self {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); basis.len()];
        for (c, col) in columns.into_iter().enumerate() {
            for (r, v) in col {
                rows[r].push((c, v));
            }
        }
        for row in &mut rows {
            normalize_row(row);
        }
        FockOperator { basis, rows }
    }

    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let n = basis.len();
        FockOperator { basis, rows: vec![Vec::new(); n] }
    }

    pub fn identity(basis: Arc<FockBasis>) -> Self {
        let rows = (0..basis.len()).map(|i| vec![(i, Complex64::new(1.0, 0.0))]).collect();
        FockOperator { basis, rows }
    }

    pub fn diagonal(basis: Arc<FockBasis>, values: impl Fn(&[u8]) -> f64) -> Self {
        let rows = basis
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let v = values(s);
                if v == 0.0 { Vec::new() } else { vec![(i, Complex64::new(v, 0.0))] }
            })
            .collect();
        FockOperator { basis, rows }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, r: usize) -> &[(usize, Complex64)] {
        &self.rows[r]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        match self.rows[r].binary_search_by_key(&c, |e| e.0) {
            Ok(k) => self.rows[r][k].1,
            Err(_) => ZERO,
        }
    }

    fn check_basis(&self, other: &Arc<FockBasis>) -> Result<()> {
        if !Arc::ptr_eq(&self.basis, other)
            && (self.basis.d != other.d || self.basis.n_max != other.n_max)
        {
            return Err(Error::Dimension("operators on different Fock bases".into()));
        }
        Ok(())
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension(format!("vector of length {} for dimension {}", v.len(), self.dim())));
        }
        Ok(self.rows.par_iter().map(|row| row.iter().map(|(c, x)| x * v[*c]).sum()).collect())
    }

    pub fn add(&self, other: &FockOperator) -> Result<FockOperator> {
        self.lin_comb(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &FockOperator) -> Result<FockOperator> {
        self.lin_comb(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: Complex64) -> FockOperator {
        let rows = self.rows.iter().map(|r| r.iter().map(|(c, v)| (*c, v * s)).collect()).collect();
        FockOperator { basis: self.basis.clone(), rows }
    }

    fn lin_comb(&self, s: Complex64, other: &FockOperator, t: Complex64) -> Result<FockOperator> {
        self.check_basis(&other.basis)?;
        let rows = self
            .rows
            .par_iter()
            .zip(other.rows.par_iter())
            .map(|(a, b)| {
                let mut row: Vec<(usize, Complex64)> =
                    a.iter().map(|(c, v)| (*c, v * s)).chain(b.iter().map(|(c, v)| (*c, v * t))).collect();
                normalize_row(&mut row);
                row
            })
            .collect();
        Ok(FockOperator { basis: self.basis.clone(), rows })
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &FockOperator) -> Result<FockOperator> {
        self.check_basis(&other.basis)?;
        let rows = self
            .rows
            .par_iter()
            .map(|a| {
                let mut row = Vec::new();
                for (k, x) in a {
                    for (c, y) in &other.rows[*k] {
                        row.push((*c, x * y));
                    }
                }
                normalize_row(&mut row);
                row
            })
            .collect();
        Ok(FockOperator { basis: self.basis.clone(), rows })
    }

    pub fn commutator(&self, other: &FockOperator) -> Result<FockOperator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> FockOperator {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.dim()];
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row {
                rows[*c].push((r, v.conj()));
            }
        }
        FockOperator { basis: self.basis.clone(), rows }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        self.restrict(&(0..self.dim()).collect::<Vec<_>>())
    }

    /// Compression onto the listed states, in the given order.
    pub fn restrict(&self, states: &[usize]) -> DMatrix<Complex64> {
        let mut pos = vec![usize::MAX; self.dim()];
        for (k, &s) in states.iter().enumerate() {
            pos[s] = k;
        }
        let mut m = DMatrix::from_element(states.len(), states.len(), ZERO);
        for (i, &s) in states.iter().enumerate() {
            for (c, v) in &self.rows[s] {
                if pos[*c] != usize::MAX {
                    m[(i, pos[*c])] = *v;
                }
            }
        }
        m
    }

    /// Largest `|Q_ij - conj(Q_ji)|` over pairs of the listed states.
    pub fn hermiticity_defect(&self, states: &[usize]) -> f64 {
        let m = self.restrict(states);
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..=i {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest imaginary part of any stored entry.
    pub fn max_imaginary(&self) -> f64 {
        self.rows.iter().flatten().map(|(_, v)| v.im.abs()).fold(0.0, f64::max)
    }

    /// Coordinate-list export: a JSON header line `{D, N_max, convention}`
    /// followed by `row col re im` lines.
    pub fn write_coo<W: Write>(&self, mut w: W, convention: OrderingConvention) -> Result<()> {
        #[derive(Serialize)]
        struct Header {
            #[serde(rename = "D")]
            d: usize,
            #[serde(rename = "N_max")]
            n_max: usize,
            convention: OrderingConvention,
        }
        serde_json::to_writer(&mut w, &Header { d: self.basis.d, n_max: self.basis.n_max, convention })?;
        writeln!(w)?;
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row {
                writeln!(w, "{r} {c} {:?} {:?}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

fn normalize_row(row: &mut Vec<(usize, Complex64)>) {
    row.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, Complex64)> = Vec::with_capacity(row.len());
    for &(c, v) in row.iter() {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|(_, v)| *v != ZERO);
    *row = out;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderKind {
    Create,
    Annihilate,
}

/// Truncated ladder matrix for mode `m` (0-based). Creation from the top
/// degree is dropped.
pub fn ladder(basis: &Arc<FockBasis>, m: usize, kind: LadderKind) -> Result<FockOperator> {
    if m >= basis.d {
        return Err(Error::OutOfRange(format!("mode {m} of {}", basis.d)));
    }
    let columns = basis
        .states
        .iter()
        .map(|mu| {
            let mut nu = mu.clone();
            let coef = match kind {
                LadderKind::Create => {
                    nu[m] += 1;
                    ((mu[m] as f64) + 1.0).sqrt()
                }
                LadderKind::Annihilate => {
                    if mu[m] == 0 {
                        return Vec::new();
                    }
                    nu[m] -= 1;
                    (mu[m] as f64).sqrt()
                }
            };
            match basis.index_of(&nu) {
                Some(r) => vec![(r, Complex64::new(coef, 0.0))],
                None => Vec::new(),
            }
        })
        .collect();
    Ok(FockOperator::from_columns(basis.clone(), columns))
}

/// Quantization of `s` read as a symbol of the given ordering. Weyl symbols
/// are converted to normal order first.
pub fn quantize(s: &PolynomialSymbol, convention: OrderingConvention, basis: &Arc<FockBasis>) -> Result<FockOperator> {
    if s.num_modes() != basis.d {
        return Err(Error::Dimension(format!("symbol has {} modes, basis has {}", s.num_modes(), basis.d)));
    }
    let (symbol, anti) = match convention {
        OrderingConvention::Normal => (s.clone(), false),
        OrderingConvention::AntiNormal => (s.clone(), true),
        OrderingConvention::Weyl => (s.convert(OrderingConvention::Weyl, OrderingConvention::Normal), false),
    };
    let terms: Vec<(&Monomial, &Complex64)> = symbol.terms().collect();
    let columns = basis
        .states
        .par_iter()
        .map(|mu| {
            let mut col = Vec::new();
            for (m, c) in &terms {
                if let Some((nu, w)) = apply_monomial(mu, m, anti) {
                    if let Some(r) = basis.index_of(&nu) {
                        col.push((r, *c * w));
                    }
                }
            }
            col
        })
        .collect();
    Ok(FockOperator::from_columns(basis.clone(), columns))
}

/// Quantization by multiplying truncated ladder matrices:
/// `(a†)^α a^β` (normal) or `a^β (a†)^α` (anti-normal). Differs from
/// [`quantize`] near the truncation edge.
pub fn quantize_by_ladder_products(
    s: &PolynomialSymbol,
    convention: OrderingConvention,
    basis: &Arc<FockBasis>,
) -> Result<FockOperator> {
    if s.num_modes() != basis.d {
        return Err(Error::Dimension(format!("symbol has {} modes, basis has {}", s.num_modes(), basis.d)));
    }
    let (symbol, anti) = match convention {
        OrderingConvention::Normal => (s.clone(), false),
        OrderingConvention::AntiNormal => (s.clone(), true),
        OrderingConvention::Weyl => (s.convert(OrderingConvention::Weyl, OrderingConvention::Normal), false),
    };
    let create: Vec<FockOperator> =
        (0..basis.d).map(|m| ladder(basis, m, LadderKind::Create)).collect::<Result<_>>()?;
    let annihilate: Vec<FockOperator> =
        (0..basis.d).map(|m| ladder(basis, m, LadderKind::Annihilate)).collect::<Result<_>>()?;
    let mut total = FockOperator::zero(basis.clone());
    for (m, c) in symbol.terms() {
        let mut creators = FockOperator::identity(basis.clone());
        let mut annihilators = FockOperator::identity(basis.clone());
        for k in 0..basis.d {
            for _ in 0..m.alpha[k] {
                creators = creators.mul(&create[k])?;
            }
            for _ in 0..m.beta[k] {
                annihilators = annihilators.mul(&annihilate[k])?;
            }
        }
        let product = if anti { annihilators.mul(&creators)? } else { creators.mul(&annihilators)? };
        total = total.add(&product.scale(*c))?;
    }
    Ok(total)
}

/// Diagonal operator with entries `|μ|`.
pub fn number_operator(basis: &Arc<FockBasis>) -> FockOperator {
    FockOperator::diagonal(basis.clone(), |s| s.iter().map(|&x| x as f64).sum())
}

#[derive(Clone, Debug)]
pub struct FockVector {
    basis: Arc<FockBasis>,
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    pub fn new(basis: Arc<FockBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::Dimension(format!("{} amplitudes for {} states", amplitudes.len(), basis.len())));
        }
        Ok(FockVector { basis, amplitudes })
    }

    pub fn vacuum(basis: Arc<FockBasis>) -> Self {
        Self::basis_state(basis, 0)
    }

    pub fn basis_state(basis: Arc<FockBasis>, i: usize) -> Self {
        let mut amplitudes = vec![ZERO; basis.len()];
        amplitudes[i] = Complex64::new(1.0, 0.0);
        FockVector { basis, amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `⟨ψ|Q|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn expectation(q: &FockOperator, psi: &FockVector) -> Result<Complex64> {
    q.check_basis(&psi.basis)?;
    let n = psi.norm_sq();
    if n == 0.0 {
        return Err(Error::Domain("expectation in the zero vector".into()));
    }
    let qpsi = q.apply(&psi.amplitudes)?;
    let num: Complex64 = psi.amplitudes.iter().zip(&qpsi).map(|(a, b)| a.conj() * b).sum();
    Ok(num / n)
}
