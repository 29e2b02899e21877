//! Polynomial symbols in `D` complex modes and the Gaussian-smoothing
//! transforms between orderings.
//!
//! A symbol is a finite sum `Σ c_{αβ} z*^α z^β`. The creation operator
//! corresponds to `z*`, annihilation to `z`. The three orderings are related by
//! the flow `e^{t Σ_m ∂_{z*_m} ∂_{z_m}}`:
//!
//! | from        | to     | t     |
//! |-------------|--------|-------|
//! | anti-normal | normal | `+1`  |
//! | anti-normal | Weyl   | `+½`  |
//! | normal      | Weyl   | `−½`  |
//!
//! The table is the one forced by `a a† = a† a + 1`; see the tests in
//! [`crate::fock`].

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::LieAlgebraBasis;
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Exponent pair: `alpha` on `z*`, `beta` on `z`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub alpha: Vec<u8>,
    pub beta: Vec<u8>,
}

impl Monomial {
    pub fn one(d: usize) -> Self {
        Monomial { alpha: vec![0; d], beta: vec![0; d] }
    }

    pub fn degree(&self) -> usize {
        self.alpha.iter().chain(&self.beta).map(|&x| x as usize).sum()
    }

    /// Degree in `z*` minus degree in `z`; quantized, this is the change in
    /// particle number.
    pub fn charge(&self) -> i64 {
        self.alpha.iter().map(|&x| x as i64).sum::<i64>() - self.beta.iter().map(|&x| x as i64).sum::<i64>()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            alpha: self.alpha.iter().zip(&other.alpha).map(|(a, b)| a + b).collect(),
            beta: self.beta.iter().zip(&other.beta).map(|(a, b)| a + b).collect(),
        }
    }

    /// The monomial with `alpha` and `beta` exchanged.
    pub fn swapped(&self) -> Monomial {
        Monomial { alpha: self.beta.clone(), beta: self.alpha.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSymbol {
    num_modes: usize,
    terms: BTreeMap<Monomial, Complex64>,
}

impl PolynomialSymbol {
    pub fn zero(num_modes: usize) -> Self {
        PolynomialSymbol { num_modes, terms: BTreeMap::new() }
    }

    pub fn constant(num_modes: usize, c: Complex64) -> Self {
        let mut s = Self::zero(num_modes);
        s.add_term(Monomial::one(num_modes), c);
        s
    }

    pub fn one(num_modes: usize) -> Self {
        Self::constant(num_modes, Complex64::new(1.0, 0.0))
    }

    /// The coordinate `z_m`.
    pub fn z(num_modes: usize, m: usize) -> Self {
        let mut mono = Monomial::one(num_modes);
        mono.beta[m] = 1;
        Self::from_terms(num_modes, [(mono, Complex64::new(1.0, 0.0))]).expect("valid mode")
    }

    /// The coordinate `z*_m`.
    pub fn z_star(num_modes: usize, m: usize) -> Self {
        let mut mono = Monomial::one(num_modes);
        mono.alpha[m] = 1;
        Self::from_terms(num_modes, [(mono, Complex64::new(1.0, 0.0))]).expect("valid mode")
    }

    /// Real coordinate `a_m = (z_m + z*_m)/√2`.
    pub fn real_a(num_modes: usize, m: usize) -> Self {
        Self::z(num_modes, m).add(&Self::z_star(num_modes, m)).scale(Complex64::new(FRAC_1_SQRT_2, 0.0))
    }

    /// Real coordinate `e_m = (z_m - z*_m)/(i√2)`.
    pub fn real_e(num_modes: usize, m: usize) -> Self {
        Self::z(num_modes, m).sub(&Self::z_star(num_modes, m)).scale(Complex64::new(0.0, -FRAC_1_SQRT_2))
    }

    /// Sums repeated monomials and drops exact zeros.
    pub fn from_terms(num_modes: usize, terms: impl IntoIterator<Item = (Monomial, Complex64)>) -> Result<Self> {
        let mut s = Self::zero(num_modes);
        for (m, c) in terms {
            if m.alpha.len() != num_modes || m.beta.len() != num_modes {
                return Err(Error::Dimension(format!(
                    "monomial has {}/{} exponents, symbol has {num_modes} modes",
                    m.alpha.len(),
                    m.beta.len()
                )));
            }
            s.add_term(m, c);
        }
        Ok(s)
    }

    fn add_term(&mut self, m: Monomial, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == Complex64::new(0.0, 0.0) {
                    o.remove();
                }
            }
        }
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    /// Largest `|α| + |β|`; zero for the zero symbol.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Homogeneous component of the given total degree.
    pub fn homogeneous_part(&self, degree: usize) -> Self {
        PolynomialSymbol {
            num_modes: self.num_modes,
            terms: self.terms.iter().filter(|(m, _)| m.degree() == degree).map(|(m, c)| (m.clone(), *c)).collect(),
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.num_modes != other.num_modes {
            return Err(Error::Dimension(format!("{} vs {} modes", self.num_modes, other.num_modes)));
        }
        Ok(())
    }

    /// Panics on a mode-count mismatch; see [`Self::try_add`].
    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("mode count mismatch")
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        Ok(out)
    }

    /// `self += s · other` in place.
    pub fn accumulate(&mut self, other: &Self, s: Complex64) {
        assert_eq!(self.num_modes, other.num_modes, "mode count mismatch");
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.num_modes);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Panics on a mode-count mismatch; see [`Self::try_mul`].
    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("mode count mismatch")
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut acc: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                *acc.entry(m1.mul(m2)).or_default() += c1 * c2;
            }
        }
        acc.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(PolynomialSymbol { num_modes: self.num_modes, terms: acc })
    }

    /// `c_{αβ} ↦ conj(c_{βα})`, the symbol of the adjoint operator.
    pub fn adjoint(&self) -> Self {
        PolynomialSymbol {
            num_modes: self.num_modes,
            terms: self.terms.iter().map(|(m, c)| (m.swapped(), c.conj())).collect(),
        }
    }

    /// Largest `|c_{αβ} - conj(c_{βα})|`.
    pub fn self_adjoint_defect(&self) -> f64 {
        let adj = self.adjoint();
        self.sub(&adj).terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Value at `z`, with `z*` the complex conjugate.
    pub fn evaluate(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.num_modes {
            return Err(Error::Dimension(format!("{} values for {} modes", z.len(), self.num_modes)));
        }
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = *c;
            for (k, zk) in z.iter().enumerate() {
                if m.alpha[k] > 0 {
                    v *= zk.conj().powu(m.alpha[k] as u32);
                }
                if m.beta[k] > 0 {
                    v *= zk.powu(m.beta[k] as u32);
                }
            }
            total += v;
        }
        Ok(total)
    }

    /// Value at the real Cauchy point `z = (a + i e)/√2`.
    pub fn evaluate_real(&self, a: &[f64], e: &[f64]) -> Result<Complex64> {
        self.evaluate(&real_to_complex(a, e)?)
    }

    /// `e^{t Σ_m ∂_{z*_m} ∂_{z_m}}` applied exactly. The flow factorises over
    /// modes; on one mode `z*^a z^b ↦ Σ_k t^k/k! · a!/(a-k)! · b!/(b-k)! ·
    /// z*^{a-k} z^{b-k}`.
    pub fn weierstrass_flow(&self, t: f64) -> Self {
        if t == 0.0 {
            return self.clone();
        }
        let mut cur = self.terms.clone();
        for m in 0..self.num_modes {
            let mut next: BTreeMap<Monomial, Complex64> = BTreeMap::new();
            for (mono, c) in cur {
                let (a, b) = (mono.alpha[m], mono.beta[m]);
                let mut w = 1.0;
                for k in 0..=a.min(b) {
                    if k > 0 {
                        w *= t * (a - k + 1) as f64 * (b - k + 1) as f64 / k as f64;
                    }
                    let mut lowered = mono.clone();
                    lowered.alpha[m] -= k;
                    lowered.beta[m] -= k;
                    *next.entry(lowered).or_default() += c * w;
                }
            }
            next.retain(|_, c| *c != Complex64::new(0.0, 0.0));
            cur = next;
        }
        PolynomialSymbol { num_modes: self.num_modes, terms: cur }
    }

    pub fn convert(&self, from: OrderingConvention, to: OrderingConvention) -> Self {
        self.weierstrass_flow(flow_parameter(from, to))
    }
}

/// `z_m = (a_m + i e_m)/√2`.
pub fn real_to_complex(a: &[f64], e: &[f64]) -> Result<Vec<Complex64>> {
    if a.len() != e.len() {
        return Err(Error::Dimension(format!("{} positions vs {} momenta", a.len(), e.len())));
    }
    Ok(a.iter().zip(e).map(|(x, p)| Complex64::new(*x, *p) * FRAC_1_SQRT_2).collect())
}

/// Inverse of [`real_to_complex`].
pub fn complex_to_real(z: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let s = std::f64::consts::SQRT_2;
    (z.iter().map(|c| c.re * s).collect(), z.iter().map(|c| c.im * s).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingConvention {
    Normal,
    Weyl,
    #[serde(alias = "anti-normal", alias = "anti_normal")]
    AntiNormal,
}

impl OrderingConvention {
    pub const ALL: [OrderingConvention; 3] =
        [OrderingConvention::Normal, OrderingConvention::Weyl, OrderingConvention::AntiNormal];

    pub fn as_str(self) -> &'static str {
        match self {
            OrderingConvention::Normal => "normal",
            OrderingConvention::Weyl => "weyl",
            OrderingConvention::AntiNormal => "antinormal",
        }
    }

    /// Position on the flow axis: normal 0, Weyl −½, anti-normal −1.
    fn level(self) -> f64 {
        match self {
            OrderingConvention::Normal => 0.0,
            OrderingConvention::Weyl => -0.5,
            OrderingConvention::AntiNormal => -1.0,
        }
    }
}

impl std::fmt::Display for OrderingConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OrderingConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "normal" => Ok(OrderingConvention::Normal),
            "weyl" => Ok(OrderingConvention::Weyl),
            "antinormal" => Ok(OrderingConvention::AntiNormal),
            _ => Err(Error::Malformed(format!("unknown ordering `{s}`"))),
        }
    }
}

/// Flow parameter taking `from`-symbols to `to`-symbols.
pub fn flow_parameter(from: OrderingConvention, to: OrderingConvention) -> f64 {
    to.level() - from.level()
}

/// Symbol of the number operator `Σ_m a†_m a_m` in the given ordering:
/// `Σ z*z` (normal), `Σ z*z - D/2` (Weyl), `Σ z*z - D` (anti-normal).
pub fn number_symbol(d: usize, convention: OrderingConvention) -> PolynomialSymbol {
    let mut s = PolynomialSymbol::zero(d);
    for m in 0..d {
        s = s.add(&PolynomialSymbol::z_star(d, m).mul(&PolynomialSymbol::z(d, m)));
    }
    s.convert(OrderingConvention::Normal, convention)
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    alpha: Vec<u8>,
    beta: Vec<u8>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SymbolRecord {
    num_modes: usize,
    terms: Vec<TermRecord>,
}

impl Serialize for PolynomialSymbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymbolRecord {
            num_modes: self.num_modes,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermRecord { alpha: m.alpha.clone(), beta: m.beta.clone(), re: c.re, im: c.im })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolynomialSymbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SymbolRecord::deserialize(d)?;
        PolynomialSymbol::from_terms(
            r.num_modes,
            r.terms.into_iter().map(|t| (Monomial { alpha: t.alpha, beta: t.beta }, Complex64::new(t.re, t.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumTruncation {
    /// Constant fields only.
    ZeroMomentum,
    /// Constants plus `cos` and `sin` of the lowest momentum along each axis.
    LowestShell,
}

impl MomentumTruncation {
    pub fn momentum_count(self) -> usize {
        match self {
            MomentumTruncation::ZeroMomentum => 1,
            MomentumTruncation::LowestShell => 7,
        }
    }
}

/// Label of one complex mode: spatial direction, algebra generator and
/// momentum profile (0 constant, then `cos`/`sin` along axes 0, 1, 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ModeLabel {
    pub direction: usize,
    pub generator: usize,
    pub momentum: usize,
}

/// Bijection between complex modes and real Cauchy coordinates
/// `(a, e)` expanded in orthonormal momentum profiles.
#[derive(Clone, Debug)]
pub struct ModeMap {
    dim_g: usize,
    generators: Vec<usize>,
    truncation: MomentumTruncation,
    lattice: Option<LatticeSpec>,
    labels: Vec<ModeLabel>,
}

impl ModeMap {
    /// All generators of the algebra. The lowest-shell truncation needs a
    /// lattice with `n ≥ 3`; the zero-momentum model uses unit volume.
    pub fn new(basis: &LieAlgebraBasis, truncation: MomentumTruncation, lattice: Option<LatticeSpec>) -> Result<Self> {
        Self::restricted(basis, &(0..basis.dim()).collect::<Vec<_>>(), truncation, lattice)
    }

    /// Only the listed algebra directions (e.g. `[0]` for the abelian control).
    pub fn restricted(
        basis: &LieAlgebraBasis,
        generators: &[usize],
        truncation: MomentumTruncation,
        lattice: Option<LatticeSpec>,
    ) -> Result<Self> {
        let dim_g = basis.dim();
        let mut seen = vec![false; dim_g];
        for &g in generators {
            if g >= dim_g || seen[g] {
                return Err(Error::Dimension(format!("bad generator list {generators:?} for dimension {dim_g}")));
            }
            seen[g] = true;
        }
        if truncation == MomentumTruncation::LowestShell {
            match lattice {
                Some(l) if l.n() >= 3 => {}
                _ => return Err(Error::Malformed("lowest-shell modes need a lattice with n >= 3".into())),
            }
        }
        let mut labels = Vec::new();
        for momentum in 0..truncation.momentum_count() {
            for direction in 0..3 {
                for &generator in generators {
                    labels.push(ModeLabel { direction, generator, momentum });
                }
            }
        }
        Ok(ModeMap { dim_g, generators: generators.to_vec(), truncation, lattice, labels })
    }

    pub fn num_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn truncation(&self) -> MomentumTruncation {
        self.truncation
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn algebra_dim(&self) -> usize {
        self.dim_g
    }

    pub fn lattice(&self) -> Option<LatticeSpec> {
        self.lattice
    }

    pub fn index(&self, direction: usize, generator: usize, momentum: usize) -> Option<usize> {
        let g = self.generators.iter().position(|&x| x == generator)?;
        if direction >= 3 || momentum >= self.truncation.momentum_count() {
            return None;
        }
        Some((momentum * 3 + direction) * self.generators.len() + g)
    }

    /// Lattice values of the orthonormal momentum profiles
    /// (volume-weighted inner product). Empty for the zero-momentum model.
    pub fn profiles(&self) -> Vec<Vec<f64>> {
        let Some(lat) = self.lattice.filter(|_| self.truncation == MomentumTruncation::LowestShell) else {
            return Vec::new();
        };
        let vol = lat.length().powi(3);
        let k = 2.0 * std::f64::consts::PI / lat.length();
        let mut out = vec![vec![1.0 / vol.sqrt(); lat.sites()]];
        for axis in 0..3 {
            for use_sin in [false, true] {
                out.push(
                    (0..lat.sites())
                        .map(|s| {
                            let x = lat.position(s)[axis];
                            let v = if use_sin { (k * x).sin() } else { (k * x).cos() };
                            v * (2.0 / vol).sqrt()
                        })
                        .collect(),
                );
            }
        }
        out
    }

    /// Central-difference derivative along `axis` in the profile basis:
    /// `D φ_cos = -κ φ_sin`, `D φ_sin = κ φ_cos` with `κ = sin(kh)/h`.
    fn derivative(&self, axis: usize, momentum: usize) -> Option<(usize, f64)> {
        let lat = self.lattice?;
        if momentum == 0 || (momentum - 1) / 2 != axis {
            return None;
        }
        let h = lat.spacing();
        let kappa = (2.0 * std::f64::consts::PI * h / lat.length()).sin() / h;
        if (momentum - 1) % 2 == 0 {
            Some((momentum + 1, -kappa))
        } else {
            Some((momentum - 1, kappa))
        }
    }
}

/// Energy symbol `½ (da·da + [a,a]·[a,a] + e·e)` with `a = (z + z*)/√2` and
/// `e = (z - z*)/(i√2)`. Here `[a,a]·[a,a] = Σ_{j,k} |[a_j, a_k]|²` and
/// `da·da = Σ_{j,k} |D_j a_k - D_k a_j|²` over ordered pairs, both integrated
/// over the torus. `include_magnetic` switches the `da·da` term, which is
/// zero in the zero-momentum model.
pub fn energy_symbol(basis: &LieAlgebraBasis, map: &ModeMap, include_magnetic: bool) -> Result<PolynomialSymbol> {
    if map.algebra_dim() != basis.dim() {
        return Err(Error::Dimension(format!(
            "mode map built for dimension {}, algebra has {}",
            map.algebra_dim(),
            basis.dim()
        )));
    }
    let d = map.num_modes();
    if d == 0 {
        return Ok(PolynomialSymbol::zero(0));
    }
    let half = Complex64::new(0.5, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let r_count = map.truncation().momentum_count();
    let a: Vec<PolynomialSymbol> = (0..d).map(|m| PolynomialSymbol::real_a(d, m)).collect();

    let mut total = PolynomialSymbol::zero(d);
    for m in 0..d {
        let e = PolynomialSymbol::real_e(d, m);
        total.accumulate(&e.mul(&e), one);
    }

    if include_magnetic && r_count > 1 {
        // coefficient vector of (D_j a_k - D_k a_j)^p in the profile basis
        for j in 0..3 {
            for k in 0..3 {
                if j == k {
                    continue;
                }
                for &p in map.generators() {
                    for target in 0..r_count {
                        let mut comp = PolynomialSymbol::zero(d);
                        for r in 0..r_count {
                            if let Some((t, w)) = map.derivative(j, r) {
                                if t == target {
                                    let m = map.index(k, p, r).unwrap();
                                    comp.accumulate(&a[m], Complex64::new(w, 0.0));
                                }
                            }
                            if let Some((t, w)) = map.derivative(k, r) {
                                if t == target {
                                    let m = map.index(j, p, r).unwrap();
                                    comp.accumulate(&a[m], Complex64::new(-w, 0.0));
                                }
                            }
                        }
                        if !comp.is_empty() {
                            total.accumulate(&comp.mul(&comp), one);
                        }
                    }
                }
            }
        }
    }

    let overlaps = quartic_overlaps(map);
    let gens = map.generators();
    for j in 0..3 {
        for k in (j + 1)..3 {
            // B[q][(r, s)] = Σ c^q_{pp'} a_{j p r} a_{k p' s}
            let mut brackets: BTreeMap<(usize, usize, usize), PolynomialSymbol> = BTreeMap::new();
            for &(p, pp, q, c) in basis.nonzero_constants() {
                if !gens.contains(&p) || !gens.contains(&pp) {
                    continue;
                }
                for r in 0..r_count {
                    for s in 0..r_count {
                        let term = a[map.index(j, p, r).unwrap()].mul(&a[map.index(k, pp, s).unwrap()]);
                        brackets
                            .entry((q, r, s))
                            .or_insert_with(|| PolynomialSymbol::zero(d))
                            .accumulate(&term, Complex64::new(c, 0.0));
                    }
                }
            }
            let mut pair = PolynomialSymbol::zero(d);
            for (&(r, s, t, u), &w) in &overlaps {
                for q in 0..basis.dim() {
                    let (Some(b1), Some(b2)) = (brackets.get(&(q, r, s)), brackets.get(&(q, t, u))) else {
                        continue;
                    };
                    pair.accumulate(&b1.mul(b2), Complex64::new(w, 0.0));
                }
            }
            // ordered pairs (j,k) and (k,j) contribute equally
            total.accumulate(&pair, Complex64::new(2.0, 0.0));
        }
    }
    Ok(total.scale(half))
}

/// Nonzero `∫ φ_r φ_s φ_t φ_u` over the lattice (unit volume, single
/// constant profile for the zero-momentum model).
fn quartic_overlaps(map: &ModeMap) -> BTreeMap<(usize, usize, usize, usize), f64> {
    let mut out = BTreeMap::new();
    let profiles = map.profiles();
    if profiles.is_empty() {
        out.insert((0, 0, 0, 0), 1.0);
        return out;
    }
    let lat = map.lattice().expect("lowest shell has a lattice");
    let vol = lat.volume_factor();
    let r_count = profiles.len();
    for r in 0..r_count {
        for s in 0..r_count {
            for t in 0..r_count {
                for u in 0..r_count {
                    let w: f64 = (0..lat.sites())
                        .map(|x| profiles[r][x] * profiles[s][x] * profiles[t][x] * profiles[u][x])
                        .sum::<f64>()
                        * vol;
                    if w.abs() > 1e-13 {
                        out.insert((r, s, t, u), w);
                    }
                }
            }
        }
    }
    out
}
