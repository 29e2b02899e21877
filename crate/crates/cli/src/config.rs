//! Run configuration: one JSON document per experiment.
//!
//! Every section is optional and falls back to the defaults below; unknown
//! keys anywhere are rejected. Parse errors and failed range checks name
//! the offending key as a dotted path (`lattice.spacing`).

use serde::{Deserialize, Serialize};
use ymspec_core::spectrum::{ModelSpec, SolverOptions};
use ymspec_core::symbols::{MomentumTruncation, OrderingConvention};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckAlgebra,
    Project,
    Evolve,
    Transform,
    Spectrum,
    Converge,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::CheckAlgebra => "check-algebra",
            Command::Project => "project",
            Command::Evolve => "evolve",
            Command::Transform => "transform",
            Command::Spectrum => "spectrum",
            Command::Converge => "converge",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_algebra")]
    pub algebra: String,
    /// Seed for every random draw in the run.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub algebra_check: AlgebraCheckConfig,
    #[serde(default)]
    pub projection: ProjectionConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_algebra() -> String {
    "su2".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub n: usize,
    pub spacing: f64,
    /// Largest `|m|₁` of the plane waves in random initial data.
    pub band: usize,
    /// Pointwise scale of random initial data.
    pub amplitude: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { n: 8, spacing: 0.125, band: 1, amplitude: 1e-3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// Band-limited random `(a, e)` with `e` made gauge transversal.
    Random,
    /// Abelian plane wave along the first generator.
    PlaneWave,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Step size; `spacing / 10` when absent.
    pub h: Option<f64>,
    pub initial: InitialData,
    /// Integer wave vector of the plane wave, in units of `2π / L`.
    pub wave_vector: [i64; 3],
    pub wave_amplitude: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            t_final: 1.0,
            h: None,
            initial: InitialData::Random,
            wave_vector: [1, 1, 0],
            wave_amplitude: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub truncation: MomentumTruncation,
    #[serde(rename = "N_max")]
    pub fock_n_max: usize,
    /// Highest level reported.
    pub n_max: usize,
    /// Algebra directions kept; all when absent.
    pub generators: Option<Vec<usize>>,
    pub convention: OrderingConvention,
    pub margin: usize,
    pub include_magnetic: bool,
    /// Truncations compared by `converge`.
    #[serde(rename = "N_max_list")]
    pub fock_n_max_list: Vec<usize>,
    /// Random states for the `⟨Ĥ⟩ ≥ ⟨N̂⟩ + C*` check.
    pub samples: usize,
    pub dense_threshold: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            truncation: MomentumTruncation::ZeroMomentum,
            fock_n_max: 8,
            n_max: 5,
            generators: None,
            convention: OrderingConvention::AntiNormal,
            margin: 2,
            include_magnetic: true,
            fock_n_max_list: vec![6, 8],
            samples: 1000,
            dense_threshold: 2500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraCheckConfig {
    /// Algebras to check; the top-level `algebra` when absent.
    pub algebras: Option<Vec<String>>,
    /// Random inputs for the quartic contraction comparison.
    pub samples: usize,
}

impl Default for AlgebraCheckConfig {
    fn default() -> Self {
        AlgebraCheckConfig { algebras: None, samples: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    /// Random `(a, u, e)` triples.
    pub samples: usize,
    /// Scale of the random connection `a`.
    pub amplitude: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig { samples: 20, amplitude: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    /// Flow identities, the Weyl number symbol and the smoothed quartic.
    Symbols,
    /// Agreement of the quantization routes on random symbols.
    Quantization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub kind: TransformKind,
    pub samples: usize,
    pub modes: usize,
    pub max_degree: usize,
    #[serde(rename = "N_max")]
    pub fock_n_max: usize,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig { kind: TransformKind::Symbols, samples: 100, modes: 4, max_degree: 6, fock_n_max: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Conjugate-gradient relative residual; projector checks allow 10×.
    pub cg: f64,
    pub algebra: f64,
    pub adjointness: f64,
    pub energy_drift: f64,
    pub constraint_growth: f64,
    pub plane_wave: f64,
    pub symbol: f64,
    pub quantization: f64,
    pub multiplicity: f64,
    /// Relative change of a level between truncations.
    pub convergence: f64,
    pub growth_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cg: 1e-10,
            algebra: 1e-10,
            adjointness: 1e-11,
            energy_drift: 1e-6,
            constraint_growth: 1e-6,
            plane_wave: 1e-4,
            symbol: 1e-12,
            quantization: 1e-10,
            multiplicity: 1e-8,
            convergence: 1e-2,
            growth_margin: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{key}: {message}")]
    Schema { key: String, message: String },
    #[error("malformed JSON: {0}")]
    Syntax(String),
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Schema { key, .. } => Some(key),
            ConfigError::Syntax(_) => None,
        }
    }

    fn schema(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Schema { key: key.into(), message: message.into() }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "<root>".to_string() } else { path };
        ConfigError::Schema { key, message: e.into_inner().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::schema(key, format!("must be positive and finite, got {x}")))
    }
}

fn at_least(key: &str, x: usize, min: usize) -> Result<(), ConfigError> {
    if x >= min {
        Ok(())
    } else {
        Err(ConfigError::schema(key, format!("must be at least {min}, got {x}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ymspec_core::algebra::build_algebra(&self.algebra).map_err(|e| ConfigError::schema("algebra", e.to_string()))?;
        at_least("lattice.n", self.lattice.n, 2)?;
        positive("lattice.spacing", self.lattice.spacing)?;
        at_least("lattice.band", self.lattice.band, 1)?;
        positive("lattice.amplitude", self.lattice.amplitude)?;
        if !(self.evolution.t_final >= 0.0 && self.evolution.t_final.is_finite()) {
            return Err(ConfigError::schema("evolution.T", format!("must be non-negative, got {}", self.evolution.t_final)));
        }
        if let Some(h) = self.evolution.h {
            positive("evolution.h", h)?;
        }
        positive("evolution.wave_amplitude", self.evolution.wave_amplitude)?;
        if self.evolution.wave_vector == [0, 0, 0] {
            return Err(ConfigError::schema("evolution.wave_vector", "must be nonzero"));
        }
        let m = &self.model;
        at_least("model.N_max", m.fock_n_max, 1)?;
        if m.n_max + m.margin > m.fock_n_max {
            return Err(ConfigError::schema(
                "model.n_max",
                format!("n_max + margin = {} exceeds N_max = {}", m.n_max + m.margin, m.fock_n_max),
            ));
        }
        if m.fock_n_max_list.is_empty() || m.fock_n_max_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::schema("model.N_max_list", "must be nonempty and strictly increasing"));
        }
        if m.fock_n_max_list[0] < m.n_max {
            return Err(ConfigError::schema("model.N_max_list", "every entry must be at least n_max"));
        }
        at_least("model.samples", m.samples, 1)?;
        at_least("model.dense_threshold", m.dense_threshold, 1)?;
        if let Some(g) = &m.generators {
            if g.is_empty() {
                return Err(ConfigError::schema("model.generators", "must list at least one generator"));
            }
        }
        if let Some(a) = &self.algebra_check.algebras {
            for (i, name) in a.iter().enumerate() {
                ymspec_core::algebra::build_algebra(name)
                    .map_err(|e| ConfigError::schema(&format!("algebra_check.algebras[{i}]"), e.to_string()))?;
            }
        }
        at_least("algebra_check.samples", self.algebra_check.samples, 1)?;
        at_least("projection.samples", self.projection.samples, 1)?;
        positive("projection.amplitude", self.projection.amplitude)?;
        at_least("transform.samples", self.transform.samples, 1)?;
        at_least("transform.modes", self.transform.modes, 1)?;
        at_least("transform.max_degree", self.transform.max_degree, 1)?;
        at_least("transform.N_max", self.transform.fock_n_max, 1)?;
        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.cg", t.cg),
            ("tolerances.algebra", t.algebra),
            ("tolerances.adjointness", t.adjointness),
            ("tolerances.energy_drift", t.energy_drift),
            ("tolerances.constraint_growth", t.constraint_growth),
            ("tolerances.plane_wave", t.plane_wave),
            ("tolerances.symbol", t.symbol),
            ("tolerances.quantization", t.quantization),
            ("tolerances.multiplicity", t.multiplicity),
            ("tolerances.convergence", t.convergence),
            ("tolerances.growth_margin", t.growth_margin),
        ] {
            positive(key, v)?;
        }
        Ok(())
    }

    /// Model for the spectral commands.
    pub fn model_spec(&self) -> ModelSpec {
        let m = &self.model;
        let lattice = match m.truncation {
            MomentumTruncation::LowestShell => ymspec_core::lattice::LatticeSpec::new(self.lattice.n, self.lattice.spacing).ok(),
            MomentumTruncation::ZeroMomentum => None,
        };
        ModelSpec {
            algebra: self.algebra.clone(),
            truncation: m.truncation,
            generators: m.generators.clone(),
            lattice,
            include_magnetic: m.include_magnetic,
            fock_n_max: m.fock_n_max,
            convention: m.convention,
            margin: m.margin,
            solver: SolverOptions {
                multiplicity_tol: self.tolerances.multiplicity,
                convergence_tol: self.tolerances.convergence,
                dense_threshold: m.dense_threshold,
                seed: self.seed,
                ..SolverOptions::default()
            },
        }
    }

    /// Step size actually requested: `evolution.h` or `spacing / 10`.
    pub fn step(&self) -> f64 {
        self.evolution.h.unwrap_or(self.lattice.spacing / 10.0)
    }
}
