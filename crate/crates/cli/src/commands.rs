//! Command pipelines. Each writes a CSV body (deterministic for a fixed
//! config) plus a `<command>.json` summary carrying the checks, results and
//! wall-clock timing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use ymspec_core::algebra::{build_algebra, check_structure, AlgebraElement, SpatialAlgebraVector};
use ymspec_core::dynamics::{cfl_bound, evolve, CauchyState, EvolveOptions};
use ymspec_core::fock::{quantize, quantize_by_ladder_products, FockBasis, FockOperator};
use ymspec_core::lattice::io::write_vector_field;
use ymspec_core::lattice::{
    band_limited_random_field, constraint_residual, gauged_div, gauged_grad, longitudinal_project, transversal_project,
    LatticeSpec, ScalarAlgebraField, VectorAlgebraField,
};
use ymspec_core::spectrum::{bosonic_spectrum, convergence_study, expectation_inequality_check, gap_analysis};
use ymspec_core::symbols::{
    energy_symbol, number_symbol, ModeMap, Monomial, MomentumTruncation, OrderingConvention, PolynomialSymbol,
};
use ymspec_core::Error;

use crate::config::{Command, ConfigError, InitialData, RunConfig, TransformKind};

/// One pass/fail assertion of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, relation: "<", threshold, pass: value < threshold }
    }

    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, relation: ">", threshold, pass: value > threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, relation: ">=", threshold, pass: value >= threshold }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: ok as u8 as f64, relation: "==", threshold: 1.0, pass: ok }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub command: Command,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub outputs: Vec<PathBuf>,
    pub results: Value,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for usage and schema problems, 3 for numerical or runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) => 2,
            RunError::Core(e) => match e {
                Error::UnsupportedAlgebra(_)
                | Error::Malformed(_)
                | Error::Dimension(_)
                | Error::Domain(_)
                | Error::OutOfRange(_)
                | Error::InvalidGauge(_) => 2,
                _ => 3,
            },
            RunError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "schema",
            RunError::Usage(_) => "usage",
            RunError::Core(Error::Unstable { .. }) => "stability",
            RunError::Core(_) if self.exit_code() == 2 => "input",
            RunError::Core(_) => "numerical",
            RunError::Io(_) => "io",
        }
    }

    /// Structured diagnostic for stderr.
    pub fn diagnostic(&self) -> Value {
        let mut d = json!({ "status": "error", "kind": self.kind(), "message": self.to_string() });
        match self {
            RunError::Config(c) => {
                if let Some(k) = c.key() {
                    d["key"] = json!(k);
                }
            }
            RunError::Core(Error::Unstable { h, bound }) => {
                d["h"] = json!(h);
                d["bound"] = json!(bound);
            }
            RunError::Core(Error::NotConverged { iterations, residual }) => {
                d["iterations"] = json!(iterations);
                d["residual"] = json!(residual);
            }
            RunError::Core(Error::Diverged { t, .. }) => {
                d["t"] = json!(t);
            }
            _ => {}
        }
        d
    }
}

type RunResult = std::result::Result<(Vec<Check>, Value), RunError>;

/// Runs the configured command, writing reports into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome, RunError> {
    std::fs::create_dir_all(out)?;
    let started = Instant::now();
    let mut outputs = Vec::new();
    let (checks, results) = match cfg.command {
        Command::CheckAlgebra => check_algebra(cfg, out, &mut outputs),
        Command::Project => project(cfg, out, &mut outputs),
        Command::Evolve => run_evolve(cfg, out, &mut outputs),
        Command::Transform => transform(cfg, out, &mut outputs),
        Command::Spectrum => spectrum(cfg, out, &mut outputs),
        Command::Converge => converge(cfg, out, &mut outputs),
    }?;
    let passed = checks.iter().all(|c| c.pass);
    let summary_path = out.join(format!("{}.json", cfg.command.as_str()));
    let finished = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let summary = json!({
        "command": cfg.command,
        "passed": passed,
        "checks": checks,
        "results": results,
        "config": cfg,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
        "finished_unix": finished,
    });
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary).map_err(Error::from)? + "\n")?;
    outputs.push(summary_path);
    Ok(RunOutcome { command: cfg.command, passed, checks, outputs, results })
}

fn create(out: &Path, name: &str, outputs: &mut Vec<PathBuf>) -> std::io::Result<BufWriter<File>> {
    let p = out.join(name);
    let f = File::create(&p)?;
    outputs.push(p);
    Ok(BufWriter::new(f))
}

fn lattice_of(cfg: &RunConfig) -> Result<LatticeSpec, RunError> {
    Ok(LatticeSpec::new(cfg.lattice.n, cfg.lattice.spacing)?)
}

/// Smooth band-limited random `(a, e)`, with `e` replaced by its
/// gauge-transversal part. Deterministic in `seed`.
pub fn seeded_random_state(cfg: &RunConfig) -> ymspec_core::Result<CauchyState> {
    let basis = build_algebra(&cfg.algebra)?;
    let lat = LatticeSpec::new(cfg.lattice.n, cfg.lattice.spacing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (band, amp) = (cfg.lattice.band, cfg.lattice.amplitude);
    let a = band_limited_random_field(lat, basis.dim(), band, amp, &mut rng);
    let e0 = band_limited_random_field(lat, basis.dim(), band, amp, &mut rng);
    let e = transversal_project(&basis, &a, &e0, cfg.tolerances.cg)?;
    CauchyState::new(a, e)
}

/// Abelian plane wave `a = A ε cos(θ·x - ωt) b_0`, `e = ∂_t a`, exact for
/// the central-difference wave equation with `ω = |sin θ| / h`.
pub fn plane_wave_state(cfg: &RunConfig, t: f64) -> ymspec_core::Result<CauchyState> {
    let basis = build_algebra(&cfg.algebra)?;
    let lat = LatticeSpec::new(cfg.lattice.n, cfg.lattice.spacing)?;
    let (l, h) = (lat.length(), lat.spacing());
    let m = cfg.evolution.wave_vector.map(|x| x as f64);
    let kappa: Vec<f64> = (0..3).map(|k| (2.0 * std::f64::consts::PI * m[k] * h / l).sin() / h).collect();
    let omega = kappa.iter().map(|x| x * x).sum::<f64>().sqrt();
    if omega < 1e-12 {
        return Err(Error::Domain(format!("wave vector {:?} is invisible to the stencil", cfg.evolution.wave_vector)));
    }
    // polarization κ × ê for the axis where κ is smallest
    let axis = (0..3).min_by(|&i, &j| kappa[i].abs().total_cmp(&kappa[j].abs())).unwrap();
    let mut ax = [0.0; 3];
    ax[axis] = 1.0;
    let pol = [
        kappa[1] * ax[2] - kappa[2] * ax[1],
        kappa[2] * ax[0] - kappa[0] * ax[2],
        kappa[0] * ax[1] - kappa[1] * ax[0],
    ];
    let pn = pol.iter().map(|x| x * x).sum::<f64>().sqrt();
    let pol = pol.map(|x| x / pn);
    let amp = cfg.evolution.wave_amplitude;
    let dim = basis.dim();
    let phase = |x: [f64; 3]| (0..3).map(|k| 2.0 * std::f64::consts::PI * m[k] * x[k] / l).sum::<f64>() - omega * t;
    let along_b0 = |s: f64| {
        let mut v = vec![0.0; dim];
        v[0] = s;
        v
    };
    let a = VectorAlgebraField::from_fn(lat, dim, |x| pol.map(|p| along_b0(amp * p * phase(x).cos())));
    let e = VectorAlgebraField::from_fn(lat, dim, |x| pol.map(|p| along_b0(amp * p * omega * phase(x).sin())));
    let mut s = CauchyState::new(a, e)?;
    s.t = t;
    Ok(s)
}

fn check_algebra(cfg: &RunConfig, out: &Path, outputs: &mut Vec<PathBuf>) -> RunResult {
    let names = cfg.algebra_check.algebras.clone().unwrap_or_else(|| vec![cfg.algebra.clone()]);
    let tol = cfg.tolerances.algebra;
    let mut w = create(out, "check-algebra.csv", outputs)?;
    writeln!(w, "algebra,dim,orthonormality,skew_symmetry,closure,antisymmetry,jacobi,ad_invariance,quartic_routes")?;
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();
    for name in &names {
        let basis = build_algebra(name)?;
        let r = check_structure(&basis);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut quartic: f64 = 0.0;
        for _ in 0..cfg.algebra_check.samples {
            let v = SpatialAlgebraVector(std::array::from_fn(|_| {
                AlgebraElement((0..basis.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            }));
            let (q1, q2) = (basis.quartic_contraction(&v)?, basis.quartic_contraction_dense(&v)?);
            quartic = quartic.max((q1 - q2).abs() / q1.abs().max(1.0));
        }
        writeln!(
            w,
            "{name},{},{:?},{:?},{:?},{:?},{:?},{:?},{quartic:?}",
            r.dim, r.orthonormality, r.skew_symmetry, r.closure, r.antisymmetry, r.jacobi, r.ad_invariance
        )?;
        checks.push(Check::below(&format!("{name}: structure laws"), r.max_violation(), tol));
        checks.push(Check::below(&format!("{name}: quartic routes"), quartic, tol));
        results.insert(name.clone(), json!({ "structure": r, "quartic_routes": quartic }));
    }
    w.flush()?;
    Ok((checks, Value::Object(results)))
}

fn uniform_vector(lat: LatticeSpec, dim: usize, amp: f64, rng: &mut ChaCha8Rng) -> ymspec_core::Result<VectorAlgebraField> {
    let data = (0..lat.sites() * 3 * dim).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
    VectorAlgebraField::from_data(lat, dim, data)
}

fn project(cfg: &RunConfig, out: &Path, outputs: &mut Vec<PathBuf>) -> RunResult {
    let basis = build_algebra(&cfg.algebra)?;
    let lat = lattice_of(cfg)?;
    let dim = basis.dim();
    let tol = cfg.tolerances.cg;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = create(out, "project.csv", outputs)?;
    writeln!(w, "sample,adjointness,idempotency,symmetry,gauss_residual")?;
    let mut worst = [0.0f64; 4];
    for s in 0..cfg.projection.samples {
        let a = uniform_vector(lat, dim, cfg.projection.amplitude, &mut rng)?;
        let u_data = (0..lat.sites() * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = ScalarAlgebraField::from_data(lat, dim, u_data)?;
        let e = uniform_vector(lat, dim, 1.0, &mut rng)?;
        let f = uniform_vector(lat, dim, 1.0, &mut rng)?;

        let lhs = -gauged_grad(&basis, &a, &u)?.inner(&e);
        let rhs = u.inner(&gauged_div(&basis, &a, &e)?);
        let adjointness = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());

        let pe = longitudinal_project(&basis, &a, &e, tol)?;
        let ppe = longitudinal_project(&basis, &a, &pe, tol)?;
        let idempotency = ppe.sub(&pe).norm() / pe.norm();
        let pf = longitudinal_project(&basis, &a, &f, tol)?;
        let symmetry = (pe.inner(&f) - e.inner(&pf)).abs() / (e.norm() * f.norm());
        let gauss = constraint_residual(&basis, &a, &e.sub(&pe))? / constraint_residual(&basis, &a, &e)?;

        let row = [adjointness, idempotency, symmetry, gauss];
        for (m, v) in worst.iter_mut().zip(row) {
            *m = m.max(v);
        }
        writeln!(w, "{s},{adjointness:?},{idempotency:?},{symmetry:?},{gauss:?}")?;
    }
    w.flush()?;
    let checks = vec![
        Check::below("adjointness", worst[0], cfg.tolerances.adjointness),
        Check::below("idempotency", worst[1], 10.0 * tol),
        Check::below("symmetry", worst[2], 10.0 * tol),
        Check::below("gauss residual of (1 - Π)e", worst[3], 10.0 * tol),
    ];
    let results = json!({
        "adjointness": worst[0], "idempotency": worst[1], "symmetry": worst[2], "gauss_residual": worst[3],
        "samples": cfg.projection.samples, "sites": lat.sites(),
    });
    Ok((checks, results))
}

fn run_evolve(cfg: &RunConfig, out: &Path, outputs: &mut Vec<PathBuf>) -> RunResult {
    let basis = build_algebra(&cfg.algebra)?;
    let state = match cfg.evolution.initial {
        InitialData::Random => seeded_random_state(cfg)?,
        InitialData::PlaneWave => plane_wave_state(cfg, 0.0)?,
    };
    let h = cfg.step();
    let opts = EvolveOptions {
        t_final: cfg.evolution.t_final,
        h,
        max_initial_residual: 10.0 * cfg.tolerances.cg * state.e.norm() + 1e-12,
    };
    let (fin, report) = evolve(&basis, &state, &opts)?;
    let mut w = create(out, "evolve.csv", outputs)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(out, "final_a.txt", outputs)?;
    write_vector_field(&mut w, &cfg.algebra, &fin.a)?;
    w.flush()?;
    let mut w = create(out, "final_e.txt", outputs)?;
    write_vector_field(&mut w, &cfg.algebra, &fin.e)?;
    w.flush()?;

    let norm0 = state.norm();
    let drift = report.relative_energy_drift();
    let growth = report.constraint_growth();
    let mut checks = vec![
        Check::below("relative energy drift", drift, cfg.tolerances.energy_drift),
        Check::below("constraint residual growth", growth, cfg.tolerances.constraint_growth),
    ];
    let mut results = json!({
        "steps": report.times.len() - 1,
        "h": h,
        "cfl_bound": cfl_bound(&state.a),
        "energy_initial": report.energy[0],
        "relative_energy_drift": drift,
        "constraint_initial": report.constraint[0],
        "constraint_growth": growth,
        "constraint_growth_relative": if norm0 > 0.0 { growth / norm0 } else { growth },
        "state_norm": norm0,
    });
    if cfg.evolution.initial == InitialData::PlaneWave {
        let exact = plane_wave_state(cfg, fin.t)?;
        let err_a = fin.a.sub(&exact.a).norm() / exact.a.norm();
        let err_e = fin.e.sub(&exact.e).norm() / exact.e.norm();
        checks.push(Check::below("plane wave error", err_a.max(err_e), cfg.tolerances.plane_wave));
        results["plane_wave_error_a"] = json!(err_a);
        results["plane_wave_error_e"] = json!(err_e);
    }
    Ok((checks, results))
}

/// Random symbol with `terms` monomials of degree `≤ max_degree`.
pub fn random_symbol(rng: &mut ChaCha8Rng, d: usize, max_degree: usize, terms: usize) -> PolynomialSymbol {
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let k = rng.gen_range(0..=max_degree);
        let mut m = Monomial::one(d);
        for _ in 0..k {
            let slot = rng.gen_range(0..2 * d);
            if slot < d {
                m.alpha[slot] += 1;
            } else {
                m.beta[slot - d] += 1;
            }
        }
        out.push((m, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    }
    PolynomialSymbol::from_terms(d, out).expect("monomials sized to d")
}

fn coefficient_scale(s: &PolynomialSymbol) -> f64 {
    s.terms().map(|(_, c)| c.norm()).fold(1.0, f64::max)
}

fn transform(cfg: &RunConfig, out: &Path, outputs: &mut Vec<PathBuf>) -> RunResult {
    match cfg.transform.kind {
        TransformKind::Symbols => transform_symbols(cfg, out, outputs),
        TransformKind::Quantization => transform_quantization(cfg, out, outputs),
    }
}

fn transform_symbols(cfg: &RunConfig, out: &Path, outputs: &mut Vec<PathBuf>) -> RunResult {
    use OrderingConvention::*;
    let t = &cfg.transform;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = create(out, "transform.csv", outputs)?;
    writeln!(w, "sample,t1,t2,additivity,round_trip")?;
    let (mut add_worst, mut rt_worst) = (0.0f64, 0.0f64);
    for k in 0..t.samples {
        let s = random_symbol(&mut rng, t.modes, t.max_degree, 8);
        let (t1, t2) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let joint = s.weierstrass_flow(t1 + t2);
        let stepped = s.weierstrass_flow(t2).weierstrass_flow(t1);
        let additivity = joint.max_abs_diff(&stepped) / coefficient_scale(&joint);
        let back = s.convert(AntiNormal, Weyl).convert(Weyl, Normal).convert(Normal, AntiNormal);
        let round_trip = back.max_abs_diff(&s) / coefficient_scale(&s);
        add_worst = add_worst.max(additivity);
        rt_worst = rt_worst.max(round_trip);
        writeln!(w, "{k},{t1:?},{t2:?},{additivity:?},{round_trip:?}")?;
    }
    w.flush()?;

    // z*z read anti-normally is a a† = N̂ + 1; its Weyl symbol is z*z + 1/2
    let d = t.modes;
    let mut zz = PolynomialSymbol::zero(d);
    for m in 0..d {
        zz = zz.add(&PolynomialSymbol::z_star(d, m).mul(&PolynomialSymbol::z(d, m)));
    }
    let half = PolynomialSymbol::constant(d, Complex64::new(0.5 * d as f64, 0.0));
    let weyl_of_anti = zz.convert(AntiNormal, Weyl).max_abs_diff(&zz.add(&half));
    let weyl_of_number = number_symbol(d, Weyl).max_abs_diff(&zz.sub(&half));

    // emergent mass term of the smoothed quartic
    let basis = build_algebra(&cfg.algebra)?;
    let map = ModeMap::new(&basis, MomentumTruncation::ZeroMomentum, None)?;
    let dm = map.num_modes();
    let quartic = energy_symbol(&basis, &map, false)?.homogeneous_part(4);
    let mass = quartic.convert(AntiNormal, Weyl).sub(&quartic).homogeneous_part(2);
    let matrix = real_quadratic_form(&mass)?;
    let min_eig = matrix.clone().symmetric_eigen().eigenvalues.min();
    let mut w = create(out, "mass_matrix.csv", outputs)?;
    writeln!(w, "i,j,value")?;
    for i in 0..dm {
        for j in 0..dm {
            writeln!(w, "{i},{j},{:?}", matrix[(i, j)])?;
        }
    }
    w.flush()?;

    let checks = vec![
        Check::below("flow additivity", add_worst, cfg.tolerances.symbol),
        Check::below("conversion round trip", rt_worst, cfg.tolerances.symbol),
        Check::below("Weyl symbol of anti-normal z*z minus (z*z + 1/2)", weyl_of_anti, cfg.tolerances.symbol),
        Check::above("smallest eigenvalue of smoothed quartic mass term", min_eig, 0.0),
    ];
    let results = json!({
        "flow_additivity": add_worst,
        "round_trip": rt_worst,
        "weyl_of_antinormal_zz_defect": weyl_of_anti,
        "weyl_of_number_operator_minus_half_defect": weyl_of_number,
        "mass_matrix_min_eigenvalue": min_eig,
        "mass_matrix_dim": dm,
        "mass_term_count": mass.len(),
    });
    Ok((checks, results))
}

/// Symmetric matrix `B` with `σ(a, e = 0) = Σ B_ij a_i a_j` for a
/// homogeneous quadratic symbol, recovered by polarization.
pub fn real_quadratic_form(s: &PolynomialSymbol) -> ymspec_core::Result<DMatrix<f64>> {
    let d = s.num_modes();
    let zeros = vec![0.0; d];
    let q = |x: &[f64]| -> ymspec_core::Result<f64> { Ok(s.evaluate_real(x, &zeros)?.re) };
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut x = vec![0.0; d];
            x[i] += 1.0;
            x[j] += 1.0;
            let mut xi = vec![0.0; d];
            xi[i] = 1.0;
            let mut xj = vec![0.0; d];
            xj[j] = 1.0;
            m[(i, j)] = (q(&x)? - q(&xi)? - q(&xj)?) / 2.0;
        }
    }
    Ok(m)
}

fn max_entry_diff(a: &FockOperator, b: &FockOperator, states: &[usize]) -> f64 {
    let (x, y) = (a.restrict(states), b.restrict(states));
    (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn transform_quantization(cfg: &RunConfig, out: &Path, outputs: &mut Vec<PathBuf>) -> RunResult {
    use OrderingConvention::*;
    let t = &cfg.transform;
    let basis = FockBasis::new(t.modes, t.fock_n_max)?;
    let all: Vec<usize> = (0..basis.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = create(out, "transform.csv", outputs)?;
    writeln!(w, "sample,degree,direct_vs_converted,direct_vs_ladder")?;
    let (mut conv_worst, mut ladder_worst) = (0.0f64, 0.0f64);
    for k in 0..t.samples {
        let s = random_symbol(&mut rng, t.modes, t.max_degree, 6);
        let direct = quantize(&s, AntiNormal, &basis)?;
        let converted = quantize(&s.convert(AntiNormal, Normal), Normal, &basis)?;
        let conv = max_entry_diff(&direct, &converted, &all);
        // truncated ladder products are exact only below the edge
        let safe: Vec<usize> = basis.up_to_degree(t.fock_n_max.saturating_sub(s.degree())).collect();
        let ladder = quantize_by_ladder_products(&s, AntiNormal, &basis)?;
        let lad = max_entry_diff(&direct, &ladder, &safe);
        conv_worst = conv_worst.max(conv);
        ladder_worst = ladder_worst.max(lad);
        writeln!(w, "{k},{},{conv:?},{lad:?}", s.degree())?;
    }
    w.flush()?;

    // anti-normal z*_m z_m against the occupation oracle μ_m + 1
    let safe: Vec<usize> = basis.up_to_degree(t.fock_n_max.saturating_sub(2)).collect();
    let mut number_defect: f64 = 0.0;
    for m in 0..t.modes {
        let zz = PolynomialSymbol::z_star(t.modes, m).mul(&PolynomialSymbol::z(t.modes, m));
        let q = quantize(&zz, AntiNormal, &basis)?;
        let oracle = FockOperator::diagonal(basis.clone(), |mu| mu[m] as f64 + 1.0);
        number_defect = number_defect.max(max_entry_diff(&q, &oracle, &safe));
    }
    let checks = vec![
        Check::below("anti-normal vs converted normal quantization", conv_worst, cfg.tolerances.quantization),
        Check::below("anti-normal vs ladder products (safe block)", ladder_worst, cfg.tolerances.quantization),
        Check::below("anti-normal z*z minus (N + 1) (safe block)", number_defect, cfg.tolerances.quantization),
    ];
    let results = json!({
        "direct_vs_converted": conv_worst,
        "direct_vs_ladder": ladder_worst,
        "number_defect": number_defect,
        "basis_size": basis.len(),
    });
    Ok((checks, results))
}

fn spectrum(cfg: &RunConfig, out: &Path, outputs: &mut Vec<PathBuf>) -> RunResult {
    let model = cfg.model_spec();
    let report = bosonic_spectrum(&model, cfg.model.n_max)?;
    let mut w = create(out, "spectrum.csv", outputs)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let analysis = gap_analysis(&report)?;
    let expect = expectation_inequality_check(&model, cfg.model.samples, cfg.seed)?;
    let symbol = model.symbol()?;
    let checks = vec![
        Check::above("gap", analysis.gap, 0.0),
        Check::holds("levels strictly increasing", analysis.strictly_increasing),
        Check::above("supporting slope", analysis.support.slope, 0.0),
        Check::at_least("supporting margin", analysis.support.margin, -cfg.tolerances.growth_margin),
        Check::holds("all levels converged", report.converged.iter().all(|&c| c)),
        Check::at_least("min <H> - <N> - C* over samples", expect.min_excess, -1e-9 * expect.c_star.abs().max(1.0)),
    ];
    let results = json!({
        "gap": analysis.gap,
        "slope": analysis.slope,
        "intercept": analysis.intercept,
        "margin": analysis.margin,
        "support": analysis.support,
        "arithmetic_growth_observed": analysis.arithmetic_growth_observed,
        "report": report,
        "c_star": expect.c_star,
        "expectation_check": expect,
        "quartic_terms": symbol.homogeneous_part(4).len(),
        "symbol_degree": symbol.degree(),
    });
    Ok((checks, results))
}

fn converge(cfg: &RunConfig, out: &Path, outputs: &mut Vec<PathBuf>) -> RunResult {
    let model = cfg.model_spec();
    let list = &cfg.model.fock_n_max_list;
    let table = convergence_study(&model, list, cfg.model.n_max)?;
    let mut w = create(out, "converge.csv", outputs)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    let mut c_star = Vec::new();
    for &nm in list {
        let m = model.with_n_max(nm);
        if m.safe_degree().is_ok() {
            c_star.push(json!({ "N_max": nm, "c_star": expectation_inequality_check(&m, 0, cfg.seed)?.c_star }));
        }
    }
    let non_increasing = table.rows.windows(2).all(|w| {
        w[0].lambdas.iter().zip(&w[1].lambdas).all(|(a, b)| *b <= a + 1e-10 * a.abs().max(1.0))
    });
    let max_change = table.max_change();
    let checks = vec![
        Check::below("largest relative level change", max_change, cfg.tolerances.convergence),
        Check::holds("levels non-increasing in N_max", non_increasing),
        Check::holds("C* finite", c_star.iter().all(|c| c["c_star"].as_f64().is_some_and(f64::is_finite))),
    ];
    let results = json!({ "table": table, "max_change": max_change, "c_star": c_star });
    Ok((checks, results))
}

/// Reads a config file, mapping failures to the usage/schema exit class.
pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(crate::config::parse_config(&text)?)
}
