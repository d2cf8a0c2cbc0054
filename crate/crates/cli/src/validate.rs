//! Self-checks against independent computations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use qgeom::dicke::{anomaly_term, classical_metric, quantum_metric, resonant_metrics, DickeParams, DickePhase};
use qgeom::geometry::scalar_curvature_fd_refined;
use qgeom::lmg::exact::{exact_qmt, fidelity_oracle, ExactSolver, GapConfig, Spin};
use qgeom::lmg::thermo::{
    broken_curvature, broken_metrics, broken_quantum_determinant, symmetric_metrics, LmgParams, LmgPhase,
    LmgThermoField,
};
use qgeom::torus::{classical_metric_oracle, OracleConfig, RegularizationSign};
use qgeom::{ActionAssignment, MetricTensor2D, ParameterPoint, Result};

use crate::config::{Fault, RunConfig};

pub const CHECKS: [&str; 6] =
    ["anomaly", "resonance", "classical-oracle", "fidelity-oracle", "determinant", "curvature-closed-form"];

#[derive(Debug, Clone, Serialize)]
pub struct Measure {
    pub label: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub samples: usize,
}

impl Measure {
    fn new(label: &str, errors: impl IntoIterator<Item = f64>, tolerance: f64) -> Self {
        let (mut max_error, mut samples) = (0.0f64, 0);
        for e in errors {
            // NaN must fail the comparison, so propagate it explicitly
            max_error = if e.is_nan() { f64::NAN } else { max_error.max(e) };
            samples += 1;
        }
        Self { label: label.to_string(), max_error, tolerance, samples }
    }

    /// A lower bound rather than an upper one.
    fn at_least(label: &str, values: impl IntoIterator<Item = f64>, bound: f64) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let worst = v.iter().copied().fold(f64::INFINITY, f64::min);
        // stored as bound / value so that `passes` reads the same way
        Self { label: label.to_string(), max_error: bound / worst, tolerance: 1.0, samples: v.len() }
    }

    fn passes(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub measures: Vec<Measure>,
    pub error: Option<String>,
}

fn relative(a: &MetricTensor2D, reference: &MetricTensor2D) -> f64 {
    a.max_abs_diff(reference) / reference.components().iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

/// Seeded Dicke points inside one phase with `omega0 = 1`, away from resonance.
fn dicke_points(rng: &mut ChaCha8Rng, phase: DickePhase, n: usize) -> Vec<DickeParams> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let omega: f64 = rng.gen_range(0.5..1.5);
        if (omega - 1.0).abs() < 1e-2 {
            continue;
        }
        let lc = omega.sqrt() / 2.0;
        let lambda = match phase {
            DickePhase::Normal => lc * rng.gen_range(0.05..0.95),
            DickePhase::Superradiant => lc * rng.gen_range(1.05..2.0),
        };
        out.push(DickeParams { omega0: 1.0, omega, lambda });
    }
    out
}

const PHASES: [DickePhase; 2] = [DickePhase::Normal, DickePhase::Superradiant];

fn anomaly(c: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measure>> {
    let mut errs = Vec::new();
    for phase in PHASES {
        for p in dicke_points(rng, phase, 100) {
            let cl = classical_metric(&p, phase, &ActionAssignment::default())?;
            let q = quantum_metric(&p, phase)?;
            errs.push((cl - q).max_abs_diff(&anomaly_term(&p, phase)?));
        }
    }
    Ok(vec![Measure::new("classical - quantum - anomaly", errs, c.tol.anomaly)])
}

fn resonance(c: &RunConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measure>> {
    let (mut shared, mut split) = (Vec::new(), Vec::new());
    for lambda in [0.1, 0.2, 0.3] {
        let (cl, q) = resonant_metrics(0.8, lambda, DickePhase::Normal)?;
        shared.push((cl.g12 - q.g12).abs().max((cl.g22 - q.g22).abs()));
        split.push((cl.g11 - q.g11).abs());
    }
    Ok(vec![
        Measure::new("g12, g22 shared", shared, c.tol.resonance),
        Measure::at_least("g11 split above 1e-6", split, 1e-6),
    ])
}

fn classical_oracle(c: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measure>> {
    let sign = match c.inject_fault {
        Some(Fault::RegularizationSign) => RegularizationSign::Flipped,
        None => RegularizationSign::Standard,
    };
    let cfg = OracleConfig { n_angles: c.n_angles, sign, ..Default::default() };
    let a = ActionAssignment::default();
    let mut errs = Vec::new();
    for phase in PHASES {
        for p in dicke_points(rng, phase, 10) {
            let out = classical_metric_oracle(&p, phase, &a, &cfg)?;
            errs.push(relative(&out.metric, &classical_metric(&p, phase, &a)?));
        }
    }
    Ok(vec![Measure::new("torus average vs closed form", errs, c.tol.oracle)])
}

fn fidelity(c: &RunConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measure>> {
    let spin = Spin::new(10.0)?;
    let gap = GapConfig::default();
    let mut errs = Vec::new();
    for h in [1.3, 1.5, 2.0] {
        let reference = exact_qmt(spin, h, -0.5, ExactSolver::Full, &gap)?.metric;
        let probe = fidelity_oracle(spin, ParameterPoint::new(h, -0.5)?, 1e-3, &gap)?;
        errs.push(relative(&probe, &reference));
    }
    Ok(vec![Measure::new("overlaps vs perturbative sum", errs, c.tol.fidelity)])
}

fn determinant(c: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measure>> {
    let a = ActionAssignment::default();
    let mut degenerate = Vec::new();
    for k in 0..50 {
        let h = 1.05 + 1.95 * k as f64 / 49.0;
        let q = symmetric_metrics(&LmgParams::new(h, c.gamma, 100.0)?, &a)?.1;
        degenerate.push(q.determinant().abs() / q.trace().powi(2));
    }
    let mut broken = Vec::new();
    for _ in 0..50 {
        let p = LmgParams::new(rng.gen_range(0.05..0.95), rng.gen_range(-0.9..0.9), 100.0)?;
        let expected = broken_quantum_determinant(&p)?;
        broken.push((broken_metrics(&p, &a)?.1.determinant() - expected).abs() / expected);
    }
    Ok(vec![
        Measure::new("symmetric det / tr^2", degenerate, c.tol.det_degenerate),
        Measure::new("broken det vs closed form", broken, c.tol.det),
    ])
}

fn curvature(c: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measure>> {
    let mut errs = Vec::new();
    for j in [1.0, 100.0] {
        let field = LmgThermoField { j, phase: LmgPhase::Broken };
        for _ in 0..20 {
            let (h, g) = (rng.gen_range(0.1..0.9), rng.gen_range(-0.9..0.5));
            let exact = broken_curvature(&LmgParams::new(h, g, j)?)?;
            let fd = scalar_curvature_fd_refined(&field, ParameterPoint::new(h, g)?, 1e-3)?.r;
            errs.push((fd - exact).abs() / exact.abs());
        }
    }
    Ok(vec![Measure::new("closed form vs finite differences", errs, c.tol.curvature)])
}

type Check = fn(&RunConfig, &mut ChaCha8Rng) -> Result<Vec<Measure>>;

fn check_fn(name: &str) -> Option<Check> {
    Some(match name {
        "anomaly" => anomaly,
        "resonance" => resonance,
        "classical-oracle" => classical_oracle,
        "fidelity-oracle" => fidelity,
        "determinant" => determinant,
        "curvature-closed-form" => curvature,
        _ => return None,
    })
}

/// Runs the selected checks (all when `only` is empty). Each check draws
/// from its own generator seeded from `seed`, so selection does not shift
/// the sample points.
pub fn run(c: &RunConfig) -> std::result::Result<Vec<Verdict>, String> {
    let names: Vec<&str> =
        if c.only.is_empty() { CHECKS.to_vec() } else { c.only.iter().map(String::as_str).collect() };
    names
        .into_iter()
        .map(|name| {
            let f = check_fn(name).ok_or_else(|| format!("unknown check '{name}'; known: {}", CHECKS.join(", ")))?;
            let k = CHECKS.iter().position(|&n| n == name).unwrap_or(0) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k));
            Ok(match f(c, &mut rng) {
                Ok(measures) => Verdict {
                    name: name.to_string(),
                    passed: measures.iter().all(Measure::passes),
                    measures,
                    error: None,
                },
                Err(e) => {
                    Verdict { name: name.to_string(), passed: false, measures: Vec::new(), error: Some(e.to_string()) }
                }
            })
        })
        .collect()
}
