//! Classical Dicke metric by explicit torus averaging.
//!
//! The quadratic Hamiltonian `(p^2 + q^T K q) / 2` is diagonalised numerically,
//! the deformation functions `O_i = q^T (dK/dx_i) q / 2` are propagated along
//! the normal-mode flow, and the connected correlator
//! `<O_i(T) O_j(0)> - <O_i><O_j>` is averaged over a uniform grid of initial
//! angles. The result is projected onto the harmonics the flow can produce,
//! and every `cos(Omega T)` term with coefficient `c` contributes `c / Omega^2`
//! to `g_ij`. This is the per-exponential regularisation
//! `int dt1 int dt2 exp(+-i Omega T) = -1/Omega^2`, multiplied by the overall
//! minus sign of the metric definition.
//!
//! Nothing here uses the closed-form frequencies, angle, or their gradients.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dicke::{ActionAssignment, DickeParams, DickePhase};
use crate::error::{Error, Result};
use crate::geometry::MetricTensor2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusSample {
    pub phi10: f64,
    pub phi20: f64,
    pub i1: f64,
    pub i2: f64,
}

/// Harmonics of a product of two quadratic observables under a two-mode flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Harmonic {
    Dc,
    TwiceFirst,
    TwiceSecond,
    Sum,
    Difference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSeries {
    pub harmonics: Vec<Harmonic>,
    pub frequencies: Vec<f64>,
    pub cos_coeffs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
    /// RMS fit residual relative to the RMS of the sampled correlator.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizationSign {
    #[default]
    Standard,
    /// Deliberately wrong sign, for mutation checks of the validation harness.
    Flipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_angles: usize,
    /// Minimum number of time samples; raised automatically for fast harmonics.
    pub n_times: usize,
    pub max_condition: f64,
    pub dc_tolerance: f64,
    pub sign: RegularizationSign,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { n_angles: 64, n_times: 32, max_condition: 1e8, dc_tolerance: 1e-8, sign: RegularizationSign::Standard }
    }
}

/// Normal modes of the potential matrix: frequencies ascending and the
/// columns of the rotation `q = U Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modes {
    pub eps: [f64; 2],
    pub rotation: Matrix2<f64>,
}

/// Potential matrix `K` and its derivatives `dK/domega`, `dK/dlambda`.
fn potential(p: &DickeParams, phase: DickePhase) -> [Matrix2<f64>; 3] {
    let (w0, w, l) = (p.omega0, p.omega, p.lambda);
    match phase {
        DickePhase::Normal => {
            let c = 2.0 * l * (w * w0).sqrt();
            [
                Matrix2::new(w * w, c, c, w0 * w0),
                Matrix2::new(2.0 * w, l * (w0 / w).sqrt(), l * (w0 / w).sqrt(), 0.0),
                Matrix2::new(0.0, 2.0 * (w * w0).sqrt(), 2.0 * (w * w0).sqrt(), 0.0),
            ]
        }
        DickePhase::Superradiant => {
            let l3 = l * l * l;
            [
                Matrix2::new(w * w, w * w0, w * w0, 16.0 * l3 * l / (w * w)),
                Matrix2::new(2.0 * w, w0, w0, -32.0 * l3 * l / (w * w * w)),
                Matrix2::new(0.0, 0.0, 0.0, 64.0 * l3 / (w * w)),
            ]
        }
    }
}

pub fn normal_modes(k: &Matrix2<f64>) -> Result<Modes> {
    let eig = SymmetricEigen::new(*k);
    let (a, b) = if eig.eigenvalues[0] <= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let (e1, e2) = (eig.eigenvalues[a], eig.eigenvalues[b]);
    if !(e1 > 0.0) {
        return Err(Error::InvalidInput(format!("potential not positive definite: eigenvalues {e1}, {e2}")));
    }
    let rotation =
        Matrix2::from_columns(&[eig.eigenvectors.column(a).into_owned(), eig.eigenvectors.column(b).into_owned()]);
    Ok(Modes { eps: [e1.sqrt(), e2.sqrt()], rotation })
}

fn check_phase(p: &DickeParams, phase: DickePhase) -> Result<()> {
    let actual = p.phase()?;
    if actual != phase {
        return Err(Error::WrongPhase(format!("lambda = {} is in the {:?} phase", p.lambda, actual)));
    }
    Ok(())
}

/// Deformation functions `O_i` on the torus at time `t`.
struct Flow {
    modes: Modes,
    /// `dK/dx_i` rotated into normal coordinates, halved: `O_i = Q^T D_i Q`.
    d: [Matrix2<f64>; 2],
    amp: [f64; 2],
}

impl Flow {
    fn new(p: &DickeParams, phase: DickePhase, actions: [f64; 2]) -> Result<Self> {
        let [k, dk1, dk2] = potential(p, phase);
        let modes = normal_modes(&k)?;
        let u = modes.rotation;
        let rot = |m: Matrix2<f64>| u.transpose() * m * u * 0.5;
        let amp = [0, 1].map(|a| (2.0 * actions[a] / modes.eps[a]).sqrt());
        Ok(Self { modes, d: [rot(dk1), rot(dk2)], amp })
    }

    fn observables(&self, phi: [f64; 2], t: f64) -> [f64; 2] {
        let q = [0, 1].map(|a| self.amp[a] * (phi[a] + self.modes.eps[a] * t).sin());
        self.d.map(|d| d[(0, 0)] * q[0] * q[0] + 2.0 * d[(0, 1)] * q[0] * q[1] + d[(1, 1)] * q[1] * q[1])
    }

    /// Uniform-grid averages of `O_i(0)`, and of `O_i(t) O_j(0)` for each `t`.
    fn averages(&self, times: &[f64], n: usize) -> ([f64; 2], Vec<[[f64; 2]; 2]>) {
        let step = std::f64::consts::TAU / n as f64;
        // per-row partial sums, reduced in row order for determinism
        let rows: Vec<([f64; 2], Vec<[[f64; 2]; 2]>)> = (0..n)
            .into_par_iter()
            .map(|r| {
                let mut mean = [0.0; 2];
                let mut corr = vec![[[0.0; 2]; 2]; times.len()];
                for c in 0..n {
                    let phi = [r as f64 * step, c as f64 * step];
                    let o0 = self.observables(phi, 0.0);
                    mean[0] += o0[0];
                    mean[1] += o0[1];
                    for (slot, &t) in corr.iter_mut().zip(times) {
                        let ot = self.observables(phi, t);
                        for i in 0..2 {
                            for j in 0..2 {
                                slot[i][j] += ot[i] * o0[j];
                            }
                        }
                    }
                }
                (mean, corr)
            })
            .collect();
        let norm = 1.0 / (n * n) as f64;
        let mut mean = [0.0; 2];
        let mut corr = vec![[[0.0; 2]; 2]; times.len()];
        for (m, c) in rows {
            mean[0] += m[0];
            mean[1] += m[1];
            for (acc, v) in corr.iter_mut().zip(c) {
                for i in 0..2 {
                    for j in 0..2 {
                        acc[i][j] += v[i][j];
                    }
                }
            }
        }
        mean.iter_mut().for_each(|x| *x *= norm);
        corr.iter_mut().flatten().flatten().for_each(|x| *x *= norm);
        (mean, corr)
    }

    fn harmonics(&self) -> [(Harmonic, f64); 4] {
        let [e1, e2] = self.modes.eps;
        [
            (Harmonic::TwiceFirst, 2.0 * e1),
            (Harmonic::TwiceSecond, 2.0 * e2),
            (Harmonic::Sum, e1 + e2),
            (Harmonic::Difference, (e2 - e1).abs()),
        ]
    }

    /// Chebyshev points on `[0, pi / eps1]`, dense enough for the fastest harmonic.
    fn default_times(&self, min_count: usize) -> Vec<f64> {
        let span = std::f64::consts::PI / self.modes.eps[0];
        let fastest = 2.0 * self.modes.eps[1];
        let per_period = 6.0;
        let needed = (fastest * span / std::f64::consts::TAU * per_period).ceil() as usize;
        let n = min_count.max(needed).max(18).min(4000);
        (0..n)
            .map(|k| 0.5 * span * (1.0 - ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos()))
            .collect()
    }
}

fn project(harm: &[(Harmonic, f64); 4], times: &[f64], values: &[f64], max_condition: f64) -> Result<CorrelatorSeries> {
    let ncols = 1 + 2 * harm.len();
    let a = DMatrix::from_fn(times.len(), ncols, |r, c| {
        let t = times[r];
        match c {
            0 => 1.0,
            c if c % 2 == 1 => (harm[(c - 1) / 2].1 * t).cos(),
            c => (harm[(c - 2) / 2].1 * t).sin(),
        }
    });
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin;
    if !(cond <= max_condition) {
        return Err(Error::IllConditionedProjection(cond));
    }
    let b = DVector::from_column_slice(values);
    let x = svd.solve(&b, 0.0).map_err(|e| Error::SingularFit(e.to_string()))?;
    let resid = (&a * &x - &b).norm();
    let scale = b.norm().max(f64::MIN_POSITIVE);

    let mut harmonics = vec![Harmonic::Dc];
    let mut frequencies = vec![0.0];
    let mut cos_coeffs = vec![x[0]];
    let mut sin_coeffs = vec![0.0];
    for (k, &(h, w)) in harm.iter().enumerate() {
        harmonics.push(h);
        frequencies.push(w);
        cos_coeffs.push(x[1 + 2 * k]);
        sin_coeffs.push(x[2 + 2 * k]);
    }
    Ok(CorrelatorSeries { harmonics, frequencies, cos_coeffs, sin_coeffs, relative_residual: resid / scale })
}

/// Torus-averaged connected correlator `<O_i(T) O_j(0)>_c`, projected onto
/// its harmonics. Indices are 0-based; the torus carries the literal actions
/// `a.i1`, `a.i2`.
pub fn connected_correlator(
    p: &DickeParams,
    phase: DickePhase,
    a: &ActionAssignment,
    i: usize,
    j: usize,
    t_samples: Option<&[f64]>,
    cfg: &OracleConfig,
) -> Result<CorrelatorSeries> {
    if i > 1 || j > 1 {
        return Err(Error::InvalidInput(format!("component ({i}, {j}) out of range")));
    }
    Ok(correlators(p, phase, a, t_samples, cfg)?[i][j].clone())
}

fn correlators(
    p: &DickeParams,
    phase: DickePhase,
    a: &ActionAssignment,
    t_samples: Option<&[f64]>,
    cfg: &OracleConfig,
) -> Result<[[CorrelatorSeries; 2]; 2]> {
    check_phase(p, phase)?;
    if cfg.n_angles < 8 {
        return Err(Error::InvalidInput(format!("n_angles = {} is too small", cfg.n_angles)));
    }
    let flow = Flow::new(p, phase, [a.i1, a.i2])?;
    let times = match t_samples {
        Some(t) => t.to_vec(),
        None => flow.default_times(cfg.n_times),
    };
    if times.len() < 18 {
        return Err(Error::InvalidInput(format!("{} time samples; need at least 18", times.len())));
    }
    let (mean, corr) = flow.averages(&times, cfg.n_angles);
    let harm = flow.harmonics();
    let series = |i: usize, j: usize| -> Result<CorrelatorSeries> {
        let v: Vec<f64> = corr.iter().map(|c| c[i][j] - mean[i] * mean[j]).collect();
        project(&harm, &times, &v, cfg.max_condition)
    };
    Ok([[series(0, 0)?, series(0, 1)?], [series(1, 0)?, series(1, 1)?]])
}

/// Applies the harmonic regularisation to one series.
///
/// The `2 eps_a` harmonics are homogeneous of degree two in `I_a`, so they
/// are rescaled from the literal `I_a^2` used on the torus to the assigned
/// `I_a^2`, which may differ.
pub fn regularized_component(s: &CorrelatorSeries, a: &ActionAssignment, cfg: &OracleConfig) -> Result<f64> {
    let scale = s.cos_coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);
    let mut g = 0.0;
    for ((h, w), c) in s.harmonics.iter().zip(&s.frequencies).zip(&s.cos_coeffs) {
        let weight = match h {
            Harmonic::Dc => {
                if c.abs() > cfg.dc_tolerance * scale {
                    return Err(Error::DcLeakage(*c));
                }
                continue;
            }
            Harmonic::TwiceFirst => a.i1_sq / (a.i1 * a.i1),
            Harmonic::TwiceSecond => a.i2_sq / (a.i2 * a.i2),
            Harmonic::Sum | Harmonic::Difference => 1.0,
        };
        g += weight * c / (w * w);
    }
    Ok(match cfg.sign {
        RegularizationSign::Standard => g,
        RegularizationSign::Flipped => -g,
    })
}

/// Assembles `g_ij` from the four series; `g12` averages the `(1,2)` and
/// `(2,1)` pipelines, whose difference is returned alongside.
pub fn regularized_metric(
    series: &[[CorrelatorSeries; 2]; 2],
    a: &ActionAssignment,
    cfg: &OracleConfig,
) -> Result<(MetricTensor2D, f64)> {
    let g11 = regularized_component(&series[0][0], a, cfg)?;
    let g12 = regularized_component(&series[0][1], a, cfg)?;
    let g21 = regularized_component(&series[1][0], a, cfg)?;
    let g22 = regularized_component(&series[1][1], a, cfg)?;
    Ok((MetricTensor2D::new(g11, 0.5 * (g12 + g21), g22), (g12 - g21).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub metric: MetricTensor2D,
    pub asymmetry: f64,
    pub max_sin_coeff: f64,
    pub max_relative_residual: f64,
}

/// Full pipeline: torus average, projection, regularisation.
pub fn classical_metric_oracle(
    p: &DickeParams,
    phase: DickePhase,
    a: &ActionAssignment,
    cfg: &OracleConfig,
) -> Result<OracleOutput> {
    let series = correlators(p, phase, a, None, cfg)?;
    let (metric, asymmetry) = regularized_metric(&series, a, cfg)?;
    let all = series.iter().flatten();
    let max_sin_coeff = all.clone().flat_map(|s| s.sin_coeffs.iter()).fold(0.0f64, |m, c| m.max(c.abs()));
    let max_relative_residual = all.map(|s| s.relative_residual).fold(0.0f64, f64::max);
    Ok(OracleOutput { metric, asymmetry, max_sin_coeff, max_relative_residual })
}
