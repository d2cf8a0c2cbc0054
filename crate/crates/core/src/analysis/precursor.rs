//! Finite-size precursors of the LMG transition.
//!
//! For each `j` the exact QMT is swept in `h` at fixed `gamma`; the peaks of
//! `g11`, `g12`, `g22` and of the scalar curvature are located and polished,
//! then fitted against `h` and against `j` to extrapolate to `j -> inf`.

use serde::{Deserialize, Serialize};

use crate::analysis::fit::{fit, power_zero, FitModel, FitResult};
use crate::analysis::peaks::{find_peaks, suppress_noise, Peak, PeakKind};
use crate::analysis::sweep::sweep;
use crate::error::{Error, Result};
use crate::geometry::{scalar_curvature_fd_refined, MetricField, ParameterPoint};
use crate::lmg::exact::{ExactQmtField, ExactSolver, GapConfig, Spin};

pub const DEFAULT_J_SET: [f64; 15] =
    [12.0, 16.0, 20.0, 24.0, 28.0, 32.0, 40.0, 50.0, 75.0, 100.0, 125.0, 175.0, 250.0, 300.0, 500.0];

/// Finite-difference step for the curvature at `h`: a fixed fraction of the
/// distance to `h = 1`, clamped. Structure near the critical point is narrow,
/// far from it a wide stencil is both accurate and cheap on round-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureStep {
    pub fraction: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for CurvatureStep {
    fn default() -> Self {
        Self { fraction: 0.01, min: 1e-4, max: 2e-3 }
    }
}

impl CurvatureStep {
    pub fn at(&self, h: f64) -> f64 {
        (self.fraction * (1.0 - h).abs()).clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub gamma: f64,
    pub j_set: Vec<f64>,
    /// `h` interval scanned for the metric peaks.
    pub metric_window: [f64; 2],
    /// `h` interval scanned for the curvature peaks.
    pub curvature_window: [f64; 2],
    pub h_step: f64,
    /// Golden-section tolerance on the peak location.
    pub refine_tol: f64,
    pub curvature_step: CurvatureStep,
    /// Neighbouring extrema of `R` closer than this in height are noise.
    pub curvature_prominence: f64,
    pub solver: ExactSolver,
    pub gap: GapConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            gamma: -0.5,
            j_set: DEFAULT_J_SET.to_vec(),
            metric_window: [0.2, 1.6],
            curvature_window: [0.2, 0.995],
            h_step: 1e-3,
            refine_tol: 1e-6,
            curvature_step: CurvatureStep::default(),
            curvature_prominence: 1e-3,
            solver: ExactSolver::Extended,
            gap: GapConfig::default(),
        }
    }
}

impl StudyConfig {
    fn field(&self, j: f64) -> Result<ExactQmtField> {
        Ok(ExactQmtField { spin: Spin::new(j)?, solver: self.solver, gap: self.gap })
    }

    fn grid(&self, window: [f64; 2]) -> Result<Vec<f64>> {
        if !(self.h_step > 0.0 && window[1] > window[0]) {
            return Err(Error::InvalidInput(format!("bad window {window:?} / step {}", self.h_step)));
        }
        let n = ((window[1] - window[0]) / self.h_step).round() as usize;
        Ok((0..=n).map(|k| window[0] + k as f64 * self.h_step).collect())
    }

    /// Exact scalar curvature at `(h, gamma)` for pseudospin `j`.
    pub fn curvature(&self, field: &ExactQmtField, h: f64) -> Option<f64> {
        let p = ParameterPoint::new(h, self.gamma).ok()?;
        scalar_curvature_fd_refined(field, p, self.curvature_step.at(h)).ok().map(|c| c.r)
    }
}

/// Metric peaks for one `j`.
///
/// `g11`: its maximum. `g12`: the negative minimum, then the positive maximum
/// to its right. `g22`: the dip, flanked by the maxima on either side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPeaks {
    pub j: f64,
    pub g11: [Peak; 1],
    pub g12: [Peak; 2],
    pub g22: [Peak; 3],
}

/// Curvature peaks for one `j`: the lowest minimum of the window, then the
/// first maximum after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvaturePeaks {
    pub j: f64,
    pub peaks: [Peak; 2],
}

fn missing(what: &str, j: f64) -> Error {
    Error::MissingPeak(format!("{what} at j = {j}"))
}

fn extreme(peaks: &[Peak], kind: PeakKind) -> Option<usize> {
    let key = |p: &Peak| if kind == PeakKind::Maximum { -p.height } else { p.height };
    peaks
        .iter()
        .enumerate()
        .filter(|(_, p)| p.kind == kind)
        .min_by(|a, b| key(a.1).total_cmp(&key(b.1)))
        .map(|(i, _)| i)
}

fn next_of(peaks: &[Peak], from: usize, kind: PeakKind) -> Option<usize> {
    (from + 1..peaks.len()).find(|&i| peaks[i].kind == kind)
}

fn prev_of(peaks: &[Peak], from: usize, kind: PeakKind) -> Option<usize> {
    (0..from).rev().find(|&i| peaks[i].kind == kind)
}

/// Metric-component peaks for one `j`.
pub fn metric_peaks(j: f64, cfg: &StudyConfig) -> Result<MetricPeaks> {
    use PeakKind::{Maximum, Minimum};
    let field = cfg.field(j)?;
    let grid = cfg.grid(cfg.metric_window)?;
    let eval = |h: f64| ParameterPoint::new(h, cfg.gamma).ok().and_then(|p| field.metric(p).ok());
    let s = sweep("h", &grid, &["g11", "g12", "g22"], |h| match eval(h) {
        Some(m) => vec![Some(m.g11), Some(m.g12), Some(m.g22)],
        None => vec![None; 3],
    })?;
    let peaks_of = |name: &str, pick: fn(&crate::geometry::MetricTensor2D) -> f64| {
        let model = |h: f64| eval(h).map(|m| pick(&m));
        find_peaks(&s.grid, s.column(name).unwrap_or_default(), Some(&model), cfg.refine_tol)
    };
    let p11 = peaks_of("g11", |m| m.g11);
    let p12 = peaks_of("g12", |m| m.g12);
    let p22 = peaks_of("g22", |m| m.g22);

    let g11 = extreme(&p11, Maximum).map(|i| p11[i]).ok_or_else(|| missing("g11 maximum", j))?;
    let i = extreme(&p12, Minimum).ok_or_else(|| missing("g12 minimum", j))?;
    let k = next_of(&p12, i, Maximum).ok_or_else(|| missing("g12 maximum", j))?;
    let d = extreme(&p22, Minimum).ok_or_else(|| missing("g22 dip", j))?;
    let a = prev_of(&p22, d, Maximum).ok_or_else(|| missing("g22 first maximum", j))?;
    let b = next_of(&p22, d, Maximum).ok_or_else(|| missing("g22 last maximum", j))?;
    Ok(MetricPeaks { j, g11: [g11], g12: [p12[i], p12[k]], g22: [p22[a], p22[d], p22[b]] })
}

/// Curvature peaks (minimum, maximum) for one `j`.
pub fn curvature_peaks(j: f64, cfg: &StudyConfig) -> Result<CurvaturePeaks> {
    let field = cfg.field(j)?;
    let grid = cfg.grid(cfg.curvature_window)?;
    let model = |h: f64| cfg.curvature(&field, h);
    let s = sweep("h", &grid, &["R"], |h| vec![model(h)])?;
    let raw = find_peaks(&s.grid, s.column("R").unwrap_or_default(), Some(&model), cfg.refine_tol);
    let peaks = suppress_noise(raw, cfg.curvature_prominence);
    let i = extreme(&peaks, PeakKind::Minimum).ok_or_else(|| missing("R minimum", j))?;
    let k = next_of(&peaks, i, PeakKind::Maximum).ok_or_else(|| missing("R maximum", j))?;
    Ok(CurvaturePeaks { j, peaks: [peaks[i], peaks[k]] })
}

/// One row of the log-log table: `ln |height| = m ln j + n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub peak: String,
    pub m: f64,
    pub n: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: FitResult,
}

/// `(label, selector)` for every tracked metric peak.
type Selector = fn(&MetricPeaks) -> Peak;

fn metric_series() -> [(&'static str, Selector); 6] {
    [
        ("g11", |p| p.g11[0]),
        ("g12 peak 1", |p| p.g12[0]),
        ("g12 peak 2", |p| p.g12[1]),
        ("g22 peak 1", |p| p.g22[0]),
        ("g22 peak 2", |p| p.g22[1]),
        ("g22 peak 3", |p| p.g22[2]),
    ]
}

/// LOGLIN fits of `|height|` against `j` for every metric peak.
pub fn peak_table(per_j: &[MetricPeaks]) -> Result<Vec<TableRow>> {
    let js: Vec<f64> = per_j.iter().map(|p| p.j).collect();
    metric_series()
        .iter()
        .map(|(name, sel)| {
            let ys: Vec<f64> = per_j.iter().map(|p| sel(p).height.abs()).collect();
            let f = fit(FitModel::LogLin, &js, &ys)?;
            Ok(TableRow { peak: name.to_string(), m: f.coefficients[0], n: f.coefficients[1], residual: f.residual })
        })
        .collect()
}

fn location_fit(name: &str, model: FitModel, peaks: impl Iterator<Item = Peak> + Clone) -> Result<NamedFit> {
    let hs: Vec<f64> = peaks.clone().map(|p| p.location).collect();
    let ys: Vec<f64> = peaks.map(|p| p.height).collect();
    Ok(NamedFit { name: name.to_string(), fit: fit(model, &hs, &ys)? })
}

/// Heights against locations: `RAT2F` for `g11`, `RAT1F` for `g12`,
/// `POLY2` for `g22`.
pub fn metric_location_fits(per_j: &[MetricPeaks]) -> Result<Vec<NamedFit>> {
    let models = [FitModel::Rat2F, FitModel::Rat1F, FitModel::Rat1F, FitModel::Poly2, FitModel::Poly2, FitModel::Poly2];
    metric_series()
        .into_iter()
        .zip(models)
        .map(|((name, sel), model)| location_fit(name, model, per_j.iter().map(sel)))
        .collect()
}

/// `RAT1` fits of the curvature peak heights against their locations.
pub fn curvature_location_fits(per_j: &[CurvaturePeaks]) -> Result<[NamedFit; 2]> {
    let f =
        |k: usize| location_fit(&format!("R peak {}", k + 1), FitModel::Rat1, per_j.iter().map(move |p| p.peaks[k]));
    Ok([f(0)?, f(1)?])
}

/// `POWER` fits of the two curvature peak heights against `j`.
pub fn curvature_power_fits(per_j: &[CurvaturePeaks]) -> Result<[FitResult; 2]> {
    let js: Vec<f64> = per_j.iter().map(|p| p.j).collect();
    let f = |k: usize| fit(FitModel::Power, &js, &per_j.iter().map(|p| p.peaks[k].height).collect::<Vec<_>>());
    Ok([f(0)?, f(1)?])
}

/// `j` where the `POWER` fit of the curvature maximum crosses zero.
///
/// The data must change sign, and the root must fall inside the sampled
/// `j` range.
pub fn curvature_crossing(js: &[f64], heights: &[f64]) -> Result<f64> {
    let changes = heights.windows(2).any(|w| w[0] * w[1] <= 0.0);
    if !changes {
        return Err(Error::NoBracket);
    }
    let f = fit(FitModel::Power, js, heights)?;
    let lo = js.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = js.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    power_zero(&f).filter(|j| (lo..=hi).contains(j)).ok_or(Error::NoBracket)
}

/// `dR/dh` at `h = 1` by central differences, halving the offset from
/// `delta0` until two successive estimates agree to `rel_tol`.
pub fn curvature_slope(j: f64, cfg: &StudyConfig, delta0: f64, rel_tol: f64) -> Result<f64> {
    let field = cfg.field(j)?;
    let r = |h: f64| {
        cfg.curvature(&field, h).ok_or_else(|| Error::InvalidInput(format!("curvature undefined at h = {h}, j = {j}")))
    };
    let central = |d: f64| -> Result<f64> { Ok((r(1.0 + d)? - r(1.0 - d)?) / (2.0 * d)) };
    let mut d = delta0;
    let mut prev = central(d)?;
    for _ in 0..12 {
        d *= 0.5;
        let next = central(d)?;
        if (next - prev).abs() <= rel_tol * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::InvalidInput(format!("dR/dh at h = 1 did not settle for j = {j}")))
}

/// `LIN` fit of `dR/dh|_{h=1}` against `j`. Returns the fit and the slopes.
pub fn slope_at_critical(j_set: &[f64], cfg: &StudyConfig) -> Result<(FitResult, Vec<f64>)> {
    if j_set.len() < FitModel::Lin.arity() + 1 {
        return Err(Error::SingularFit(format!("slope fit needs at least 3 values of j, got {}", j_set.len())));
    }
    let slopes = j_set.iter().map(|&j| curvature_slope(j, cfg, 0.04, 0.01)).collect::<Result<Vec<_>>>()?;
    Ok((fit(FitModel::Lin, j_set, &slopes)?, slopes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub gamma: f64,
    pub per_j: Vec<CurvaturePeaks>,
    pub location_fits: [NamedFit; 2],
    pub power_fits: [FitResult; 2],
    /// Peak heights extrapolated to `h = 1` through the location fits.
    pub at_critical: [f64; 2],
    /// Where the `POWER` fit of the maximum crosses zero, when it does.
    pub crossing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub gamma: f64,
    pub per_j: Vec<MetricPeaks>,
    pub table: Vec<TableRow>,
    /// `m` of the two `g12` peaks added.
    pub g12_m_sum: f64,
    pub location_fits: Vec<NamedFit>,
    pub curvature: CurvatureReport,
}

fn for_each_j<T>(cfg: &StudyConfig, f: impl Fn(f64, &StudyConfig) -> Result<T>) -> Result<Vec<T>> {
    // every fit below has at most three coefficients; refuse before the expensive sweeps
    if cfg.j_set.len() < FitModel::Power.arity() {
        return Err(Error::SingularFit(format!("need at least 3 values of j, got {}", cfg.j_set.len())));
    }
    cfg.j_set
        .iter()
        .map(|&j| {
            log::info!("peaks for j = {j}");
            f(j, cfg)
        })
        .collect()
}

/// Fits and extrapolations of the curvature peaks.
pub fn analyse_curvature(gamma: f64, per_j: Vec<CurvaturePeaks>) -> Result<CurvatureReport> {
    let location_fits = curvature_location_fits(&per_j)?;
    let at_critical = [location_fits[0].fit.eval(1.0), location_fits[1].fit.eval(1.0)];
    let power_fits = curvature_power_fits(&per_j)?;
    let js: Vec<f64> = per_j.iter().map(|p| p.j).collect();
    let maxima: Vec<f64> = per_j.iter().map(|p| p.peaks[1].height).collect();
    let crossing = curvature_crossing(&js, &maxima).ok();
    Ok(CurvatureReport { gamma, per_j, location_fits, power_fits, at_critical, crossing })
}

/// Fits of the metric peaks, on top of an existing curvature report.
pub fn analyse(gamma: f64, per_j: Vec<MetricPeaks>, curvature: CurvatureReport) -> Result<StudyReport> {
    let table = peak_table(&per_j)?;
    let g12_m_sum = table[1].m + table[2].m;
    let location_fits = metric_location_fits(&per_j)?;
    Ok(StudyReport { gamma, per_j, table, g12_m_sum, location_fits, curvature })
}

pub fn run_curvature_study(cfg: &StudyConfig) -> Result<CurvatureReport> {
    analyse_curvature(cfg.gamma, for_each_j(cfg, curvature_peaks)?)
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let metric = for_each_j(cfg, metric_peaks)?;
    analyse(cfg.gamma, metric, run_curvature_study(cfg)?)
}
