//! Dicke model in the thermodynamic limit.
//!
//! The truncated Holstein-Primakoff Hamiltonians of both phases are pairs of
//! coupled oscillators. After rotating to normal coordinates by an angle
//! `alpha`, the classical and quantum metrics over `x = (omega, lambda)`
//! (with `omega0` held fixed) depend only on the two normal frequencies,
//! the angle, and their gradients:
//!
//! ```text
//! g_ij  = de1 de1 / (8 e1^2) I1^2 + de2 de2 / (8 e2^2) I2^2 + da da (e1/e2 + e2/e1) I1 I2
//! g0_ij = de1 de1 / (8 e1^2)      + de2 de2 / (8 e2^2)      + da da [(e1/e2 + e2/e1)/4 - 1/2]
//! ```
//!
//! so that `g0 = g - (1/2) da da` under `I1 = I2 = 1/2`, `I1^2 = I2^2 = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::jet::Scalar;
use crate::geometry::{MetricDerivatives, MetricField, MetricTensor2D, ParameterPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DickeParams {
    pub omega0: f64,
    pub omega: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DickePhase {
    Normal,
    Superradiant,
}

impl DickeParams {
    pub fn new(omega0: f64, omega: f64, lambda: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega > 0.0 && lambda >= 0.0)
            || !(omega0.is_finite() && omega.is_finite() && lambda.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "Dicke parameters need omega0 > 0, omega > 0, lambda >= 0; got ({omega0}, {omega}, {lambda})"
            )));
        }
        Ok(Self { omega0, omega, lambda })
    }

    pub fn critical_coupling(&self) -> f64 {
        critical_coupling(self)
    }

    /// The phase the coupling lies in; `CriticalPoint` exactly at `lambda_c`.
    pub fn phase(&self) -> Result<DickePhase> {
        let lc = self.critical_coupling();
        if self.lambda < lc {
            Ok(DickePhase::Normal)
        } else if self.lambda > lc {
            Ok(DickePhase::Superradiant)
        } else {
            Err(Error::CriticalPoint(format!("lambda = lambda_c = {lc}")))
        }
    }
}

/// `lambda_c = sqrt(omega omega0) / 2`.
pub fn critical_coupling(p: &DickeParams) -> f64 {
    (p.omega * p.omega0).sqrt() / 2.0
}

/// Values assigned to the action variables in the classical metric.
///
/// The squares are independent of the first powers: the classical and quantum
/// metrics agree under `I = 1/2` together with `I^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionAssignment {
    pub i1: f64,
    pub i2: f64,
    pub i1_sq: f64,
    pub i2_sq: f64,
}

impl Default for ActionAssignment {
    fn default() -> Self {
        Self { i1: 0.5, i2: 0.5, i1_sq: 1.0, i2_sq: 1.0 }
    }
}

impl ActionAssignment {
    /// Consistent powers of the given actions, `I^2 = I * I`.
    pub fn literal(i1: f64, i2: f64) -> Self {
        Self { i1, i2, i1_sq: i1 * i1, i2_sq: i2 * i2 }
    }
}

/// Normal frequencies, mixing angle, and their gradients along `(omega, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalModeData {
    pub eps1: f64,
    pub eps2: f64,
    pub alpha: f64,
    pub grad_eps1: [f64; 2],
    pub grad_eps2: [f64; 2],
    pub grad_alpha: [f64; 2],
}

/// A quantity with its gradient along `(omega, lambda)`.
#[derive(Clone, Copy)]
struct Grad<T> {
    v: T,
    d: [T; 2],
}

impl<T: Scalar> Grad<T> {
    fn new(v: T, d0: T, d1: T) -> Self {
        Self { v, d: [d0, d1] }
    }
}

/// Closed-form ingredients of one phase: trace and determinant of the
/// squared-frequency matrix, and numerator/denominator of `tan(2 alpha)`.
///
/// Written over [`Scalar`] so that, evaluated on jets, the metric assembled
/// from them comes with exact first and second derivatives.
struct ModeInputs<T> {
    trace: Grad<T>,
    det: Grad<T>,
    num: Grad<T>,
    den: Grad<T>,
}

/// `omega0` is passed separately so that it may track `omega` at resonance;
/// the gradients are always partials at fixed `omega0`.
fn normal_inputs<T: Scalar>(w0: T, w: T, l: T) -> ModeInputs<T> {
    let c = T::cst;
    let sq = (w * w0).sqrt();
    ModeInputs {
        trace: Grad::new(w * w + w0 * w0, c(2.0) * w, c(0.0)),
        det: Grad::new(
            w * w0 * (w * w0 - c(4.0) * l * l),
            c(2.0) * w * w0 * w0 - c(4.0) * l * l * w0,
            c(-8.0) * l * w * w0,
        ),
        num: Grad::new(c(4.0) * l * sq, c(2.0) * l * (w0 / w).sqrt(), c(4.0) * sq),
        den: Grad::new(w0 * w0 - w * w, c(-2.0) * w, c(0.0)),
    }
}

fn superradiant_inputs<T: Scalar>(w0: T, w: T, l: T) -> ModeInputs<T> {
    let c = T::cst;
    let l2 = l * l;
    let l4 = l2 * l2;
    ModeInputs {
        trace: Grad::new(
            c(16.0) * l4 / (w * w) + w * w,
            c(-32.0) * l4 / w.powi(3) + c(2.0) * w,
            c(64.0) * l2 * l / (w * w),
        ),
        det: Grad::new(c(16.0) * l4 - w * w * w0 * w0, c(-2.0) * w * w0 * w0, c(64.0) * l2 * l),
        num: Grad::new(c(2.0) * w.powi(3) * w0, c(6.0) * w * w * w0, c(0.0)),
        den: Grad::new(c(16.0) * l4 - w.powi(4), c(-4.0) * w.powi(3), c(64.0) * l2 * l),
    }
}

fn inputs<T: Scalar>(phase: DickePhase, w0: T, w: T, l: T) -> ModeInputs<T> {
    match phase {
        DickePhase::Normal => normal_inputs(w0, w, l),
        DickePhase::Superradiant => superradiant_inputs(w0, w, l),
    }
}

/// Frequencies and gradients; the angle itself never enters the metrics.
struct Modes<T> {
    eps1: T,
    eps2: T,
    grad_eps1: [T; 2],
    grad_eps2: [T; 2],
    grad_alpha: [T; 2],
}

fn modes<T: Scalar>(m: &ModeInputs<T>) -> Modes<T> {
    let (t, det) = (&m.trace, &m.det);
    let c = T::cst;
    // e2^2 = (T + S)/2 with S^2 = T^2 - 4 det; e1^2 = det / e2^2 avoids
    // cancellation as e1 -> 0.
    let disc = t.v * t.v - c(4.0) * det.v;
    let s = if disc.value() > 0.0 { disc.sqrt() } else { c(0.0) };
    let ds = [0, 1].map(|k| (t.v * t.d[k] - c(2.0) * det.d[k]) / s);
    let e2sq = c(0.5) * (t.v + s);
    let de2sq = [0, 1].map(|k| c(0.5) * (t.d[k] + ds[k]));
    let e1sq = det.v / e2sq;
    let de1sq = [0, 1].map(|k| (det.d[k] - e1sq * de2sq[k]) / e2sq);
    let eps1 = e1sq.sqrt();
    let eps2 = e2sq.sqrt();

    let (n, d) = (&m.num, &m.den);
    let r2 = n.v * n.v + d.v * d.v;
    Modes {
        eps1,
        eps2,
        grad_eps1: de1sq.map(|x| x / (c(2.0) * eps1)),
        grad_eps2: de2sq.map(|x| x / (c(2.0) * eps2)),
        grad_alpha: [0, 1].map(|k| c(0.5) * (d.v * n.d[k] - n.v * d.d[k]) / r2),
    }
}

fn modes_from_inputs(m: &ModeInputs<f64>) -> NormalModeData {
    let r = modes(m);
    NormalModeData {
        eps1: r.eps1,
        eps2: r.eps2,
        alpha: 0.5 * m.num.v.atan2(m.den.v),
        grad_eps1: r.grad_eps1,
        grad_eps2: r.grad_eps2,
        grad_alpha: r.grad_alpha,
    }
}

/// Metric components `[g11, g12, g22]` from the modes, weighting the three
/// terms by `w1`, `w2` and `w_alpha`.
fn assemble_components<T: Scalar>(m: &Modes<T>, kind: &MetricKind) -> [T; 3] {
    let c = T::cst;
    let ratio = m.eps1 / m.eps2 + m.eps2 / m.eps1;
    let (w1, w2, wa) = match kind {
        MetricKind::Classical(a) => (c(a.i1_sq), c(a.i2_sq), ratio * c(a.i1 * a.i2)),
        MetricKind::Quantum => (c(1.0), c(1.0), c(0.25) * ratio - c(0.5)),
    };
    let k1 = w1 / (c(8.0) * m.eps1 * m.eps1);
    let k2 = w2 / (c(8.0) * m.eps2 * m.eps2);
    let term = |a: usize, b: usize| {
        k1 * m.grad_eps1[a] * m.grad_eps1[b]
            + k2 * m.grad_eps2[a] * m.grad_eps2[b]
            + wa * m.grad_alpha[a] * m.grad_alpha[b]
    };
    [term(0, 0), term(0, 1), term(1, 1)]
}

fn check_phase(p: &DickeParams, phase: DickePhase) -> Result<()> {
    let actual = p.phase()?;
    if actual != phase {
        return Err(Error::WrongPhase(format!(
            "lambda = {} with lambda_c = {} is {:?}, not {:?}",
            p.lambda,
            p.critical_coupling(),
            actual,
            phase
        )));
    }
    Ok(())
}

/// Normal-mode data without the resonance guard; regular at `omega = omega0`.
fn modes_unchecked(p: &DickeParams, phase: DickePhase) -> Result<NormalModeData> {
    check_phase(p, phase)?;
    Ok(modes_from_inputs(&inputs(phase, p.omega0, p.omega, p.lambda)))
}

pub fn normal_mode_data(p: &DickeParams, phase: DickePhase) -> Result<NormalModeData> {
    check_phase(p, phase)?;
    if phase == DickePhase::Normal && p.omega == p.omega0 {
        return Err(Error::AngleSingular);
    }
    modes_unchecked(p, phase)
}

fn outer(a: [f64; 2]) -> MetricTensor2D {
    MetricTensor2D::new(a[0] * a[0], a[0] * a[1], a[1] * a[1])
}

fn from_data(m: &NormalModeData) -> Modes<f64> {
    Modes { eps1: m.eps1, eps2: m.eps2, grad_eps1: m.grad_eps1, grad_eps2: m.grad_eps2, grad_alpha: m.grad_alpha }
}

fn tensor(c: [f64; 3]) -> MetricTensor2D {
    MetricTensor2D::new(c[0], c[1], c[2])
}

fn classical_from_modes(m: &NormalModeData, a: &ActionAssignment) -> MetricTensor2D {
    tensor(assemble_components(&from_data(m), &MetricKind::Classical(*a)))
}

fn quantum_from_modes(m: &NormalModeData) -> MetricTensor2D {
    tensor(assemble_components(&from_data(m), &MetricKind::Quantum))
}

pub fn classical_metric(p: &DickeParams, phase: DickePhase, a: &ActionAssignment) -> Result<MetricTensor2D> {
    Ok(classical_from_modes(&normal_mode_data(p, phase)?, a))
}

pub fn quantum_metric(p: &DickeParams, phase: DickePhase) -> Result<MetricTensor2D> {
    Ok(quantum_from_modes(&normal_mode_data(p, phase)?))
}

/// The operator-ordering term `(1/2) da_i da_j` separating the two metrics.
pub fn anomaly_term(p: &DickeParams, phase: DickePhase) -> Result<MetricTensor2D> {
    Ok(outer(normal_mode_data(p, phase)?.grad_alpha) * 0.5)
}

/// Classical (default actions) and quantum metrics at resonance `omega0 = omega`.
///
/// In the normal phase `g12` and `g22` are shared by both metrics. The
/// quantum `g11` follows from the classical one through the anomaly term,
/// which at resonance reduces to `1 / (32 lambda^2)`.
pub fn resonant_metrics(omega: f64, lambda: f64, phase: DickePhase) -> Result<(MetricTensor2D, MetricTensor2D)> {
    let p = DickeParams::new(omega, omega, lambda)?;
    check_phase(&p, phase)?;
    match phase {
        DickePhase::Normal => {
            if lambda == 0.0 {
                return Err(Error::InvalidInput("resonant g11 diverges at lambda = 0".into()));
            }
            let [cl, q] = resonant_normal_components(omega, lambda);
            Ok((tensor(cl), tensor(q)))
        }
        DickePhase::Superradiant => {
            let m = modes_unchecked(&p, phase)?;
            Ok((classical_from_modes(&m, &ActionAssignment::default()), quantum_from_modes(&m)))
        }
    }
}

/// Resonant normal-phase components, classical (default actions) then quantum.
fn resonant_normal_components<T: Scalar>(w: T, l: T) -> [[T; 3]; 2] {
    let c = T::cst;
    let (w2, l2) = (w * w, l * l);
    let gap = w2 - c(4.0) * l2;
    let s = gap.sqrt();
    let g12 = l * (c(4.0) * l2 - c(3.0) * w2) / (c(8.0) * w * gap * gap);
    let g22 = (c(4.0) * l2 + w2) / (c(4.0) * gap * gap);
    let num = c(16.0) * l2 * l2 * w.powi(3) - c(8.0) * l2 * w.powi(5)
        + w.powi(7)
        + l2 * s * (c(8.0) * l2 * l2 - c(6.0) * l2 * w2 + c(2.0) * w2 * w2);
    let g11 = num / (c(32.0) * l2 * w2 * gap * gap * s);
    let g11_q = g11 - c(1.0) / (c(32.0) * l2);
    [[g11, g12, g22], [g11_q, g12, g22]]
}

/// Leading ground-state energy `E_g` for pseudospin `j`.
pub fn ground_state_energy(p: &DickeParams, j: f64) -> f64 {
    if p.lambda <= p.critical_coupling() {
        -p.omega0 * j
    } else {
        -(2.0 * p.lambda * p.lambda / p.omega + p.omega0 * p.omega0 * p.omega / (8.0 * p.lambda * p.lambda)) * j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Classical(ActionAssignment),
    Quantum,
}

/// Dicke metric over `(x1, x2) = (omega, lambda)` restricted to one phase.
///
/// With `resonant` set, `omega0` tracks `omega` at every point and the
/// resonant closed forms are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DickeField {
    pub omega0: f64,
    pub phase: DickePhase,
    pub kind: MetricKind,
    pub resonant: bool,
}

impl DickeField {
    pub fn new(omega0: f64, phase: DickePhase, kind: MetricKind) -> Self {
        Self { omega0, phase, kind, resonant: false }
    }

    pub fn resonant(phase: DickePhase, kind: MetricKind) -> Self {
        Self { omega0: f64::NAN, phase, kind, resonant: true }
    }

    /// Exact first and second derivatives of the metric at `p`.
    pub fn derivatives(&self, p: ParameterPoint) -> Result<MetricDerivatives> {
        if !self.contains(p) {
            return Err(Error::DomainViolation { x1: p.x1, x2: p.x2 });
        }
        let default_actions = matches!(self.kind, MetricKind::Classical(a) if a == ActionAssignment::default());
        if self.resonant && !(default_actions || self.kind == MetricKind::Quantum) {
            return Err(Error::InvalidInput("resonant closed forms assume the default action assignment".into()));
        }
        let (phase, kind, resonant, omega0) = (self.phase, self.kind, self.resonant, self.omega0);
        Ok(MetricDerivatives::from_closed_form(
            move |w, l| match (resonant, phase) {
                (true, DickePhase::Normal) => {
                    let [cl, q] = resonant_normal_components(w, l);
                    if kind == MetricKind::Quantum {
                        q
                    } else {
                        cl
                    }
                }
                (true, _) => assemble_components(&modes(&inputs(phase, w, w, l)), &kind),
                (false, _) => assemble_components(&modes(&inputs(phase, Scalar::cst(omega0), w, l)), &kind),
            },
            p,
        ))
    }

    fn params(&self, p: ParameterPoint) -> Result<DickeParams> {
        let omega0 = if self.resonant { p.x1 } else { self.omega0 };
        DickeParams::new(omega0, p.x1, p.x2)
    }
}

impl MetricField for DickeField {
    fn metric(&self, p: ParameterPoint) -> Result<MetricTensor2D> {
        let params = self.params(p)?;
        if self.resonant {
            let (cl, q) = resonant_metrics(params.omega, params.lambda, self.phase)?;
            return Ok(match self.kind {
                MetricKind::Quantum => q,
                MetricKind::Classical(a) if a == ActionAssignment::default() => cl,
                MetricKind::Classical(_) => {
                    return Err(Error::InvalidInput(
                        "resonant closed forms assume the default action assignment".into(),
                    ))
                }
            });
        }
        match self.kind {
            MetricKind::Classical(a) => classical_metric(&params, self.phase, &a),
            MetricKind::Quantum => quantum_metric(&params, self.phase),
        }
    }

    fn contains(&self, p: ParameterPoint) -> bool {
        match self.params(p) {
            Ok(params) => {
                let in_phase = params.phase().map(|ph| ph == self.phase).unwrap_or(false);
                let resonance_ok = self.resonant || self.phase != DickePhase::Normal || params.omega != params.omega0;
                let lambda_ok = !(self.resonant && self.phase == DickePhase::Normal && params.lambda == 0.0);
                in_phase && resonance_ok && lambda_ok
            }
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(w0: f64, w: f64, l: f64) -> DickeParams {
        DickeParams::new(w0, w, l).unwrap()
    }

    #[test]
    fn critical_coupling_examples() {
        assert!((critical_coupling(&params(1.0, 0.8, 0.0)) - 0.447).abs() < 5e-4);
        assert!((critical_coupling(&params(0.8, 0.8, 0.0)) - 0.4).abs() < 1e-15);
        assert_eq!(critical_coupling(&params(1.0, 1.0, 0.0)), 0.5);
    }

    #[test]
    fn decoupled_modes_at_zero_coupling() {
        let m = normal_mode_data(&params(1.0, 0.8, 0.0), DickePhase::Normal).unwrap();
        assert!((m.eps1 - 0.8).abs() < 1e-15);
        assert!((m.eps2 - 1.0).abs() < 1e-15);
        assert_eq!(m.alpha, 0.0);
    }

    #[test]
    fn soft_mode_vanishes_at_criticality() {
        let p = params(1.0, 0.8, 0.0);
        let lc = p.critical_coupling();
        let m = normal_mode_data(&params(1.0, 0.8, lc * (1.0 - 1e-12)), DickePhase::Normal).unwrap();
        assert!(m.eps1 < 1e-5, "{}", m.eps1);
        let m = normal_mode_data(&params(1.0, 0.8, lc * (1.0 + 1e-12)), DickePhase::Superradiant).unwrap();
        assert!(m.eps1 < 1e-5, "{}", m.eps1);
    }

    #[test]
    fn frequencies_at_intermediate_coupling() {
        let m = normal_mode_data(&params(1.0, 0.8, 0.3), DickePhase::Normal).unwrap();
        assert!((m.eps1 * m.eps1 - 0.2540).abs() < 1e-4);
        assert!((m.eps2 * m.eps2 - 1.3860).abs() < 1e-4);
        assert!((m.eps1.powi(2) + m.eps2.powi(2) - 1.64).abs() < 1e-12);
    }

    #[test]
    fn wrong_phase_and_critical_point() {
        let p = params(1.0, 0.8, 0.6);
        assert!(matches!(normal_mode_data(&p, DickePhase::Normal), Err(Error::WrongPhase(_))));
        let p = params(1.0, 1.0, 0.5);
        assert!(matches!(normal_mode_data(&p, DickePhase::Normal), Err(Error::CriticalPoint(_))));
        let p = params(1.0, 1.0, 0.2);
        assert_eq!(normal_mode_data(&p, DickePhase::Normal), Err(Error::AngleSingular));
    }

    #[test]
    fn zero_coupling_metrics() {
        let p = params(1.0, 0.8, 0.0);
        let q = quantum_metric(&p, DickePhase::Normal).unwrap();
        assert!((q.g22 - 1.0 / 3.24).abs() < 1e-14);
        assert!((q.g11 - 1.0 / (8.0 * 0.64)).abs() < 1e-14);
        assert_eq!(q.g12, 0.0);
        let c = classical_metric(&p, DickePhase::Normal, &ActionAssignment::default()).unwrap();
        assert!((c.g22 - 1.64 / 0.36f64.powi(2)).abs() < 1e-12, "{}", c.g22);
        let an = anomaly_term(&p, DickePhase::Normal).unwrap();
        let expected = 0.5 * (2.0 * 0.8f64.sqrt() / 0.36).powi(2);
        assert!((an.g22 - expected).abs() < 1e-12);
        assert_eq!(an.g11, 0.0);
        assert_eq!(an.g12, 0.0);
    }

    #[test]
    fn metrics_diverge_towards_criticality() {
        let lc = critical_coupling(&params(1.0, 0.8, 0.0));
        let a = ActionAssignment::default();
        let near = classical_metric(&params(1.0, 0.8, lc - 1e-6), DickePhase::Normal, &a).unwrap();
        let far = classical_metric(&params(1.0, 0.8, lc - 1e-2), DickePhase::Normal, &a).unwrap();
        assert!(near.g11 > 1e3 * far.g11);
        assert!(near.g22 > 1e3 * far.g22);
    }

    #[test]
    fn anomaly_grows_near_resonance() {
        let a = anomaly_term(&params(1.0, 0.99, 0.0), DickePhase::Normal).unwrap();
        let b = anomaly_term(&params(1.0, 0.999, 0.0), DickePhase::Normal).unwrap();
        assert!(b.g22 > 50.0 * a.g22);
    }

    #[test]
    fn resonant_shared_components() {
        for l in [0.1, 0.2, 0.3] {
            let (c, q) = resonant_metrics(0.8, l, DickePhase::Normal).unwrap();
            assert_eq!(c.g12, q.g12);
            assert_eq!(c.g22, q.g22);
            assert!((c.g11 - q.g11).abs() > 1e-6);
        }
    }

    #[test]
    fn resonant_g11_diverges_at_zero_coupling() {
        let (c, q) = resonant_metrics(0.8, 1e-4, DickePhase::Normal).unwrap();
        assert!(c.g11 > 1e6);
        // the anomaly removes the divergence; the limit is 1/(8 omega^2)
        assert!((q.g11 - 1.0 / (8.0 * 0.64)).abs() < 1e-3, "{}", q.g11);
    }

    #[test]
    fn resonant_matches_limit_of_general_formulas() {
        for l in [0.1, 0.25, 0.35] {
            let p = params(0.8, 0.8, l);
            let m = modes_unchecked(&p, DickePhase::Normal).unwrap();
            let (c, q) = resonant_metrics(0.8, l, DickePhase::Normal).unwrap();
            let c_gen = classical_from_modes(&m, &ActionAssignment::default());
            let q_gen = quantum_from_modes(&m);
            assert!(c.max_abs_diff(&c_gen) < 1e-12 * c.g11.abs().max(1.0));
            assert!(q.max_abs_diff(&q_gen) < 1e-12 * c.g11.abs().max(1.0));
        }
    }

    #[test]
    fn resonant_critical_point_rejected() {
        assert!(matches!(resonant_metrics(0.8, 0.4, DickePhase::Normal), Err(Error::CriticalPoint(_))));
    }

    #[test]
    fn ground_energy_branches() {
        assert_eq!(ground_state_energy(&params(1.0, 0.8, 0.3), 1.0), -1.0);
        let lc = critical_coupling(&params(1.0, 0.8, 0.0));
        let at = params(1.0, 0.8, lc);
        let sup = -(2.0 * lc * lc / 0.8 + 0.8 / (8.0 * lc * lc));
        assert!((ground_state_energy(&at, 1.0) - sup).abs() < 1e-12);
        assert!((ground_state_energy(&params(1.0, 0.8, 0.6), 1.0) + 1.177_777_777_777_777_8).abs() < 1e-12);
    }

    #[test]
    fn superradiant_trace_identity() {
        let p = params(1.0, 0.8, 0.6);
        let m = normal_mode_data(&p, DickePhase::Superradiant).unwrap();
        let t = (16.0 * 0.6f64.powi(4) + 0.8f64.powi(4)) / 0.64;
        assert!((m.eps1.powi(2) + m.eps2.powi(2) - t).abs() < 1e-12);
        assert!(m.eps1 <= m.eps2);
    }

    #[test]
    fn field_domain() {
        let f = DickeField::new(1.0, DickePhase::Normal, MetricKind::Quantum);
        assert!(f.contains(ParameterPoint::new(0.8, 0.3).unwrap()));
        assert!(!f.contains(ParameterPoint::new(0.8, 0.5).unwrap()));
        assert!(!f.contains(ParameterPoint::new(1.0, 0.3).unwrap()));
        let r = DickeField::resonant(DickePhase::Superradiant, MetricKind::Quantum);
        assert!(r.contains(ParameterPoint::new(0.8, 0.5).unwrap()));
        assert!(!r.contains(ParameterPoint::new(0.8, 0.3).unwrap()));
    }

    #[test]
    fn resonant_curvature_diverges() {
        use crate::geometry::scalar_curvature_closed;
        for kind in [MetricKind::Quantum, MetricKind::Classical(ActionAssignment::default())] {
            for (phase, l) in [(DickePhase::Normal, 0.4 - 1e-4), (DickePhase::Superradiant, 0.4 + 1e-4)] {
                let f = DickeField::resonant(phase, kind);
                let r =
                    scalar_curvature_closed(&f.derivatives(ParameterPoint::new(0.8, l).unwrap()).unwrap()).unwrap().r;
                assert!(r.abs() > 1e3, "{phase:?} {kind:?}: R = {r}");
            }
        }
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        use crate::geometry::derivatives_fd;
        let cases = [
            (DickeField::new(1.0, DickePhase::Normal, MetricKind::Quantum), 0.8, 0.3),
            (
                DickeField::new(1.0, DickePhase::Superradiant, MetricKind::Classical(ActionAssignment::default())),
                0.8,
                0.6,
            ),
            (DickeField::resonant(DickePhase::Normal, MetricKind::Classical(ActionAssignment::default())), 0.8, 0.2),
            (DickeField::resonant(DickePhase::Superradiant, MetricKind::Quantum), 0.8, 0.55),
        ];
        for (f, w, l) in cases {
            let p = ParameterPoint::new(w, l).unwrap();
            let exact = f.derivatives(p).unwrap();
            let fd = derivatives_fd(&f, p, 1e-4, 1e-4).unwrap();
            let scale = exact.g.components().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            assert!(exact.g.max_abs_diff(&f.metric(p).unwrap()) < 1e-14 * scale);
            for (a, b) in exact.d.iter().flatten().zip(fd.d.iter().flatten()) {
                assert!((a - b).abs() < 1e-6 * scale.max(a.abs()), "{a} vs {b}");
            }
            for (a, b) in exact.dd.iter().flatten().zip(fd.dd.iter().flatten()) {
                assert!((a - b).abs() < 1e-4 * scale.max(a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn quantum_curvature_tends_to_minus_four() {
        use crate::geometry::scalar_curvature_closed;
        let lc = critical_coupling(&params(1.0, 0.8, 0.0));
        for (phase, d) in [(DickePhase::Normal, -1e-6), (DickePhase::Superradiant, 1e-6)] {
            let f = DickeField::new(1.0, phase, MetricKind::Quantum);
            let r =
                scalar_curvature_closed(&f.derivatives(ParameterPoint::new(0.8, lc + d).unwrap()).unwrap()).unwrap().r;
            assert!((r + 4.0).abs() < 1e-3, "{phase:?}: {r}");
        }
        let off = DickeField::new(1.0, DickePhase::Normal, MetricKind::Quantum);
        assert!(off.derivatives(ParameterPoint::new(0.8, lc + 1e-3).unwrap()).is_err());
    }
}
