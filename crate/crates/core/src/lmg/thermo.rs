//! Thermodynamic limit of the LMG model.
//!
//! Over `(h, gamma)` the quadratic Holstein-Primakoff Hamiltonians give
//! closed-form metrics in each phase. The symmetric-phase metric is rank one;
//! the broken-phase metric is invertible and has scalar curvature
//!
//! ```text
//! R = -4 + (7h^4 - (9 gamma - 2) h^2 - 4 (1 - gamma)) / (j sqrt((1 - h^2)(1 - gamma)^3))
//! ```

use serde::{Deserialize, Serialize};

use crate::dicke::ActionAssignment;
use crate::error::{Error, Result};
use crate::geometry::jet::Scalar;
use crate::geometry::{MetricDerivatives, MetricField, MetricTensor2D, ParameterPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmgParams {
    pub h: f64,
    pub gamma: f64,
    pub j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LmgPhase {
    Symmetric,
    Broken,
}

impl LmgParams {
    pub fn new(h: f64, gamma: f64, j: f64) -> Result<Self> {
        let ok = h.is_finite() && h >= 0.0 && gamma > -1.0 && gamma < 1.0 && j.is_finite() && j > 0.0;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "LMG parameters need h >= 0, -1 < gamma < 1, j > 0; got ({h}, {gamma}, {j})"
            )));
        }
        Ok(Self { h, gamma, j })
    }

    pub fn phase(&self) -> Result<LmgPhase> {
        if self.h > 1.0 {
            Ok(LmgPhase::Symmetric)
        } else if self.h < 1.0 {
            Ok(LmgPhase::Broken)
        } else {
            Err(Error::CriticalPoint("h = 1".into()))
        }
    }

    fn require(&self, phase: LmgPhase) -> Result<()> {
        let actual = self.phase()?;
        if actual != phase {
            return Err(Error::WrongPhase(format!("h = {} lies in the {:?} phase", self.h, actual)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointKind {
    Minimum,
    Maximum,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub theta0: f64,
    pub phi0: f64,
    pub kind: FixedPointKind,
    pub energy: f64,
}

/// Coherent-state energy `-j [2h cos(theta) + sin^2(theta)(cos^2(phi) + gamma sin^2(phi))]`.
pub fn energy_surface(p: &LmgParams, theta: f64, phi: f64) -> f64 {
    energy_generic(p, theta, phi)
}

fn energy_generic<T: Scalar>(p: &LmgParams, theta: T, phi: T) -> T {
    let (st, cp, sp) = (theta.sin(), phi.cos(), phi.sin());
    let angular = cp * cp + T::cst(p.gamma) * sp * sp;
    -(T::cst(2.0 * p.h) * theta.cos() + st * st * angular) * T::cst(p.j)
}

fn classify(hess: [f64; 3]) -> FixedPointKind {
    let det = hess[0] * hess[2] - hess[1] * hess[1];
    if det < 0.0 {
        FixedPointKind::Saddle
    } else if hess[0] + hess[2] > 0.0 {
        FixedPointKind::Minimum
    } else {
        FixedPointKind::Maximum
    }
}

/// Stationary points that organise the phase diagram.
///
/// The pole `theta0 = 0` is always listed. Its type comes from the Hessian in
/// the local chart `(theta cos(phi), theta sin(phi))`, which is
/// `2j diag(h - 1, h - gamma)`. In the broken phase it is therefore a maximum
/// only for `gamma > h` and a saddle otherwise.
pub fn fixed_points(p: &LmgParams) -> Result<Vec<FixedPoint>> {
    let phase = p.phase()?;
    let pole = FixedPoint {
        theta0: 0.0,
        phi0: 0.0,
        kind: classify([2.0 * p.j * (p.h - 1.0), 0.0, 2.0 * p.j * (p.h - p.gamma)]),
        energy: energy_surface(p, 0.0, 0.0),
    };
    let mut out = vec![pole];
    if phase == LmgPhase::Broken {
        let theta0 = p.h.acos();
        for phi0 in [0.0, std::f64::consts::PI] {
            let e = energy_generic(p, crate::geometry::jet::Jet2::var1(theta0), crate::geometry::jet::Jet2::var2(phi0));
            out.push(FixedPoint { theta0, phi0, kind: classify(e.h), energy: e.v });
        }
    }
    Ok(out)
}

/// Ground energy `-(1 + h^2) j` for `h < 1`, `-2 h j` otherwise.
pub fn ground_energy(p: &LmgParams) -> f64 {
    if p.h < 1.0 {
        -(1.0 + p.h * p.h) * p.j
    } else {
        -2.0 * p.h * p.j
    }
}

/// Classical Hamiltonian in the canonical chart `(Q, P)` about the pole.
pub fn hamiltonian_qp(p: &LmgParams, q: f64, pm: f64) -> f64 {
    let r2 = q * q + pm * pm;
    -2.0 * p.h * p.j + p.h * r2 - (p.gamma * pm * pm + q * q) * (1.0 - r2 / (4.0 * p.j))
}

/// Classical Hamiltonian in the chart rotated onto a broken-phase minimum.
pub fn hamiltonian_rotated_qp(p: &LmgParams, q: f64, pm: f64) -> f64 {
    let (h, g, j) = (p.h, p.gamma, p.j);
    let r2 = q * q + pm * pm;
    let s = (1.0 - h * h).sqrt();
    -j * (1.0 + h * h)
        + (1.0 - g) * pm * pm
        + (1.0 - h * h) * q * q
        + h / j.sqrt() * s * q * r2 * (1.0 - r2 / (4.0 * j)).max(0.0).sqrt()
        + r2 / (4.0 * j) * (g * pm * pm + h * h * q * q - (1.0 - h * h) * r2)
}

/// Symmetric-phase metric components with overall factor `i_sq`.
pub fn symmetric_components<T: Scalar>(h: T, gamma: T, i_sq: f64) -> [T; 3] {
    let one = T::cst(1.0);
    let c = T::cst(i_sq / 32.0);
    let a = (one - gamma) / ((h - one) * (h - gamma));
    let hg = h - gamma;
    [c * a * a, c * (one - gamma) / ((h - one) * hg * hg), c / (hg * hg)]
}

/// Broken-phase components; the leading `g11` term is `lead / sqrt((1-h^2)(1-gamma))`.
pub fn broken_components<T: Scalar>(h: T, gamma: T, lead: f64, i_sq: f64) -> [T; 3] {
    let one = T::cst(1.0);
    let c = T::cst(i_sq / 32.0);
    let omg = one - gamma;
    let omh = one - h * h;
    let b = h * (h * h - gamma) / (omh * omg);
    [T::cst(lead) / (omh * omg).sqrt() + c * b * b, c * h * (h * h - gamma) / (omh * omg * omg), c / (omg * omg)]
}

fn tensor(c: [f64; 3]) -> MetricTensor2D {
    MetricTensor2D::new(c[0], c[1], c[2])
}

/// Classical metric (single action `a.i1`, square `a.i1_sq`) and QMT, `h > 1`.
pub fn symmetric_metrics(p: &LmgParams, a: &ActionAssignment) -> Result<(MetricTensor2D, MetricTensor2D)> {
    p.require(LmgPhase::Symmetric)?;
    Ok((tensor(symmetric_components(p.h, p.gamma, a.i1_sq)), tensor(symmetric_components(p.h, p.gamma, 1.0))))
}

/// Classical metric and QMT, `h < 1`. The classical leading term is `j I`,
/// the quantum one `j / 2`.
pub fn broken_metrics(p: &LmgParams, a: &ActionAssignment) -> Result<(MetricTensor2D, MetricTensor2D)> {
    p.require(LmgPhase::Broken)?;
    Ok((
        tensor(broken_components(p.h, p.gamma, p.j * a.i1, a.i1_sq)),
        tensor(broken_components(p.h, p.gamma, 0.5 * p.j, 1.0)),
    ))
}

/// `det g0 = j / (64 sqrt((1-h^2)(1-gamma)^5))`.
pub fn broken_quantum_determinant(p: &LmgParams) -> Result<f64> {
    p.require(LmgPhase::Broken)?;
    Ok(p.j / (64.0 * ((1.0 - p.h * p.h) * (1.0 - p.gamma).powi(5)).sqrt()))
}

/// `det g = j I^3 / (32 sqrt((1-h^2)(1-gamma)^5))` for `I^2 = I * I`.
pub fn broken_classical_determinant(p: &LmgParams, i: f64) -> Result<f64> {
    p.require(LmgPhase::Broken)?;
    Ok(p.j * i.powi(3) / (32.0 * ((1.0 - p.h * p.h) * (1.0 - p.gamma).powi(5)).sqrt()))
}

pub fn broken_curvature(p: &LmgParams) -> Result<f64> {
    p.require(LmgPhase::Broken)?;
    let (h, g) = (p.h, p.gamma);
    let h2 = h * h;
    let num = 7.0 * h2 * h2 - (9.0 * g - 2.0) * h2 - 4.0 * (1.0 - g);
    Ok(-4.0 + num / (p.j * ((1.0 - h2) * (1.0 - g).powi(3)).sqrt()))
}

/// Exact derivatives of the broken-phase QMT at `(h, gamma)`.
pub fn broken_quantum_derivatives(p: &LmgParams) -> Result<MetricDerivatives> {
    p.require(LmgPhase::Broken)?;
    let j = p.j;
    Ok(MetricDerivatives::from_closed_form(
        |h, g| broken_components(h, g, 0.5 * j, 1.0),
        ParameterPoint { x1: p.h, x2: p.gamma },
    ))
}

/// Thermodynamic-limit QMT over `(x1, x2) = (h, gamma)` in one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmgThermoField {
    pub j: f64,
    pub phase: LmgPhase,
}

impl MetricField for LmgThermoField {
    fn metric(&self, x: ParameterPoint) -> Result<MetricTensor2D> {
        let p = LmgParams::new(x.x1, x.x2, self.j)?;
        let a = ActionAssignment::default();
        match self.phase {
            LmgPhase::Symmetric => symmetric_metrics(&p, &a).map(|m| m.1),
            LmgPhase::Broken => broken_metrics(&p, &a).map(|m| m.1),
        }
    }

    fn contains(&self, x: ParameterPoint) -> bool {
        LmgParams::new(x.x1, x.x2, self.j).and_then(|p| p.phase()).map(|ph| ph == self.phase).unwrap_or(false)
    }
}
