//! Least-squares fits for peak heights and locations.
//!
//! Linear families are solved by SVD. `RAT1` and `POWER` have one nonlinear
//! parameter; it is seeded by a coarse grid (with the linear pair solved
//! exactly at each node) and then polished by damped Gauss-Newton.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FitModel {
    /// `a + b x + c x^2`
    Poly2,
    /// `a + b / (x - c)`
    Rat1,
    /// `a + b / (x - 1)`
    Rat1F,
    /// `a + b / (x - 1)^2`
    Rat2F,
    /// `a + b x^(-p)`
    Power,
    /// `ln y = m ln x + n`
    LogLin,
    /// `a + b x`
    Lin,
}

impl FitModel {
    pub fn arity(self) -> usize {
        match self {
            FitModel::Poly2 | FitModel::Rat1 | FitModel::Power => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitModel::Poly2 => "POLY2",
            FitModel::Rat1 => "RAT1",
            FitModel::Rat1F => "RAT1F",
            FitModel::Rat2F => "RAT2F",
            FitModel::Power => "POWER",
            FitModel::LogLin => "LOGLIN",
            FitModel::Lin => "LIN",
        }
    }
}

impl std::str::FromStr for FitModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "POLY2" => FitModel::Poly2,
            "RAT1" => FitModel::Rat1,
            "RAT1F" => FitModel::Rat1F,
            "RAT2F" => FitModel::Rat2F,
            "POWER" => FitModel::Power,
            "LOGLIN" => FitModel::LogLin,
            "LIN" => FitModel::Lin,
            other => return Err(Error::InvalidInput(format!("unknown fit model {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual, in log space for `LOGLIN`.
    pub residual: f64,
}

impl FitResult {
    /// Model prediction `y(x)`; for `LOGLIN` this is `exp(n) x^m`.
    pub fn eval(&self, x: f64) -> f64 {
        let c = &self.coefficients;
        match self.model {
            FitModel::Poly2 => c[0] + c[1] * x + c[2] * x * x,
            FitModel::Rat1 => c[0] + c[1] / (x - c[2]),
            FitModel::Rat1F => c[0] + c[1] / (x - 1.0),
            FitModel::Rat2F => c[0] + c[1] / ((x - 1.0) * (x - 1.0)),
            FitModel::Power => c[0] + c[1] * x.powf(-c[2]),
            FitModel::LogLin => (c[0] * x.ln() + c[1]).exp(),
            FitModel::Lin => c[0] + c[1] * x,
        }
    }
}

/// Relative singular-value cutoff below which a design counts as rank-deficient.
const RANK_TOL: f64 = 1e-12;

/// Least squares `A x = b` by SVD; `SingularFit` on rank deficiency.
fn linear_lstsq(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::SingularFit(format!("design matrix rank-deficient (singular values {smin:e} / {smax:e})")));
    }
    svd.solve(b, 0.0).map_err(|e| Error::SingularFit(e.to_string()))
}

fn rms(r: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = r.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (s / n.max(1) as f64).sqrt()
}

fn linear_fit(model: FitModel, xs: &[f64], ys: &[f64], basis: impl Fn(f64) -> Vec<f64>) -> Result<FitResult> {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| basis(x)).collect();
    let ncol = rows[0].len();
    let a = DMatrix::from_fn(xs.len(), ncol, |r, c| rows[r][c]);
    let coef = linear_lstsq(a, &DVector::from_column_slice(ys))?;
    let mut fit = FitResult { model, coefficients: coef.iter().copied().collect(), residual: 0.0 };
    fit.residual = rms(xs.iter().zip(ys).map(|(&x, &y)| y - fit.eval(x)));
    Ok(fit)
}

/// Fits `model` to `(xs, ys)`; needs at least `arity + 1` points.
pub fn fit(model: FitModel, xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!("{} abscissae but {} ordinates", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite fit data".into()));
    }
    if xs.len() < model.arity() + 1 {
        return Err(Error::SingularFit(format!(
            "{} needs at least {} points, got {}",
            model.name(),
            model.arity() + 1,
            xs.len()
        )));
    }
    match model {
        FitModel::Lin => linear_fit(model, xs, ys, |x| vec![1.0, x]),
        FitModel::Poly2 => linear_fit(model, xs, ys, |x| vec![1.0, x, x * x]),
        FitModel::Rat1F => linear_fit(model, xs, ys, |x| vec![1.0, 1.0 / (x - 1.0)]),
        FitModel::Rat2F => linear_fit(model, xs, ys, |x| vec![1.0, 1.0 / ((x - 1.0) * (x - 1.0))]),
        FitModel::LogLin => {
            if xs.iter().chain(ys).any(|&v| v <= 0.0) {
                return Err(Error::InvalidInput("LOGLIN needs positive data".into()));
            }
            let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            let lin = linear_fit(FitModel::Lin, &lx, &ly, |x| vec![1.0, x])?;
            Ok(FitResult {
                model,
                coefficients: vec![lin.coefficients[1], lin.coefficients[0]],
                residual: lin.residual,
            })
        }
        FitModel::Power => separable_fit(model, xs, ys, &power_seeds(), |x, p| x.powf(-p), |x, p| -x.ln() * x.powf(-p)),
        FitModel::Rat1 => {
            let seeds = rat1_seeds(xs);
            separable_fit(model, xs, ys, &seeds, |x, c| 1.0 / (x - c), |x, c| 1.0 / ((x - c) * (x - c)))
        }
    }
}

/// Exponents scanned for `POWER`: 0.02 to 4 in steps of 0.02.
fn power_seeds() -> Vec<f64> {
    (1..=200).map(|k| 0.02 * f64::from(k)).collect()
}

/// Pole positions scanned for `RAT1`: log-spaced distances from `1e-3` to
/// `1e2` data spans on both sides of the data.
fn rat1_seeds(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    let mut out = Vec::new();
    for k in 0..=250 {
        let d = span * 10f64.powf(-3.0 + 5.0 * f64::from(k) / 250.0);
        out.push(lo - d);
        out.push(hi + d);
    }
    out
}

/// `y = a + b phi(x, t)` with one nonlinear parameter `t`.
fn separable_fit(
    model: FitModel,
    xs: &[f64],
    ys: &[f64],
    seeds: &[f64],
    phi: impl Fn(f64, f64) -> f64,
    dphi: impl Fn(f64, f64) -> f64,
) -> Result<FitResult> {
    let n = xs.len();
    let b = DVector::from_column_slice(ys);
    let mut best: Option<(f64, [f64; 3])> = None;
    for &t in seeds {
        let a = DMatrix::from_fn(n, 2, |r, c| if c == 0 { 1.0 } else { phi(xs[r], t) });
        let Ok(ab) = linear_lstsq(a.clone(), &b) else { continue };
        let cost = (&a * &ab - &b).norm_squared();
        if cost.is_finite() && best.map_or(true, |(c, _)| cost < c) {
            best = Some((cost, [ab[0], ab[1], t]));
        }
    }
    let (_, start) = best.ok_or_else(|| Error::SingularFit(format!("{}: no admissible seed", model.name())))?;
    let theta = damped_gauss_newton(start, |th| {
        let mut r = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, 3);
        for i in 0..n {
            let f = phi(xs[i], th[2]);
            r[i] = th[0] + th[1] * f - ys[i];
            jac[(i, 0)] = 1.0;
            jac[(i, 1)] = f;
            jac[(i, 2)] = th[1] * dphi(xs[i], th[2]);
        }
        (r, jac)
    });
    let mut fit = FitResult { model, coefficients: theta.to_vec(), residual: 0.0 };
    fit.residual = rms(xs.iter().zip(ys).map(|(&x, &y)| y - fit.eval(x)));
    if !fit.residual.is_finite() {
        return Err(Error::SingularFit(format!("{}: refinement diverged", model.name())));
    }
    Ok(fit)
}

/// Levenberg-Marquardt on a three-parameter residual.
fn damped_gauss_newton(start: [f64; 3], f: impl Fn(&[f64; 3]) -> (DVector<f64>, DMatrix<f64>)) -> [f64; 3] {
    let mut theta = start;
    let (mut r, mut jac) = f(&theta);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..500 {
        let jtj: Matrix3<f64> = Matrix3::from_fn(|a, b| jac.column(a).dot(&jac.column(b)));
        let jtr: Vector3<f64> = Vector3::from_fn(|a, _| jac.column(a).dot(&r));
        let mut damped = jtj;
        for k in 0..3 {
            damped[(k, k)] += mu * jtj[(k, k)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&(-jtr)) else {
            mu *= 10.0;
            continue;
        };
        let trial = [theta[0] + step[0], theta[1] + step[1], theta[2] + step[2]];
        let (rt, jt) = f(&trial);
        let ct = rt.norm_squared();
        if ct.is_finite() && ct <= cost {
            let small = step.iter().zip(&theta).all(|(s, t)| s.abs() <= 1e-14 * (1.0 + t.abs()));
            let improvement = cost - ct;
            theta = trial;
            r = rt;
            jac = jt;
            cost = ct;
            mu = (mu / 3.0).max(1e-12);
            if small || improvement <= 1e-15 * cost {
                break;
            }
        } else {
            mu *= 4.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    theta
}

/// Root of a fitted `POWER` law: `j = (-b / a)^(1/p)`, when it exists.
pub fn power_zero(f: &FitResult) -> Option<f64> {
    if f.model != FitModel::Power {
        return None;
    }
    let (a, b, p) = (f.coefficients[0], f.coefficients[1], f.coefficients[2]);
    let ratio = -b / a;
    (ratio > 0.0 && p != 0.0).then(|| ratio.powf(1.0 / p)).filter(|j| j.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn loglin_exact() {
        let js = [12.0, 20.0, 50.0, 100.0, 500.0];
        let ys: Vec<f64> = js.iter().map(|j: &f64| j.powf(1.5) * 2f64.exp()).collect();
        let f = fit(FitModel::LogLin, &js, &ys).unwrap();
        assert!(close(f.coefficients[0], 1.5, 1e-12) && close(f.coefficients[1], 2.0, 1e-12));
    }

    #[test]
    fn lin_exact_and_underdetermined() {
        let xs = [1.0, 2.0, 5.0, 9.0];
        let ys: Vec<f64> = xs.iter().map(|x| -34.2 - 0.65 * x).collect();
        let f = fit(FitModel::Lin, &xs, &ys).unwrap();
        assert!(close(f.coefficients[0], -34.2, 1e-12) && close(f.coefficients[1], -0.65, 1e-12));
        assert!(matches!(fit(FitModel::Lin, &[3.0], &[1.0]), Err(Error::SingularFit(_))));
        assert!(matches!(fit(FitModel::Lin, &[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]), Err(Error::SingularFit(_))));
    }

    #[test]
    fn fixed_pole_models() {
        let xs = [0.5, 0.6, 0.7, 0.8, 0.9];
        let ys: Vec<f64> = xs.iter().map(|h| -22.5317 + 1.5333 / ((h - 1.0) * (h - 1.0))).collect();
        let f = fit(FitModel::Rat2F, &xs, &ys).unwrap();
        assert!(close(f.coefficients[1], 1.5333, 1e-10));
        let ys: Vec<f64> = xs.iter().map(|h| 0.0608 + 0.199 / (h - 1.0)).collect();
        assert!(close(fit(FitModel::Rat1F, &xs, &ys).unwrap().coefficients[0], 0.0608, 1e-10));
        let ys: Vec<f64> = xs.iter().map(|h| 0.0498 - 0.0142 * h + 0.0042 * h * h).collect();
        assert!(close(fit(FitModel::Poly2, &xs, &ys).unwrap().coefficients[2], 0.0042, 1e-8));
    }

    #[test]
    fn power_recovers_coefficients() {
        let js = [12.0, 16.0, 20.0, 24.0, 28.0, 32.0, 40.0, 50.0, 75.0, 100.0, 125.0, 175.0, 250.0, 300.0, 500.0];
        let ys: Vec<f64> = js.iter().map(|j: &f64| -4.645 - 3.882 * j.powf(-0.812)).collect();
        let f = fit(FitModel::Power, &js, &ys).unwrap();
        let c = &f.coefficients;
        assert!(close(c[0], -4.645, 1e-8) && close(c[1], -3.882, 1e-8) && close(c[2], 0.812, 1e-8), "{c:?}");
        let ys: Vec<f64> = js.iter().map(|j: &f64| -0.365 + 3.408 * j.powf(-0.695)).collect();
        let z = power_zero(&fit(FitModel::Power, &js, &ys).unwrap()).unwrap();
        assert!(close(z, (3.408f64 / 0.365).powf(1.0 / 0.695), 1e-8));
    }

    #[test]
    fn rat1_recovers_pole() {
        let hs = [0.45, 0.54, 0.6, 0.64, 0.67, 0.7, 0.74, 0.77, 0.82, 0.85, 0.87];
        let ys: Vec<f64> = hs.iter().map(|h| -3.407 - 2.197 / (h + 0.795)).collect();
        let f = fit(FitModel::Rat1, &hs, &ys).unwrap();
        let c = &f.coefficients;
        assert!(close(c[0], -3.407, 1e-7) && close(c[1], -2.197, 1e-7) && close(c[2], -0.795, 1e-7), "{c:?}");
    }

    #[test]
    fn deterministic() {
        let xs = [1.0, 2.0, 3.0, 4.0, 6.0];
        let ys = [0.3, 0.1, 0.05, 0.02, 0.01];
        assert_eq!(fit(FitModel::Power, &xs, &ys).unwrap(), fit(FitModel::Power, &xs, &ys).unwrap());
    }
}
