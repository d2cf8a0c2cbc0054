use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Mesh, MetricDerivatives, MetricField, MetricTensor2D, ParameterPoint};
use crate::error::{Error, Result};

/// Default ratio for the degeneracy test `det <= ratio * trace^2`.
pub const DEGENERACY_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureMethod {
    ClosedForm,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureResult {
    pub r: f64,
    pub method: CurvatureMethod,
    /// Finite-difference step; zero for closed-form derivatives.
    pub step: f64,
}

/// Scalar curvature from exact derivatives.
pub fn scalar_curvature_closed(d: &MetricDerivatives) -> Result<CurvatureResult> {
    scalar_curvature_closed_with(d, DEGENERACY_RATIO)
}

/// As [`scalar_curvature_closed`] with an explicit degeneracy ratio.
pub fn scalar_curvature_closed_with(d: &MetricDerivatives, ratio: f64) -> Result<CurvatureResult> {
    let r = eval_curvature(d, ratio)?;
    Ok(CurvatureResult { r, method: CurvatureMethod::ClosedForm, step: 0.0 })
}

fn eval_curvature(d: &MetricDerivatives, ratio: f64) -> Result<f64> {
    let MetricTensor2D { g11, g12, g22 } = d.g;
    let det = d.g.determinant();
    let threshold = ratio * d.g.trace().powi(2);
    if !(det > threshold) {
        return Err(Error::DegenerateMetric { det, threshold });
    }
    let [[e1, f1, h1], [e2, f2, h2]] = d.d;
    let [[_, _, h11], [e12, f12, _], [e22, _, _]] = d.dd;

    let s = det.sqrt();
    let det_1 = e1 * g22 + g11 * h1 - 2.0 * g12 * f1;
    let det_2 = e2 * g22 + g11 * h2 - 2.0 * g12 * f2;
    let s_1 = det_1 / (2.0 * s);
    let s_2 = det_2 / (2.0 * s);
    let ratio12 = g12 / g11;
    let ratio12_1 = f1 / g11 - g12 * e1 / (g11 * g11);
    let ratio12_2 = f2 / g11 - g12 * e2 / (g11 * g11);

    // A = d1[P / s]
    let p = ratio12 * e2 - h1;
    let p_1 = ratio12_1 * e2 + ratio12 * e12 - h11;
    let a = p_1 / s - p * s_1 / (s * s);

    // B = d2[Q / s]
    let q = 2.0 * f1 - e2 - ratio12 * e1;
    let q_2 = 2.0 * f12 - e22 - ratio12_2 * e1 - ratio12 * e12;
    let b = q_2 / s - q * s_2 / (s * s);

    Ok((a + b) / s)
}

/// Fourth-order central first and second derivatives along one axis, from
/// samples at offsets `-2..=2`.
fn axis_derivatives(f: [f64; 5], step: f64) -> (f64, f64) {
    let first = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * step);
    let second = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * step * step);
    (first, second)
}

/// Metric derivatives from the 5-point axis stencils and the 4-point cross
/// stencil.
///
/// `axis1[k]`/`axis2[k]` are the metric at offsets `k-2` along each axis
/// (index 2 is the centre); `corners` are `(+,+), (+,-), (-,+), (-,-)`.
fn derivatives_from_stencil(
    axis1: &[MetricTensor2D; 5],
    axis2: &[MetricTensor2D; 5],
    corners: &[MetricTensor2D; 4],
    step1: f64,
    step2: f64,
) -> MetricDerivatives {
    let mut d = [[0.0; 3]; 2];
    let mut dd = [[0.0; 3]; 3];
    for c in 0..3 {
        let along1 = axis1.map(|g| g.components()[c]);
        let along2 = axis2.map(|g| g.components()[c]);
        let (d1, d11) = axis_derivatives(along1, step1);
        let (d2, d22) = axis_derivatives(along2, step2);
        let k = corners.map(|g| g.components()[c]);
        let d12 = (k[0] - k[1] - k[2] + k[3]) / (4.0 * step1 * step2);
        d[0][c] = d1;
        d[1][c] = d2;
        dd[0][c] = d11;
        dd[1][c] = d12;
        dd[2][c] = d22;
    }
    MetricDerivatives { g: axis1[2], d, dd }
}

/// Samples the stencil around `p` and returns finite-difference derivatives.
pub fn derivatives_fd<F: MetricField + ?Sized>(
    field: &F,
    p: ParameterPoint,
    step1: f64,
    step2: f64,
) -> Result<MetricDerivatives> {
    if !(step1 > 0.0 && step2 > 0.0) {
        return Err(Error::InvalidInput(format!("steps must be positive, got ({step1}, {step2})")));
    }
    let eval = |q: ParameterPoint| -> Result<MetricTensor2D> {
        if !field.contains(q) {
            return Err(Error::DomainViolation { x1: q.x1, x2: q.x2 });
        }
        field.metric(q)
    };
    let centre = eval(p)?;
    let mut axis1 = [centre; 5];
    let mut axis2 = [centre; 5];
    for k in [-2i32, -1, 1, 2] {
        let idx = (k + 2) as usize;
        axis1[idx] = eval(p.shifted(f64::from(k) * step1, 0.0))?;
        axis2[idx] = eval(p.shifted(0.0, f64::from(k) * step2))?;
    }
    let corners = [
        eval(p.shifted(step1, step2))?,
        eval(p.shifted(step1, -step2))?,
        eval(p.shifted(-step1, step2))?,
        eval(p.shifted(-step1, -step2))?,
    ];
    Ok(derivatives_from_stencil(&axis1, &axis2, &corners, step1, step2))
}

/// Scalar curvature of `field` at `p` by central finite differences.
pub fn scalar_curvature_fd<F: MetricField + ?Sized>(
    field: &F,
    p: ParameterPoint,
    step: f64,
) -> Result<CurvatureResult> {
    let d = derivatives_fd(field, p, step, step)?;
    let r = eval_curvature(&d, DEGENERACY_RATIO)?;
    Ok(CurvatureResult { r, method: CurvatureMethod::FiniteDifference, step })
}

/// Richardson-extrapolated curvature from steps `step` and `step / 2`.
///
/// The cross stencil limits the raw estimate to second order, so the
/// combination `(4 R(h/2) - R(h)) / 3` cancels the leading error term.
pub fn scalar_curvature_fd_refined<F: MetricField + ?Sized>(
    field: &F,
    p: ParameterPoint,
    step: f64,
) -> Result<CurvatureResult> {
    let coarse = scalar_curvature_fd(field, p, step)?.r;
    let fine = scalar_curvature_fd(field, p, 0.5 * step)?.r;
    Ok(CurvatureResult { r: (4.0 * fine - coarse) / 3.0, method: CurvatureMethod::FiniteDifference, step })
}

/// Curvature at every interior node of a uniformly spaced metric grid.
///
/// Nodes within two cells of the border, and nodes whose metric is
/// degenerate, are reported as `None`.
pub fn curvature_from_mesh(
    samples: &Mesh<MetricTensor2D>,
    spacing: (f64, f64),
) -> Result<Mesh<Option<CurvatureResult>>> {
    let (nx, ny) = (samples.nx, samples.ny);
    if nx < 5 || ny < 5 {
        return Err(Error::GridTooSmall { nx, ny });
    }
    if samples.data.len() != nx * ny {
        return Err(Error::InvalidInput("mesh data length does not match its shape".into()));
    }
    let (s1, s2) = spacing;
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::InvalidInput("mesh spacing must be positive".into()));
    }
    let data = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / ny, idx % ny);
            if i < 2 || j < 2 || i + 2 >= nx || j + 2 >= ny {
                return None;
            }
            let at = |a: usize, b: usize| *samples.get(a, b);
            let axis1 = [at(i - 2, j), at(i - 1, j), at(i, j), at(i + 1, j), at(i + 2, j)];
            let axis2 = [at(i, j - 2), at(i, j - 1), at(i, j), at(i, j + 1), at(i, j + 2)];
            let corners = [at(i + 1, j + 1), at(i + 1, j - 1), at(i - 1, j + 1), at(i - 1, j - 1)];
            let d = derivatives_from_stencil(&axis1, &axis2, &corners, s1, s2);
            eval_curvature(&d, DEGENERACY_RATIO).ok().map(|r| CurvatureResult {
                r,
                method: CurvatureMethod::FiniteDifference,
                step: s1.max(s2),
            })
        })
        .collect();
    Ok(Mesh { nx, ny, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{closed_form_field, hyperbolic_metric, sphere_metric};

    fn pt(a: f64, b: f64) -> ParameterPoint {
        ParameterPoint::new(a, b).unwrap()
    }

    #[test]
    fn flat_metric_has_zero_curvature() {
        let d = MetricDerivatives::constant(MetricTensor2D::identity());
        assert_eq!(scalar_curvature_closed(&d).unwrap().r, 0.0);
    }

    #[test]
    fn sphere_closed_form_is_two() {
        for x in [0.3, 1.0, 2.0] {
            let d = MetricDerivatives::from_closed_form(sphere_metric, pt(x, 0.4));
            let r = scalar_curvature_closed(&d).unwrap().r;
            assert!((r - 2.0).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn hyperbolic_closed_form_is_minus_two() {
        let d = MetricDerivatives::from_closed_form(hyperbolic_metric, pt(0.8, -1.0));
        let r = scalar_curvature_closed(&d).unwrap().r;
        assert!((r + 2.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn degenerate_metric_rejected() {
        let g = MetricTensor2D::new(1.0 / 128.0, 1.0 / 128.0, 1.0 / 128.0);
        let err = scalar_curvature_closed(&MetricDerivatives::constant(g)).unwrap_err();
        assert!(matches!(err, Error::DegenerateMetric { .. }));
    }

    #[test]
    fn flat_field_fd() {
        let field = closed_form_field(|_, _| [1.0, 0.0, 1.0], |_| true);
        let r = scalar_curvature_fd(&field, pt(0.2, 0.5), 1e-3).unwrap().r;
        assert!(r.abs() < 1e-10);
    }

    #[test]
    fn sphere_fd() {
        let field = closed_form_field(sphere_metric::<f64>, |_| true);
        let r = scalar_curvature_fd(&field, pt(1.0, 0.0), 1e-4).unwrap().r;
        assert!((r - 2.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn stencil_outside_domain_is_reported() {
        let field = closed_form_field(sphere_metric::<f64>, |p: ParameterPoint| p.x1 < 1.0);
        let err = scalar_curvature_fd(&field, pt(0.999, 0.0), 1e-3).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { .. }));
    }

    #[test]
    fn fd_converges_at_second_order() {
        let field = closed_form_field(sphere_metric::<f64>, |_| true);
        let p = pt(0.7, 0.1);
        let e1 = (scalar_curvature_fd(&field, p, 0.04).unwrap().r - 2.0).abs();
        let e2 = (scalar_curvature_fd(&field, p, 0.02).unwrap().r - 2.0).abs();
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "observed order {order}");
    }

    #[test]
    fn refinement_improves_accuracy() {
        let field = closed_form_field(hyperbolic_metric::<f64>, |_| true);
        let p = pt(0.9, 0.0);
        let raw = scalar_curvature_fd(&field, p, 0.02).unwrap().r;
        let refined = scalar_curvature_fd_refined(&field, p, 0.02).unwrap().r;
        assert!((refined + 2.0).abs() < (raw + 2.0).abs());
    }

    #[test]
    fn mesh_too_small() {
        let mesh = Mesh::from_fn(4, 6, |_, _| MetricTensor2D::identity());
        assert_eq!(curvature_from_mesh(&mesh, (0.1, 0.1)).unwrap_err(), Error::GridTooSmall { nx: 4, ny: 6 });
    }

    #[test]
    fn identity_mesh_interior_is_flat() {
        let mesh = Mesh::from_fn(7, 6, |_, _| MetricTensor2D::identity());
        let out = curvature_from_mesh(&mesh, (0.1, 0.2)).unwrap();
        for i in 0..7 {
            for j in 0..6 {
                let interior = (2..5).contains(&i) && (2..4).contains(&j);
                match out.get(i, j) {
                    Some(c) => {
                        assert!(interior);
                        assert_eq!(c.r, 0.0);
                    }
                    None => assert!(!interior),
                }
            }
        }
    }

    #[test]
    fn sphere_mesh() {
        let h = 0.01;
        let mesh = Mesh::from_fn(21, 9, |i, j| {
            let [a, b, c] = sphere_metric(0.8 + i as f64 * h, j as f64 * h);
            MetricTensor2D::new(a, b, c)
        });
        let out = curvature_from_mesh(&mesh, (h, h)).unwrap();
        for c in out.data.iter().flatten() {
            assert!((c.r - 2.0).abs() < 1e-3, "{}", c.r);
        }
    }
}
