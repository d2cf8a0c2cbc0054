//! Two-parameter metric tensors and their scalar curvature.
//!
//! The curvature follows the contraction `R = g^{ij} R^k_{ikj}`, under which
//! the unit sphere has `R = +2`. It is evaluated from the metric and its
//! first and second partial derivatives as
//!
//! ```text
//! R = (A + B) / sqrt(g)
//! A = d1[ ( (g12/g11) d2 g11 - d1 g22 ) / sqrt(g) ]
//! B = d2[ ( 2 d1 g12 - d2 g11 - (g12/g11) d1 g11 ) / sqrt(g) ]
//! ```
//!
//! with `g = det g_ij`. Derivatives come either from closed forms (see
//! [`jet`]) or from finite-difference stencils over a [`MetricField`].

pub mod jet;

mod curvature;

pub use curvature::{
    curvature_from_mesh, derivatives_fd, scalar_curvature_closed, scalar_curvature_closed_with, scalar_curvature_fd,
    scalar_curvature_fd_refined, CurvatureMethod, CurvatureResult, DEGENERACY_RATIO,
};

use crate::error::{Error, Result};
use jet::{Jet2, Scalar};
use serde::{Deserialize, Serialize};

/// A point `(x1, x2)` of the two-dimensional parameter manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub x1: f64,
    pub x2: f64,
}

impl ParameterPoint {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        if !(x1.is_finite() && x2.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite parameter point ({x1}, {x2})")));
        }
        Ok(Self { x1, x2 })
    }

    pub(crate) fn shifted(self, d1: f64, d2: f64) -> Self {
        Self { x1: self.x1 + d1, x2: self.x2 + d2 }
    }
}

/// Symmetric 2x2 metric; `g21` is implied equal to `g12`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricTensor2D {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl MetricTensor2D {
    pub const fn new(g11: f64, g12: f64, g22: f64) -> Self {
        Self { g11, g12, g22 }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn determinant(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    pub fn trace(&self) -> f64 {
        self.g11 + self.g22
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let half_tr = 0.5 * self.trace();
        let half_diff = 0.5 * (self.g11 - self.g22);
        let r = half_diff.hypot(self.g12);
        [half_tr - r, half_tr + r]
    }

    /// Positive semidefinite up to `-tol * trace`.
    pub fn is_psd(&self, tol: f64) -> bool {
        let [lo, _] = self.eigenvalues();
        lo >= -tol * self.trace().abs()
    }

    pub fn components(&self) -> [f64; 3] {
        [self.g11, self.g12, self.g22]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.g11 - other.g11).abs().max((self.g12 - other.g12).abs()).max((self.g22 - other.g22).abs())
    }

    /// Exchanges the roles of `x1` and `x2`.
    pub fn swapped(&self) -> Self {
        Self::new(self.g22, self.g12, self.g11)
    }
}

impl std::ops::Sub for MetricTensor2D {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.g11 - o.g11, self.g12 - o.g12, self.g22 - o.g22)
    }
}

impl std::ops::Add for MetricTensor2D {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.g11 + o.g11, self.g12 + o.g12, self.g22 + o.g22)
    }
}

impl std::ops::Mul<f64> for MetricTensor2D {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.g11 * s, self.g12 * s, self.g22 * s)
    }
}

/// Determinant `g11 g22 - g12^2`.
pub fn determinant(g: &MetricTensor2D) -> f64 {
    g.determinant()
}

/// A metric together with the partial derivatives consumed by the curvature
/// formula.
///
/// Component arrays are ordered `[g11, g12, g22]`. `d[k]` holds first
/// derivatives along `x_{k+1}`; `dd` holds second derivatives ordered
/// `[d11, d12, d22]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricDerivatives {
    pub g: MetricTensor2D,
    pub d: [[f64; 3]; 2],
    pub dd: [[f64; 3]; 3],
}

impl MetricDerivatives {
    /// A constant metric with all derivatives zero.
    pub fn constant(g: MetricTensor2D) -> Self {
        Self { g, d: [[0.0; 3]; 2], dd: [[0.0; 3]; 3] }
    }

    /// Collects exact derivatives from components evaluated on jets.
    pub fn from_jets(c: [Jet2; 3]) -> Self {
        Self {
            g: MetricTensor2D::new(c[0].v, c[1].v, c[2].v),
            d: [[c[0].g[0], c[1].g[0], c[2].g[0]], [c[0].g[1], c[1].g[1], c[2].g[1]]],
            dd: [
                [c[0].h[0], c[1].h[0], c[2].h[0]],
                [c[0].h[1], c[1].h[1], c[2].h[1]],
                [c[0].h[2], c[1].h[2], c[2].h[2]],
            ],
        }
    }

    /// Differentiates a closed-form metric `f(x1, x2) -> [g11, g12, g22]`
    /// exactly at `p`.
    pub fn from_closed_form<F>(f: F, p: ParameterPoint) -> Self
    where
        F: Fn(Jet2, Jet2) -> [Jet2; 3],
    {
        Self::from_jets(f(Jet2::var1(p.x1), Jet2::var2(p.x2)))
    }

    /// Relabels `x1 <-> x2`, transposing every component and derivative.
    pub fn swapped(&self) -> Self {
        let sw = |a: [f64; 3]| [a[2], a[1], a[0]];
        Self {
            g: self.g.swapped(),
            d: [sw(self.d[1]), sw(self.d[0])],
            dd: [sw(self.dd[2]), sw(self.dd[1]), sw(self.dd[0])],
        }
    }
}

/// A metric defined over a region of parameter space.
///
/// Implementations must be deterministic: the same point always produces a
/// bitwise-identical tensor.
pub trait MetricField: Sync {
    fn metric(&self, p: ParameterPoint) -> Result<MetricTensor2D>;

    /// Whether `p` lies inside the region where the metric is valid.
    fn contains(&self, _p: ParameterPoint) -> bool {
        true
    }
}

/// A [`MetricField`] backed by a pair of closures.
pub struct FnField<F, D> {
    eval: F,
    domain: D,
}

impl<F, D> FnField<F, D>
where
    F: Fn(ParameterPoint) -> Result<MetricTensor2D> + Sync,
    D: Fn(ParameterPoint) -> bool + Sync,
{
    pub fn new(eval: F, domain: D) -> Self {
        Self { eval, domain }
    }
}

impl<F, D> MetricField for FnField<F, D>
where
    F: Fn(ParameterPoint) -> Result<MetricTensor2D> + Sync,
    D: Fn(ParameterPoint) -> bool + Sync,
{
    fn metric(&self, p: ParameterPoint) -> Result<MetricTensor2D> {
        (self.eval)(p)
    }
    fn contains(&self, p: ParameterPoint) -> bool {
        (self.domain)(p)
    }
}

/// Builds a field from a closed-form metric written over [`Scalar`].
pub fn closed_form_field<F, D>(f: F, domain: D) -> FnField<impl Fn(ParameterPoint) -> Result<MetricTensor2D> + Sync, D>
where
    F: Fn(f64, f64) -> [f64; 3] + Sync,
    D: Fn(ParameterPoint) -> bool + Sync,
{
    FnField::new(
        move |p: ParameterPoint| {
            let [a, b, c] = f(p.x1, p.x2);
            Ok(MetricTensor2D::new(a, b, c))
        },
        domain,
    )
}

/// Unit two-sphere `diag(1, sin^2 x1)`.
pub fn sphere_metric<T: Scalar>(x1: T, _x2: T) -> [T; 3] {
    let s = x1.sin();
    [T::cst(1.0), T::cst(0.0), s * s]
}

/// Hyperbolic plane `diag(1, sinh^2 x1)`.
pub fn hyperbolic_metric<T: Scalar>(x1: T, _x2: T) -> [T; 3] {
    let s = x1.sinh();
    [T::cst(1.0), T::cst(0.0), s * s]
}

/// A dense rectangular grid stored row-major with `x1` as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh<T> {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<T>,
}

impl<T> Mesh<T> {
    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                data.push(f(i, j));
            }
        }
        Self { nx, ny, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.ny + j]
    }
}
