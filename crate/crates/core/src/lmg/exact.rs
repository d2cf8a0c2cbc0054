//! Exact finite-j LMG: `H = -2h Jz - (Jx^2 + gamma Jy^2) / j` in the `Jz`
//! basis, its ground state and the perturbative QMT
//!
//! ```text
//! g0_ij = sum_{n != 0} <0|O_i|n><n|O_j|0> / (E_n - E_0)^2,   O_1 = -2 Jz,  O_2 = -Jy^2 / j
//! ```
//!
//! Every matrix is real. `Jy` is never formed; only `Jy^2 = -((J+ - J-)/2)^2`.
//! `H`, `O_1` and `O_2` only couple `m` to `m` and `m +- 2`, so they split
//! into two tridiagonal blocks by the parity of `m + j`.
//!
//! Basis index `k = m + j` runs over `0..2j+1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::ops::{Add, Div, Mul, Neg, Sub};

use qd::Quad;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MetricField, MetricTensor2D, ParameterPoint};

/// Pseudospin `j`, stored as the integer `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Spin {
    twice_j: u32,
}

impl Spin {
    pub fn from_twice(twice_j: u32) -> Result<Self> {
        if twice_j == 0 {
            return Err(Error::InvalidInput("pseudospin must be at least 1/2".into()));
        }
        Ok(Self { twice_j })
    }

    /// Accepts `j` only when `2j` is a positive integer.
    pub fn new(j: f64) -> Result<Self> {
        let t = 2.0 * j;
        if !(t >= 1.0 && t.fract() == 0.0 && t <= f64::from(u32::MAX)) {
            return Err(Error::InvalidInput(format!("j = {j} is not a positive half-integer")));
        }
        Self::from_twice(t as u32)
    }

    pub fn j(&self) -> f64 {
        f64::from(self.twice_j) / 2.0
    }

    pub fn twice_j(&self) -> u32 {
        self.twice_j
    }

    pub fn dim(&self) -> usize {
        self.twice_j as usize + 1
    }

    pub fn m(&self, k: usize) -> f64 {
        k as f64 - self.j()
    }

    /// `j(j+1) - m^2`, the diagonal of `Jx^2 + Jy^2`.
    fn perp(&self, k: usize) -> f64 {
        let (j, m) = (self.j(), self.m(k));
        j * (j + 1.0) - m * m
    }

    /// `<k+1|J+|k> = sqrt(j(j+1) - m(m+1))`.
    fn ladder(&self, k: usize) -> f64 {
        let (j, m) = (self.j(), self.m(k));
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }

    /// `<k+2|J+^2|k>^2 = (j-m)(j+m+1)(j-m-1)(j+m+2)`, an exact integer.
    fn ladder2_sq(&self, k: usize) -> f64 {
        let (j, m) = (self.j(), self.m(k));
        (j - m) * (j + m + 1.0) * (j - m - 1.0) * (j + m + 2.0)
    }
}

/// `Jz` and the `J+` ladder, with the real symmetric products derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMatrices {
    pub spin: Spin,
    pub jz: DMatrix<f64>,
    /// `|<m+1|J+|m>|` on the subdiagonal.
    pub jp: DMatrix<f64>,
}

impl SpinMatrices {
    pub fn new(spin: Spin) -> Self {
        let n = spin.dim();
        let jz = DMatrix::from_fn(n, n, |r, c| if r == c { spin.m(r) } else { 0.0 });
        let jp = DMatrix::from_fn(n, n, |r, c| if r == c + 1 { spin.ladder(c) } else { 0.0 });
        Self { spin, jz, jp }
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn jx(&self) -> DMatrix<f64> {
        (&self.jp + self.jp.transpose()) * 0.5
    }

    /// `-((J+ - J-)/2)^2`, real symmetric.
    pub fn jy_sq(&self) -> DMatrix<f64> {
        let d = (&self.jp - self.jp.transpose()) * 0.5;
        -(&d * &d)
    }

    /// `max |Jx^2 + Jy^2 + Jz^2 - j(j+1)|` over all entries.
    pub fn casimir_residual(&self) -> f64 {
        let jx = self.jx();
        let j = self.spin.j();
        let c = &jx * &jx + self.jy_sq() + &self.jz * &self.jz;
        let target = DMatrix::<f64>::identity(self.dim(), self.dim()) * (j * (j + 1.0));
        (c - target).amax()
    }
}

/// Entries of a symmetric matrix that couples `k` only to `k` and `k + 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Stencil<T> {
    diag: T,
    /// Coupling between `k` and `k + 2`.
    skip: T,
}

/// Scalar arithmetic for the tridiagonal kernels: `f64`, or the
/// double-double `Quad` (~32 significant digits).
pub trait Real:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn lift(x: f64) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// Nearest `f64`.
    fn lead(self) -> f64;
}

impl Real for f64 {
    fn lift(x: f64) -> Self {
        x
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn lead(self) -> f64 {
        self
    }
}

impl Real for Quad {
    fn lift(x: f64) -> Self {
        Quad::from(x)
    }
    fn sqrt(self) -> Self {
        Quad::sqrt(self)
    }
    fn abs(self) -> Self {
        Quad::abs(self)
    }
    fn lead(self) -> f64 {
        self.0 + self.1
    }
}

// Every f64 factor below (m, 2j, j(j+1) - m^2, the squared ladder product)
// is exact, so the entries carry only the rounding of `T` itself.
fn hamiltonian_entries<T: Real>(spin: Spin, h: f64, gamma: f64, k: usize) -> Stencil<T> {
    let j = spin.j();
    let (h, g, one) = (T::lift(h), T::lift(gamma), T::lift(1.0));
    Stencil {
        diag: h * T::lift(-2.0 * spin.m(k)) - (one + g) * T::lift(spin.perp(k)) / T::lift(2.0 * j),
        skip: if k + 2 < spin.dim() {
            -(one - g) * T::lift(spin.ladder2_sq(k)).sqrt() / T::lift(4.0 * j)
        } else {
            T::lift(0.0)
        },
    }
}

fn o1_entries<T: Real>(spin: Spin, k: usize) -> Stencil<T> {
    Stencil { diag: T::lift(-2.0 * spin.m(k)), skip: T::lift(0.0) }
}

fn o2_entries<T: Real>(spin: Spin, k: usize) -> Stencil<T> {
    let j = spin.j();
    Stencil {
        diag: -T::lift(spin.perp(k)) / T::lift(2.0 * j),
        skip: if k + 2 < spin.dim() { T::lift(spin.ladder2_sq(k)).sqrt() / T::lift(4.0 * j) } else { T::lift(0.0) },
    }
}

fn dense(spin: Spin, f: impl Fn(usize) -> Stencil<f64>) -> DMatrix<f64> {
    let n = spin.dim();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let s = f(k);
        m[(k, k)] = s.diag;
        if k + 2 < n {
            m[(k, k + 2)] = s.skip;
            m[(k + 2, k)] = s.skip;
        }
    }
    m
}

/// Dense `H` in the `Jz` basis; exactly symmetric.
pub fn build_hamiltonian(spin: Spin, h: f64, gamma: f64) -> DMatrix<f64> {
    dense(spin, |k| hamiltonian_entries(spin, h, gamma, k))
}

/// Eigenpairs sorted by ascending eigenvalue; column `n` of `eigenvectors`
/// belongs to `eigenvalues[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn ground_state(&self) -> DVector<f64> {
        self.eigenvectors.column(0).into_owned()
    }

    /// `max_n |H v_n - E_n v_n|`.
    pub fn max_residual(&self, h: &DMatrix<f64>) -> f64 {
        let r = h * &self.eigenvectors
            - &self.eigenvectors * DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        r.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn orthonormality_error(&self) -> f64 {
        let n = self.eigenvectors.ncols();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(n, n)).amax()
    }

    /// Largest eigenvalue magnitude, used as the scale of `H`.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a: f64, e| a.max(e.abs()))
    }
}

/// Makes the largest-magnitude component positive (first one on ties).
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Full eigendecomposition of a real symmetric matrix.
pub fn diagonalize(h: &DMatrix<f64>) -> Result<Spectrum> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::InvalidInput(format!("matrix is {}x{}, not square", n, h.ncols())));
    }
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 200 * n.max(1))
        .ok_or_else(|| Error::SolverFailure { dim: n, reason: format!("no convergence, |H|_max = {:e}", h.amax()) })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (c, &i) in order.iter().enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_sign(&mut v);
        vectors.set_column(c, &DVector::from_vec(v));
        values.push(eig.eigenvalues[i]);
    }
    Ok(Spectrum { eigenvalues: values, eigenvectors: vectors })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationOps {
    /// `dH/dh = -2 Jz`.
    pub o1: DMatrix<f64>,
    /// `dH/dgamma = -Jy^2 / j`.
    pub o2: DMatrix<f64>,
}

impl DeformationOps {
    pub fn new(spin: Spin) -> Self {
        Self { o1: dense(spin, |k| o1_entries(spin, k)), o2: dense(spin, |k| o2_entries(spin, k)) }
    }
}

/// Ground-state gap thresholds, relative to the spectral scale of `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    /// Below this the ground state counts as degenerate and the QMT is refused.
    pub gap_min: f64,
    /// Below this a near-degeneracy warning is raised.
    pub gap_warn: f64,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self { gap_min: 1e-12, gap_warn: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QmtReport {
    pub metric: MetricTensor2D,
    pub ground_energy: f64,
    pub gap: f64,
    pub near_degenerate: bool,
}

fn check_gap(gap: f64, scale: f64, cfg: &GapConfig) -> Result<bool> {
    let scale = scale.max(f64::MIN_POSITIVE);
    if !(gap > cfg.gap_min * scale) {
        return Err(Error::DegenerateGroundState { gap, gap_min: cfg.gap_min * scale });
    }
    let warn = gap < cfg.gap_warn * scale;
    if warn {
        log::warn!("near-degenerate ground state: gap {gap:e}, scale {scale:e}");
    }
    Ok(warn)
}

/// Perturbative QMT of the lowest eigenstate of `s`.
///
/// Built as the Gram matrix of `<n|O_i|0> / (E_n - E_0)`, so the result is
/// PSD and insensitive to eigenvector signs.
pub fn qmt_perturbative(s: &Spectrum, ops: &DeformationOps, cfg: &GapConfig) -> Result<QmtReport> {
    let n = s.eigenvalues.len();
    if n < 2 {
        return Err(Error::InvalidInput("spectrum needs at least two states".into()));
    }
    let e0 = s.eigenvalues[0];
    let gap = s.eigenvalues[1] - e0;
    let near_degenerate = check_gap(gap, s.norm(), cfg)?;
    let psi = s.ground_state();
    let a1 = s.eigenvectors.tr_mul(&(&ops.o1 * &psi));
    let a2 = s.eigenvectors.tr_mul(&(&ops.o2 * &psi));
    let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
    for k in 1..n {
        let w = 1.0 / (s.eigenvalues[k] - e0);
        let (x, y) = (a1[k] * w, a2[k] * w);
        g11 += x * x;
        g12 += x * y;
        g22 += y * y;
    }
    Ok(QmtReport { metric: MetricTensor2D::new(g11, g12, g22), ground_energy: e0, gap, near_degenerate })
}

/// Basis indices split by the parity of `m + j`: `[even, odd]`.
pub fn parity_blocks(spin: Spin) -> [Vec<usize>; 2] {
    let all = 0..spin.dim();
    [all.clone().filter(|k| k % 2 == 0).collect(), all.filter(|k| k % 2 == 1).collect()]
}

/// Parity of the block holding `m = j`, which contains the ground state.
pub fn ground_parity(spin: Spin) -> usize {
    spin.twice_j as usize % 2
}

/// A symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T = f64> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s = s + self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s = s + self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `(T - shift) x = b` by Gaussian elimination with partial
    /// pivoting; an exactly zero pivot is replaced by `eps * scale`.
    pub fn solve_shifted(&self, shift: T, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut d: Vec<T> = self.diag.iter().map(|&a| a - shift).collect();
        let dl = self.off.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![T::lift(0.0); n.saturating_sub(2)];
        let mut x = b.to_vec();
        let scale = self.diag.iter().chain(&self.off).fold(f64::MIN_POSITIVE, |m, v| m.max(v.lead().abs()));
        let tiny = T::lift(f64::EPSILON * scale);
        let guard = |v: T| if v.lead() == 0.0 { tiny } else { v };
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                d[i] = guard(d[i]);
                let fact = dl[i] / d[i];
                d[i + 1] = d[i + 1] - fact * du[i];
                x[i + 1] = x[i + 1] - fact * x[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                du[i] = temp;
                let t = x[i];
                x[i] = x[i + 1];
                x[i + 1] = t - fact * x[i + 1];
            }
        }
        if n > 0 {
            d[n - 1] = guard(d[n - 1]);
            x[n - 1] = x[n - 1] / d[n - 1];
        }
        if n > 1 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        x
    }
}

impl Tridiagonal<f64> {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                self.diag[r]
            } else if r == c + 1 {
                self.off[c]
            } else if c == r + 1 {
                self.off[r]
            } else {
                0.0
            }
        })
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    fn count_below(&self, x: f64, tiny: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.dim() {
            let b2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            d = self.diag[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection to machine precision.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let tiny = f64::EPSILON * scale;
        lo -= tiny;
        hi += tiny;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid, tiny) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::lift(0.0), |s, (&x, &y)| s + x * y)
}

fn normalize<T: Real>(v: &mut [T]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x = *x / n);
}

fn block<T: Real>(spin: Spin, parity: usize, f: impl Fn(usize) -> Stencil<T>) -> Tridiagonal<T> {
    let idx: Vec<usize> = (parity..spin.dim()).step_by(2).collect();
    let diag = idx.iter().map(|&k| f(k).diag).collect();
    let off = idx.iter().take(idx.len().saturating_sub(1)).map(|&k| f(k).skip).collect();
    Tridiagonal { diag, off }
}

/// `H`, `O_1`, `O_2` restricted to the parity block holding the ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundBlock {
    pub spin: Spin,
    pub parity: usize,
    pub h: Tridiagonal,
    pub o1: Tridiagonal,
    pub o2: Tridiagonal,
}

impl GroundBlock {
    pub fn new(spin: Spin, h: f64, gamma: f64) -> Self {
        let parity = ground_parity(spin);
        Self {
            spin,
            parity,
            h: block(spin, parity, |k| hamiltonian_entries(spin, h, gamma, k)),
            o1: block(spin, parity, |k| o1_entries(spin, k)),
            o2: block(spin, parity, |k| o2_entries(spin, k)),
        }
    }

    /// Embeds a block vector into the full `2j+1` basis.
    pub fn embed(&self, v: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.spin.dim());
        for (i, x) in v.iter().enumerate() {
            out[self.parity + 2 * i] = *x;
        }
        out
    }
}

/// Ground state of a parity block: energy, gap within the block, sign-fixed vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGround {
    pub energy: f64,
    pub gap: f64,
    pub scale: f64,
    pub state: Vec<f64>,
}

/// Ground state by bisection and inverse iteration.
pub fn block_ground_state(t: &Tridiagonal) -> BlockGround {
    let n = t.dim();
    let e0 = t.eigenvalue(0);
    let gap = if n > 1 { t.eigenvalue(1) - e0 } else { f64::INFINITY };
    let (lo, hi) = t.gershgorin();
    let scale = lo.abs().max(hi.abs());
    let mut v = vec![1.0; n];
    normalize(&mut v);
    for _ in 0..3 {
        v = t.solve_shifted(e0, &v);
        normalize(&mut v);
    }
    fix_sign(&mut v);
    BlockGround { energy: e0, gap, scale, state: v }
}

/// Which eigen-solver backs the exact QMT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactSolver {
    /// Dense diagonalization of the full `2j+1` matrix.
    Full,
    /// Dense diagonalization of the ground-state parity block.
    Blocked,
    /// Ground-state parity block, bisection plus a tridiagonal resolvent solve.
    #[default]
    Tridiagonal,
    /// As `Tridiagonal`, in double-double arithmetic. About ten times slower.
    Extended,
}

/// Exact perturbative QMT at `(h, gamma)`.
///
/// The blocked solvers follow the ground state of the `m = j` parity block.
/// In the broken phase this is the lower member of the quasi-degenerate
/// doublet, whose partner has opposite parity and never enters the sum.
pub fn exact_qmt(spin: Spin, h: f64, gamma: f64, solver: ExactSolver, cfg: &GapConfig) -> Result<QmtReport> {
    match solver {
        ExactSolver::Full => {
            let s = diagonalize(&build_hamiltonian(spin, h, gamma))?;
            qmt_perturbative(&s, &DeformationOps::new(spin), cfg)
        }
        ExactSolver::Blocked => {
            let b = GroundBlock::new(spin, h, gamma);
            if b.h.dim() < 2 {
                return Ok(trivial_report(&b));
            }
            let s = diagonalize(&b.h.to_dense())?;
            let ops = DeformationOps { o1: b.o1.to_dense(), o2: b.o2.to_dense() };
            qmt_perturbative(&s, &ops, cfg)
        }
        ExactSolver::Tridiagonal => {
            let b = GroundBlock::new(spin, h, gamma);
            if b.h.dim() < 2 {
                return Ok(trivial_report(&b));
            }
            let g = block_ground_state(&b.h);
            let near_degenerate = check_gap(g.gap, g.scale, cfg)?;
            let x1 = resolvent_vector(&b.h, g.energy, &g.state, &b.o1);
            let x2 = resolvent_vector(&b.h, g.energy, &g.state, &b.o2);
            Ok(QmtReport {
                metric: MetricTensor2D::new(dot(&x1, &x1), dot(&x1, &x2), dot(&x2, &x2)),
                ground_energy: g.energy,
                gap: g.gap,
                near_degenerate,
            })
        }
        ExactSolver::Extended => extended_qmt(spin, h, gamma, cfg),
    }
}

/// A one-state block (only for `j = 1/2`) has nothing to sum over.
fn trivial_report(b: &GroundBlock) -> QmtReport {
    QmtReport {
        metric: MetricTensor2D::default(),
        ground_energy: b.h.diag[0],
        gap: f64::INFINITY,
        near_degenerate: false,
    }
}

fn project_out<T: Real>(v: &mut [T], psi: &[T]) {
    let c = dot(v, psi);
    v.iter_mut().zip(psi).for_each(|(x, &p)| *x = *x - c * p);
}

/// `(H - E0)^+ Q O psi` with `Q` the projector off the ground state `psi`.
fn resolvent_vector<T: Real>(h: &Tridiagonal<T>, e0: T, psi: &[T], op: &Tridiagonal<T>) -> Vec<T> {
    let mut rhs = op.mul_vec(psi);
    project_out(&mut rhs, psi);
    let mut x = h.solve_shifted(e0, &rhs);
    project_out(&mut x, psi);
    // one step of residual correction
    let hx = h.mul_vec(&x);
    let mut r: Vec<T> = rhs.iter().zip(&hx).zip(&x).map(|((&b, &a), &xi)| b - (a - e0 * xi)).collect();
    project_out(&mut r, psi);
    let mut dx = h.solve_shifted(e0, &r);
    project_out(&mut dx, psi);
    x.iter_mut().zip(&dx).for_each(|(a, &b)| *a = *a + b);
    x
}

/// The tridiagonal path carried out in double-double arithmetic.
///
/// Bisection in `f64` supplies the shift; inverse iteration, the Rayleigh
/// quotient and both resolvent solves then run with ~32 significant digits.
/// The metric is smooth to near `f64` round-off, which is what repeated
/// differentiation for the curvature needs.
fn extended_qmt(spin: Spin, h: f64, gamma: f64, cfg: &GapConfig) -> Result<QmtReport> {
    let parity = ground_parity(spin);
    let hd: Tridiagonal<Quad> = block(spin, parity, |k| hamiltonian_entries(spin, h, gamma, k));
    let o1: Tridiagonal<Quad> = block(spin, parity, |k| o1_entries(spin, k));
    let o2: Tridiagonal<Quad> = block(spin, parity, |k| o2_entries(spin, k));
    let n = hd.dim();
    if n < 2 {
        return Ok(QmtReport {
            metric: MetricTensor2D::default(),
            ground_energy: hd.diag[0].lead(),
            gap: f64::INFINITY,
            near_degenerate: false,
        });
    }
    let hf = Tridiagonal {
        diag: hd.diag.iter().map(|x| x.lead()).collect(),
        off: hd.off.iter().map(|x| x.lead()).collect(),
    };
    let e0f = hf.eigenvalue(0);
    let gap = hf.eigenvalue(1) - e0f;
    let (lo, hi) = hf.gershgorin();
    let near_degenerate = check_gap(gap, lo.abs().max(hi.abs()), cfg)?;
    let mut psi = vec![Quad::from(1.0); n];
    normalize(&mut psi);
    for _ in 0..3 {
        psi = hd.solve_shifted(Quad::from(e0f), &psi);
        normalize(&mut psi);
    }
    let e0 = dot(&psi, &hd.mul_vec(&psi));
    let x1 = resolvent_vector(&hd, e0, &psi, &o1);
    let x2 = resolvent_vector(&hd, e0, &psi, &o2);
    Ok(QmtReport {
        metric: MetricTensor2D::new(dot(&x1, &x1).lead(), dot(&x1, &x2).lead(), dot(&x2, &x2).lead()),
        ground_energy: e0.lead(),
        gap,
        near_degenerate,
    })
}

/// Ground state (block path) at a probe point, for overlaps.
fn probe_state(spin: Spin, h: f64, gamma: f64, cfg: &GapConfig) -> Result<Vec<f64>> {
    let b = GroundBlock::new(spin, h, gamma);
    if b.h.dim() < 2 {
        return Ok(vec![1.0]);
    }
    let g = block_ground_state(&b.h);
    if !(g.gap > cfg.gap_min * g.scale) {
        return Err(Error::ProbeDegenerate { x1: h, x2: gamma, gap: g.gap });
    }
    Ok(g.state)
}

/// `1 - |<a|b>|` for unit vectors, computed as `|a - s b|^2 / 2` with `s` the
/// sign of the overlap to avoid cancellation.
fn infidelity(a: &[f64], b: &[f64]) -> f64 {
    let s = if dot(a, b) < 0.0 { -1.0 } else { 1.0 };
    0.5 * a.iter().zip(b).map(|(x, y)| (x - s * y).powi(2)).sum::<f64>()
}

/// Largest infidelity at which the quadratic expansion is trusted.
pub const MAX_PROBE_INFIDELITY: f64 = 1e-4;

/// QMT from ground-state overlaps at displaced points.
///
/// Diagonal entries use `[2 - F(x + d e_i) - F(x - d e_i)] / d^2`; the
/// off-diagonal entry uses the same expression along `e_1 + e_2`.
pub fn fidelity_oracle(spin: Spin, x: ParameterPoint, delta: f64, cfg: &GapConfig) -> Result<MetricTensor2D> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let psi = probe_state(spin, x.x1, x.x2, cfg)?;
    let second = |u1: f64, u2: f64| -> Result<f64> {
        let mut total = 0.0;
        for s in [1.0, -1.0] {
            let phi = probe_state(spin, x.x1 + s * delta * u1, x.x2 + s * delta * u2, cfg)?;
            let inf = infidelity(&psi, &phi);
            if inf > MAX_PROBE_INFIDELITY {
                return Err(Error::DeltaTooLarge { infidelity: inf, limit: MAX_PROBE_INFIDELITY });
            }
            total += inf;
        }
        Ok(total / (delta * delta))
    };
    let g11 = second(1.0, 0.0)?;
    let g22 = second(0.0, 1.0)?;
    let g12 = 0.5 * (second(1.0, 1.0)? - g11 - g22);
    Ok(MetricTensor2D::new(g11, g12, g22))
}

/// Exact QMT over `(x1, x2) = (h, gamma)` for fixed `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactQmtField {
    pub spin: Spin,
    pub solver: ExactSolver,
    pub gap: GapConfig,
}

impl ExactQmtField {
    pub fn new(spin: Spin) -> Self {
        Self { spin, solver: ExactSolver::default(), gap: GapConfig::default() }
    }
}

impl MetricField for ExactQmtField {
    fn metric(&self, p: ParameterPoint) -> Result<MetricTensor2D> {
        exact_qmt(self.spin, p.x1, p.x2, self.solver, &self.gap).map(|r| r.metric)
    }

    fn contains(&self, p: ParameterPoint) -> bool {
        p.x1.is_finite() && p.x2.is_finite()
    }
}
