//! Run configuration: defaults, overlaid by an optional JSON file, overlaid
//! by command-line flags. The JSON keys are the flag names.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use qgeom::analysis::precursor::DEFAULT_J_SET;
use qgeom::analysis::GridSpec;
use qgeom::lmg::exact::ExactSolver;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Dicke metrics and curvature along a coupling grid.
    DickeMetrics,
    /// LMG thermodynamic-limit metrics along an `h` grid, or the classical energy surface.
    LmgThermo,
    /// Exact finite-`j` LMG QMT along an `h` grid.
    LmgExact,
    /// Exact LMG QMT and curvature over an `(h, gamma)` mesh.
    LmgMesh,
    /// Peak tracking and fits across a set of `j`.
    PeaksFits,
    /// Run the validation checks.
    Validate,
}

impl Command {
    pub fn model(self) -> Option<Model> {
        match self {
            Command::DickeMetrics => Some(Model::Dicke),
            Command::Validate => None,
            _ => Some(Model::Lmg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Dicke,
    Lmg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Flip the sign of the harmonic regularisation in the torus oracle.
    RegularizationSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    Full,
    Blocked,
    Tridiagonal,
    Extended,
}

impl From<SolverArg> for ExactSolver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Full => ExactSolver::Full,
            SolverArg::Blocked => ExactSolver::Blocked,
            SolverArg::Tridiagonal => ExactSolver::Tridiagonal,
            SolverArg::Extended => ExactSolver::Extended,
        }
    }
}

/// Validation thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute, classical minus quantum against the anomaly term.
    pub anomaly: f64,
    /// Absolute, resonant closed forms.
    pub resonance: f64,
    /// Relative, torus average against the closed form.
    pub oracle: f64,
    /// Relative, overlap-based QMT against the perturbative sum.
    pub fidelity: f64,
    /// Relative, broken-phase determinant; the symmetric-phase bound is `det / tr^2`.
    pub det: f64,
    pub det_degenerate: f64,
    /// Relative, closed-form curvature against finite differences.
    pub curvature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            anomaly: 1e-12,
            resonance: 1e-14,
            oracle: 1e-6,
            fidelity: 1e-3,
            det: 1e-12,
            det_degenerate: 1e-15,
            curvature: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub model: Option<Model>,
    pub omega0: f64,
    pub omega: f64,
    pub lambda_grid: String,
    pub resonant: bool,
    /// Single field value; takes precedence over `h-grid`.
    pub h: Option<f64>,
    pub h_grid: String,
    pub gamma: f64,
    pub j: f64,
    pub j_set: Vec<f64>,
    /// `h0:h1:dh,g0:g1:dg`.
    pub mesh: String,
    pub solver: ExactSolver,
    /// Add the finite-difference curvature to `lmg-exact`.
    pub curvature: bool,
    /// Side of the `(Q, P)` grid for the classical energy surface; 0 disables it.
    pub surface: usize,
    pub h_step: f64,
    pub curvature_only: bool,
    pub no_slope: bool,
    pub n_angles: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub tol: Tolerances,
    pub only: Vec<String>,
    pub inject_fault: Option<Fault>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            model: None,
            omega0: 1.0,
            omega: 0.8,
            lambda_grid: "0.05:0.85:0.005".into(),
            resonant: false,
            h: None,
            h_grid: "0.2:1.8:0.002".into(),
            gamma: -0.5,
            j: 500.0,
            j_set: DEFAULT_J_SET.to_vec(),
            mesh: "0.5:1.5:0.01,-0.9:0.5:0.02".into(),
            solver: ExactSolver::Extended,
            curvature: false,
            surface: 0,
            h_step: 1e-3,
            curvature_only: false,
            no_slope: false,
            n_angles: 256,
            format: Format::Csv,
            out: None,
            seed: 7,
            tol: Tolerances::default(),
            only: Vec::new(),
            inject_fault: None,
        }
    }
}

/// Command-line overrides; every field left unset keeps the configured value.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON file with the same keys as the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// start:end:step, end included when within half a step.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda_grid: Option<String>,
    /// Tie omega0 to omega.
    #[arg(long, global = true)]
    pub resonant: bool,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub h: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub h_grid: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub j: Option<f64>,
    /// Comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub j_set: Option<Vec<f64>>,
    /// h0:h1:dh,g0:g1:dg
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mesh: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub solver: Option<SolverArg>,
    #[arg(long, global = true)]
    pub curvature: bool,
    #[arg(long, global = true)]
    pub surface: Option<usize>,
    #[arg(long, global = true)]
    pub h_step: Option<f64>,
    #[arg(long, global = true)]
    pub curvature_only: bool,
    #[arg(long, global = true)]
    pub no_slope: bool,
    #[arg(long, global = true)]
    pub n_angles: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub tol_anomaly: Option<f64>,
    #[arg(long, global = true)]
    pub tol_resonance: Option<f64>,
    #[arg(long, global = true)]
    pub tol_oracle: Option<f64>,
    #[arg(long, global = true)]
    pub tol_fidelity: Option<f64>,
    #[arg(long, global = true)]
    pub tol_det: Option<f64>,
    #[arg(long, global = true)]
    pub tol_det_degenerate: Option<f64>,
    #[arg(long, global = true)]
    pub tol_curvature: Option<f64>,
    /// Comma-separated check names for `validate`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    #[arg(long, global = true, value_enum)]
    pub inject_fault: Option<Fault>,
}

fn set<T>(dst: &mut T, src: Option<T>) {
    if let Some(v) = src {
        *dst = v;
    }
}

impl RunConfig {
    pub fn resolve(command: Option<Command>, flags: Flags) -> Result<Self, Failure> {
        let mut c = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        set(&mut c.command, command.map(Some));
        set(&mut c.omega0, flags.omega0);
        set(&mut c.omega, flags.omega);
        set(&mut c.lambda_grid, flags.lambda_grid);
        c.resonant |= flags.resonant;
        if flags.h.is_some() {
            c.h = flags.h;
        }
        set(&mut c.h_grid, flags.h_grid);
        set(&mut c.gamma, flags.gamma);
        set(&mut c.j, flags.j);
        set(&mut c.j_set, flags.j_set);
        set(&mut c.mesh, flags.mesh);
        set(&mut c.solver, flags.solver.map(Into::into));
        c.curvature |= flags.curvature;
        set(&mut c.surface, flags.surface);
        set(&mut c.h_step, flags.h_step);
        c.curvature_only |= flags.curvature_only;
        c.no_slope |= flags.no_slope;
        set(&mut c.n_angles, flags.n_angles);
        set(&mut c.format, flags.format);
        if flags.out.is_some() {
            c.out = flags.out;
        }
        set(&mut c.seed, flags.seed);
        set(&mut c.tol.anomaly, flags.tol_anomaly);
        set(&mut c.tol.resonance, flags.tol_resonance);
        set(&mut c.tol.oracle, flags.tol_oracle);
        set(&mut c.tol.fidelity, flags.tol_fidelity);
        set(&mut c.tol.det, flags.tol_det);
        set(&mut c.tol.det_degenerate, flags.tol_det_degenerate);
        set(&mut c.tol.curvature, flags.tol_curvature);
        set(&mut c.only, flags.only);
        if flags.inject_fault.is_some() {
            c.inject_fault = flags.inject_fault;
        }

        let command = c.command.ok_or_else(|| Failure::Config("no command given".into()))?;
        match (c.model, command.model()) {
            (Some(m), Some(expected)) if m != expected => {
                return Err(Failure::Config(format!("model {m:?} does not match command {command:?}")));
            }
            _ => c.model = command.model(),
        }
        Ok(c)
    }

    pub fn command(&self) -> Command {
        self.command.expect("resolved config carries a command")
    }
}

/// Nodes of a `start:end:step` grid; an empty grid is a configuration error.
pub fn grid(spec: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let g: GridSpec = spec.parse().map_err(|e: qgeom::Error| Failure::Config(format!("{what}: {e}")))?;
    let pts = g.points();
    if pts.is_empty() {
        return Err(Failure::Config(format!("{what} '{spec}' is empty")));
    }
    Ok(pts)
}

/// The two axes of an `h0:h1:dh,g0:g1:dg` mesh, with their steps.
pub fn mesh(spec: &str) -> Result<([Vec<f64>; 2], (f64, f64)), Failure> {
    let (a, b) =
        spec.split_once(',').ok_or_else(|| Failure::Config(format!("mesh '{spec}' is not h0:h1:dh,g0:g1:dg")))?;
    let parse = |s: &str| -> Result<(Vec<f64>, f64), Failure> {
        let g: GridSpec = s.parse().map_err(|e: qgeom::Error| Failure::Config(format!("mesh: {e}")))?;
        Ok((grid(s, "mesh axis")?, g.step))
    };
    let ((hs, dh), (gs, dg)) = (parse(a)?, parse(b)?);
    Ok(([hs, gs], (dh, dg)))
}
