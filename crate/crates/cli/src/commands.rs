//! The data-producing commands.

use rayon::prelude::*;
use serde_json::{json, Value};

use qgeom::analysis::precursor::{
    run_curvature_study, run_study, slope_at_critical, CurvatureReport, CurvatureStep, StudyConfig,
};
use qgeom::analysis::sweep;
use qgeom::dicke::{
    classical_metric, quantum_metric, resonant_metrics, DickeField, DickeParams, DickePhase, MetricKind,
};
use qgeom::geometry::{curvature_from_mesh, scalar_curvature_closed, scalar_curvature_fd_refined, Mesh};
use qgeom::lmg::exact::{exact_qmt, ExactQmtField, GapConfig, Spin};
use qgeom::lmg::thermo::{
    broken_curvature, broken_metrics, fixed_points, ground_energy, hamiltonian_qp, symmetric_metrics, LmgParams,
    LmgPhase,
};
use qgeom::{ActionAssignment, MetricField, MetricTensor2D, ParameterPoint};

use crate::config::{grid, mesh, RunConfig};
use crate::table::{Cell, Table};
use crate::Failure;

pub enum Output {
    Table(Table),
    Json(Value),
}

fn comps(m: Option<MetricTensor2D>) -> [Option<f64>; 3] {
    match m {
        Some(m) => [Some(m.g11), Some(m.g12), Some(m.g22)],
        None => [None; 3],
    }
}

fn cells(v: &[Option<f64>]) -> impl Iterator<Item = Cell> + '_ {
    v.iter().map(|&x| x.into())
}

fn dicke_phase_name(p: &DickeParams) -> &'static str {
    match p.phase() {
        Ok(DickePhase::Normal) => "normal",
        Ok(DickePhase::Superradiant) => "superradiant",
        Err(_) => "critical",
    }
}

pub fn dicke_metrics(c: &RunConfig) -> Result<Output, Failure> {
    let lambdas = grid(&c.lambda_grid, "lambda-grid")?;
    if lambdas[0] < 0.0 {
        return Err(Failure::Config("lambda-grid must be non-negative".into()));
    }
    let omega0 = if c.resonant { c.omega } else { c.omega0 };
    let lambda_c = DickeParams::new(omega0, c.omega, 0.0)?.critical_coupling();
    let names = ["g11_cl", "g12_cl", "g22_cl", "g11_q", "g12_q", "g22_q", "R_cl", "R_q"];
    let s = sweep("lambda", &lambdas, &names, |l| {
        let Ok(p) = DickeParams::new(omega0, c.omega, l) else { return vec![None; 8] };
        let Ok(phase) = p.phase() else { return vec![None; 8] };
        let (cl, q) = if c.resonant {
            match resonant_metrics(c.omega, l, phase) {
                Ok((a, b)) => (Some(a), Some(b)),
                Err(_) => (None, None),
            }
        } else {
            (classical_metric(&p, phase, &ActionAssignment::default()).ok(), quantum_metric(&p, phase).ok())
        };
        let x = ParameterPoint { x1: c.omega, x2: l };
        let r = |kind| {
            let field =
                if c.resonant { DickeField::resonant(phase, kind) } else { DickeField::new(omega0, phase, kind) };
            field.derivatives(x).and_then(|d| scalar_curvature_closed(&d)).ok().map(|r| r.r)
        };
        let mut row: Vec<Option<f64>> = comps(cl).into_iter().chain(comps(q)).collect();
        row.push(r(MetricKind::Classical(ActionAssignment::default())));
        row.push(r(MetricKind::Quantum));
        row
    })?;

    let mut t =
        Table::new(&["lambda", "g11_cl", "g12_cl", "g22_cl", "g11_q", "g12_q", "g22_q", "R_cl", "R_q", "phase"]);
    for (k, &l) in s.grid.iter().enumerate() {
        let p = DickeParams::new(omega0, c.omega, l)?;
        let mut row = vec![Cell::from(l)];
        row.extend(s.columns.iter().map(|col| Cell::from(col.values[k])));
        row.push(dicke_phase_name(&p).into());
        t.push(row);
    }
    t.metadata.insert("lambda_c".into(), json!(lambda_c));
    t.metadata.insert("omega0".into(), json!(omega0));
    t.metadata.insert("omega".into(), json!(c.omega));
    Ok(Output::Table(t))
}

fn h_values(c: &RunConfig) -> Result<Vec<f64>, Failure> {
    match c.h {
        Some(h) => Ok(vec![h]),
        None => grid(&c.h_grid, "h-grid"),
    }
}

fn lmg_phase_name(p: &LmgParams) -> &'static str {
    match p.phase() {
        Ok(LmgPhase::Symmetric) => "symmetric",
        Ok(LmgPhase::Broken) => "broken",
        Err(_) => "critical",
    }
}

/// Closed-form classical and quantum metrics, `None` at `h = 1`.
fn thermo_metrics(p: &LmgParams) -> Option<(MetricTensor2D, MetricTensor2D)> {
    let a = ActionAssignment::default();
    match p.phase().ok()? {
        LmgPhase::Symmetric => symmetric_metrics(p, &a).ok(),
        LmgPhase::Broken => broken_metrics(p, &a).ok(),
    }
}

fn energy_surface(c: &RunConfig) -> Result<Output, Failure> {
    let h = c.h.ok_or_else(|| Failure::Config("surface needs --h".into()))?;
    let p = LmgParams::new(h, c.gamma, c.j)?;
    let n = c.surface;
    if n < 2 {
        return Err(Failure::Config("surface needs at least 2 points per side".into()));
    }
    // the chart covers the disc Q^2 + P^2 <= 4 j
    let r = 2.0 * c.j.sqrt();
    let axis: Vec<f64> = (0..n).map(|k| -r + 2.0 * r * k as f64 / (n - 1) as f64).collect();
    let mut t = Table::new(&["q", "p", "energy"]);
    for &q in &axis {
        for &pm in &axis {
            let e = (q * q + pm * pm <= r * r).then(|| hamiltonian_qp(&p, q, pm));
            t.push(vec![q.into(), pm.into(), e.into()]);
        }
    }
    let fps = fixed_points(&p).map_err(Failure::from)?;
    t.metadata.insert("phase".into(), json!(lmg_phase_name(&p)));
    t.metadata.insert("fixed_points".into(), serde_json::to_value(fps).expect("plain data"));
    Ok(Output::Table(t))
}

pub fn lmg_thermo(c: &RunConfig) -> Result<Output, Failure> {
    if c.surface > 0 {
        return energy_surface(c);
    }
    let hs = h_values(c)?;
    LmgParams::new(hs[0], c.gamma, c.j)?;
    let mut t =
        Table::new(&["h", "phase", "g11_cl", "g12_cl", "g22_cl", "g11_q", "g12_q", "g22_q", "det_q", "R_q", "energy"]);
    for &h in &hs {
        let p = LmgParams::new(h, c.gamma, c.j)?;
        let m = thermo_metrics(&p);
        let mut row = vec![Cell::from(h), lmg_phase_name(&p).into()];
        row.extend(cells(&comps(m.map(|m| m.0))));
        row.extend(cells(&comps(m.map(|m| m.1))));
        row.push(m.map(|m| m.1.determinant()).into());
        row.push(broken_curvature(&p).ok().into());
        row.push(ground_energy(&p).into());
        t.push(row);
    }
    t.metadata.insert("gamma".into(), json!(c.gamma));
    t.metadata.insert("j".into(), json!(c.j));
    Ok(Output::Table(t))
}

fn exact_field(c: &RunConfig) -> Result<ExactQmtField, Failure> {
    Ok(ExactQmtField { spin: Spin::new(c.j)?, solver: c.solver, gap: GapConfig::default() })
}

pub fn lmg_exact(c: &RunConfig) -> Result<Output, Failure> {
    let hs = h_values(c)?;
    let field = exact_field(c)?;
    let names = ["g11", "g12", "g22", "det", "gap", "energy", "R"];
    let s = sweep("h", &hs, &names, |h| {
        let mut row = match exact_qmt(field.spin, h, c.gamma, field.solver, &field.gap) {
            Ok(r) => {
                let m = r.metric;
                vec![Some(m.g11), Some(m.g12), Some(m.g22), Some(m.determinant()), Some(r.gap), Some(r.ground_energy)]
            }
            Err(e) => {
                log::warn!("h = {h}: {e}");
                vec![None; 6]
            }
        };
        let r = c.curvature.then(|| {
            let x = ParameterPoint { x1: h, x2: c.gamma };
            scalar_curvature_fd_refined(&field, x, CurvatureStep::default().at(h)).ok().map(|r| r.r)
        });
        row.push(r.flatten());
        row
    })?;

    let mut t = Table::new(&[
        "h",
        "g11",
        "g12",
        "g22",
        "det",
        "gap",
        "energy",
        "R",
        "g11_thermo",
        "g12_thermo",
        "g22_thermo",
        "det_thermo",
        "R_thermo",
    ]);
    for (k, &h) in s.grid.iter().enumerate() {
        let mut row = vec![Cell::from(h)];
        row.extend(s.columns.iter().map(|col| Cell::from(col.values[k])));
        let p = LmgParams::new(h, c.gamma, c.j).ok();
        let q = p.as_ref().and_then(thermo_metrics).map(|m| m.1);
        row.extend(cells(&comps(q)));
        row.push(q.map(|m| m.determinant()).into());
        row.push(p.and_then(|p| broken_curvature(&p).ok()).into());
        t.push(row);
    }
    t.metadata.insert("gamma".into(), json!(c.gamma));
    t.metadata.insert("j".into(), json!(c.j));
    t.metadata.insert("solver".into(), json!(c.solver));
    Ok(Output::Table(t))
}

pub fn lmg_mesh(c: &RunConfig) -> Result<Output, Failure> {
    let ([hs, gs], spacing) = mesh(&c.mesh)?;
    let field = exact_field(c)?;
    let (nx, ny) = (hs.len(), gs.len());
    let data: Vec<MetricTensor2D> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let x = ParameterPoint { x1: hs[idx / ny], x2: gs[idx % ny] };
            field.metric(x).unwrap_or(MetricTensor2D::new(f64::NAN, f64::NAN, f64::NAN))
        })
        .collect();
    let samples = Mesh { nx, ny, data };
    let r = curvature_from_mesh(&samples, spacing)?;
    let mut t = Table::new(&["h", "gamma", "g11", "g12", "g22", "det", "R"]);
    for i in 0..nx {
        for k in 0..ny {
            let m = samples.get(i, k);
            let mut row = vec![Cell::from(hs[i]), gs[k].into()];
            row.extend(cells(&[Some(m.g11), Some(m.g12), Some(m.g22), Some(m.determinant())]));
            row.push(r.get(i, k).map(|c| c.r).into());
            t.push(row);
        }
    }
    t.metadata.insert("j".into(), json!(c.j));
    Ok(Output::Table(t))
}

fn study_config(c: &RunConfig) -> StudyConfig {
    StudyConfig { gamma: c.gamma, j_set: c.j_set.clone(), h_step: c.h_step, solver: c.solver, ..Default::default() }
}

fn curvature_rows(t: &mut Table, r: &CurvatureReport, slopes: Option<&[f64]>) {
    for (k, p) in r.per_j.iter().enumerate() {
        let [a, b] = p.peaks;
        let slope = slopes.map(|s| s[k]);
        t.push(vec![p.j.into(), a.location.into(), a.height.into(), b.location.into(), b.height.into(), slope.into()]);
    }
}

pub fn peaks_fits(c: &RunConfig) -> Result<Output, Failure> {
    if c.j_set.is_empty() {
        return Err(Failure::Config("j-set is empty".into()));
    }
    let cfg = study_config(c);
    let slope = if c.no_slope { None } else { Some(slope_at_critical(&cfg.j_set, &cfg)?) };
    let slope_json = slope.as_ref().map(|(fit, slopes)| json!({ "fit": fit, "values": slopes }));
    let slopes = slope.as_ref().map(|s| s.1.as_slice());

    if c.curvature_only {
        let r = run_curvature_study(&cfg)?;
        return Ok(match c.format {
            crate::config::Format::Json => Output::Json(json!({ "curvature": r, "slope_at_critical": slope_json })),
            crate::config::Format::Csv => {
                let mut t = Table::new(&["j", "R1_h", "R1", "R2_h", "R2", "dRdh_at_1"]);
                curvature_rows(&mut t, &r, slopes);
                Output::Table(t)
            }
        });
    }

    let r = run_study(&cfg)?;
    Ok(match c.format {
        crate::config::Format::Json => Output::Json(json!({
            "gamma": r.gamma,
            "table": r.table,
            "g12_m_sum": r.g12_m_sum,
            "per_j": r.per_j,
            "location_fits": r.location_fits,
            "curvature": r.curvature,
            "slope_at_critical": slope_json,
        })),
        crate::config::Format::Csv => {
            let mut t = Table::new(&[
                "j",
                "g11_h",
                "g11",
                "g12_1_h",
                "g12_1",
                "g12_2_h",
                "g12_2",
                "g22_1_h",
                "g22_1",
                "g22_2_h",
                "g22_2",
                "g22_3_h",
                "g22_3",
                "R1_h",
                "R1",
                "R2_h",
                "R2",
                "dRdh_at_1",
            ]);
            for (k, (m, cp)) in r.per_j.iter().zip(&r.curvature.per_j).enumerate() {
                let mut row = vec![Cell::from(m.j)];
                for p in m.g11.iter().chain(&m.g12).chain(&m.g22).chain(&cp.peaks) {
                    row.push(p.location.into());
                    row.push(p.height.into());
                }
                row.push(slopes.map(|s| s[k]).into());
                t.push(row);
            }
            Output::Table(t)
        }
    })
}
