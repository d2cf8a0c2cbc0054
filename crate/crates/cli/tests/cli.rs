use std::process::{Command, Output};

fn qgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgeom")).args(args).output().expect("binary runs")
}

fn csv(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn dicke_table_labels_both_phases() {
    let (header, rows) = csv(&qgeom(&["dicke-metrics", "--lambda-grid", "0.1:0.8:0.1"]));
    assert_eq!(header[0], "lambda");
    assert_eq!(header.last().unwrap(), "phase");
    let phases: Vec<&str> = rows.iter().map(|r| r.last().unwrap().as_str()).collect();
    assert!(phases.contains(&"normal") && phases.contains(&"superradiant"));
    let r = col(&header, "R_q");
    let at = |l: &str| -> f64 { rows.iter().find(|row| row[0].starts_with(l)).unwrap()[r].parse().unwrap() };
    assert!((at("1.0000000000000001e-1") + 4.0).abs() < 1e-3);
}

#[test]
fn resonant_field_shares_off_diagonal() {
    let (header, rows) =
        csv(&qgeom(&["dicke-metrics", "--resonant", "--omega", "0.8", "--lambda-grid", "0.1:0.3:0.1"]));
    let (cl, q) = (col(&header, "g12_cl"), col(&header, "g12_q"));
    for row in rows {
        assert_eq!(row[cl], row[q]);
    }
}

#[test]
fn empty_grid_is_a_config_error() {
    assert_eq!(qgeom(&["dicke-metrics", "--lambda-grid", "0.5:0.1:0.1"]).status.code(), Some(2));
    assert_eq!(qgeom(&["lmg-thermo", "--j", "-1"]).status.code(), Some(2));
}

#[test]
fn lmg_thermo_reports_broken_curvature() {
    let (header, rows) = csv(&qgeom(&["lmg-thermo", "--h-grid", "0.5:1.5:0.5", "--gamma", "-0.5", "--j", "100"]));
    let (r, phase) = (col(&header, "R_q"), col(&header, "phase"));
    let broken: f64 = rows[0][r].parse().unwrap();
    assert!(broken.is_finite() && broken < 0.0);
    assert_eq!(rows[0][phase], "broken");
    assert_eq!(rows[2][r], "");
}

#[test]
fn half_spin_has_vanishing_metric() {
    let (header, rows) = csv(&qgeom(&["lmg-exact", "--j", "0.5", "--h-grid", "0.5:1.5:0.5"]));
    for name in ["g11", "g12", "g22"] {
        let c = col(&header, name);
        assert!(rows.iter().all(|row| row[c].parse::<f64>().unwrap() == 0.0));
    }
}

#[test]
fn too_few_sizes_is_a_numerical_failure() {
    assert_eq!(qgeom(&["peaks-fits", "--j-set", "12"]).status.code(), Some(3));
}

#[test]
fn validate_passes_and_detects_injected_fault() {
    let ok = qgeom(&["validate"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 6);

    let bad = qgeom(&["validate", "--only", "classical-oracle", "--inject-fault", "regularization-sign"]);
    assert_eq!(bad.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 1);
    assert_eq!(v["checks"][0]["passed"], false);

    assert_eq!(qgeom(&["validate", "--only", "nonsense"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic_and_config_round_trips() {
    let args = ["lmg-exact", "--j", "20", "--h-grid", "0.6:1.4:0.2", "--curvature"];
    let (a, b) = (qgeom(&args), qgeom(&args));
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let printed = qgeom(&[&args[..], &["--print-config"]].concat());
    std::fs::write(&path, &printed.stdout).unwrap();
    let replay = qgeom(&["--config", path.to_str().unwrap()]);
    assert_eq!(replay.stdout, a.stdout);
}

#[test]
fn small_mesh_gives_curvature_inside() {
    let out = qgeom(&["lmg-mesh", "--j", "10", "--mesh", "0.6:1.4:0.1,-0.7:-0.3:0.1", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cols: Vec<&str> = v["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    assert_eq!(cols, ["h", "gamma", "g11", "g12", "g22", "det", "R"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9 * 5);
    assert!(rows.iter().any(|r| r[6].as_f64().is_some()));
}
