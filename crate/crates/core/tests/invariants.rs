use proptest::prelude::*;

use qgeom::dicke::{anomaly_term, classical_metric, quantum_metric, DickeParams, DickePhase};
use qgeom::lmg::exact::{exact_qmt, ExactSolver, GapConfig, Spin};
use qgeom::lmg::thermo::{symmetric_metrics, LmgParams};
use qgeom::ActionAssignment;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn anomaly_closes_the_gap(omega in 0.3f64..3.0, frac in 0.05f64..0.95, normal in any::<bool>()) {
        prop_assume!((omega - 1.0).abs() > 1e-3);
        let lc = omega.sqrt() / 2.0;
        let (phase, lambda) =
            if normal { (DickePhase::Normal, lc * frac) } else { (DickePhase::Superradiant, lc / frac) };
        let p = DickeParams::new(1.0, omega, lambda).unwrap();
        let cl = classical_metric(&p, phase, &ActionAssignment::default()).unwrap();
        let q = quantum_metric(&p, phase).unwrap();
        let a = anomaly_term(&p, phase).unwrap();
        let scale = cl.components().iter().fold(1.0f64, |m, c| m.max(c.abs()));
        prop_assert!((cl - q).max_abs_diff(&a) < 1e-11 * scale);
        prop_assert!(q.determinant() > -1e-12 * scale * scale);
    }

    #[test]
    fn exact_metric_is_positive(h in 0.05f64..2.0, gamma in -0.9f64..0.9, two_j in 1u32..40) {
        let spin = Spin::new(two_j as f64 / 2.0).unwrap();
        let g = exact_qmt(spin, h, gamma, ExactSolver::Extended, &GapConfig::default()).unwrap().metric;
        prop_assert!(g.g11 >= 0.0 && g.g22 >= 0.0);
        prop_assert!(g.determinant() >= -1e-10 * (g.g11 + g.g22).powi(2));
    }
}

#[test]
fn exact_metric_approaches_symmetric_limit() {
    let (h, gamma) = (1.6, -0.5);
    let limit = symmetric_metrics(&LmgParams::new(h, gamma, 1.0).unwrap(), &ActionAssignment::default()).unwrap().1;
    let deviation = |j: f64| {
        let g =
            exact_qmt(Spin::new(j).unwrap(), h, gamma, ExactSolver::Extended, &GapConfig::default()).unwrap().metric;
        (g.g11 - limit.g11).abs() / limit.g11
    };
    let (a, b) = (deviation(100.0), deviation(400.0));
    // finite-size corrections fall off as 1/j
    assert!(b < a / 3.0 && b < 0.02, "{a} {b}");
}
