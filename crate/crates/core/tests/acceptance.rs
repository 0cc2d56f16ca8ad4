//! Acceptance criteria, one test each. Every test prints a single
//! `PASS` or `FAIL` line before asserting.

use coderiv::experiments::{run_experiment, ExperimentConfig, ExperimentReport};

fn run(criterion: u32, id: &str) -> ExperimentReport {
    let report = run_experiment(&ExperimentConfig::new(id)).expect("experiment runs");
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    if report.passed {
        println!("PASS criterion {criterion:>2} {id}");
    } else {
        println!("FAIL criterion {criterion:>2} {id}: {}", failed.join("; "));
    }
    report
}

macro_rules! criterion {
    ($name:ident, $k:expr, $id:expr) => {
        #[test]
        fn $name() {
            let report = run($k, $id);
            assert!(report.passed, "{report}");
        }
    };
}

criterion!(c01_ball_fixed_points, 1, "ball_theorem_4_1");
criterion!(c02_ball_closed_form, 2, "ball_coderivative_closed_form");
criterion!(c03_affine_maps, 3, "affine_maps");
criterion!(c04_cone_l2, 4, "cone_l2_theorem_4_3");
criterion!(c05_cone_lp, 5, "cone_lp_theorem_4_2");
criterion!(c06_l1_ball, 6, "l1_cases");
criterion!(c07_determinants, 7, "determinants_lemma_4_5");
criterion!(c08_coefficient_bounds, 8, "coefficient_bounds");
criterion!(c09_remez, 9, "remez_projection");
criterion!(c10_remez_continuity, 10, "remez_continuity_theorem_4_8");
criterion!(c11_scaling_ray, 11, "theorem_4_11");
criterion!(c12_structure, 12, "structural_properties");
