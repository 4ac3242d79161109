//! End-to-end harness checks: matrix execution, archive reload, curve
//! emission, and family comparison.

use mdevm::harness::{self, Archive, ExperimentConfig};
use mdevm::stats::Outcome;

fn small_matrix() -> (tempfile::TempDir, Archive) {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::from_json(
        r#"{
            "functions": ["sphere", "rastrigin", "ackley"],
            "schemes": ["best1"],
            "modes": ["cmf", "vrmf"],
            "n_p": [5],
            "d": [5],
            "n_run": 8,
            "master_seed": 99,
            "factor_range": [0.0, 2.0]
        }"#,
    )
    .unwrap();
    let outcome = harness::run_matrix(&config, dir.path()).unwrap();
    assert_eq!(outcome.failed_cells, 0);
    let archive = Archive::load(dir.path()).unwrap();
    (dir, archive)
}

#[test]
fn matrix_writes_one_record_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::from_json(
        r#"{
            "functions": ["sphere"], "schemes": ["rand1"], "modes": ["srmf"],
            "n_p": [5], "d": [3], "n_run": 3, "master_seed": 5
        }"#,
    )
    .unwrap();
    let outcome = harness::run_matrix(&config, dir.path()).unwrap();
    let cells = &outcome.archive.manifest().cells;
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].runs.len(), 3);
    for run in &cells[0].runs {
        let history = outcome.archive.run_history(&cells[0].id, run.run_index).unwrap();
        assert_eq!(history.len(), run.generations);
        assert_eq!(history.last().unwrap().nfc, run.final_nfc);
    }
}

#[test]
fn curves_of_a_single_run_equal_its_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::from_json(
        r#"{
            "functions": ["sphere"], "schemes": ["best1"], "modes": ["vrmf"],
            "n_p": [4], "d": [4], "n_run": 1, "master_seed": 3
        }"#,
    )
    .unwrap();
    let outcome = harness::run_matrix(&config, dir.path()).unwrap();
    let cell_id = outcome.archive.manifest().cells[0].id.clone();
    let rows = harness::emit_curves(&outcome.archive, &cell_id).unwrap();
    let history = outcome.archive.run_history(&cell_id, 0).unwrap();
    assert_eq!(rows.len(), history.len());
    for (row, sample) in rows.iter().zip(&history) {
        assert_eq!(row.nfc, sample.nfc);
        assert_eq!(row.best_value_so_far_median, sample.best_value_so_far);
        assert_eq!(row.best_value_so_far_iqr, 0.0);
        assert_eq!(row.c_d_median, sample.centroid_diversity);
        assert_eq!(row.p_d_median, sample.pairwise_diversity);
    }
}

#[test]
fn curve_medians_are_monotone_and_cover_the_longest_run() {
    let (_dir, archive) = small_matrix();
    for cell in &archive.manifest().cells {
        let rows = harness::emit_curves(&archive, &cell.id).unwrap();
        let longest = cell.runs.iter().map(|r| r.generations).max().unwrap();
        assert_eq!(rows.len(), longest);
        for pair in rows.windows(2) {
            assert!(
                pair[1].best_value_so_far_median <= pair[0].best_value_so_far_median,
                "median best-so-far increased in cell {}",
                cell.id
            );
        }
    }
}

#[test]
fn unknown_cell_is_an_error() {
    let (_dir, archive) = small_matrix();
    assert!(harness::emit_curves(&archive, "nonesuch_cell").is_err());
}

#[test]
fn compare_tallies_cover_the_function_set() {
    let (_dir, archive) = small_matrix();
    let report =
        harness::compare(&archive, "best1_vrmf_np5_d5", "best1_cmf_np5_d5", 0.05).unwrap();
    assert_eq!(report.counts.total(), 3);
    assert_eq!(report.per_function.len(), 3);
    assert_eq!(report.reference, "best1_vrmf_np5_d5");
    assert_eq!(report.opponent, "best1_cmf_np5_d5");
}

#[test]
fn self_comparison_is_all_equal() {
    let (_dir, archive) = small_matrix();
    let report =
        harness::compare(&archive, "best1_vrmf_np5_d5", "best1_vrmf_np5_d5", 0.05).unwrap();
    assert_eq!(report.counts.equal, 3);
    assert!(report.per_function.iter().all(|f| f.outcome == Outcome::Equal));
}

#[test]
fn unknown_family_is_an_error() {
    let (_dir, archive) = small_matrix();
    assert!(harness::compare(&archive, "best1_vrmf_np5_d5", "rand2_cmf_np9_d5", 0.05).is_err());
}

#[test]
fn failing_cells_are_marked_without_aborting_the_matrix() {
    // nfc_max = 2 * 1 cannot cover one pass of 5 members, so the d=1 cell
    // fails at run time while the d=3 cell completes.
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::from_json(
        r#"{
            "functions": ["sphere"], "schemes": ["best1"], "modes": ["vrmf"],
            "n_p": [5], "d": [1, 3], "n_run": 2, "master_seed": 1,
            "termination": { "nfc_max_multiplier": 2 }
        }"#,
    )
    .unwrap();
    let outcome = harness::run_matrix(&config, dir.path()).unwrap();
    assert_eq!(outcome.failed_cells, 1);
    let cells = &outcome.archive.manifest().cells;
    let failed = cells.iter().find(|c| c.id.ends_with("_d1")).unwrap();
    assert_eq!(failed.status, harness::CellStatus::Failed);
    assert!(failed.error.as_deref().unwrap().contains("nfc_max"));
    let ok = cells.iter().find(|c| c.id.ends_with("_d3")).unwrap();
    assert_eq!(ok.status, harness::CellStatus::Ok);
    assert_eq!(ok.runs.len(), 2);
    // Failed cells are excluded from comparisons, which then reports the
    // coverage gap.
    assert!(harness::compare(&outcome.archive, "best1_vrmf_np5_d1", "best1_vrmf_np5_d3", 0.05)
        .is_err());
}
