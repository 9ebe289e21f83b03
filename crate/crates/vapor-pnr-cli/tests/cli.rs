//! End-to-end checks of the command-line surface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_vapor-pnr")
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(binary());
    if let Some(path) = config {
        cmd.arg("--config").arg(path);
    }
    cmd.args(args).arg("--out").arg(out);
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

const MINIMAL_DESIGN: &str = r#""design": {
    "species": "cesium",
    "n_density_per_cm3": 1e9,
    "temperature_mk": 1.0,
    "cell_length_mm": 2.0,
    "beam_area_mm2": 0.01,
    "passes": 100,
    "b_field_t": 1.0,
    "pulse_duration_ns": 10.0,
    "escort_rabi": { "times_decay_rate": 1.0 },
    "detuning_ghz": 0.5,
    "readout_rabi": { "times_decay_rate": 0.01 },
    "eta_det": 0.125
}"#;

#[test]
fn budget_with_bundled_config_reports_20000_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["budget"], None, dir.path());
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("20000"));

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("budget.json")).unwrap())
            .unwrap();
    // linear net dark count is definitionally N * P_dc
    let n = doc["data"]["ordinary"]["atom_count"].as_f64().unwrap();
    let p = doc["data"]["ordinary"]["dark_count_prob"].as_f64().unwrap();
    let linear = doc["data"]["ordinary"]["net_dark_count"]["linear"].as_f64().unwrap();
    assert!((linear - n * p).abs() <= 1e-12 * linear.abs());
}

#[test]
fn malformed_json_names_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "{ \"design\": { broken\n");
    let output = run(&["budget"], Some(&config), dir.path());
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("line") && stderr.contains("column"),
        "diagnostic lacks position: {stderr}"
    );
}

#[test]
fn invalid_design_rejected_before_computation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            "{{ {} , \"seed\": 1 }}",
            MINIMAL_DESIGN.replace("\"cell_length_mm\": 2.0", "\"cell_length_mm\": 0.0")
        ),
    );
    let output = run(&["budget"], Some(&config), dir.path());
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("cell_length"), "diagnostic lacks field: {stderr}");
}

#[test]
fn square_pulse_dynamics_agreement_within_1e8() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{ {MINIMAL_DESIGN}, "seed": 3,
                 "dynamics": {{ "escort": {{"kind": "square"}}, "photon": {{"kind": "square"}} }} }}"#
        ),
    );
    let output = run(&["dynamics"], Some(&config), dir.path());
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dynamics.json")).unwrap())
            .unwrap();
    let agreement = doc["data"]["agreement_rel"].as_f64().unwrap();
    assert!(agreement <= 1e-8, "agreement {agreement}");

    let csv = std::fs::read_to_string(dir.path().join("dynamics_trajectory.csv")).unwrap();
    assert!(csv.contains("time_s,beta_re,beta_im,beta_sq"));
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let output = Command::new(binary())
        .arg("budget")
        .env("VAPOR_PNR_OUT", &out)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(out.join("budget.json").exists());
}

#[test]
fn zero_escort_dynamics_absorbs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{ {}, "seed": 3, "dynamics": {{}} }}"#,
            MINIMAL_DESIGN.replace(
                "\"escort_rabi\": { \"times_decay_rate\": 1.0 }",
                "\"escort_rabi\": { \"times_decay_rate\": 0.0 }"
            )
        ),
    );
    let output = run(&["dynamics"], Some(&config), dir.path());
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dynamics.json")).unwrap())
            .unwrap();
    assert_eq!(doc["data"]["numeric"]["p_absorb"].as_f64(), Some(0.0));
}

#[test]
fn oracle_flag_reports_conservation_drift() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{ {MINIMAL_DESIGN}, "seed": 3,
                 "dynamics": {{ "oracle": {{ "mode_count": 48, "atom_count": 4 }} }} }}"#
        ),
    );
    let output = run(&["dynamics"], Some(&config), dir.path());
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dynamics.json")).unwrap())
            .unwrap();
    let drift = doc["data"]["oracle"]["norm_drift"].as_f64().unwrap();
    assert!(drift <= 1e-9, "conservation drift {drift}");
    assert!(dir.path().join("oracle_trajectory.csv").exists());
}

#[test]
fn sweep_with_empty_axis_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{ {MINIMAL_DESIGN}, "seed": 1,
                 "sweep": {{ "axes": [ {{"field": "passes", "values": []}} ] }} }}"#
        ),
    );
    let output = run(&["sweep"], Some(&config), dir.path());
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("empty"), "diagnostic: {stderr}");
}

#[test]
fn infeasible_optimization_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{ {MINIMAL_DESIGN}, "seed": 1,
                 "optimize": {{ "free": [ {{"field": "detuning", "min": 1e8, "max": 1e10}} ],
                               "dark_budget": 1e-12 }} }}"#
        ),
    );
    let output = run(&["optimize"], Some(&config), dir.path());
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr).to_lowercase();
    assert!(stderr.contains("infeasible"), "diagnostic: {stderr}");
}

#[test]
fn outputs_embed_hash_seed_version_and_seed_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{ {MINIMAL_DESIGN}, "seed": 11,
                 "mc": {{ "n_photons_true": 2, "readout_duration": {{"times_t_ro": 1.0}},
                          "trials": 500 }} }}"#
        ),
    );
    let out_a = dir.path().join("a");
    let output = run(&["mc"], Some(&config), &out_a);
    assert!(output.status.success());
    let csv = std::fs::read_to_string(out_a.join("mc_trials.csv")).unwrap();
    assert!(csv.starts_with("# config_sha256="));
    assert!(csv.contains("# seed=11"));
    assert!(csv.contains("# version=vapor-pnr"));

    // --seed overrides the config and lands in the header
    let out_b = dir.path().join("b");
    let output = Command::new(binary())
        .arg("--config")
        .arg(&config)
        .args(["mc", "--seed", "12", "--out"])
        .arg(&out_b)
        .output()
        .unwrap();
    assert!(output.status.success());
    let csv_b = std::fs::read_to_string(out_b.join("mc_trials.csv")).unwrap();
    assert!(csv_b.contains("# seed=12"));
    assert_ne!(csv, csv_b);
}

#[test]
fn commands_do_not_mutate_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{ {MINIMAL_DESIGN}, "seed": 5,
             "sweep": {{ "axes": [ {{"field": "b_field", "values": [0.5, 1.0]}} ] }} }}"#
    );
    let config = write_config(dir.path(), &body);
    let before = std::fs::read(&config).unwrap();
    let output = run(&["sweep"], Some(&config), dir.path());
    assert!(output.status.success());
    assert_eq!(before, std::fs::read(&config).unwrap());
}

#[test]
fn sweep_csv_names_units_per_column() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{ {MINIMAL_DESIGN}, "seed": 5,
                 "sweep": {{ "axes": [ {{"field": "b_field", "min": 0.1, "max": 1.0, "count": 3}} ],
                            "outputs": ["dark_count_prob", "collision_time"] }} }}"#
        ),
    );
    let output = run(&["sweep"], Some(&config), dir.path());
    assert!(output.status.success());
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.contains("# units: b_field=T dark_count_prob= collision_time=s"));
    assert!(csv.contains("b_field,dark_count_prob,collision_time,clamped,validity_warnings,error"));
    // three grid points, strictly decreasing dark counts
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#') && !l.contains("b_field")).collect();
    assert_eq!(rows.len(), 3);
}
