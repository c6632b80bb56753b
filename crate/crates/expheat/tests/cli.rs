//! End-to-end tests of the command-line harness: artifact layout, report
//! emission, exit codes, and determinism.

use std::path::Path;
use std::process::Command;

use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expheat"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn linear_config(out_dir: &Path) -> String {
    format!(
        r#"{{
          "problem": {{"n": 1, "theta": 2.0, "r": 2.0, "half_width": 256.0, "points_per_axis": 2048}},
          "data": {{"kind": "indicator", "amplitude": 1.0, "width": 0.5}},
          "time": {{"t0": 0.5, "ramp_steps": 4, "rho": 1.2, "t_final": 200.0, "substeps": 1}},
          "solver": {{"nonlinearity_enabled": false}},
          "analysis": {{"q_list": [1, 2, "inf"], "p": 1.0, "window": [5.0, 200.0],
                       "out_dir": "{}", "snapshots": true}}
        }}"#,
        out_dir.display()
    )
}

#[test]
fn solve_decay_profile_pipeline() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("traj");
    let cfg = write_config(tmp.path(), "linear.json", &linear_config(&out));

    let status = bin().args(["solve", "--config"]).arg(&cfg).status().unwrap();
    assert!(status.success(), "solve failed");
    for f in ["config.json", "meta.json", "norms.csv", "norms.gp"] {
        assert!(out.join(f).exists(), "missing artifact {f}");
    }
    assert!(out.join("states").join("00000.bin").exists());

    // the q = inf column tracks the kernel peak (4 pi t)^{-1/2}
    let norms = std::fs::read_to_string(out.join("norms.csv")).unwrap();
    let header = norms.lines().next().unwrap();
    assert_eq!(header, "t,mass,orlicz_norm,norm_q_1,norm_q_2,norm_q_inf");
    let last = norms.lines().last().unwrap();
    let cells: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    let (t, mass, sup) = (cells[0], cells[1], cells[5]);
    // peak of mass * G_2(t, .); the discrete indicator mass is 3 cells
    let peak = mass * (4.0 * std::f64::consts::PI * t).powf(-0.5);
    assert!((sup - peak).abs() < 0.02 * peak, "sup {sup} vs kernel peak {peak}");

    let output = bin()
        .args(["decay", "--trajectory"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "decay failed: {}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("PASS"), "decay output: {stdout}");
    assert!(out.join("decay.csv").exists());
    assert!(out.join("decay.json").exists());

    let output = bin()
        .args(["profile", "--trajectory"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "profile failed: {}", String::from_utf8_lossy(&output.stderr));
    assert!(out.join("profile.json").exists());
    assert!(out.join("profile.gp").exists());
    let profile: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("profile.json")).unwrap()).unwrap();
    // linear run: m* equals the (discrete) initial mass
    let m_star = profile["m_star_estimate"].as_f64().unwrap();
    assert!((m_star - mass).abs() < 1e-8 * mass, "m* = {m_star} vs mass {mass}");
    assert_eq!(profile["profile_error_decreasing_final_decade"], true);
}

#[test]
fn zero_data_solve_writes_zero_columns() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("traj");
    let cfg = write_config(
        tmp.path(),
        "zero.json",
        &format!(
            r#"{{
              "problem": {{"n": 1, "theta": 2.0, "r": 2.0, "half_width": 16.0, "points_per_axis": 64}},
              "data": {{"kind": "scaled", "base": {{"kind": "gaussian_bump", "amplitude": 1.0, "width": 1.0}}, "factor": 0.0}},
              "time": {{"t0": 0.1, "ramp_steps": 2, "rho": 1.5, "t_final": 1.0, "substeps": 1}},
              "analysis": {{"q_list": [2], "p": 1.0, "out_dir": "{}"}}
            }}"#,
            out.display()
        ),
    );
    let status = bin().args(["solve", "--config"]).arg(&cfg).status().unwrap();
    assert!(status.success());
    let norms = std::fs::read_to_string(out.join("norms.csv")).unwrap();
    for line in norms.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        for &v in &cells[1..] {
            assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn unparseable_config_exits_2_missing_artifact_exits_4() {
    let tmp = tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.json", "{ not valid json");
    let status = bin().args(["solve", "--config"]).arg(&bad).arg("--out-dir").arg(tmp.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin()
        .args(["decay", "--trajectory"])
        .arg(tmp.path().join("does_not_exist"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn blowup_exits_10_with_artifacts() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("traj");
    let cfg = write_config(
        tmp.path(),
        "blowup.json",
        &format!(
            r#"{{
              "problem": {{"n": 1, "theta": 2.0, "r": 2.0, "half_width": 8.0, "points_per_axis": 64}},
              "data": {{"kind": "gaussian_bump", "amplitude": 6.0, "width": 0.5}},
              "time": {{"t0": 0.05, "ramp_steps": 8, "rho": 1.2, "t_final": 5.0, "substeps": 4}},
              "analysis": {{"q_list": ["inf"], "p": 1.0, "out_dir": "{}"}}
            }}"#,
            out.display()
        ),
    );
    let status = bin().args(["solve", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(10));
    assert!(out.join("norms.csv").exists(), "artifacts must still be written on blowup");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert!(meta["blowup_time"].as_f64().is_some());
}

#[test]
fn orlicz_norm_subcommand_and_determinism() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("t");
    let cfg = write_config(
        tmp.path(),
        "orlicz.json",
        &format!(
            r#"{{
              "problem": {{"n": 1, "theta": 2.0, "r": 2.0, "half_width": 32.0, "points_per_axis": 512}},
              "data": {{"kind": "gaussian_bump", "amplitude": 0.3, "width": 1.0}},
              "time": {{"t0": 0.1, "ramp_steps": 2, "rho": 1.5, "t_final": 1.0, "substeps": 1}},
              "analysis": {{"q_list": [2], "p": 1.0, "out_dir": "{}"}}
            }}"#,
            out.display()
        ),
    );
    let o1 = bin().args(["orlicz-norm", "--config"]).arg(&cfg).output().unwrap();
    assert!(o1.status.success());
    let v: f64 = String::from_utf8_lossy(&o1.stdout).trim().parse().unwrap();
    assert!(v > 0.0 && v < 1.0);

    // identical configs give bit-identical CSV artifacts
    assert!(bin().args(["solve", "--config"]).arg(&cfg).status().unwrap().success());
    let first = std::fs::read_to_string(out.join("norms.csv")).unwrap();
    assert!(bin().args(["solve", "--config"]).arg(&cfg).status().unwrap().success());
    let second = std::fs::read_to_string(out.join("norms.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn sweep_aggregates_and_tolerates_partial_failure() {
    let tmp = tempdir().unwrap();
    let sweep_out = tmp.path().join("agg");
    for (i, amp) in [0.05f64, 0.1].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        write_config(
            tmp.path(),
            &format!("sweep_{i}.json"),
            &format!(
                r#"{{
                  "problem": {{"n": 1, "theta": 2.0, "r": 2.0, "half_width": 64.0, "points_per_axis": 512}},
                  "data": {{"kind": "gaussian_bump", "amplitude": {amp}, "width": 1.0}},
                  "time": {{"t0": 0.05, "ramp_steps": 4, "rho": 1.3, "t_final": 5.0, "substeps": 1}},
                  "solver": {{"boundary_mass_tol": 0.01}},
                  "analysis": {{"q_list": ["inf"], "p": 1.0, "window": [0.5, 5.0], "out_dir": "{}"}}
                }}"#,
                out.display()
            ),
        );
    }
    // one broken config in the same directory
    write_config(tmp.path(), "sweep_2.json", "{ broken");
    let pattern = tmp.path().join("sweep_*.json");
    let output = bin()
        .args(["sweep", "--parallelism", "2", "--configs"])
        .arg(&pattern)
        .arg("--out-dir")
        .arg(&sweep_out)
        .output()
        .unwrap();
    assert!(output.status.success(), "sweep: {}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4); // header + 3 rows
    assert!(csv.contains("ERROR"), "failed run must be recorded: {csv}");
    // the Orlicz-norm column grows with amplitude
    let mut norms: Vec<f64> = Vec::new();
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        if cells[7].is_empty() || line.contains("ERROR") {
            continue;
        }
        norms.push(cells[7].parse().unwrap());
    }
    assert_eq!(norms.len(), 2);
    assert!(norms[0] < norms[1]);
}
