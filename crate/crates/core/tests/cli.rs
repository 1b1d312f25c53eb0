//! End-to-end runs of the `hyrep` binary.

use std::process::Command;

use hyrep::config::RunConfig;

fn hyrep(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hyrep")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> String {
    let path = dir.path().join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_passes_and_reports_schema() {
    let (code, out, _) = hyrep(&["validate"]);
    assert_eq!(code, 0);
    let checks: serde_json::Value = serde_json::from_str(&out).unwrap();
    let list = checks.as_array().unwrap();
    assert!(list.len() >= 10);
    for c in list {
        for key in ["check_id", "passed", "measured", "bound"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
    let psi2 = list.iter().find(|c| c["check_id"] == "squeezed_cat_fidelity_m2").unwrap();
    assert!(psi2["measured"].as_f64().unwrap() >= 0.99);
}

#[test]
fn config_and_usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = hyrep(&["swap", "--config", &write_config(&dir, "latt_km = -3\n")]);
    assert_eq!(code, 2);
    assert!(err.contains("latt_km"), "{err}");
    let (code, _, err) = hyrep(&["swap", "--config", &write_config(&dir, "typo_key = 1\n")]);
    assert_eq!(code, 2);
    assert!(err.contains("typo_key"));
    assert_eq!(hyrep(&["not-a-command"]).0, 2);
    assert_eq!(hyrep(&["swap", "--config", "/no/such/file.toml"]).0, 2);
    assert_eq!(hyrep(&["swap", "--out", "/no/such/dir/out.json"]).0, 2);
}

#[test]
fn fig2_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "fig2_m = [1, 3]\nfig2_delta = [0.2, 0.6]\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let run = |out: &std::path::Path, workers: &str| {
        hyrep(&["fig2", "--config", &cfg, "--seed", "17", "--trials", "200", "--workers", workers, "--out", out.to_str().unwrap()]).0
    };
    assert_eq!(run(&a, "1"), 0);
    assert_eq!(run(&b, "3"), 0);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().next().unwrap(), "m,contamination,delta,fidelity,fidelity_se,rate,trials");
    assert_eq!(text.lines().count(), 1 + 8);
}

#[test]
fn fig3_marks_infeasible_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "fig3_l_km = [50.0]\nfig3_n = [0]\nfig3_m = [1]\nevals_per_cell = 1\nf_target = 0.999\n");
    let (code, out, _) = hyrep(&["fig3", "--config", &cfg, "--trials", "20"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "L_km,rate_per_min,n_opt,m_opt,p,delta_gen,delta_swap,fidelity,fidelity_se,infeasible"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "50.0");
    assert_eq!(row[9], "true");
}

#[test]
fn breed_emits_json_stats() {
    let (code, out, _) = hyrep(&["breed", "--trials", "100", "--seed", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["params"]["m"], 3);
    assert_eq!(v["stats"]["samples"], 100);
    assert!(v["stats"]["mean_fidelity"].as_f64().unwrap() > 0.8);
}

#[test]
fn config_file_round_trips() {
    let cfg = RunConfig { seed: 42, fig3_l_km: vec![100.0, 250.5], f_target: 0.85, ..Default::default() };
    let text = cfg.to_toml();
    assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = hyrep(&["swap", "--config", &write_config(&dir, &text)]);
    assert_eq!(code, 0);
}
