use std::fs;
use std::path::Path;
use std::process::Command;

use timebin::expsim::{simulate_gate_experiment, NoiseConfig, SimulationOptions};
use timebin::qcore::MatrixJson;
use timebin::tomo::{write_counts, ProcessMatrix, ProjectorSet, TomographyInputSet};
use timebin_cli::{ingest_counts, run_scenario, Scenario, ScenarioName};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_timebin"))
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn ingest_single_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let runs = simulate_gate_experiment(
        &TomographyInputSet::standard(),
        &NoiseConfig::default(),
        &SimulationOptions::default(),
    )
    .unwrap();
    let projs = ProjectorSet::overcomplete(2).unwrap();
    let path = dir.path().join("one.csv");
    write_counts(
        fs::File::create(&path).unwrap(),
        &runs[0].labeled_counts(&projs),
    )
    .unwrap();
    assert_eq!(ingest_counts(&path).unwrap().len(), 36);
}

#[test]
fn ingest_rejects_negative_counts_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(
        &path,
        "setting_label,input_label,counts,duration_s\nt1:t1,t1:t1,5,600\nt1:t2,t1:t1,-3,600\n",
    )
    .unwrap();
    let err = format!("{:#}", ingest_counts(&path).unwrap_err());
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn ingest_rejects_unknown_labels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(
        &path,
        "setting_label,input_label,counts,duration_s\nt1:q,t1:t1,5,600\n",
    )
    .unwrap();
    assert!(ingest_counts(&path).is_err());
}

#[test]
fn simulated_counts_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let runs = simulate_gate_experiment(
        &TomographyInputSet::standard(),
        &NoiseConfig::default().with_seed(8),
        &SimulationOptions::default(),
    )
    .unwrap();
    let projs = ProjectorSet::overcomplete(2).unwrap();
    let rows: Vec<_> = runs.iter().flat_map(|r| r.labeled_counts(&projs)).collect();
    let path = dir.path().join("all.csv");
    write_counts(fs::File::create(&path).unwrap(), &rows).unwrap();
    assert_eq!(ingest_counts(&path).unwrap(), rows);
}

#[test]
fn ideal_qpt_report() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&Scenario::new(ScenarioName::IdealQpt, dir.path())).unwrap();
    let report = read_json(&dir.path().join("report.json"));
    assert!(report["process_fidelity"].as_f64().unwrap() >= 1.0 - 1e-8);
    assert!((report["average_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((report["entangling_capability"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    let chi =
        MatrixJson::from_str(&fs::read_to_string(dir.path().join("chi.json")).unwrap()).unwrap();
    assert_eq!(chi.basis_ordering.as_ref().unwrap()[15], "ZZ");
    assert_eq!(
        ingest_counts(&dir.path().join("counts.csv")).unwrap().len(),
        16 * 36
    );
}

#[test]
fn zero_noise_cnot_tables_via_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quiet.json");
    fs::write(&cfg, NoiseConfig::noiseless().to_json()).unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--scenario", "cnot-table", "--exact", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("TIMEBIN_LOG", "info")
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("running scenario cnot-table"));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["cnot_lower_bound"].as_f64().unwrap(), 1.0);
    assert_eq!(report["cnot_upper_bound"].as_f64().unwrap(), 1.0);
    for key in ["zz_table", "xx_table"] {
        let t = report[key].as_array().unwrap();
        for row in t {
            let row: Vec<f64> = row
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_f64().unwrap())
                .collect();
            assert_eq!(row.iter().filter(|&&x| (x - 1.0).abs() < 1e-12).count(), 1);
            assert_eq!(row.iter().filter(|&&x| x.abs() < 1e-12).count(), 3);
        }
    }
}

#[test]
fn noisy_qpt_fields_and_physical_chi() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::new(ScenarioName::NoisyQpt, dir.path());
    s.seed = Some(5);
    s.bootstrap = 3;
    let out = run_scenario(&s).unwrap();
    let report = read_json(&dir.path().join("report.json"));
    for key in [
        "process_fidelity",
        "average_fidelity",
        "entangling_capability",
        "process_fidelity_std",
        "raw_process_fidelity",
        "raw_process_fidelity_std",
        "input_process_fidelity",
        "compensated_process_fidelity",
    ] {
        assert!(report[key].is_number(), "{key} missing");
    }
    for name in ["chi_raw.json", "chi_input.json", "chi_cphase.json"] {
        let m = MatrixJson::from_str(&fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
        let p = ProcessMatrix::from_json(&m).unwrap();
        assert!(p.min_eigenvalue().unwrap() >= -1e-10, "{name}");
    }
    for f in out
        .files
        .iter()
        .filter(|f| f.extension().is_some_and(|e| e == "json"))
    {
        let text = fs::read_to_string(f).unwrap();
        if f.file_name().unwrap().to_string_lossy().starts_with("chi") {
            MatrixJson::from_str(&text).unwrap();
        }
    }
}

#[test]
fn emitted_states_validate() {
    let dir = tempfile::tempdir().unwrap();
    for name in [ScenarioName::Entangle, ScenarioName::QstSingle] {
        let out = run_scenario(&Scenario::new(name, dir.path().join(name.as_str()))).unwrap();
        let states: Vec<_> = out
            .files
            .iter()
            .filter(|f| f.file_name().unwrap().to_string_lossy().starts_with("rho_"))
            .collect();
        assert_eq!(states.len(), 4, "{name}");
        for f in states {
            let m = MatrixJson::from_str(&fs::read_to_string(f).unwrap()).unwrap();
            assert!((m.to_matrix().unwrap().trace().re - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn toml_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noise.toml");
    fs::write(
        &cfg,
        "accidental_fraction = 0.0\ndark_cps = [0.0, 0.0]\n[loss_db]\nsystem = 40.0\n",
    )
    .unwrap();
    let mut s = Scenario::new(ScenarioName::QstSingle, dir.path().join("out"));
    s.config_path = Some(cfg);
    assert_eq!(s.noise_config().unwrap().loss_db.system, 40.0);
    run_scenario(&s).unwrap();
}

#[test]
fn malformed_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"det_eff": [1.4, 0.6]}"#).unwrap();
    let out = bin()
        .args(["run", "--scenario", "entangle", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("det_eff"));
}

#[test]
fn missing_paths_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "run",
            "--scenario",
            "entangle",
            "--config",
            "/nonexistent/noise.json",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = bin()
        .args(["run", "--scenario", "deconvolve", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--total"));
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let err =
        run_scenario(&Scenario::new(ScenarioName::CnotTable, blocker.join("sub"))).unwrap_err();
    assert!(format!("{err:#}").contains("creating"));
}

#[test]
fn ingest_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&Scenario::new(ScenarioName::IdealQpt, dir.path())).unwrap();
    let out = bin()
        .arg("ingest")
        .arg(dir.path().join("counts.csv"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("576 records, 16 inputs"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    assert_eq!(
        NoiseConfig::load(&root.join("measured.toml")).unwrap(),
        NoiseConfig::measured_regime()
    );
    assert_eq!(
        NoiseConfig::load(&root.join("noiseless.json")).unwrap(),
        NoiseConfig::noiseless()
    );
}
