use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
name = "small"

[geometry]
height = 0.042
width = 0.14
thickness = 0.001

[mesh]
nx = 4
ny = 2

[material]
youngs_modulus = 162.4e9
poisson_ratio = 0.28
density = 2330.0
thermal_expansion = 2.54e-6
conductivity = 145.0
specific_heat = 711.0
reference_temperature_celsius = 25.0

[boundary]
fixed_displacement = ["left_edge"]
fixed_temperature = ["left_edge"]

[reduction]
methods = ["uncoupled", "two-step", "superposition"]
modes = [{ structural = 6, thermal = 4 }]

[[excitation.structural]]
node_set = "top_right"
direction = "y"
amplitude = 3000.0
omega = 10.0
kind = "sinusoid"

[[excitation.thermal]]
node_set = "bottom_right"
amplitude = 100.0

[transient]
enabled = true
t_end = 1.0e-3
samples = 10
snapshots = [1.0e-3]
"#;

fn tmor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn validate_reports_dof_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = tmor(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout).trim(), "ok: N_s = 24, N_T = 12");
}

#[test]
fn unknown_method_exits_2_and_names_the_field() {
    let dir = TempDir::new().unwrap();
    let bad = SMALL.replace("\"two-step\"", "\"two_stepz\"");
    let cfg = write_config(dir.path(), "bad.toml", &bad);
    let out = tmor(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("reduction.methods[1]"), "{}", text(&out.stderr));

    let out = tmor(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stdout).contains("reduction.methods[1]"), "{}", text(&out.stdout));
}

#[test]
fn unknown_method_flag_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = tmor(&[
        "eig",
        "--config",
        cfg.to_str().unwrap(),
        "--methods",
        "uncoupled,modal",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("--methods[1]"), "{}", text(&out.stderr));
}

#[test]
fn missing_material_field_is_named() {
    let dir = TempDir::new().unwrap();
    let bad = SMALL.replace("density = 2330.0\n", "");
    let cfg = write_config(dir.path(), "bad.toml", &bad);
    let out = tmor(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("density"), "{}", text(&out.stderr));
}

#[test]
fn mode_count_above_dof_count_names_both_numbers() {
    let dir = TempDir::new().unwrap();
    let bad = SMALL.replace("structural = 6, thermal = 4", "structural = 30, thermal = 4");
    let cfg = write_config(dir.path(), "bad.toml", &bad);
    let out = tmor(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let s = text(&out.stdout);
    assert!(s.contains("reduction.modes[0].structural"), "{s}");
    assert!(s.contains("30") && s.contains("24"), "{s}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = tmor(&["validate", "--config", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_config_is_accepted() {
    let dir = TempDir::new().unwrap();
    let value: toml::Value = toml::from_str(SMALL).unwrap();
    let cfg = write_config(dir.path(), "small.json", &serde_json::to_string(&value).unwrap());
    let out = tmor(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
}

#[test]
fn assemble_writes_matrices_that_read_back() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("mats");
    let out = tmor(&["assemble", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let a = fs::read_to_string(out_dir.join("A.mtx")).unwrap();
    let a = tmor::io::read_matrix_market(&a).unwrap();
    assert_eq!((a.nrows, a.ncols), (60, 60));
    let k = fs::read_to_string(out_dir.join("K_sT.mtx")).unwrap();
    let k = tmor::io::read_matrix_market(&k).unwrap();
    assert_eq!((k.nrows, k.ncols), (24, 12));
}

fn run_fixed(cfg: &Path, out_dir: &Path) {
    let out = tmor(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--fixed-step",
        "1e-6",
        "--threads",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
}

#[test]
fn fixed_step_runs_are_bitwise_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_fixed(&cfg, &a);
    run_fixed(&cfg, &b);

    let mut csvs = vec![
        PathBuf::from("eigen_errors.csv"),
        PathBuf::from("spectra.csv"),
        PathBuf::from("transient_max.csv"),
    ];
    let mut fields: Vec<PathBuf> = fs::read_dir(a.join("fields"))
        .unwrap()
        .map(|e| PathBuf::from("fields").join(e.unwrap().file_name()))
        .collect();
    assert!(!fields.is_empty());
    fields.sort();
    csvs.extend(fields);
    for f in &csvs {
        let x = fs::read(a.join(f)).unwrap();
        let y = fs::read(b.join(f)).unwrap();
        assert!(!x.is_empty(), "{}", f.display());
        assert!(x == y, "{} differs between runs", f.display());
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["n_structural"], 24);
    let timings: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("timings.json")).unwrap()).unwrap();
    let secs: Vec<f64> = timings["constructions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["seconds"].as_f64().unwrap())
        .collect();
    assert_eq!(secs.len(), 3);
    assert!(secs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn eig_skips_the_transient_stage() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("eig");
    let out = tmor(&["eig", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(out_dir.join("eigen_errors.csv").exists());
    assert!(!out_dir.join("transient_max.csv").exists());
}

#[test]
fn bundled_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["plate_macro.toml", "plate_micro.toml"] {
        let out = tmor(&["validate", "--config", root.join(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", text(&out.stdout));
        assert_eq!(text(&out.stdout).trim(), "ok: N_s = 280, N_T = 140");
    }
}
