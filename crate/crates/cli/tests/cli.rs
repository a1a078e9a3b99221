use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_coarse-hall");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("COARSE_HALL_MAX_SITES")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

/// Artifacts in `dir` for `command`, sorted.
fn artifacts(dir: &Path, command: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map(|rd| rd.map(|e| e.unwrap().path()).collect())
        .unwrap_or_default();
    v.retain(|p| p.file_name().unwrap().to_str().unwrap().starts_with(&format!("{command}-")));
    v.sort();
    v
}

fn csv_of(dir: &Path, command: &str) -> String {
    let p = artifacts(dir, command).into_iter().find(|p| p.extension().unwrap() == "csv").expect("csv artifact");
    fs::read_to_string(p).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap_or("").to_string()).collect()
}

const SMALL_SWEEP: &str = r#"{
  "base": {
    "model": { "model": "hofstadter", "nx": 16, "ny": 16, "flux": { "p": 1, "q": 4 } },
    "levels": [{ "gap": 1 }],
    "radii": [4]
  },
  "grid": { "r": [3, 4] }
}"#;

#[test]
fn verify_with_bundled_config_passes() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["verify"], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let files = artifacts(out.path(), "verify");
    assert_eq!(files.len(), 2);
    let name = files[0].file_stem().unwrap().to_str().unwrap();
    assert_eq!(name.len(), "verify-".len() + 64);
    let stdout = String::from_utf8(o.stdout).unwrap();
    for suite in ["identity", "negative-control", "perturbation-scaling", "determinant", "phh"] {
        assert!(stdout.contains(&format!("{suite}: ")), "{stdout}");
    }
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&files[1]).unwrap()).unwrap();
    assert_eq!(json["seed"], 0);
    assert_eq!(json["pass"], true);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["verify", "--seed", "5", "--set", "identity.count=10", "--set", "determinant.count=2"];
    assert_eq!(run(&args, a.path()).status.code(), Some(0));
    assert_eq!(run(&args, b.path()).status.code(), Some(0));
    for (x, y) in artifacts(a.path(), "verify").iter().zip(artifacts(b.path(), "verify")) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(&y).unwrap());
    }
}

#[test]
fn checkerboard_pairing_is_zero() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("checkerboard-pairing.json");
    let o = run(&["pairing", "--config", cfg.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let sigma: f64 = column(&csv_of(out.path(), "pairing"), "sigma")[0].parse().unwrap();
    assert!(sigma.abs() <= 1e-6, "{sigma}");
}

#[test]
fn missing_config_is_a_usage_error_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["pairing", "--config", "/nonexistent/config.json"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = run(&["pairing"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn schema_violations_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"model": {"model": "hofstadter", "nx": 8, "ny": 8, "flux": {"p": 1, "q": 4}}, "levels": [], "radii": [2, "wide"]}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["pairing", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("config key `radii[1]`"), "{err}");
    assert!(!out.exists());
    let o = run(&["pairing", "--config", cfg.to_str().unwrap(), "--set", "noequals"], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn overrides_change_the_run_and_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("checkerboard-pairing.json");
    let c = cfg.to_str().unwrap();
    assert_eq!(run(&["pairing", "--config", c], dir.path()).status.code(), Some(0));
    assert_eq!(run(&["pairing", "--config", c, "--set", "radii=[3]"], dir.path()).status.code(), Some(0));
    assert_eq!(artifacts(dir.path(), "pairing").len(), 4);
}

#[test]
fn failed_assertions_exit_one_and_keep_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("checkerboard-pairing.json");
    let o = run(
        &["pairing", "--config", cfg.to_str().unwrap(), "--set", "model.model=hofstadter", "--set", "model.delta=null"],
        dir.path(),
    );
    // `delta` is not a Hofstadter field.
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(
        dir.path(),
        "strict.json",
        r#"{"model": {"model": "hofstadter", "nx": 16, "ny": 16, "flux": {"p": 1, "q": 4}},
            "levels": [{"gap": 1}], "radii": [4], "tolerance": 1e-9, "check_radius": 0}"#,
    );
    let o = run(&["pairing", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(column(&csv_of(dir.path(), "pairing"), "pass"), vec!["false"]);
}

#[test]
fn numerical_failures_exit_three_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cobordism.json",
        r#"{"experiment": "cobordism", "model": {"model": "hofstadter", "nx": 12, "ny": 12, "flux": {"p": 1, "q": 4}},
            "level": {"gap": 1}, "radius": 3, "fit_window": 0.5}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["pairing", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let files = artifacts(&out, "pairing");
    assert_eq!(files.len(), 1);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&files[0]).unwrap()).unwrap();
    assert_eq!(json["error"]["kind"], "numerical");
}

#[test]
fn site_cap_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("model.json");
    let o = Command::new(BIN)
        .args(["model", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(&out)
        .env("COARSE_HALL_MAX_SITES", "100")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(artifacts(&out, "model").is_empty());
}

#[test]
fn sweep_is_deterministic_and_matches_pairing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", SMALL_SWEEP);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--jobs", "2"], out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.join("sweep-state").exists());
    }
    let (sa, sb) = (csv_of(&a, "sweep"), csv_of(&b, "sweep"));
    assert_eq!(sa, sb);
    assert_eq!(column(&sa, "point"), vec!["0", "1"]);

    let pairing = write_config(
        dir.path(),
        "pairing.json",
        r#"{"model": {"model": "hofstadter", "nx": 16, "ny": 16, "flux": {"p": 1, "q": 4}},
            "levels": [{"gap": 1}], "radii": [3, 4]}"#,
    );
    let p = dir.path().join("p");
    assert_eq!(run(&["pairing", "--config", pairing.to_str().unwrap()], &p).status.code(), Some(0));
    assert_eq!(column(&sa, "sigma"), column(&csv_of(&p, "pairing"), "sigma"));
}

#[test]
fn empty_grid_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", &SMALL_SWEEP.replace(r#""r": [3, 4]"#, r#""r": []"#));
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = csv_of(dir.path(), "sweep");
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("point,flux,grid_seed,kind,"));
}

#[test]
fn sweep_resumes_from_markers_and_refuses_foreign_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", SMALL_SWEEP);
    let out = dir.path().join("out");
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()], &out).status.code(), Some(0));
    let csv_path = artifacts(&out, "sweep").into_iter().find(|p| p.extension().unwrap() == "csv").unwrap();
    let hash = csv_path.file_stem().unwrap().to_str().unwrap().trim_start_matches("sweep-").to_string();
    let full = fs::read_to_string(&csv_path).unwrap();

    // A finished point is not recomputed: plant a marker and see it echoed.
    let state = out.join("sweep-state");
    fs::create_dir_all(&state).unwrap();
    fs::write(state.join("run-hash"), &hash).unwrap();
    let first_row = full.lines().nth(1).unwrap().replacen("clean", "planted", 1);
    fs::write(state.join("000000.csv"), format!("{first_row}\n")).unwrap();
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()], &out).status.code(), Some(0));
    let resumed = fs::read_to_string(&csv_path).unwrap();
    assert!(resumed.contains("planted"));
    assert_eq!(resumed.lines().nth(2), full.lines().nth(2));

    fs::create_dir_all(&state).unwrap();
    fs::write(state.join("run-hash"), "someone-else").unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("someone-else"));
}

#[test]
fn bundled_configs_parse() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, file) in [("model", "model.json"), ("spectrum", "model.json")] {
        let cfg = configs().join(file);
        let o = run(&[cmd, "--config", cfg.to_str().unwrap(), "--set", "model.nx=8", "--set", "model.ny=8"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let geo = run(&["geometry", "--set", "trials=5", "--set", "excisiveness=false"], dir.path());
    assert_eq!(geo.status.code(), Some(0));
    assert_eq!(column(&csv_of(dir.path(), "geometry"), "suite").len(), 3);
}
