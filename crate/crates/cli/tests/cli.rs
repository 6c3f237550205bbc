use std::path::Path;
use std::process::{Command, Output};

use enthier::statefile::StateFile;
use tempfile::TempDir;

fn enthier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enthier"))
        .args(args)
        .env_remove("ENTHIER_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn make(dir: &TempDir, name: &str, params: &[&str]) -> String {
    let path = dir.path().join(format!("{name}.json"));
    let path = path.to_str().unwrap().to_string();
    let mut args = vec!["family", name];
    args.extend_from_slice(params);
    args.extend_from_slice(&["--out", &path]);
    let o = enthier(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    path
}

fn first_line(o: &Output) -> String {
    stdout(o).lines().next().unwrap_or_default().to_string()
}

#[test]
fn family_file_round_trips() {
    let dir = TempDir::new().unwrap();
    for (name, params) in [("ghz", vec!["2"]), ("ddd_psi_r", vec!["4"]), ("dmm_psi_a", vec!["1.0"])] {
        let path = make(&dir, name, &params);
        let written = std::fs::read_to_string(&path).unwrap();
        let parsed = StateFile::parse(&written).unwrap();
        let psi = parsed.to_state(false).unwrap();
        let again = StateFile::from_state(&psi, parsed.metadata.clone()).to_canonical_string();
        assert_eq!(written, again, "{name}");

        let mut args = vec!["family", name];
        args.extend(params.iter().copied());
        assert_eq!(stdout(&enthier(&args)), written, "{name} on stdout");
    }
}

#[test]
fn classify_ghz() {
    let dir = TempDir::new().unwrap();
    let path = make(&dir, "ghz", &["2"]);
    let o = enthier(&["classify", &path]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first_line(&o), "S_SSS");
}

#[test]
fn classify_tiles_uses_certificate() {
    let dir = TempDir::new().unwrap();
    let path = make(&dir, "pmm_tiles", &[]);
    let o = enthier(&["classify", &path]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first_line(&o), "S_PMM (separability: certificate)");
}

#[test]
fn classify_without_certificate_is_undecided() {
    let dir = TempDir::new().unwrap();
    let path = make(&dir, "pmm_tiles", &[]);
    let mut file = StateFile::read(Path::new(&path)).unwrap();
    file.metadata = None;
    file.write(Path::new(&path)).unwrap();
    let o = enthier(&["classify", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("Indeterminate"), "{}", stdout(&o));
}

#[test]
fn classify_json_report() {
    let dir = TempDir::new().unwrap();
    let path = make(&dir, "ddd_psi_r", &["4"]);
    let report = dir.path().join("report.json");
    let o = enthier(&["--json", "--tol", "1e-10", "--report", report.to_str().unwrap(), "classify", &path]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let printed: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(printed["class"], "DDD");
    assert_eq!(printed["tol"], 1e-10);
    assert_eq!(saved["class"], printed["class"]);
    assert!(printed["classification"]["pairs"][0]["justification"].is_array());
}

#[test]
fn tolerance_from_environment() {
    let dir = TempDir::new().unwrap();
    let path = make(&dir, "ghz", &["2"]);
    let o = Command::new(env!("CARGO_BIN_EXE_enthier"))
        .args(["--json", "classify", &path])
        .env("ENTHIER_TOL", "1e-7")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tol"], 1e-7);
}

#[test]
fn malformed_file_reports_location() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"dims\": [2, 2, 2],\n  \"amps\": [}\n").unwrap();
    let o = enthier(&["classify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unnormalized_input_needs_flag() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("loose.json");
    std::fs::write(
        &path,
        r#"{"dims": [2, 2, 2], "amps": [{"idx": [0, 0, 0], "re": 1.0, "im": 0.0}, {"idx": [1, 1, 1], "re": 1.0, "im": 0.0}]}"#,
    )
    .unwrap();
    let path = path.to_str().unwrap();
    assert_eq!(enthier(&["classify", path]).status.code(), Some(1));
    let o = enthier(&["--normalize", "classify", path]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first_line(&o), "S_SSS");
}

#[test]
fn unknown_family_lists_names() {
    let o = enthier(&["family", "nonesuch"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("ghz") && err.contains("pmm_tiles"), "{err}");
}

#[test]
fn verify_suites() {
    let o = enthier(&["verify", "theorem2", "--trials", "200", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for suite in ["table1", "monoid", "petz", "theorem11"] {
        let o = enthier(&["verify", suite]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", stdout(&o));
    }
    let dir = TempDir::new().unwrap();
    let o = enthier(&["verify", "conjecture", "--trials", "50", "--dump-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_unknown_suite() {
    let o = enthier(&["verify", "nonesuch"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("table"));
}

#[test]
fn monoid_product_matches_prediction() {
    let dir = TempDir::new().unwrap();
    let ddd = make(&dir, "ddd_psi_r", &["4"]);
    let ssm = make(&dir, "ssm", &["3"]);
    let out = dir.path().join("product.json");
    let o = enthier(&["--json", "monoid", &ddd, &ssm, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["predicted"], "DDM");
    assert_eq!(v["class"], "DDM");
    assert_eq!(v["agrees_with_prediction"], true);
    let again = enthier(&["classify", out.to_str().unwrap()]);
    assert_eq!(first_line(&again), "S_DDM");
}

#[test]
fn petz_exact_and_refused() {
    let dir = TempDir::new().unwrap();
    let ghz = make(&dir, "ghz", &["2"]);
    let o = enthier(&["--json", "petz", &ghz]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["pipeline"]["recovery_deviation"].as_f64().unwrap() <= 1e-9);
    assert!(v["pipeline"]["extraction"].is_object());

    let ce = make(&dir, "counterexample_232", &[]);
    let o = enthier(&["--json", "petz", &ce, "--orientation", "2,1,0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["pipeline"]["recovery_deviation"].as_f64().unwrap() > 1e-3);
    assert!(v["pipeline"]["refusal"].is_string());

    let o = enthier(&["petz", &ce, "--orientation", "0,0,1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn multipartite_checks() {
    let dir = TempDir::new().unwrap();
    let g = make(&dir, "ghz_n", &["4", "2"]);
    let o = enthier(&["--json", "multipartite", &g, "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["equivalence"]["ghz_form"], "Holds");
    assert_eq!(v["max_ghz_order"], 4);

    let o = enthier(&["classify", &g]);
    assert_eq!(o.status.code(), Some(1));
}
