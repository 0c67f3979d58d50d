use std::process::{Command, Output};

fn datahide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_datahide")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn derive_params_reports_infeasibility() {
    let out = datahide(&["derive-params", "--n", "2", "--k", "2", "--d", "2", "--epsilon", "1", "--delta", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("s = 0"));
    assert!(text.contains("feasible                      false"));
}

#[test]
fn derive_params_is_byte_identical() {
    let args = ["derive-params", "--n", "3", "--k", "2", "--d", "1000000000000", "--epsilon", "0.5", "--delta", "1"];
    let a = datahide(&args);
    let b = datahide(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(datahide(&["derive-params", "--k", "1"]).status.code(), Some(2));
    assert_eq!(datahide(&["run", "--r", "2", "--s", "2"]).status.code(), Some(2));
    assert_eq!(datahide(&["verify", "--suites", ""]).status.code(), Some(2));
    assert_eq!(datahide(&["verify", "--suites", "bogus"]).status.code(), Some(2));
    assert_eq!(datahide(&["--config", "/nonexistent/config.txt", "verify"]).status.code(), Some(2));
    assert_eq!(datahide(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn injected_fault_names_the_suite() {
    let out = datahide(&["verify", "--suites", "unitarity,encoder", "--inject-fault", "broken-unitary"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL unitarity"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("suite unitarity failed"));
}

#[test]
fn verify_passes_by_default() {
    let out = datahide(&["verify", "--fact-trials", "2000", "--overlap-trials", "200"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.txt");
    let out_dir = dir.path().join("out");
    std::fs::write(&cfg, format!("n = 2\nk = 2\nd = 2\nr = 2\ns = 2\nseed = 1\nn_states = 2\npairs = 1\nsamples = 2\nrestarts = 1\nmax_iters = 2\nout = {}\n", out_dir.display())).unwrap();
    let out = datahide(&["--config", cfg.to_str().unwrap(), "run", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 5);
    assert_eq!(report["config"]["d"], 2);

    // the echoed config reproduces the run
    let again = dir.path().join("again");
    let echo = out_dir.join("config.txt");
    let out = datahide(&["--config", echo.to_str().unwrap(), "run", "--out", again.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let strip = |p: std::path::PathBuf| {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    assert_eq!(strip(out_dir.join("report.json")), strip(again.join("report.json")));
}

#[test]
fn full_access_single_unitary_recovers_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = datahide(&[
        "run",
        "--n",
        "2",
        "--k",
        "2",
        "--d",
        "2",
        "--r",
        "1",
        "--s",
        "2",
        "--seed",
        "3",
        "--pairs",
        "1",
        "--samples",
        "2",
        "--restarts",
        "1",
        "--max-iters",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("decode_sweep_x0-1.csv")).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let fidelity: f64 = rec.unwrap()[1].parse().unwrap();
        assert!((fidelity - 1.0).abs() <= 1e-9);
        rows += 1;
    }
    assert_eq!(rows, 20);
}
