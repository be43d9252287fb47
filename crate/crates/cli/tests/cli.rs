use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gridplan");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn gridplan(args: &[&str], out_dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .env("GRIDPLAN_OUTPUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {line}"))
        .parse()
        .unwrap()
}

/// A T1 copy with its run config in a fresh directory.
fn t1_workspace(
    solver: &str,
    edit: impl FnOnce(&mut serde_json::Value),
) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let mut inst: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fixtures().join("t1.json")).unwrap()).unwrap();
    edit(&mut inst);
    fs::write(dir.path().join("t1.json"), inst.to_string()).unwrap();
    let cfg =
        format!(r#"{{"instances": [{{"slice": "t1", "path": "t1.json"}}], "solver": {solver}}}"#);
    let path = dir.path().join("run.json");
    fs::write(&path, cfg).unwrap();
    (dir, path)
}

#[test]
fn t1_solve_prints_the_optimum_with_both_methods() {
    for method in ["benders", "extensive"] {
        let (dir, cfg) = t1_workspace(&format!(r#"{{"method": "{method}"}}"#), |_| {});
        let o = gridplan(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        let text = stdout(&o);
        let line = text.lines().find(|l| l.starts_with("slice=t1")).unwrap();
        assert!(
            (field(line, "objective") - 4550.0).abs() <= 1e-6 * 4550.0,
            "{line}"
        );
        assert!(text
            .lines()
            .any(|l| l.starts_with("wrote ") && l.contains("solve_t1_")));
    }
}

#[test]
fn trace_lower_bounds_never_fall() {
    let (dir, cfg) = t1_workspace("{}", |_| {});
    let o = gridplan(
        &["solve", "--config", cfg.to_str().unwrap(), "--trace"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let lower: Vec<f64> = stdout(&o)
        .lines()
        .filter(|l| l.starts_with("trace "))
        .map(|l| field(l, "lower"))
        .collect();
    assert!(lower.len() >= 2);
    assert!(lower.windows(2).all(|w| w[1] >= w[0]), "{lower:?}");
}

#[test]
fn bundled_fixture_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("t1.config.json");
    let o = gridplan(&["validate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("slice=t1 ok"));
}

#[test]
fn bad_probabilities_exit_2_naming_the_set() {
    let (dir, cfg) = t1_workspace("{}", |inst| {
        inst["scenarios"][0]["probability"] = 0.6.into();
        inst["scenarios"][1]["probability"] = 0.6.into();
    });
    let o = gridplan(&["validate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("slice t1") && err.contains("[s1, s2]"),
        "{err}"
    );
    assert!(err.contains("probabilities sum to 1.2"), "{err}");
    let o = gridplan(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_files_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridplan(
        &["validate", "--config", "/nonexistent/run.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"instances": [{"slice": "x", "path": "missing.json"}]}"#,
    )
    .unwrap();
    let o = gridplan(&["validate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    fs::write(
        &cfg,
        r#"{"data": ["missing.csv"], "costs": "costs.json", "scenarios": {"seed": 1}}"#,
    )
    .unwrap();
    fs::write(
        dir.path().join("costs.json"),
        serde_json::to_string(&gridplan_core::ingest::fixture::cost_config()).unwrap(),
    )
    .unwrap();
    let o = gridplan(&["validate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn config_typos_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"instances": [{"slice": "x", "path": "x.json"}], "solvr": {}}"#,
    )
    .unwrap();
    let o = gridplan(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solvr"));
}

#[test]
fn iteration_limit_exits_3_and_keeps_the_trace() {
    let (dir, cfg) = t1_workspace(r#"{"max_iterations": 1}"#, |_| {});
    let out = dir.path().join("out");
    let o = gridplan(
        &[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--deterministic-names",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(3));
    let trace = fs::read_to_string(out.join("solve_t1_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    assert!(out.join("solve_t1_benders.json").exists());
}

#[test]
fn evpi_on_t1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("t1.config.json");
    let o = gridplan(
        &[
            "evpi",
            "--config",
            cfg.to_str().unwrap(),
            "--deterministic-names",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("evpi_t1.json")).unwrap())
            .unwrap();
    let get = |k: &str| report[k].as_f64().unwrap();
    assert!((get("ws") - 4400.0).abs() <= 1e-6 * 4400.0);
    assert!((get("rp") - 4550.0).abs() <= 1e-6 * 4550.0);
    assert!((get("evpi_standard") - 150.0).abs() <= 1e-6 * 4550.0);
}

#[test]
fn sensitivity_on_t1_never_loses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("t1.config.json");
    let o = gridplan(
        &[
            "sensitivity",
            "--config",
            cfg.to_str().unwrap(),
            "--deterministic-names",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let entries: Vec<serde_json::Value> = serde_json::from_str(
        &fs::read_to_string(dir.path().join("sensitivity_t1_capacity.json")).unwrap(),
    )
    .unwrap();
    let savings: Vec<f64> = entries
        .iter()
        .filter_map(|e| e["saving"].as_f64())
        .collect();
    assert!(!savings.is_empty());
    assert!(savings.iter().all(|&s| s >= -1e-6));
    assert!(dir.path().join("sensitivity_t1_transmission.csv").exists());
}

#[test]
fn jobs_do_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let inst = fs::read_to_string(fixtures().join("t1.json")).unwrap();
    let mut entries = Vec::new();
    for i in 0..4 {
        let mut v: serde_json::Value = serde_json::from_str(&inst).unwrap();
        v["scenarios"][1]["demand"]["B"] = (45 + 5 * i).into();
        fs::write(dir.path().join(format!("t{i}.json")), v.to_string()).unwrap();
        entries.push(format!(r#"{{"slice": "t{i}", "path": "t{i}.json"}}"#));
    }
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, format!(r#"{{"instances": [{}]}}"#, entries.join(","))).unwrap();
    let run = |jobs: Option<&str>, sub: &str| {
        let out = dir.path().join(sub);
        let mut args = vec![
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--deterministic-names",
        ];
        if let Some(j) = jobs {
            args.extend(["--jobs", j]);
        }
        let o = gridplan(&args, &out);
        assert_eq!(o.status.code(), Some(0));
        (stdout(&o).replace(out.to_str().unwrap(), ""), out)
    };
    let (seq_text, seq) = run(None, "seq");
    let (par_text, par) = run(Some("3"), "par");
    assert_eq!(seq_text, par_text);
    for e in fs::read_dir(&seq).unwrap() {
        let name = e.unwrap().file_name();
        assert_eq!(
            fs::read(seq.join(&name)).unwrap(),
            fs::read(par.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn timestamps_only_without_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("t1.config.json");
    let o = gridplan(&["report", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(
        names
            .iter()
            .all(|n| n.starts_with("report_") && n.contains("Z.")),
        "{names:?}"
    );
    assert!(names.iter().any(|n| n.starts_with("report_manifest_")));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        gridplan(&["frobnicate", "--config", "x"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(gridplan(&["solve"], dir.path()).status.code(), Some(2));
    assert_eq!(gridplan(&["--help"], dir.path()).status.code(), Some(0));
}
