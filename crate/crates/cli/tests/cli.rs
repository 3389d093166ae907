use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hjb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjb")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn out_arg(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn list_problems_names_the_catalogue() {
    let o = hjb(&["list-problems"]);
    assert_eq!(code(&o), 0);
    for name in ["linear-manufactured-disk", "two-control", "monge-ampere"] {
        assert!(stdout(&o).contains(name));
    }
    let o = hjb(&["list-problems", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn solve_writes_artifacts_and_converges() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "run");
    let o = hjb(&["solve", "--problem", "linear-manufactured-disk", "--h", "0.05", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let run = dir.path().join("run");
    let report = read_json(&run.join("solve_report.json"));
    assert!(report["converged"].as_bool().unwrap());
    assert!(report["residual"].as_f64().unwrap() <= report["tol"].as_f64().unwrap());
    assert!(report.get("wall_time").is_none());
    assert!(read_json(&run.join("timing.json"))["solve_seconds"].as_f64().unwrap() >= 0.0);
    let dump = fs::read_to_string(run.join("solution.hjbgrid")).unwrap();
    assert!(dump.starts_with("hjbgrid/1\n"));
    let parsed = hjb_core::lattice::parse_dump(&dump).unwrap();
    assert!(parsed.nodes.iter().all(|n| n.value.is_some()));
}

#[test]
fn unknown_problem_is_a_config_error_listing_the_catalogue() {
    let o = hjb(&["solve", "--problem", "three-control"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("two-control"), "{}", stderr(&o));
}

#[test]
fn zero_tolerance_is_rejected() {
    assert_eq!(code(&hjb(&["solve", "--tol", "0"])), 2);
}

#[test]
fn exhausted_iterations_exit_with_solver_code_and_keep_the_report() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "nc");
    let o = hjb(&["solve", "--method", "jacobi", "--max-iter", "5", "--out", &out]);
    assert_eq!(code(&o), 3);
    let report = read_json(&dir.path().join("nc/solve_report.json"));
    assert!(!report["converged"].as_bool().unwrap());
    assert_eq!(report["iterations"].as_u64(), Some(5));
}

#[test]
fn default_study_is_second_order_and_plots_only_on_request() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "study");
    let o = hjb(&["study", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("PASS"), "{text}");
    let report = read_json(&dir.path().join("study/study_report.json"));
    assert!(report["rate"]["rate"].as_f64().unwrap() >= 1.5);
    let csv = fs::read_to_string(dir.path().join("study/errors.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("h,error,M1,M2,M3,M4"));
    assert_eq!(csv.lines().count(), 5);
    assert!(!dir.path().join("study/rate.svg").exists());

    let plotted = out_arg(&dir, "plotted");
    let o = hjb(&["study", "--h-list", "0.1,0.05", "--plot", "--out", &plotted]);
    assert_eq!(code(&o), 0);
    let svg = fs::read_to_string(dir.path().join("plotted/rate.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn increasing_steps_are_rejected() {
    assert_eq!(code(&hjb(&["study", "--h-list", "0.05,0.1"])), 2);
}

#[test]
fn non_nested_reference_is_rejected() {
    let o = hjb(&["study", "--reference", "fine-grid", "--h-list", "0.1,0.05", "--h-ref", "0.03"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_suites_pass_at_seed_42_and_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (out_arg(&dir, "a"), out_arg(&dir, "b"));
    let o = hjb(&["check", "--seed", "42", "--out", &a]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    for suite in ["comparison", "apriori", "decomposition", "taylor"] {
        assert!(stdout(&o).contains(suite));
    }
    assert_eq!(code(&hjb(&["check", "--seed", "42", "--out", &b])), 0);
    let ra = fs::read(dir.path().join("a/check_report.json")).unwrap();
    let rb = fs::read(dir.path().join("b/check_report.json")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn suite_typo_lists_the_suites() {
    let o = hjb(&["check", "--suite", "taylr"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("decomposition"));
}

#[test]
fn solves_are_byte_identical_across_runs_and_thread_caps() {
    let dir = TempDir::new().unwrap();
    let runs = [("one", "1"), ("two", "2"), ("again", "1")];
    for (name, threads) in runs {
        let out = out_arg(&dir, name);
        let o = hjb(&["solve", "--problem", "two-control", "--h", "0.05", "--threads", threads, "--out", &out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for file in ["solution.hjbgrid", "solve_report.json"] {
        let first = fs::read(dir.path().join("one").join(file)).unwrap();
        for (name, _) in &runs[1..] {
            assert_eq!(first, fs::read(dir.path().join(name).join(file)).unwrap(), "{file} differs in {name}");
        }
    }
}

#[test]
fn config_files_flags_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("config.json");
    let out = out_arg(&dir, "cfg");
    let cfg = serde_json::json!({
        "command": "solve",
        "problem": { "name": "monge-ampere", "gamma": 0.6, "n_controls": 8 },
        "h": 0.1,
        "output_dir": out,
    });
    fs::write(&path, cfg.to_string()).unwrap();

    let o = hjb(&["run", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let written = fs::read_to_string(dir.path().join("cfg/config.json")).unwrap();
    let effective: Value = serde_json::from_str(&written).unwrap();
    assert_eq!(effective["problem"]["gamma"].as_f64(), Some(0.6));
    assert_eq!(effective["tol"].as_f64(), Some(1e-9));

    // Flags win over the file.
    let o = hjb(&["solve", "--config", path.to_str().unwrap(), "--h", "0.05", "--gamma", "0.7", "--print-config"]);
    assert_eq!(code(&o), 0);
    let printed: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(printed["h"].as_f64(), Some(0.05));
    assert_eq!(printed["problem"]["gamma"].as_f64(), Some(0.7));
    assert_eq!(printed["problem"]["n_controls"].as_u64(), Some(8));

    // The printed configuration reproduces itself.
    let again = dir.path().join("again.json");
    fs::write(&again, stdout(&o)).unwrap();
    let o2 = hjb(&["run", again.to_str().unwrap(), "--print-config"]);
    assert_eq!(stdout(&o), stdout(&o2));
}

#[test]
fn malformed_configs_exit_with_config_code() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"tolerance": 1e-6}"#).unwrap();
    assert_eq!(code(&hjb(&["run", path.to_str().unwrap()])), 2);
    fs::write(&path, r#"{"problem": {"name": "two-control", "gamma": 0.5}}"#).unwrap();
    assert_eq!(code(&hjb(&["run", path.to_str().unwrap()])), 2);
    assert_eq!(code(&hjb(&["run", dir.path().join("missing.json").to_str().unwrap()])), 2);
}

#[test]
fn decompose_prints_weights_and_flags_infeasibility() {
    let o = hjb(&["decompose", "--matrix", "[[2,1],[1,2]]"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lambda: Vec<f64> = serde_json::from_value(v["lambda"].clone()).unwrap();
    assert_eq!(lambda, vec![1.0, 1.0, 1.0, 0.0]);
    assert_eq!(v["path"], "explicit");

    let o = hjb(&["decompose", "--matrix", "[[1,0.9],[0.9,1]]", "--floor", "0.2"]);
    assert_eq!(code(&o), 3);
    assert_eq!(code(&hjb(&["decompose"])), 2);
    assert_eq!(code(&hjb(&["decompose", "--matrix", "[[1,2],[3,4]]"])), 2);
}

#[test]
fn outside_theory_needs_its_flag() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "ma");
    let base = ["solve", "--problem", "monge-ampere", "--c0", "0", "--h", "0.1", "--out", &out];
    assert_eq!(code(&hjb(&base)), 2);
    let mut flagged = base.to_vec();
    flagged.push("--allow-outside-theory");
    let o = hjb(&flagged);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
