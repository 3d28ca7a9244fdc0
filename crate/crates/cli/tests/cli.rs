use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "small"
duration = 4000
scoring = "structured"
false_positives = true
algorithms = ["epst", "ppmc"]

[[interference]]
start = 2500
end = 3000
pattern = 1
"#;

const JITTERY: &str = r#"
name = "jittery"
duration = 4000
scoring = "jitter"
algorithms = ["epst"]

[jitter]
onset = 100
max_offset = 4
"#;

fn epst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epst"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario_file(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn list_names_builtins() {
    let o = epst(&["list"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "jitter_dropout"));
}

#[test]
fn run_writes_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_file(dir.path(), "small.toml", SMALL);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let o = epst(&[
            "run",
            "--scenario",
            &sc,
            "--seeds",
            "2",
            "--out",
            out.to_str().unwrap(),
            "--dump-tree",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(out);
    }
    for name in [
        "trace_small_epst.csv",
        "trace_small_ppmc.csv",
        "fp_small_epst.csv",
        "chart_small.svg",
        "tree_small_epst.txt",
    ] {
        let a = std::fs::read(outputs[0].join(name)).unwrap_or_else(|_| panic!("missing {name}"));
        assert_eq!(a, std::fs::read(outputs[1].join(name)).unwrap(), "{name} differs");
    }
    assert!(!outputs[0].join("fp_small_ppmc.csv").exists());
    let trace = std::fs::read_to_string(outputs[0].join("trace_small_epst.csv")).unwrap();
    assert!(trace.starts_with("bin_start,mean_error,samples,signal_mean_error,signal_samples,interference_mean_error"));
}

#[test]
fn dotted_override_reaches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_file(dir.path(), "jittery.toml", JITTERY);
    let read = |tol: &str| {
        let out = dir.path().join(format!("tol{tol}"));
        let o = epst(&[
            "run",
            "--scenario",
            &sc,
            "--seeds",
            "1",
            "--out",
            out.to_str().unwrap(),
            "--epst.matching_interval",
            tol,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(out.join("trace_jittery_epst.csv")).unwrap()
    };
    assert_ne!(read("0"), read("5"));
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_file(dir.path(), "jittery.toml", JITTERY);
    let out_a = dir.path().join("a");
    let cfg = format!(
        "scenario = {sc:?}\nseeds = 1\nout = {:?}\nalgorithms = [\"epst\"]\n[epst]\nmatching_interval = 3\n",
        out_a.to_str().unwrap()
    );
    let cfg_path = scenario_file(dir.path(), "exp.toml", &cfg);
    assert!(epst(&["run", "--config", &cfg_path]).status.success());
    let out_b = dir.path().join("b");
    let flags = [
        "run",
        "--scenario",
        &sc,
        "--seeds",
        "1",
        "--out",
        out_b.to_str().unwrap(),
        "--epst.matching_interval=3",
    ];
    assert!(epst(&flags).status.success());
    let name = "trace_jittery_epst.csv";
    assert_eq!(
        std::fs::read(out_a.join(name)).unwrap(),
        std::fs::read(out_b.join(name)).unwrap()
    );
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let bad_out = blocker.join("sub");
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--scenario", "nope"],
        vec!["run", "--scenario", "jitter", "--algos", "lstm"],
        vec!["run", "--scenario", "jitter", "--epst.bogus", "1"],
        vec!["run", "--scenario", "jitter", "--seeds", "0"],
        vec!["run", "--scenario", "jitter", "--sampled", "8"],
        vec![
            "run",
            "--scenario",
            "jitter",
            "--seeds",
            "1",
            "--out",
            bad_out.to_str().unwrap(),
        ],
        vec!["verify", "--only", "12"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = epst(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn verify_exact_criteria() {
    let o = epst(&["verify", "--quick", "--only", "1,9"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("quick bounds:"));
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    assert!(text.contains("2 of 2 criteria passed"));
}
