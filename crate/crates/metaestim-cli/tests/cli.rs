//! End-to-end tests of the `metaestim` binary: exit codes, artifact shapes
//! and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metaestim"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const ROSEN2_SAA: &str = "\
objective = benchmark:rosenbrock:2
param = x1,-100,100
param = x2,-100,100
method = saa
seed = 9
";

#[test]
fn extremize_writes_the_artifact_set_with_exact_bookkeeping() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.problem", ROSEN2_SAA);
    let out = run_in(dir.path(), &["extremize", "p.problem", "--out", "run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run = dir.path().join("run");
    for f in ["best.csv", "iteration_bests.csv", "visited_space.csv", "stats.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let best = std::fs::read_to_string(run.join("best.csv")).unwrap();
    assert_eq!(best.lines().count(), 2, "header plus exactly one row");
    assert!(best.starts_with("x1,x2,pset,fitness\n"));

    let visited = std::fs::read_to_string(run.join("visited_space.csv")).unwrap();
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("stats.json")).unwrap()).unwrap();
    let rows = visited.lines().count() as u64 - 1;
    assert_eq!(stats["total_evals"].as_u64().unwrap(), rows);
    assert_eq!(stats["seed"].as_u64().unwrap(), 9);
    assert!(stats["options"]["saa"].is_object());
}

#[test]
fn non_convergence_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "p.problem",
        "objective = benchmark:rosenbrock:2\n\
         param = x1,-100,100\n\
         param = x2,-100,100\n\
         method = pso\n\
         seed = 1\n\
         tolerance = 1e-300\n\
         option = iterations,2\n",
    );
    let out = run_in(dir.path(), &["extremize", "p.problem", "--out", "run"]);
    assert!(out.status.success());
    let stats: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("run/stats.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(stats["converged"], serde_json::Value::Bool(false));
}

#[test]
fn malformed_method_key_exits_2_and_names_the_valid_keys() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.problem", &ROSEN2_SAA.replace("saa", "newton"));
    let out = run_in(dir.path(), &["extremize", "p.problem", "--out", "run"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for key in ["pso", "saa", "acor", "ees1", "ees2"] {
        assert!(stderr.contains(key), "stderr should name {key}: {stderr}");
    }
}

#[test]
fn unknown_problem_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.problem", &format!("{ROSEN2_SAA}swarm = 3\n"));
    let out = run_in(dir.path(), &["extremize", "p.problem", "--out", "run"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_problem_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["extremize", "nope.problem", "--out", "run"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kv_and_json_forms_produce_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.problem", ROSEN2_SAA);
    write(
        dir.path(),
        "p.json",
        r#"{
            "objective": "benchmark:rosenbrock:2",
            "parameters": [
                {"name": "x1", "min": -100, "max": 100},
                {"name": "x2", "min": -100, "max": 100}
            ],
            "method": "saa",
            "seed": 9
        }"#,
    );
    assert!(run_in(dir.path(), &["extremize", "p.problem", "--out", "a"]).status.success());
    assert!(run_in(dir.path(), &["extremize", "p.json", "--out", "b"]).status.success());
    for f in ["best.csv", "iteration_bests.csv", "visited_space.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between the two problem forms");
    }
}

#[test]
fn seed_flag_overrides_the_file_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.problem", ROSEN2_SAA);
    assert!(run_in(dir.path(), &["extremize", "p.problem", "--out", "a"]).status.success());
    assert!(run_in(
        dir.path(),
        &["extremize", "p.problem", "--out", "b", "--seed", "10"]
    )
    .status
    .success());
    let a = std::fs::read(dir.path().join("a/visited_space.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/visited_space.csv")).unwrap();
    assert_ne!(a, b, "a different seed must change the trajectory");
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b/stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["seed"].as_u64().unwrap(), 10);
}

const ROSEN4_EES2: &str = "\
objective = benchmark:rosenbrock:4
param = x1,-100,100
param = x2,-100,100
param = x3,-100,100
param = x4,-100,100
method = ees2
seed = 5
";

#[test]
fn explore_rejects_budgets_below_ten_per_dimension() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.problem", ROSEN4_EES2);
    let out = run_in(
        dir.path(),
        &["explore", "p.problem", "--budget", "39", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn explore_writes_one_surface_per_cyclic_pair() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.problem", ROSEN4_EES2);
    let out = run_in(
        dir.path(),
        &["explore", "p.problem", "--grid", "5", "--out", "run"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    for f in [
        "surface_x1_x2.csv",
        "surface_x2_x3.csv",
        "surface_x3_x4.csv",
        "surface_x4_x1.csv",
        "visited_space.csv",
        "stats.json",
    ] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let surf = std::fs::read_to_string(run.join("surface_x1_x2.csv")).unwrap();
    assert!(surf.starts_with("x1,x2,fitness\n"));
    assert_eq!(surf.lines().count(), 1 + 25, "5x5 cells");
    // ees2 defaults: 20 solutions over 30 iterations plus the initial batch
    let visited = std::fs::read_to_string(run.join("visited_space.csv")).unwrap();
    assert_eq!(visited.lines().count() - 1, 620);
}

#[test]
fn external_model_that_cannot_be_set_up_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // command template does not mention the parameter at all
    write(
        dir.path(),
        "p.problem",
        "objective = external\n\
         param = a,0,1\n\
         method = saa\n\
         command = ./model.sh\n\
         cost_command = ./score.sh\n",
    );
    let out = run_in(dir.path(), &["extremize", "p.problem", "--out", "run"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn benchmark_with_one_replicate_reports_binary_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["benchmark", "--replicates", "1", "--seed", "42", "--out", "r.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "function,algorithm,mean_evals,convergence,mean_fitness"
    );
    let mut rows = 0;
    for line in lines {
        let conv = line.split(',').nth(3).unwrap();
        assert!(conv == "0" || conv == "1", "convergence {conv} not binary");
        rows += 1;
    }
    assert_eq!(rows, 16, "4 functions x 4 methods");
}

#[test]
fn tune_period_rejects_a_nonpositive_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["tune-period", "--target", "0", "--out", "run"]);
    assert_eq!(out.status.code(), Some(2));
}
