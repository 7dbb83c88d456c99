use std::path::Path;
use std::process::Command;

use pint_bench::{compare, run_mgrit, run_sequential, Problem, RunConfig, RunError};
use serde_json::json;

fn config(value: serde_json::Value, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::from_json(&value.to_string()).unwrap();
    cfg.outputs.dir = out.to_path_buf();
    cfg
}

fn small_eddy(problem: &str, out: &Path) -> RunConfig {
    config(
        json!({
            "problem": problem,
            "t_end": 0.02,
            "nt": 256,
            "factors": [8],
            "mesh": {"layers": [2, 2, 2], "angular_divisions": 12}
        }),
        out,
    )
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

fn without_column(rows: Vec<Vec<String>>, name: &str) -> Vec<Vec<String>> {
    let k = rows[0].iter().position(|h| h == name).unwrap();
    rows.into_iter()
        .map(|mut r| {
            r.remove(k);
            r
        })
        .collect()
}

#[test]
fn sequential_dahlquist_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({"problem": "dahlquist", "t_end": 1.6, "nt": 16, "factors": []}),
        dir.path(),
    );
    let rep = run_sequential(&cfg).unwrap();
    assert_eq!(rep.phi_count, 16);
    let dt = 0.1f64;
    let rows = read_csv(&dir.path().join("sequential.csv"));
    assert_eq!(rows[0], ["step", "t", "l2_norm", "max_abs"]);
    assert_eq!(rows.len(), 18);
    for (i, row) in rows[1..].iter().enumerate() {
        let expected = (1.0 + dt).powi(-(i as i32));
        let got: f64 = row[3].parse().unwrap();
        assert!((got - expected).abs() <= 1e-14, "step {i}: {got} vs {expected}");
    }
    assert!((rep.final_max_abs - 1.1f64.powi(-16)).abs() <= 1e-15);
    assert!(dir.path().join("effective_config.json").exists());
}

#[test]
fn zero_intervals_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(json!({"problem": "dahlquist", "nt": 0}), dir.path());
    let err = run_sequential(&cfg).unwrap_err();
    assert!(matches!(err, RunError::Validation(_)));
    assert_eq!(err.exit_code(), 1);
    assert!(!dir.path().join("sequential.csv").exists());
}

#[test]
fn desk_linear_eddy_counts_one_application_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(json!({"problem": "eddy-linear"}), dir.path());
    let rep = run_sequential(&cfg).unwrap();
    assert_eq!(rep.problem, Problem::EddyLinear);
    assert_eq!(rep.state_dim, 301);
    assert_eq!(rep.phi_count, 2048);
    assert!(rep.final_max_abs > 0.0);
}

#[test]
fn two_level_dahlquist_converges_within_coarse_interval_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({"problem": "dahlquist", "t_end": 1.0, "nt": 64, "factors": [4], "halt_tol": 1e-10,
               "dahlquist": {"forcing": "sine"}}),
        dir.path(),
    );
    let rep = run_mgrit(&cfg).unwrap();
    assert!(rep.converged);
    assert!(rep.iterations <= 16, "{} iterations", rep.iterations);
    assert!(rep.final_residual <= 1e-10);
    let conv = read_csv(&dir.path().join("convergence.csv"));
    assert_eq!(
        conv[0],
        [
            "iteration",
            "residual_norm",
            "fine_phi_count",
            "coarse_phi_count",
            "wall_seconds"
        ]
    );
    assert_eq!(conv.len(), rep.iterations + 2);
    let work = read_csv(&dir.path().join("work_model.csv"));
    assert_eq!(
        work[0],
        [
            "workers",
            "phi_level_0",
            "phi_level_1",
            "critical_path_cost",
            "estimated_speedup"
        ]
    );
    assert_eq!(work.len(), 1 + cfg.model_workers.len());
}

#[test]
fn residual_history_does_not_depend_on_worker_count() {
    let histories: Vec<Vec<f64>> = [1, 4]
        .iter()
        .map(|&w| {
            let dir = tempfile::tempdir().unwrap();
            let cfg = config(
                json!({"problem": "dahlquist", "t_end": 2.0, "nt": 256, "factors": [4, 4], "num_workers": w,
                       "halt_tol": 1e-12, "seed": 7, "dahlquist": {"forcing": "random"}}),
                dir.path(),
            );
            run_mgrit(&cfg).unwrap();
            read_csv(&dir.path().join("convergence.csv"))[1..]
                .iter()
                .map(|r| r[1].parse().unwrap())
                .collect()
        })
        .collect();
    assert_eq!(histories[0].len(), histories[1].len());
    for (a, b) in histories[0].iter().zip(&histories[1]) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{a} vs {b}");
    }
}

#[test]
fn seed_changes_the_random_forcing_only_when_it_changes() {
    let run = |seed: u64| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            json!({"problem": "dahlquist", "nt": 32, "factors": [], "seed": seed,
                   "dahlquist": {"forcing": "random"}}),
            dir.path(),
        );
        run_sequential(&cfg).unwrap().final_l2_norm
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn converged_mgrit_matches_sequential_stepping() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_eddy("eddy-nonlinear", dir.path());
    let rep = compare(&cfg).unwrap();
    assert!(rep.mgrit.converged);
    assert!(rep.discrepancy <= 10.0 * cfg.halt_tol, "{:e}", rep.discrepancy);
    assert_eq!(rep.sequential.phi_count, 256);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["discrepancy"].as_f64().unwrap(), rep.discrepancy);
    assert!(summary.to_string().find("wall").is_none());
}

#[test]
fn tight_dahlquist_tolerance_gives_tight_discrepancy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({"problem": "dahlquist", "t_end": 4.0, "nt": 1024, "factors": [4, 4], "halt_tol": 1e-12,
               "dahlquist": {"lambda": -3.0, "forcing": "sine", "amplitude": 1.0}}),
        dir.path(),
    );
    let rep = compare(&cfg).unwrap();
    assert!(rep.discrepancy <= 1e-10, "{:e}", rep.discrepancy);
}

#[test]
fn scaled_two_level_config_has_a_modelled_speedup_at_64_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(json!({"problem": "eddy-linear", "relaxation": "F"}), dir.path());
    let rep = compare(&cfg).unwrap();
    let rows = &rep.mgrit.speedup;
    assert!(rows[0].workers == 1 && rows[0].estimated_speedup < 1.0);
    for w in rows.windows(2) {
        assert!(w[1].estimated_speedup >= w[0].estimated_speedup);
    }
    for r in rows.iter().filter(|r| r.workers >= 64) {
        assert!(
            r.estimated_speedup > 1.0,
            "{} workers: {}",
            r.workers,
            r.estimated_speedup
        );
    }
    assert!(rep.crossover_workers.unwrap() <= 64);
    assert!(rep.best_speedup > 1.0);
}

#[test]
fn effective_config_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let cfg = small_eddy("eddy-linear", first.path());
    run_mgrit(&cfg).unwrap();
    let echoed = std::fs::read_to_string(first.path().join("effective_config.json")).unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut again = RunConfig::from_json(&echoed).unwrap();
    assert_eq!(again, cfg);
    again.outputs.dir = second.path().to_path_buf();
    run_mgrit(&again).unwrap();
    let conv = |d: &Path| without_column(read_csv(&d.join("convergence.csv")), "wall_seconds");
    assert_eq!(conv(first.path()), conv(second.path()));
    for f in ["work_model.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(first.path().join(f)).unwrap(),
            std::fs::read(second.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

fn bench(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pint-bench"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write_config(dir: &Path, value: serde_json::Value) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, value.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn print_config_echoes_complete_defaults() {
    let (code, stdout, _) = bench(&["print-config"]);
    assert_eq!(code, 0);
    assert_eq!(RunConfig::from_json(&stdout).unwrap(), RunConfig::default());
    let (code, stdout, _) = bench(&["print-config", "--workers", "6", "--seed", "11"]);
    assert_eq!(code, 0);
    let cfg = RunConfig::from_json(&stdout).unwrap();
    assert_eq!((cfg.num_workers, cfg.seed), (6, 11));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    assert_eq!(bench(&["--help"]).0, 0);
    assert_eq!(bench(&["run-mgrit", "--bogus"]).0, 1);
    assert_eq!(bench(&["run-mgrit", "--config", "/nonexistent/config.json"]).0, 1);

    let cfg = write_config(dir.path(), json!({"problem": "dahlquist", "nt": 0}));
    let (code, _, stderr) = bench(&["run-sequential", "--config", &cfg, "--out", out]);
    assert_eq!(code, 1);
    assert!(stderr.contains("nt"));

    let cfg = write_config(dir.path(), json!({"problem": "dahlquist", "nt": 64, "factors": [4]}));
    let (code, stdout, _) = bench(&["run-mgrit", "--config", &cfg, "--out", out, "--workers", "2"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("converged"));

    let cfg = write_config(
        dir.path(),
        json!({"problem": "eddy-nonlinear", "t_end": 0.02, "nt": 16, "factors": [],
               "mesh": {"layers": [2, 2, 2], "angular_divisions": 12},
               "source": {"kind": "sine", "period": 0.02, "amplitude": 200.0},
               "newton": {"max_iters": 1, "rel_tol": 1e-14}}),
    );
    let (code, _, stderr) = bench(&["run-sequential", "--config", &cfg, "--out", out]);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("step into point"));

    let nc_out = dir.path().join("nc");
    let cfg = write_config(
        dir.path(),
        json!({"problem": "dahlquist", "nt": 256, "factors": [4], "max_iters": 1, "halt_tol": 1e-14,
               "dahlquist": {"forcing": "sine"}}),
    );
    let (code, _, _) = bench(&["run-mgrit", "--config", &cfg, "--out", nc_out.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert_eq!(read_csv(&nc_out.join("convergence.csv")).len(), 3);
    assert!(nc_out.join("work_model.csv").exists());
}
