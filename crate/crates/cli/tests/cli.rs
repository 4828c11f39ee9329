use std::path::Path;
use std::process::{Command, Output};

fn hppr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hppr")).args(args).output().expect("run hppr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}

#[test]
fn study_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("study.csv");
    let out = hppr(&["study", "--domain", "hexagon", "--k", "5", "--levels", "4..16", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = lines(&csv);
    assert!(rows[0].starts_with("k,m,h,dof,rel_h1_fem,"));
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.ends_with(",ok")));
    assert!(!dir.path().join("study.csv.tmp").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let csv = dir.path().join("out.csv");
    std::fs::write(&cfg, format!("# small run\ndomain = square\nk = 3, 4\nlevels = 4..8\nout = {}\n", csv.display())).unwrap();
    let out = hppr(&["study", "--config", cfg.to_str().unwrap(), "--k", "6"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = lines(&csv);
    assert_eq!(rows.len(), 3);
    assert!(rows[1..].iter().all(|r| r.starts_with("6e0,")));
}

#[test]
fn configuration_errors_exit_with_one() {
    for args in [
        &["study", "--k", "abc"][..],
        &["study", "--bogus"],
        &["study", "--domain", "circle"],
        &["study", "--levels", "8..4"],
        &["study", "--k", "0.5"],
        &["nonsense"],
    ] {
        let out = hppr(args);
        assert_eq!(code(&out), 1, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn missing_config_file_is_an_error() {
    assert_eq!(code(&hppr(&["study", "--config", "/nonexistent/run.cfg"])), 1);
}

#[test]
fn help_exits_cleanly() {
    let out = hppr(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["study", "pollution", "estimate", "critical-h", "mesh-report", "dump-matrix"] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn failed_levels_give_partial_output_and_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("partial.csv");
    let out = hppr(&[
        "study", "--domain", "hexagon", "--k", "60", "--levels", "4..16", "--solver", "iterative", "--solve-tol", "1e-14",
        "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let rows = lines(&csv);
    assert_eq!(rows.len(), 4);
    assert!(rows[1].ends_with(",ok"));
    assert!(!rows[3].ends_with(",ok"));
}

#[test]
fn dump_matrix_writes_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("a.mtx");
    let out = hppr(&["dump-matrix", "--domain", "hexagon", "--levels", "2..2", "--out", mtx.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rows = lines(&mtx);
    assert_eq!(rows[0], "%%MatrixMarket matrix coordinate complex general");
    assert_eq!(rows[1], "19 19 103");
    assert_eq!(rows.len(), 2 + 103);
}

#[test]
fn estimate_and_pollution_run_small_cases() {
    let dir = tempfile::tempdir().unwrap();
    let est = dir.path().join("eta.csv");
    let out = hppr(&["estimate", "--k", "10", "--levels", "4..16", "--out", est.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rows = lines(&est);
    assert_eq!(rows.len(), 4);
    // The Gaussian problem has no exact solution, so only eta is filled in.
    assert!(rows[3].contains(",,"));

    let pol = dir.path().join("pollution.csv");
    let out = hppr(&["pollution", "--k", "10,20", "--kh", "1", "--out", pol.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rows = lines(&pol);
    assert_eq!(rows[0], "k,m,h,dof,rel_h1_fem,rel_l2_fem,rel_energy_fem,rel_grad_ppr,rel_grad_diff_ppr,status");
    assert_eq!(rows.len(), 3);
}

#[test]
fn mesh_report_prints_alpha() {
    let out = hppr(&["mesh-report", "--domain", "hexagon", "--levels", "4..16"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("alpha (interior parallelograms): exact"), "{text}");
}

#[test]
fn critical_h_reports_a_mesh_size() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("crit.csv");
    let out = hppr(&["critical-h", "--k", "10", "--eps", "0.5", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let rows = lines(&csv);
    assert_eq!(rows[0], "k,eps,m,h,solves,status");
    assert!(rows[1].ends_with(",ok"));
}
