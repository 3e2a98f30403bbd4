//! End-to-end tests of the `gfbs` binary: exit codes, golden traces, and
//! deterministic output.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gfbs"))
}

fn write_cfg(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn ppa_on_closed_form_lasso_stops_after_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "ppa.cfg",
        &format!(
            "[algo]\nname = ppa\n\n[problem]\nkind = lasso\nseed = 0\nn = 0\nm = 1\n\n\
             [run]\niters = 50\ntol = 1e-14\nout = {}\n",
            dir.path().display()
        ),
    );
    let out = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let trace = std::fs::read_to_string(dir.path().join("ppa_lasso_seed0.csv")).unwrap();
    let rows: Vec<&str> = trace.lines().collect();
    // Soft-thresholding from x0 = 3 with unit threshold: 3 → 2 → 1 → 0,
    // then one zero-residual row triggers the stopping rule.
    assert_eq!(rows.len(), 5, "header + 4 data rows, got:\n{trace}");
    assert!(rows[4].starts_with("4,0.0000000000000000e0"));
}

#[test]
fn config_parse_error_reports_line_and_column_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bad.cfg", "[algo]\nname = pfbs\ntau = fast\n");
    let out = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 3, column 7"), "{err}");
}

#[test]
fn identical_config_and_seed_give_byte_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let cfg = write_cfg(
        dir.path(),
        "pfbs.cfg",
        "[algo]\nname = pfbs\n\n[problem]\nkind = lasso\nseed = 7\nn = 20\nm = 50\n\n\
         [run]\niters = 400\ntol = 1e-13\n",
    );
    for out_dir in [&out_a, &out_b] {
        let out = bin()
            .arg("run")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out_dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let a = std::fs::read(out_a.join("pfbs_lasso_seed7.csv")).unwrap();
    let b = std::fs::read(out_b.join("pfbs_lasso_seed7.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "traces differ between identical runs");
}

#[test]
fn inadmissible_gamma_warns_but_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "hot.cfg",
        &format!(
            "[algo]\nname = pfbs\ngamma = 3.5\n\n[problem]\nkind = lasso\nseed = 1\nn = 10\nm = 20\n\n\
             [run]\niters = 20\nout = {}\n",
            dir.path().display()
        ),
    );
    let out = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
    assert!(stdout(&out).contains("admissible=false"), "{}", stdout(&out));
}

#[test]
fn certify_gradient_descent_at_safe_step_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "gd.cfg",
        &format!(
            "[algo]\nname = gradient_descent\n\n[problem]\nkind = equality_qp\nseed = 3\nn = 8\nm = 0\n\n\
             [run]\niters = 2000\nout = {}\n",
            dir.path().display()
        ),
    );
    let out = bin()
        .arg("certify")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}\n{}", stdout(&out), stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("nu_gt_half_beta PASS"), "{text}");
    assert!(text.contains("verdict=PASS"), "{text}");
    assert!(dir.path().join("gradient_descent_equality_qp_seed3_report.txt").exists());
}

#[test]
fn certify_flags_oversized_step_and_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // τ = 1000 puts ν = 1/τ far below β/2 for any generated quadratic.
    let cfg = write_cfg(
        dir.path(),
        "gd_big.cfg",
        &format!(
            "[algo]\nname = gradient_descent\ntau = 1000\n\n\
             [problem]\nkind = equality_qp\nseed = 3\nn = 8\nm = 0\n\n\
             [run]\niters = 10\nout = {}\n\n[checks]\ncheck = nu_gt_half_beta\n",
            dir.path().display()
        ),
    );
    let out = bin()
        .arg("certify")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("nu_gt_half_beta FAIL"), "{}", stdout(&out));
}

#[test]
fn compare_relaxed_admm_matches_textbook_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "radmm.cfg",
        "[algo]\nname = relaxed_admm\n\n[problem]\nkind = two_block_admm\nseed = 2\nn = 6\nm = 5\n\n\
         [run]\niters = 200\n",
    );
    let out = bin()
        .arg("compare")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("max_deviation"), "{}", stdout(&out));
}

#[test]
fn jobs_flag_fans_multiple_configs_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[algo]\nname = pfbs\n\n[problem]\nkind = lasso\nseed = SEED\nn = 12\nm = 24\n\n[run]\niters = 50\n";
    let cfg1 = write_cfg(dir.path(), "s1.cfg", &base.replace("SEED", "1"));
    let cfg2 = write_cfg(dir.path(), "s2.cfg", &base.replace("SEED", "2"));
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg1)
        .arg("--config")
        .arg(&cfg2)
        .arg("--jobs")
        .arg("2")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("pfbs_lasso_seed1.csv").exists());
    assert!(dir.path().join("pfbs_lasso_seed2.csv").exists());
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "pfbs.cfg",
        "[algo]\nname = pfbs\n\n[problem]\nkind = lasso\nseed = 7\nn = 12\nm = 24\n\n[run]\niters = 30\n",
    );
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--seed")
        .arg("11")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("pfbs_lasso_seed11.csv").exists());
}

#[test]
fn missing_config_file_exits_1() {
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg("/nonexistent/nowhere.cfg")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
