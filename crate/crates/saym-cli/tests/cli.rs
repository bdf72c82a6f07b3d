//! End-to-end tests of the binary: exit codes, report shapes, determinism,
//! and configuration precedence.

use std::process::{Command, Output};

use serde_json::Value;

fn saym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saym"))
        .args(args)
        .env_remove("SAYM_THREADS")
        .output()
        .expect("binary runs")
}

fn json_of(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn gauss_moment_matches_closed_form() {
    let out = saym(&["moments", "--cutoff", "gauss", "--k", "-4"]);
    assert_eq!(exit_code(&out), 0);
    let report = json_of(&out);
    assert_eq!(report["k"], -4);
    assert_eq!(report["value"], 1.0);
    assert_eq!(report["error"], 0.0);
    assert_eq!(report["schemaVersion"], 1);
    assert_eq!(report["config"]["cutoffSpec"], "gauss");
    assert_eq!(report["config"]["n"], 8);
}

#[test]
fn power_count_verdicts_drive_exit_codes() {
    let good = saym(&["power-count", "--n", "8", "--loops", "2", "--max-external", "4"]);
    assert_eq!(exit_code(&good), 0);
    let report = json_of(&good);
    assert_eq!(report["verdict"], true);
    assert_eq!(report["n"], 8);
    assert!(report["per_graph"].as_array().unwrap().len() > 100);

    let bad = saym(&["power-count", "--n", "6", "--loops", "2", "--max-external", "4"]);
    assert_eq!(exit_code(&bad), 1);
    let report = json_of(&bad);
    assert_eq!(report["verdict"], false);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        vec!["power-count", "--n", "8", "--loops", "1"],
        vec!["expand", "--n", "8"],
        vec!["brst-check", "--variant", "minimal"],
        vec!["form-factor", "--cutoff", "pointmass:0.5@1,0.5@4", "--eval", "0,2"],
        vec!["propagator", "--momentum", "0.3,-0.2,0.5,0.1", "--xi", "2"],
    ] {
        let first = saym(&args);
        let second = saym(&args);
        assert_eq!(exit_code(&first), 0, "args {args:?}");
        assert_eq!(first.stdout, second.stdout, "args {args:?}");
    }
}

#[test]
fn thread_cap_does_not_change_report_bytes() {
    let free = saym(&["power-count", "--n", "8", "--loops", "2"]);
    let capped = Command::new(env!("CARGO_BIN_EXE_saym"))
        .args(["power-count", "--n", "8", "--loops", "2"])
        .env("SAYM_THREADS", "1")
        .output()
        .expect("binary runs");
    assert_eq!(exit_code(&capped), 0);
    assert_eq!(free.stdout, capped.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_saym"))
        .args(["moments", "--k", "0"])
        .env("SAYM_THREADS", "zero")
        .output()
        .expect("binary runs");
    assert_eq!(exit_code(&bad), 2);
}

#[test]
fn usage_errors_exit_two() {
    let unknown_flag = saym(&["moments", "--k", "0", "--no-such-flag"]);
    assert_eq!(exit_code(&unknown_flag), 2);
    assert!(String::from_utf8_lossy(&unknown_flag.stderr).contains("--no-such-flag"));

    let odd_n = saym(&["form-factor", "--n", "9"]);
    assert_eq!(exit_code(&odd_n), 2);

    let small_n = saym(&["expand", "--n", "6"]);
    assert_eq!(exit_code(&small_n), 2);

    let divergent = saym(&["moments", "--cutoff", "density:exp", "--k", "4"]);
    assert_eq!(exit_code(&divergent), 2);

    let no_momentum = saym(&["propagator"]);
    assert_eq!(exit_code(&no_momentum), 2);

    let bad_cutoff = saym(&["moments", "--cutoff", "nonsense", "--k", "0"]);
    assert_eq!(exit_code(&bad_cutoff), 2);

    let degenerate = saym(&["renorm", "--delta-z", "-1.5"]);
    assert_eq!(exit_code(&degenerate), 2);
}

#[test]
fn power_count_accepts_order_six_but_other_commands_require_eight() {
    // Order 6 is defined for counting (and correctly fails the two-loop
    // verdict), while form-factor construction starts at order 8.
    let counting = saym(&["power-count", "--n", "6", "--loops", "2"]);
    assert_eq!(exit_code(&counting), 1);
    let building = saym(&["form-factor", "--n", "6"]);
    assert_eq!(exit_code(&building), 2);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(
        &path,
        "# sample configuration\nn = 10\nlambda = 2.0\ncutoff = gauss\nc = 1.0,0.5,0.25,0.125\nseed = 7\n",
    )
    .unwrap();
    let path_str = path.to_str().unwrap();

    let from_file = saym(&["form-factor", "--config", path_str]);
    assert_eq!(exit_code(&from_file), 0);
    let report = json_of(&from_file);
    assert_eq!(report["config"]["n"], 10);
    assert_eq!(report["config"]["lambda"], 2.0);
    assert_eq!(report["config"]["seed"], 7);
    assert_eq!(report["degree"], 3);

    let overridden = saym(&["form-factor", "--config", path_str, "--n", "8", "--c", "1,1,1"]);
    assert_eq!(exit_code(&overridden), 0);
    let report = json_of(&overridden);
    assert_eq!(report["config"]["n"], 8);
    assert_eq!(report["config"]["lambda"], 2.0);
    assert_eq!(report["degree"], 2);

    let unknown_key = dir.path().join("bad.conf");
    std::fs::write(&unknown_key, "volume = 11\n").unwrap();
    let bad = saym(&["form-factor", "--config", unknown_key.to_str().unwrap()]);
    assert_eq!(exit_code(&bad), 2);
}

#[test]
fn out_flag_redirects_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = saym(&["moments", "--k", "-2", "--out", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    assert!(out.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written["k"], -2);
    assert_eq!(written["value"], 1.0);
}

#[test]
fn power_count_table_format_is_text() {
    let out = saym(&["power-count", "--n", "8", "--loops", "1", "--format", "table"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("verdict: true"));
    assert!(text.contains("omega(direct)"));
    assert!(!text.trim_start().starts_with('{'));
}

#[test]
fn propagator_scan_emits_csv() {
    let out = saym(&["propagator", "--scan"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,dnorm"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 60);
    for row in rows {
        let (p, d) = row.split_once(',').expect("two columns");
        assert!(p.parse::<f64>().unwrap() > 0.0);
        assert!(d.parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn brst_check_reports_expected_shapes() {
    let extended = saym(&["brst-check", "--variant", "extended"]);
    assert_eq!(exit_code(&extended), 0);
    let report = json_of(&extended);
    assert_eq!(report["variant"], "extended");
    assert_eq!(report["invariance"], true);
    assert_eq!(report["fermion_roundtrip"], true);
    assert_eq!(report["nilpotency"]["auxiliary"], true);
    assert_eq!(report["nilpotency"]["antighost"], true);

    let minimal = saym(&["brst-check", "--variant", "minimal"]);
    assert_eq!(exit_code(&minimal), 0);
    let report = json_of(&minimal);
    assert_eq!(report["nilpotency"]["antighost"], false);
    assert!(!report["nilpotency_residuals"]["antighost"]
        .as_array()
        .unwrap()
        .is_empty());
    assert_eq!(report["ok"], true);
}

#[test]
fn renorm_cutoff_shift_example() {
    let out = saym(&["renorm", "--delta-z", "0.21", "--mode", "cutoff-shift"]);
    assert_eq!(exit_code(&out), 0);
    let report = json_of(&out);
    let ratios = report["quadratic_ratios_cutoff_shift"].as_array().unwrap();
    assert!((ratios[0].as_f64().unwrap() - 1.21).abs() < 1e-12);
    for r in &ratios[1..] {
        assert_eq!(r.as_f64().unwrap(), 1.0);
    }
    assert_eq!(report["consistency"], true);
}

#[test]
fn expand_prints_action_sectors() {
    let out = saym(&["expand", "--n", "8"]);
    assert_eq!(exit_code(&out), 0);
    let report = json_of(&out);
    let s0 = report["s0"].as_array().unwrap();
    assert!(!s0.is_empty());
    for line in s0 {
        let line = line.as_str().unwrap();
        assert!(line.contains('A'), "quadratic line {line}");
    }
    assert!(!report["s_gf"].as_array().unwrap().is_empty());
    assert!(!report["s_gh"].as_array().unwrap().is_empty());
    let terms = report["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 4);
    assert_eq!(terms[3]["m"], 8);
    assert_eq!(terms[3]["k"], 2);
}
