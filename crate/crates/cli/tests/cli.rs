use std::path::Path;
use std::process::{Command, Output};

use weakbias::report::{read_csv, to_csv_string, COLUMNS};

fn weakbias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakbias"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn sweep_to(dir: &Path, name: &str, extra: &[&str]) -> (Output, String) {
    let path = dir.join(name);
    let mut args = vec!["sweep", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = weakbias(&args);
    let text = std::fs::read_to_string(&path).unwrap_or_default();
    (o, text)
}

#[test]
fn point_at_defaults_has_a_ratio_near_one_in_a_thousand() {
    let o = weakbias(&["point"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with(&(COLUMNS.join(",") + "\n")));
    let rows = read_csv(out.as_bytes()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!((2e-4..=5e-3).contains(&rows[0].ratio.abs()), "{}", rows[0].ratio);
}

#[test]
fn point_without_dephasing_has_zero_biases_and_undefined_ratio() {
    let o = weakbias(&["point", "--eps-d", "0"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[2..5], ["0e0", "0e0", "nan"]);
}

#[test]
fn point_with_uninformative_basis_exits_one_with_undefined_row() {
    let o = weakbias(&["point", "--theta", "0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("uninformative"), "{}", stderr(&o));
    let rows = read_csv(stdout(&o).as_bytes()).unwrap();
    assert!(rows[0].dg_n.is_nan() && rows[0].ratio.is_nan());
}

#[test]
fn negative_values_in_scientific_notation_are_accepted() {
    let o = weakbias(&["point", "--g", "-1e-5", "--oracle"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv(stdout(&o).as_bytes()).unwrap();
    assert_eq!(rows[0].param_value, -1e-5);
    let (first, oracle) = (rows[0].dg_n, rows[0].dg_n_oracle.unwrap());
    assert!(((oracle - first) / first).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["point", "--bogus"],
        vec!["point", "--beta", "-1"],
        vec!["point", "--nmax", "zero"],
        vec!["point", "--t", "0"],
        vec!["sweep"],
        vec!["sweep", "--axis", "g", "--from", "0", "--to", "1", "--points", "1"],
        vec!["sweep", "--axis", "g", "--from", "-1", "--to", "1", "--points", "5", "--spacing", "log"],
        vec!["sweep", "--axis", "omega", "--from", "0", "--to", "1", "--points", "5"],
        vec!["sweep", "--preset", "fig9"],
        vec!["point", "--config", "/nonexistent/weakbias.conf"],
        vec![],
    ] {
        let o = weakbias(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn presets_write_their_grids() {
    let dir = tempfile::tempdir().unwrap();
    for (preset, rows, axis) in [("fig1", 50, "delta"), ("fig2", 41, "g"), ("fig3", 30, "eps_d")] {
        let (o, text) = sweep_to(dir.path(), &format!("{preset}.csv"), &["--preset", preset]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(!text.contains('\r'));
        let records = read_csv(text.as_bytes()).unwrap();
        assert_eq!(records.len(), rows);
        assert!(records.iter().all(|r| r.param_name == axis && r.ratio.is_finite()));
    }
}

#[test]
fn fig1_ratio_grows_with_delta_and_fig3_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let (_, text) = sweep_to(dir.path(), "a.csv", &["--preset", "fig1"]);
    let r = read_csv(text.as_bytes()).unwrap();
    assert!(r.windows(2).all(|w| w[1].ratio > w[0].ratio));
    let (_, text) = sweep_to(dir.path(), "b.csv", &["--preset", "fig3"]);
    let r = read_csv(text.as_bytes()).unwrap();
    let (lo, hi) = r
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), x| (lo.min(x.ratio.abs()), hi.max(x.ratio.abs())));
    assert!(hi / lo < 1.01);
}

#[test]
fn sweeps_are_byte_identical_across_runs_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--preset", "fig2", "--oracle", "--points", "9"];
    let (_, a) = sweep_to(dir.path(), "a.csv", &args);
    let (_, b) = sweep_to(dir.path(), "b.csv", &args);
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_eq!(to_csv_string(&read_csv(a.as_bytes()).unwrap(), true), a);
}

#[test]
fn sweep_output_replaces_the_file_without_leftovers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    std::fs::write(&path, "old contents").unwrap();
    let (o, text) = sweep_to(dir.path(), "out.csv", &["--axis", "g", "--from", "0", "--to", "1e-5", "--points", "3"]);
    assert_eq!(code(&o), 0);
    assert!(text.starts_with("param_name,"));
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn unwritable_output_exits_one() {
    let o = weakbias(&["sweep", "--preset", "fig1", "--points", "2", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn failed_points_become_nan_rows() {
    let o = weakbias(&["sweep", "--axis", "theta", "--from", "0", "--to", "0.4", "--points", "3"]);
    assert_eq!(code(&o), 0);
    let rows = read_csv(stdout(&o).as_bytes()).unwrap();
    assert!(rows[0].dg_n.is_nan());
    assert!(rows[1].dg_n.is_finite() && rows[2].dg_n.is_finite());
    assert!(stderr(&o).contains("1 of 3 points undefined"));
}

#[test]
fn flags_override_config_which_overrides_preset() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# shorter fig1\npreset = fig1\npoints = 4\neps_d = 2e-5\ng = 3e-6\n").unwrap();
    let o = weakbias(&["sweep", "--config", conf.to_str().unwrap(), "--g", "-2e-6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv(stdout(&o).as_bytes()).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].param_name, "delta");
    assert_eq!((rows[0].param_value, rows[3].param_value), (1e-4, 1e-2));

    let point = |extra: &[&str]| {
        let mut args = vec!["point", "--config", conf.to_str().unwrap()];
        args.extend_from_slice(extra);
        read_csv(stdout(&weakbias(&args)).as_bytes()).unwrap()[0].clone()
    };
    assert_eq!(point(&[]).param_value, 3e-6);
    assert_eq!(point(&["--g", "-2e-6"]).param_value, -2e-6);
}

#[test]
fn bad_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "beta = 1\ntemperature = 3\n").unwrap();
    let o = weakbias(&["point", "--config", conf.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn validate_passes_and_reports_every_check() {
    for seed in ["0", "11"] {
        let o = weakbias(&["validate", "--seed", seed]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        let out = stdout(&o);
        assert!(out.contains("0 failed"));
        for name in ["route equivalence", "oracle convergence", "closed form consistency", "truncation stability"] {
            assert!(out.lines().any(|l| l.starts_with("PASS") && l.contains(name)), "{name}");
        }
    }
}

#[test]
fn zero_tolerance_makes_validate_fail() {
    let o = weakbias(&["validate", "--debug-zero-tolerance"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).lines().filter(|l| l.starts_with("FAIL")).count() >= 10);
}
