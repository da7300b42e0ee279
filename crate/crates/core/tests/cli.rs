use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approx::assert_relative_eq;
use dephasim::cli::{sha256_hex, CommandKind, RunManifest, Table, DATA_FILE, META_FILE, PLOT_FILE};
use dephasim::dynamics::{dephasing_factor, dephasing_rate, TimeGrid};
use dephasim::nonmarkov::channel_capacity;
use dephasim::optimizer::linear_grid;
use dephasim::spectral::TemperatureSpec;
use tempfile::TempDir;

fn dephasim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dephasim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("DEPHASIM_OUT")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str], out: &Path) -> (Table, RunManifest) {
    let o = dephasim(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    let table = Table::read(&out.join(DATA_FILE)).unwrap();
    let manifest = RunManifest::read(&out.join(META_FILE)).unwrap();
    (table, manifest)
}

fn out_dir(tmp: &TempDir, name: &str) -> PathBuf {
    tmp.path().join(name)
}

#[test]
fn trace_example() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "trace");
    let args = ["trace", "--s", "3", "--cutoff", "soft", "--temp", "zero", "--tau-max", "50", "--points", "500"];
    let (table, manifest) = run_ok(&args, &out);
    assert_eq!(table.header, ["tau", "lambda", "gamma", "capacity"]);
    assert_eq!(table.rows.len(), 500);
    assert_eq!(table.rows[0][3], 1.0);
    assert_eq!(manifest.config.command, CommandKind::Trace);

    let bytes = fs::read(out.join(DATA_FILE)).unwrap();
    assert!(!bytes.contains(&b'\r'));
    assert_eq!(manifest.checksums[DATA_FILE], sha256_hex(&bytes));
    assert_eq!(manifest.checksums[PLOT_FILE], sha256_hex(&fs::read(out.join(PLOT_FILE)).unwrap()));
    assert!(fs::read_to_string(out.join(PLOT_FILE)).unwrap().contains("data.csv"));
}

#[test]
fn rows_recompute_from_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "trace");
    let (table, manifest) = run_ok(
        &["trace", "--s", "2.5", "--cutoff", "hard", "--temp", "finite", "--t-tilde", "0.7", "--tau-max", "20", "--points", "41"],
        &out,
    );
    let cfg = &manifest.config;
    let grid = TimeGrid::uniform(cfg.tau_max, cfg.points).unwrap();
    for i in [0, 7, 23, 40] {
        let tau = grid.tau()[i];
        let lambda = dephasing_factor(&cfg.spectral, &cfg.temperature, tau, &cfg.quadrature).unwrap();
        let gamma = dephasing_rate(&cfg.spectral, &cfg.temperature, tau, &cfg.quadrature).unwrap();
        let expected = [tau, lambda, gamma, channel_capacity(lambda).unwrap()];
        for (got, want) in table.rows[i].iter().zip(expected) {
            assert_relative_eq!(*got, want, max_relative = 1e-11, epsilon = 1e-300);
        }
    }
}

#[test]
fn sopt_example() {
    let tmp = TempDir::new().unwrap();
    let (table, _) = run_ok(&["sopt", "--cutoff", "hard", "--temp", "high"], &out_dir(&tmp, "sopt"));
    assert_eq!(table.rows.len(), 1);
    let s_opt = table.column("s_opt").unwrap()[0];
    assert!((s_opt - 4.92).abs() <= 0.01, "{s_opt}");
}

#[test]
fn crossover_example() {
    let tmp = TempDir::new().unwrap();
    let (table, _) = run_ok(&["crossover", "--cutoff", "soft", "--temp", "zero"], &out_dir(&tmp, "x"));
    let s_star = table.column("s_star").unwrap()[0];
    assert!((s_star - 2.0).abs() <= 0.02, "{s_star}");
}

#[test]
fn nonmark_summary_matches_rows() {
    let tmp = TempDir::new().unwrap();
    let (table, manifest) = run_ok(&["nonmark", "--s", "3.5", "--cutoff", "hard", "--tau-max", "60"], &out_dir(&tmp, "nm"));
    let n_q = manifest.summary["n_q"].as_f64().unwrap();
    let last = *table.column("n_q_cumulative").unwrap().last().unwrap();
    assert!(n_q > 0.0);
    assert_relative_eq!(last, n_q, max_relative = 1e-10);
}

#[test]
fn config_errors_exit_2_without_outputs() {
    let tmp = TempDir::new().unwrap();
    for args in [
        &["trace", "--s", "-1"][..],
        &["trace", "--cutoff", "sharp"],
        &["stationary", "--temp", "lukewarm"],
        &["sweep-temp", "--t-min", "2", "--t-max", "1"],
        &["trace", "--not-a-flag"],
    ] {
        let out = out_dir(&tmp, "bad");
        let o = dephasim(args, &out);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!out.exists(), "{args:?} created the output directory");
    }
    let o = dephasim(&["trace", "--cutoff", "sharp"], &out_dir(&tmp, "bad"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cutoff"));
}

#[test]
fn numerical_failure_exits_3_and_keeps_previous_run() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "run");
    run_ok(&["stationary", "--s", "3"], &out);
    let before = fs::read(out.join(DATA_FILE)).unwrap();

    let o = dephasim(
        &["trace", "--s", "3", "--tau-max", "40", "--points", "5", "--abs-tol", "1e-16", "--rel-tol", "1e-16", "--max-panels", "16"],
        &out,
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(out.join(DATA_FILE)).unwrap(), before);
    let names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| !n.starts_with(".staging")), "{names:?}");
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("run.toml");
    fs::write(&file, "s = 2.5\ncutoff = \"hard\"\ntemp = \"high\"\nt-tilde = 2.0\n").unwrap();
    let out = out_dir(&tmp, "cfg");
    let (_, manifest) = run_ok(&["stationary", "--config", file.to_str().unwrap(), "--s", "3"], &out);
    assert_eq!(manifest.config.spectral.s, 3.0);
    assert_eq!(manifest.config.temperature, TemperatureSpec::HighTLimit(2.0));

    fs::write(&file, "ohmicity = 3\n").unwrap();
    let o = dephasim(&["stationary", "--config", file.to_str().unwrap()], &out_dir(&tmp, "cfg2"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let target = tmp.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_dephasim"))
        .args(["stationary", "--s", "2"])
        .env("DEPHASIM_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join(DATA_FILE).exists());
    assert!(target.join(META_FILE).exists());
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = TempDir::new().unwrap();
    let args = ["sweep-temp", "--cutoff", "hard", "--t-points", "6"];
    let mut runs = Vec::new();
    for jobs in ["1", "3"] {
        let out = out_dir(&tmp, jobs);
        let mut a = args.to_vec();
        a.extend(["--jobs", jobs]);
        run_ok(&a, &out);
        runs.push(fs::read(out.join(DATA_FILE)).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn figure_two_bundle() {
    let tmp = TempDir::new().unwrap();
    let (table, _) = run_ok(
        &["figure", "fig2", "--s-min", "1", "--s-max", "4", "--s-points", "7", "--tau-max", "30"],
        &out_dir(&tmp, "fig2"),
    );
    let s = table.column("s").unwrap();
    let i = s.iter().position(|&v| v == 3.0).unwrap();
    assert!((table.column("coherence_hard").unwrap()[i] - 0.3679).abs() < 1e-4);
    assert!((table.column("coherence_soft").unwrap()[i] - 0.1353).abs() < 1e-4);
}

#[test]
fn figure_three_bundle_is_normalised() {
    let tmp = TempDir::new().unwrap();
    let (table, _) = run_ok(
        &["figure", "fig3", "--s-min", "1.5", "--s-max", "4.5", "--s-points", "7", "--tau-max", "40"],
        &out_dir(&tmp, "fig3"),
    );
    for name in ["coherence_soft_norm", "coherence_hard_norm", "n_q_soft_norm", "n_q_hard_norm"] {
        let col = table.column(name).unwrap();
        let max = col.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(max, 1.0, "{name}");
    }
    let s = linear_grid(1.5, 4.5, 7).unwrap();
    let nq = table.column("n_q_soft_norm").unwrap();
    for (x, v) in s.iter().zip(nq) {
        assert_eq!(v > 0.0, *x > 2.0, "s = {x}");
    }
}

#[test]
fn figure_one_bundle_endpoints() {
    let tmp = TempDir::new().unwrap();
    let (table, manifest) = run_ok(&["figure", "fig1", "--t-points", "8"], &out_dir(&tmp, "fig1"));
    let n = table.rows.len();
    for (name, low, high) in [("s_opt_soft", 2.46, 3.46), ("s_opt_hard", 3.92, 4.92)] {
        let col = table.column(name).unwrap();
        assert!((col[0] - low).abs() <= 0.02, "{name}: {}", col[0]);
        assert!((col[n - 1] - high).abs() <= 0.02, "{name}: {}", col[n - 1]);
    }
    for (key, value) in [("s_opt_zero_soft", 2.46), ("s_opt_high_soft", 3.46), ("s_opt_zero_hard", 3.92), ("s_opt_high_hard", 4.92)] {
        let got = manifest.summary[key].as_f64().unwrap();
        assert!((got - value).abs() <= 0.01, "{key}: {got}");
    }
}

#[test]
fn convexity_examples() {
    let tmp = TempDir::new().unwrap();
    for (s, expected) in [("1.5", 0.0), ("2", 0.0), ("3", 1.0)] {
        let (table, _) = run_ok(&["convexity", "--s", s], &out_dir(&tmp, s));
        assert_eq!(table.column("non_convex").unwrap()[0], expected, "s = {s}");
    }
}
