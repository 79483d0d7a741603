//! Configuration files, metrics files, determinism and the command line.

use std::path::{Path, PathBuf};

use lsam::harness::cli::run_cli;
use lsam::harness::config::RunConfig;
use lsam::harness::output::{read_metrics_file, write_metrics};
use lsam::harness::runner::execute;
use lsam::harness::sweep::GridSpec;
use lsam::metrics::CSV_COLUMNS;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped_configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run_cli(std::iter::once("lsam").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn small_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&configs_dir().join("quadratic_lsam.toml")).unwrap();
    cfg.horizon = 20;
    cfg.output_path = dir.display().to_string();
    cfg
}

#[test]
fn shipped_configs_parse_validate_and_round_trip() {
    let files = shipped_configs();
    assert!(files.len() >= 8);
    for f in files {
        let cfg = RunConfig::load(&f).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again, "{}", f.display());
    }
}

#[test]
fn shipped_grids_have_expected_sizes() {
    let reference = GridSpec::load(&configs_dir().join("grids/reference_lsam.toml")).unwrap();
    assert_eq!(reference.points().unwrap().len(), 72);
    assert_eq!(reference.grid, GridSpec::reference_lsam_grid().grid);
    let small = GridSpec::load(&configs_dir().join("grids/small.toml")).unwrap();
    assert_eq!(small.size(), 4);
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    let text = std::fs::read_to_string(configs_dir().join("quadratic_esgd.toml")).unwrap();
    let err = RunConfig::from_toml_str(&text.replace("horizon", "horizn"))
        .unwrap_err()
        .to_string();
    assert!(err.contains("horizn"), "{err}");
    let cfg = RunConfig::from_toml_str(&text.replace("seeds = [1, 2, 3]", "seeds = []")).unwrap();
    let err = cfg.validate().unwrap_err().to_string();
    assert!(err.contains("seeds"), "{err}");
}

#[test]
fn csv_header_is_fixed() {
    let mut buf = Vec::new();
    write_metrics(&mut buf, &[]).unwrap();
    let header = String::from_utf8(buf).unwrap();
    assert_eq!(header.trim_end(), CSV_COLUMNS.join(","));
    assert_eq!(
        header.trim_end(),
        "t,wall_ns,f_val,grad_norm_sq,G_norm_sq,z_norm_sq,phi,sync_flag,worker_id"
    );
}

#[test]
fn runs_are_byte_identical_across_repeats() {
    for name in ["quadratic_lsam.toml", "quadratic_esgd.toml", "baseline_easgd.toml"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::load(&configs_dir().join(name)).unwrap();
        cfg.horizon = cfg.horizon.min(2_000);
        cfg.override_seed(11);
        cfg.output_path = a.path().display().to_string();
        let first = execute(&cfg).unwrap();
        cfg.output_path = b.path().display().to_string();
        let second = execute(&cfg).unwrap();
        let bytes = |p: &Path| std::fs::read(p).unwrap();
        assert_eq!(bytes(&first[0].csv_path), bytes(&second[0].csv_path), "{name}");
        let rows = read_metrics_file(&first[0].csv_path).unwrap();
        assert_eq!(rows.len(), first[0].summary.rows);
        assert!(rows.iter().all(|r| r.wall_ns == 0));
    }
}

#[test]
fn cli_run_writes_one_file_pair_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    let mut cfg = RunConfig::load(&configs_dir().join("quadratic_esgd.toml")).unwrap();
    cfg.horizon = 500;
    std::fs::write(&cfg_path, cfg.to_toml_string().unwrap()).unwrap();
    let out = dir.path().join("out");
    let (code, text) = cli(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{text}");
    for seed in [1, 2, 3] {
        assert!(out.join(format!("quadratic-esgd-seed{seed}.csv")).exists());
        assert!(out.join(format!("quadratic-esgd-seed{seed}.summary.json")).exists());
    }
    let (code, _) = cli(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed-override",
        "42",
    ]);
    assert_eq!(code, 0);
    assert!(out.join("quadratic-esgd-seed42.csv").exists());
}

#[test]
fn cli_reports_step_cap_violations_with_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(configs_dir().join("quadratic_lsam_chain.toml")).unwrap();
    std::fs::write(&cfg_path, text.replace("eta0 = 0.125", "eta0 = 0.5")).unwrap();
    let (code, _) = cli(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    let err = RunConfig::load(&cfg_path).unwrap().validate().unwrap_err().to_string();
    assert!(err.contains("1/(4(L+λ))") && err.contains("0.125"), "{err}");
}

#[test]
fn cli_scheduler_override_and_unknown_scheduler() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("dist.toml");
    std::fs::write(&cfg_path, small_config(dir.path()).to_toml_string().unwrap()).unwrap();
    let (code, text) = cli(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--scheduler",
        "real-concurrent",
    ]);
    assert_eq!(code, 0, "{text}");
    let (code, _) = cli(&["run", "--config", cfg_path.to_str().unwrap(), "--scheduler", "fastest"]);
    assert_eq!(code, 2);
}

#[test]
fn cli_sweep_runs_every_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("base.toml");
    std::fs::write(&cfg_path, small_config(dir.path()).to_toml_string().unwrap()).unwrap();
    let out = dir.path().join("sweep");
    let grid = configs_dir().join("grids/small.toml");
    let (code, text) = cli(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{text}");
    let csvs = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 4);
    assert_eq!(text.lines().count(), 4);
    assert!(out.join("sweep_summary.json").exists());
}

#[test]
fn cli_sweep_without_grid_runs_base_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("base.toml");
    std::fs::write(&cfg_path, small_config(dir.path()).to_toml_string().unwrap()).unwrap();
    let (code, text) = cli(&["sweep", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(text.lines().count(), 1);
    assert!(dir.path().join("quadratic-lsam-seed1.csv").exists());
}

#[test]
fn cli_sweep_over_cap_is_refused_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("base.toml");
    std::fs::write(&cfg_path, small_config(dir.path()).to_toml_string().unwrap()).unwrap();
    let grid_path = dir.path().join("grid.toml");
    let text = std::fs::read_to_string(configs_dir().join("grids/reference_lsam.toml")).unwrap();
    std::fs::write(&grid_path, format!("cap = 10\n{text}")).unwrap();
    let out = dir.path().join("never");
    let (code, _) = cli(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--grid",
        grid_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(!out.exists());
}

#[test]
fn cli_verify_quick_suite() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = cli(&[
        "verify",
        "--suite",
        "distributed",
        "--quick",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("[PASS]  9") && text.contains("[PASS] 10"), "{text}");
    assert!(dir.path().join("verify_report.json").exists());
    let (code, _) = cli(&["verify", "--suite", "nonsense"]);
    assert_eq!(code, 2);
}
