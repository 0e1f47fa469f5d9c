use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qwalk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn validate_empty_file_prints_defaults() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("empty.toml"), "").unwrap();
    let o = qwalk(&["validate", "empty.toml"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    for line in ["n_cells         23", "gamma           2", "rel_tol         1e-9", "abs_tol         1e-9"] {
        assert!(out.contains(line), "missing `{line}` in\n{out}");
    }
}

#[test]
fn validate_rejects_negative_decay() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.toml"), "gamma = -1\n").unwrap();
    let o = qwalk(&["validate", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lattice.gamma: must be >= 0"), "{}", stderr(&o));
}

#[test]
fn validate_warns_about_small_rings() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("small.toml"), "[lattice]\nn_cells = 4\n").unwrap();
    let o = qwalk(&["validate", "small.toml"], dir.path());
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning: lattice.n_cells = 4"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_bad_types_exit_with_code_one() {
    let dir = TempDir::new().unwrap();
    let o = qwalk(&["run", "--set", "gama=2", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gama: unknown configuration key"));
    let o = qwalk(&["run", "--set", "n_cells=2.5", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lattice.n_cells"));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn custom_dimerized_run_moves_one_cell() {
    let dir = TempDir::new().unwrap();
    let o = qwalk(&["run", "--scenario", "custom", "--set", "g=0", "--set", "v=0", "--set", "v_prime=0.5", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("out/sweep.csv"));
    assert_eq!(header, ["ratio", "model", "g", "delta", "dm_final", "stop_time", "survival"]);
    let full = rows.iter().find(|r| r[1] == "full_gpe").unwrap();
    let dm: f64 = full[4].parse().unwrap();
    assert!((dm - 1.0).abs() < 1e-6, "{dm}");
    let reference = rows.iter().find(|r| r[1] == "incoherent_formula").unwrap();
    assert_eq!(reference[2], "");
    assert_eq!(reference[5], "");
}

#[test]
fn fig2_writes_the_full_table_and_plot() {
    let dir = TempDir::new().unwrap();
    let o = qwalk(&["run", "--scenario", "fig2", "--out", "out", "--formats", "csv,svg", "--jobs", "4"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let (_, rows) = read_csv(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 5 * 21 + 21);
    assert_eq!(rows.iter().filter(|r| r[1] == "incoherent_formula").count(), 21);
    let digits = rows[1][4].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(digits.len(), 12);
    assert!(out.join("plot_fig2.svg").exists());
    assert!(out.join("config.resolved.json").exists());
    let series = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("series_")).count();
    assert_eq!(series, 5 * 21);
    let (header, _) = read_csv(&out.join("series_full_gpe_g4_d0_r0.5000.csv"));
    assert_eq!(header, ["t", "norm", "rho00", "dm_t"]);
}

#[test]
fn fig4_writes_two_series_on_one_grid() {
    let dir = TempDir::new().unwrap();
    let o = qwalk(&["run", "--scenario", "fig4", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, full) = read_csv(&dir.path().join("out/series_full.csv"));
    let (_, rate) = read_csv(&dir.path().join("out/series_rate.csv"));
    assert_eq!(full.len(), rate.len());
    assert!(full.iter().zip(&rate).all(|(a, b)| a[0] == b[0]));
    let (_, rows) = read_csv(&dir.path().join("out/sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[3] == "6.00000000000e-1"));
}

#[test]
fn resolved_config_reproduces_the_run_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("in.toml"), "scenario = \"fig3\"\n[sweep]\ndelta_values = [0.0, 0.6]\nratios = [0.2, 0.5]\n").unwrap();
    let o = qwalk(&["run", "--config", "in.toml", "--set", "t_final=200", "--out", "a", "--formats", "csv,json,svg"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = qwalk(&["run", "--config", "a/config.resolved.json", "--out", "b"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 5);
    for name in names {
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = fs::read(dir.path().join("b").join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
}

#[test]
fn set_overrides_win_over_the_file() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.toml"), "[lattice]\ng = 1.0\n").unwrap();
    let o = qwalk(&["validate", "c.toml", "--set", "g=0.25"], dir.path());
    assert!(String::from_utf8(o.stdout).unwrap().contains("g               0.25"));
}

#[test]
fn all_points_failing_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let o = qwalk(
        &["run", "--set", "models=full_gpe", "--set", "rel_tol=1e-300", "--set", "abs_tol=1e-300", "--out", "out"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("out/errors.csv"));
    assert_eq!(header, ["ratio", "model", "g", "delta", "error"]);
    assert!(rows[0][4].contains("underflow"));
    let (_, rows) = read_csv(&dir.path().join("out/sweep.csv"));
    assert_eq!(rows[0][4], "");
}
