use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn chemoclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemoclass"))
        .args(args)
        .env_remove("CHEMOCLASS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn gen(dir: &TempDir, name: &str, extra: &[&str]) -> String {
    let out = path(dir, name);
    let mut args = vec!["gen", "--out", &out];
    args.extend_from_slice(extra);
    let o = chemoclass(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn variance(values: &[f64]) -> f64 {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

#[test]
fn gen_writes_requested_shape() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "syn.csv");
    let o = chemoclass(&["gen", "--n-per-class", "40", "--p", "200", "--k", "3", "--seed", "7", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("n=120 p=200 k=3"));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 121);
    assert!(lines.iter().all(|l| l.split(',').count() == 201));
    assert!(lines[0].starts_with("label,"));
}

#[test]
fn gen_is_byte_identical_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.csv", &["--seed", "7", "--p", "30"]);
    let b = gen(&dir, "b.csv", &["--seed", "7", "--p", "30"]);
    let c = gen(&dir, "c.csv", &["--seed", "8", "--p", "30"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn usage_errors_exit_two_without_output() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "d.csv", &["--n-per-class", "6", "--p", "20"]);
    let out = path(&dir, "never");
    let cases: Vec<Vec<&str>> = vec![
        vec!["gen", "--k", "1", "--out", &out],
        vec!["export", "--data", &data, "--what", "pcs", "--ncomp", "0", "--out", &out],
        vec!["export", "--data", &data, "--what", "loadings", "--out", &out],
        vec!["export", "--data", &data, "--what", "pcs", "--ncomp", "500", "--out", &out],
        vec!["run", "--data", &data, "--spec", "bogus", "--out-dir", &out],
        vec!["run", "--data", &data, "--spec", "pls:3", "--fraction", "1.5", "--out-dir", &out],
        vec!["run", "--data", &data, "--spec", "pls:3", "--splits", "0", "--out-dir", &out],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = chemoclass(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!Path::new(&out).exists(), "{args:?} wrote output");
    }
}

#[test]
fn runtime_failures_exit_one() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "missing.csv");
    let o = chemoclass(&["run", "--data", &missing, "--spec", "pls:3", "--out-dir", &path(&dir, "o")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    let o = chemoclass(&["export", "--data", &missing, "--what", "spectra", "--out", &path(&dir, "s.csv")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_writes_reports_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "d.csv", &["--n-per-class", "12", "--p", "60", "--seed", "3"]);
    let run = |out: &str, threads: &str| {
        let o = chemoclass(&[
            "run", "--data", &data, "--preset", "fast", "--splits", "3", "--seed", "9", "--threads", threads,
            "--out-dir", out,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8_lossy(&o.stdout).into_owned()
    };
    let (a, b) = (path(&dir, "a"), path(&dir, "b"));
    let stdout = run(&a, "1");
    run(&b, "2");
    assert!(stdout.contains("PLS"));
    let table = fs::read_to_string(Path::new(&a).join("table.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("Model,ACC,SD"));
    assert_eq!(table.lines().count(), 9);
    assert_eq!(table, fs::read_to_string(Path::new(&b).join("table.csv")).unwrap());
    for name in ["pls.csv", "lda_pca.csv", "rf.csv"] {
        let file = |d: &str| fs::read_to_string(Path::new(d).join("confusion").join(name)).unwrap();
        assert_eq!(file(&a), file(&b));
        assert!(file(&a).starts_with("predicted,class0,class1,class2"));
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&a).join("report.json")).unwrap()).unwrap();
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 8);
    assert_eq!(reports[0]["splits"].as_array().unwrap().len(), 3);
}

#[test]
fn single_split_has_no_sd_and_failures_render_na() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "d.csv", &["--n-per-class", "8", "--p", "80"]);
    let out = path(&dir, "o");
    let o = chemoclass(&["run", "--data", &data, "--spec", "pls:3", "--spec", "qda+pca", "--splits", "1", "--out-dir", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(Path::new(&out).join("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert!(rows[0].starts_with("PLS,") && rows[0].ends_with(",NA"), "{table}");
    assert!(rows[1].ends_with(",NA,NA"), "{table}");
}

#[test]
fn export_pcs_orders_variance() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "d.csv", &["--n-per-class", "22", "--p", "50", "--k", "3"]);
    let out = path(&dir, "pcs.csv");
    let o = chemoclass(&["export", "--data", &data, "--what", "pcs", "--ncomp", "3", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("PC1,PC2,PC3,label"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 66);
    let column = |j: usize| rows.iter().map(|r| r[j].parse::<f64>().unwrap()).collect::<Vec<_>>();
    let v: Vec<f64> = (0..3).map(|j| variance(&column(j))).collect();
    assert!(v[0] >= v[1] && v[1] >= v[2], "{v:?}");
}

#[test]
fn export_spectra_is_long_format() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "d.csv", &["--n-per-class", "2", "--p", "5", "--k", "2"]);
    let out = path(&dir, "long.csv");
    let o = chemoclass(&["export", "--data", &data, "--what", "spectra", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("sample,label,wavelength,absorbance"));
    assert_eq!(text.lines().count(), 1 + 4 * 5);
}
