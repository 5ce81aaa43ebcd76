use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_glmdiag"));
    c.env_remove("GLMDIAG_THREADS")
        .env_remove("GLMDIAG_TIME_BUDGET_SECS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_data(dir: &Path) -> PathBuf {
    let mut csv = String::from("y,x1,x2,x1copy\n");
    for i in 0..40 {
        let x1 = i as f64 / 40.0;
        let x2 = ((i * 7) % 11) as f64 / 11.0;
        let y = (1.0 + x1 + 0.5 * x2).exp() * (1.0 + 0.2 * (i as f64 * 1.7).sin());
        csv.push_str(&format!("{y},{x1},{x2},{x1}\n"));
    }
    let p = dir.join("data.csv");
    fs::write(&p, csv).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .map(|rd| {
            rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
                .collect()
        })
        .unwrap_or_default();
    v.sort();
    v
}

#[test]
fn intercept_only_fit_returns_the_mean() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("ten.csv");
    let ys = [1.5, 2.0, 0.7, 3.2, 2.2, 1.1, 4.0, 2.6, 1.9, 0.8];
    let mut csv = String::from("y\n");
    for y in ys {
        csv.push_str(&format!("{y}\n"));
    }
    fs::write(&data, csv).unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--family",
        "gamma",
        "--response",
        "y",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    for mu in json["fitted"].as_array().unwrap() {
        assert!((mu.as_f64().unwrap() - mean).abs() < 1e-9);
    }
    let b0 = json["coefficients"][0]["estimate"].as_f64().unwrap();
    assert!((b0 - mean.ln()).abs() < 1e-9);
    assert_eq!(json["coefficients"][0]["term"], "(Intercept)");
    assert!(out.join("fit.tsv").exists());
}

#[test]
fn missing_column_exits_2_and_names_it() {
    let tmp = TempDir::new().unwrap();
    let data = write_data(tmp.path());
    let o = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--family",
        "gamma",
        "--response",
        "y",
        "--covariates",
        "x1,dose",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'dose'"), "{}", stderr(&o));
}

#[test]
fn duplicated_column_exits_3_naming_the_pair_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let data = write_data(tmp.path());
    let out = tmp.path().join("out");
    let o = run(&[
        "residuals",
        "--data",
        data.to_str().unwrap(),
        "--family",
        "gamma",
        "--response",
        "y",
        "--covariates",
        "x1,x2,x1copy",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("'x1copy'") && err.contains("'x1'"), "{err}");
    assert!(listing(&out).is_empty());
}

#[test]
fn unparsable_cell_reports_its_line() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("bad.csv");
    fs::write(&data, "y,x\n1.0,0.1\n2.0,0.2\n3.0,oops\n4.0,0.4\n").unwrap();
    let o = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--family",
        "invgauss",
        "--response",
        "y",
        "--covariates",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn bad_flag_values_exit_2() {
    let tmp = TempDir::new().unwrap();
    let data = write_data(tmp.path());
    let d = data.to_str().unwrap();
    for args in [
        vec!["fit", "--data", d, "--family", "poisson", "--response", "y"],
        vec![
            "fit",
            "--data",
            d,
            "--family",
            "gamma",
            "--link",
            "logit",
            "--response",
            "y",
        ],
        vec![
            "residuals",
            "--data",
            d,
            "--family",
            "gamma",
            "--response",
            "y",
            "--kinds",
            "raw",
        ],
        vec!["reproduce", "T3"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn residual_tables_and_plots() {
    let tmp = TempDir::new().unwrap();
    let data = write_data(tmp.path());
    let all = tmp.path().join("all");
    let o = run(&[
        "residuals",
        "--data",
        data.to_str().unwrap(),
        "--family",
        "invgauss",
        "--response",
        "y",
        "--covariates",
        "x1,x2",
        "--out",
        all.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tsv = fs::read_to_string(all.join("residuals.tsv")).unwrap();
    let header: Vec<&str> = tsv.lines().next().unwrap().split('\t').collect();
    assert_eq!(header.len(), 5 + 6);
    for line in tsv.lines().skip(1) {
        for cell in line.split('\t').skip(5) {
            assert!(cell.parse::<f64>().unwrap().is_finite());
        }
    }
    assert_eq!(tsv.lines().count(), 41);
    for entry in listing(&all).iter().filter(|f| f.ends_with(".svg")) {
        let svg = fs::read_to_string(all.join(entry)).unwrap();
        assert!(svg.starts_with("<svg") && svg.len() > 500);
    }
    assert_eq!(
        listing(&all).iter().filter(|f| f.ends_with(".svg")).count(),
        6
    );

    let one = tmp.path().join("one");
    let o = run(&[
        "residuals",
        "--data",
        data.to_str().unwrap(),
        "--family",
        "invgauss",
        "--response",
        "y",
        "--covariates",
        "x1,x2",
        "--kinds",
        "adjusted_quantile",
        "--out",
        one.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let tsv = fs::read_to_string(one.join("residuals.tsv")).unwrap();
    assert_eq!(
        tsv.lines().next().unwrap(),
        "id\ty\tmu\teta\th\tadjusted_quantile"
    );
    assert!(
        fs::metadata(one.join("residuals_vs_eta_adjusted_quantile.svg"))
            .unwrap()
            .len()
            > 0
    );
}

#[test]
fn envelope_outputs_are_thread_count_invariant() {
    let tmp = TempDir::new().unwrap();
    let data = write_data(tmp.path());
    let mut bodies = Vec::new();
    for threads in ["1", "4"] {
        let out = tmp.path().join(format!("env{threads}"));
        let o = bin()
            .args([
                "envelope",
                "--data",
                data.to_str().unwrap(),
                "--family",
                "gamma",
                "--response",
                "y",
                "--covariates",
                "x1,x2",
                "--kinds",
                "deviance,adjusted_quantile",
                "--nsim-envelope",
                "39",
                "--band",
                "0.9",
                "--seed",
                "3",
                "--out",
                out.to_str().unwrap(),
            ])
            .env("GLMDIAG_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let files = listing(&out);
        assert_eq!(files.len(), 9, "{files:?}");
        bodies.push(
            files
                .iter()
                .map(|f| fs::read(out.join(f)).unwrap())
                .collect::<Vec<_>>(),
        );
        let tsv = fs::read_to_string(out.join("envelope_adjusted_quantile.tsv")).unwrap();
        assert_eq!(tsv.lines().count(), 41);
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn envelope_rejects_small_simulation_counts() {
    let tmp = TempDir::new().unwrap();
    let data = write_data(tmp.path());
    let o = run(&[
        "envelope",
        "--data",
        data.to_str().unwrap(),
        "--family",
        "gamma",
        "--response",
        "y",
        "--nsim-envelope",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn low_replication_reproduce_is_informational() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("t1");
    let o = run(&[
        "reproduce",
        "T1",
        "--reps",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("T1.tsv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 15 + 2);
    assert!(table.lines().nth(1).unwrap().starts_with("1\t67.742\t"));
    let cmp = fs::read_to_string(out.join("T1_comparison.tsv")).unwrap();
    assert!(cmp
        .lines()
        .skip(1)
        .all(|l| l.ends_with("low-replication, informational")));
    assert!(out.join("T1.json").exists());
}

#[test]
fn reproduce_ad_table_orders_by_mean() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("t8");
    let o = run(&[
        "reproduce",
        "t8",
        "--reps",
        "300",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("T8.tsv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 14 * 5);
    for block in table.lines().skip(1).collect::<Vec<_>>().chunks(5) {
        let means: Vec<f64> = block
            .iter()
            .map(|l| l.split('\t').nth(3).unwrap().parse().unwrap())
            .collect();
        assert!(means.windows(2).all(|w| w[0] <= w[1]));
    }
}

const CONFIG: &str = r#"
kinds = ["quantile", "adjusted_quantile"]

[[builtin]]
name = "II-b"
n = 15
replications = 200

[[scenario]]
name = "small gamma"
family = "gamma"
link = "log"
beta = [1.0, 0.5]
sigma = 0.2
n = 30
replications = 150
seed = 4
covariates = [{ law = "intercept" }, { law = "uniform", min = 0.0, max = 2.0 }]
"#;

#[test]
fn simulate_from_config_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("scenarios.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let mut runs = Vec::new();
    for (i, threads) in ["1", "3"].into_iter().enumerate() {
        let out = tmp.path().join(format!("sim{i}"));
        let o = bin()
            .args([
                "simulate",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .env("GLMDIAG_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let files = listing(&out);
        assert_eq!(
            files,
            vec![
                "II-b_n15.tsv",
                "II-b_n15_ad_ranking.tsv",
                "simulate.json",
                "small_gamma_n30.tsv",
                "small_gamma_n30_ad_ranking.tsv"
            ]
        );
        runs.push(
            files
                .iter()
                .map(|f| fs::read(out.join(f)).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn malformed_config_reports_its_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[[builtin]]\nname = \"I-a\"\nn = \"fifteen\"\n").unwrap();
    let o = run(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn exhausted_time_budget_fails_without_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sim");
    let o = bin()
        .args([
            "simulate",
            "I-a:15",
            "--reps",
            "5000",
            "--out",
            out.to_str().unwrap(),
        ])
        .env("GLMDIAG_TIME_BUDGET_SECS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(listing(&out).is_empty());
}
