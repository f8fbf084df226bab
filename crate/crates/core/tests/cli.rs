use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_threadgrowth"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn report(dir: &Path) -> HashMap<String, String> {
    fs::read_to_string(dir.join("report.csv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn num(r: &HashMap<String, String>, key: &str) -> f64 {
    r[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key} = {}", r[key]))
}

fn fit_rows(text: &str) -> Vec<HashMap<String, String>> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            headers
                .iter()
                .zip(r.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

fn estimate(rows: &[HashMap<String, String>], family: &str, parameter: &str) -> f64 {
    rows.iter()
        .find(|r| r["family"] == family && r["parameter"] == parameter)
        .unwrap()["estimate"]
        .parse()
        .unwrap()
}

#[test]
fn simulate_is_byte_identical_across_runs_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = ok(&[
        "simulate",
        "--topics",
        "10",
        "--seed",
        "7",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed 7"));
    ok(&[
        "simulate",
        "--topics",
        "10",
        "--seed",
        "7",
        "--workers",
        "3",
        "--out",
        b.to_str().unwrap(),
    ]);
    let fa = files(&a);
    assert_eq!(fa.len(), 3);
    assert_eq!(fa, files(&b));
}

#[test]
fn defaulted_seed_is_printed_and_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&[
        "simulate",
        "--topics",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed 42"));
    for (name, bytes) in files(tmp.path()) {
        let first = String::from_utf8_lossy(&bytes)
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert!(
            first.starts_with("# threadgrowth simulate "),
            "{name}: {first}"
        );
        assert!(first.contains("--seed 42"), "{name}: {first}");
    }
}

#[test]
fn non_growing_regime_exits_with_parameter_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--c",
        "2.5",
        "--c0",
        "0",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-growing"));
    let out = run(&[
        "simulate",
        "--exposure",
        "weibull:2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"topics": 3, "seed": 5, "M": 50, "activity_users": 2}"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let header = summary.lines().next().unwrap();
    assert!(header.contains("--topics 3 --seed 9"), "{header}");
    assert!(header.contains("--M 50"), "{header}");
    assert_eq!(summary.lines().count(), 2 + 3);

    fs::write(&cfg, r#"{"topics": 3, "colour": "blue"}"#).unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_output_round_trips_through_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--topics",
        "60",
        "--format",
        "csv",
        "--model",
        "intensity",
        "--gamma",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let out = ok(&[
        "fit",
        "--input",
        dir.join("events.csv").to_str().unwrap(),
        "--target",
        "exposure",
    ]);
    let rows = fit_rows(&String::from_utf8_lossy(&out.stdout));
    let sel: Vec<_> = rows.iter().filter(|r| r["selected"] == "true").collect();
    assert!(!sel.is_empty());
    assert!(sel.iter().all(|r| r["family"] == "exponential"));
}

#[test]
fn fit_waiting_recovers_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--topics",
        "200",
        "--c",
        "1.5",
        "--c0",
        "1.0",
        "--a",
        "1",
        "--b",
        "10000",
        "--M",
        "100",
        "--activity-users",
        "40",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let fit_out = tmp.path().join("waiting.csv");
    ok(&[
        "fit",
        "--input",
        dir.join("activity.jsonl").to_str().unwrap(),
        "--target",
        "waiting",
        "--a",
        "1",
        "--out",
        fit_out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&fit_out).unwrap();
    assert!(text.starts_with("# threadgrowth fit "));
    let rows = fit_rows(&text);
    let c = estimate(&rows, "truncated_pareto", "c");
    assert!((c - 1.5).abs() < 0.05, "c = {c}");
}

#[test]
fn fit_size_on_analytic_output_has_inverse_shape() {
    // c' = 1 - 1.305 + 1 = 0.695, so the Weibull shape is 1/0.695.
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--model",
        "analytic",
        "--topics",
        "5000",
        "--gamma",
        "1000",
        "--M",
        "1",
        "--c",
        "1.305",
        "--c0",
        "1.0",
        "--exposure",
        "exp:1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let out = ok(&[
        "fit",
        "--input",
        dir.join("events.jsonl").to_str().unwrap(),
        "--target",
        "size",
    ]);
    let rows = fit_rows(&String::from_utf8_lossy(&out.stdout));
    let shape = estimate(&rows, "weibull", "shape");
    assert!(
        (shape - 1.0 / 0.695).abs() < 0.05 * 1.439,
        "shape = {shape}"
    );
    assert!(rows
        .iter()
        .any(|r| r["family"] == "weibull" && r["selected"] == "true"));
}

#[test]
fn fit_exposure_without_removal_stamps_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("empty.jsonl");
    fs::write(&input, "").unwrap();
    let out = run(&[
        "fit",
        "--input",
        input.to_str().unwrap(),
        "--target",
        "exposure",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn analyze_growth_slopes_differ_by_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--model",
        "agent",
        "--gamma",
        "0.05",
        "--c",
        "1.2",
        "--c0",
        "0.5",
        "--M",
        "200",
        "--exposure",
        "exp:0.001",
        "--topics",
        "500",
        "--a",
        "0.01",
        "--b",
        "100000",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let an = tmp.path().join("an");
    ok(&[
        "analyze",
        "--input",
        dir.join("events.jsonl").to_str().unwrap(),
        "--out",
        an.to_str().unwrap(),
    ]);
    let r = report(&an);
    let diff = num(&r, "slope_difference");
    assert!((0.9..=1.1).contains(&diff), "difference {diff}");
    assert!((num(&r, "slope_N") - 0.3).abs() < 0.05);
    assert_eq!(num(&r, "before_after_min"), 1.0);
    for name in [
        "N_of_t.csv",
        "dN_dt.csv",
        "size_ccdf.csv",
        "size_density.csv",
        "weibull_plot.csv",
        "qq.csv",
        "indegree_ccdf.csv",
        "regressions.csv",
        "report.csv",
        "report.txt",
    ] {
        let text = fs::read_to_string(an.join(name)).unwrap();
        assert!(text.starts_with("# threadgrowth analyze "), "{name}");
    }
}

#[test]
fn analyze_default_example_recovers_rate_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--gamma",
        "0.05",
        "--c",
        "1.2",
        "--c0",
        "0.5",
        "--M",
        "200",
        "--exposure",
        "exp:0.001",
        "--topics",
        "500",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let an = tmp.path().join("an");
    ok(&[
        "analyze",
        "--input",
        dir.join("events.jsonl").to_str().unwrap(),
        "--out",
        an.to_str().unwrap(),
    ]);
    let r = report(&an);
    assert!((num(&r, "c_prime_from_rate") - 0.3).abs() < 0.1);
    assert_eq!(r["exposure_family"], "exponential");
}

fn tail_verdict(exposure: &str, c: &str, c0: &str) -> String {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--model",
        "analytic",
        "--topics",
        "2000",
        "--gamma",
        "1000",
        "--M",
        "1",
        "--c",
        c,
        "--c0",
        c0,
        "--exposure",
        exposure,
        "--out",
        dir.to_str().unwrap(),
    ]);
    let an = tmp.path().join("an");
    ok(&[
        "analyze",
        "--input",
        dir.join("events.jsonl").to_str().unwrap(),
        "--out",
        an.to_str().unwrap(),
    ]);
    report(&an)["size_tail_class"].clone()
}

#[test]
fn analyze_tail_verdicts_follow_exposure_family() {
    assert_eq!(tail_verdict("pareto:1:1.5", "1.0", "0.5"), "heavy");
    assert_eq!(tail_verdict("exp:1", "1.0", "0.5"), "light");
}

#[test]
fn analyze_is_identical_across_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--topics",
        "40",
        "--seed",
        "11",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let input = dir.join("events.jsonl");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
        "--workers",
        "1",
    ]);
    ok(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--workers",
        "4",
    ]);
    assert_eq!(files(&a), files(&b));
}

#[test]
fn validate_exit_code_matches_reported_failures() {
    let out = run(&["validate", "--scale", "tiny", "--seed", "5"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("seed 5, scale tiny"));
    for k in 1..=8 {
        assert!(text.contains(&format!("[{k}]")), "criterion {k} missing");
    }
    let any_fail = text.lines().any(|l| l.starts_with("FAIL"));
    assert_eq!(
        out.status.code(),
        Some(if any_fail { 1 } else { 0 }),
        "{text}"
    );
}

#[test]
fn unknown_scale_is_a_parameter_error() {
    assert_eq!(run(&["validate", "--scale", "huge"]).status.code(), Some(2));
}
