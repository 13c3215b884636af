use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use swcoding::composition::{exact_tail_cond_entropy, DEFAULT_BUDGET};
use swcoding::numeric::fmt_sig12;
use swcoding::source::info_summary;
use swcoding::JointSource;
use tempfile::TempDir;

const DSBS: &str = r#"{"pmf": [[0.45, 0.05], [0.05, 0.45]]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swcoding"))
}

fn write_source(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str], source: &Path) -> Output {
    bin().args(args).arg("--source").arg(source).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value column of `info` for a quantity.
fn info_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .map(|rest| rest.split(',').next().unwrap().to_string())
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
}

#[test]
fn info_on_reference_sources() {
    let dir = TempDir::new().unwrap();
    let uniform = write_source(&dir, "u.json", r#"{"pmf": [[0.25, 0.25], [0.25, 0.25]]}"#);
    let out = stdout(&run(&["info"], &uniform));
    assert_eq!(info_value(&out, "H(X|Y)"), fmt_sig12(2f64.ln()));
    assert_eq!(info_value(&out, "sigma2_H"), "0");

    let diag = write_source(&dir, "d.json", r#"{"pmf": [[0.5, 0.0], [0.0, 0.5]]}"#);
    assert_eq!(info_value(&stdout(&run(&["info"], &diag)), "H(X|Y)"), "0");

    let dsbs = write_source(&dir, "dsbs.json", DSBS);
    let out = stdout(&run(&["info"], &dsbs));
    let s = info_summary(&JointSource::from_json(DSBS).unwrap());
    assert_eq!(info_value(&out, "H(X|Y)"), fmt_sig12(s.h_xy_cond));
    assert_eq!(info_value(&out, "I(X;Y)"), fmt_sig12(s.i_xy));
    assert_eq!(info_value(&out, "sigma2_D"), fmt_sig12(s.sigma2_d));

    let json = stdout(&run(&["info", "--format", "json"], &dsbs));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["nats"]["h_xy_cond"].as_f64().unwrap(), s.h_xy_cond);
}

#[test]
fn tail_passes_the_library_value_through() {
    let dir = TempDir::new().unwrap();
    let src = write_source(&dir, "dsbs.json", DSBS);
    let out = stdout(&run(&["tail", "--n", "8", "--delta", "0.2"], &src));
    let row = out.lines().nth(1).unwrap();
    let exact = row.split(',').nth(3).unwrap();
    let lib = exact_tail_cond_entropy(&JointSource::from_json(DSBS).unwrap(), 8, 0.2, DEFAULT_BUDGET).unwrap();
    assert_eq!(exact, fmt_sig12(lib));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let src = write_source(&dir, "dsbs.json", DSBS);
    let o = run(&["bounds", "--mode", "fixed", "--n", "10", "--eps", "1"], &src);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());

    let o = run(&["tail", "--n", "5000", "--delta", "0.1", "--budget", "100"], &src);
    assert_eq!(o.status.code(), Some(3));

    let indep = write_source(&dir, "i.json", r#"{"pmf": [[0.25, 0.25], [0.25, 0.25]]}"#);
    let o = run(&["bounds", "--mode", "variable", "--n", "10", "--eps", "0.1"], &indep);
    assert_eq!(o.status.code(), Some(4));

    let o = run(&["info"], &dir.path().join("missing.json"));
    assert_eq!(o.status.code(), Some(1));

    let bad = write_source(&dir, "bad.json", r#"{"pmf": [[0.5, 0.6]]}"#);
    assert_eq!(run(&["info"], &bad).status.code(), Some(1));

    let o = bin().args(["sweep", "--n", "10"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let src = write_source(&dir, "dsbs.json", DSBS);
    let args = [
        "sweep", "--n", "8,10", "--eps", "0.1,0.2", "--trials", "2000", "--seed", "77",
    ];
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let o = bin()
            .args(args)
            .arg("--source")
            .arg(&src)
            .arg("--out")
            .arg(&out)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.contains("measured-fixed") && text.contains("measured-variable"));
    assert!(text.ends_with('\n'));
}

#[test]
fn empty_eps_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let src = write_source(&dir, "dsbs.json", DSBS);
    let out = stdout(&run(&["sweep", "--n", "10", "--eps"], &src));
    assert_eq!(out, format!("{}\n", swcoding::evaluation::CSV_HEADER));
}

#[test]
fn simulate_reports_parse() {
    let dir = TempDir::new().unwrap();
    let src = write_source(&dir, "dsbs.json", DSBS);
    let json = stdout(&run(
        &[
            "simulate", "--n", "10", "--eps", "0.1", "--kappa3", "0.8", "--kappa4", "1", "--trials", "500", "--format",
            "json",
        ],
        &src,
    ));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let errors = v["error_count"].as_u64().unwrap();
    assert_eq!(
        errors,
        v["jar_miss_count"].as_u64().unwrap() + v["collision_count"].as_u64().unwrap()
    );
    assert_eq!(v["code"]["kappa"][0].as_f64().unwrap(), 0.8);

    let o = run(&["simulate", "--n", "10", "--eps", "0.1", "--kappa3", "0.8"], &src);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bits_flag_rescales_rates() {
    let dir = TempDir::new().unwrap();
    let src = write_source(&dir, "dsbs.json", DSBS);
    let args = [
        "bounds",
        "--mode",
        "fixed",
        "--n",
        "100",
        "--eps",
        "0.01",
        "--kind",
        "achievability",
    ];
    let nats = stdout(&run(&args, &src));
    let mut with_bits = args.to_vec();
    with_bits.push("--bits");
    let bits = stdout(&run(&with_bits, &src));
    let rate = |t: &str| -> f64 { t.lines().nth(1).unwrap().split(',').nth(5).unwrap().parse().unwrap() };
    assert!((rate(&nats) / 2f64.ln() - rate(&bits)).abs() < 1e-9);
    assert!(bits.starts_with("source_id,mode,n,eps,bound_kind,rate_bits,"));
}
