use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cocycle::averages::Method;
use cocycle::eset::{ConditionReport, Schedule};
use cocycle::walk::ConstantsTable;
use cocycle_cli::commands::{
    AverageReport, ErgodicityResult, AVERAGE_REPORT_FORMAT, CONSTANTS_FORMAT, ENTROPY_FORMAT,
    ERGODICITY_FORMAT, RATIO_FORMAT, SCHEDULE_REPORT_FORMAT,
};
use cocycle_cli::io::{parse_average_csv, parse_json, parse_walk_csv};
use cocycle_cli::RunConfig;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cocycle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cocycle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn run_to_file(dir: &Path, name: &str, args: &[&str]) -> (i32, String) {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.extend(["--out", &p]);
    let out = cocycle(&full);
    let text = std::fs::read_to_string(&path).unwrap_or_default();
    (code(&out), text)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn pilot() -> toml::Table {
    read(&repo_root().join("config/pilot.toml")).parse().unwrap()
}

fn pinned(section: &str, key: &str) -> f64 {
    pilot()[section][key].as_float().unwrap()
}

#[test]
fn walk_example_row() {
    let out = cocycle(&["walk", "--alpha", "golden", "--theta", "0", "--n", "4"]);
    assert_eq!(code(&out), 0);
    let rows = parse_walk_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].n, rows[0].a_n, rows[0].min_h, rows[0].max_h), (4, 2, 0, 1));
}

#[test]
fn usage_and_config_errors_exit_2() {
    for args in [
        &["walk", "--theta", "0", "--n", "0"][..],
        &["walk", "--theta", "0"],
        &["walk", "--n", "4"],
        &["walk", "--alpha", "cf:1,2;k=2", "--theta", "0", "--n", "4"],
        &["walk", "--theta", "1.5", "--n", "4"],
        &["average", "--n", "10"],
        &["constants", "--seed", "1", "--n", "8"],
        &["schedule", "--pairs", "2:6,5:3"],
        &["schedule", "--pairs", "2:6", "--m-max", "3"],
        &["walk", "--no-such-flag"],
        &["walk", "--config", "/nonexistent/run.toml", "--n", "4"],
    ] {
        let out = cocycle(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "version = 1\nseed = \"one\"\n").unwrap();
    let out = cocycle(&["walk", "--config", path.to_str().unwrap(), "--n", "4"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("seed"), "{err}");
}

#[test]
fn budget_overrun_exits_4() {
    let out = cocycle(&["walk", "--seed", "1", "--n-theta", "10", "--n", "1000", "--max-steps", "9999"]);
    assert_eq!(code(&out), 4);
    let out = cocycle(&["walk", "--seed", "1", "--n-theta", "10", "--n", "1000", "--max-steps", "10000"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn runs_are_byte_identical_across_repeats_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, Vec<&str>); 5] = [
        ("walk.csv", vec!["walk", "--seed", "5", "--n-theta", "16", "--n", "10,1000,20000"]),
        ("avg.csv", vec!["average", "--seed", "5", "--pairs", "2:2", "--n", "64,256", "--n-theta", "64", "--n-omega", "64"]),
        ("const.json", vec!["constants", "--seed", "5", "--n", "5000", "--n-theta", "16"]),
        ("ratio.json", vec!["ratio", "--seed", "5", "--n", "1000,5000", "--n-theta", "16"]),
        ("erg.json", vec!["ergodicity", "--seed", "5", "--n", "200", "--n-theta", "64"]),
    ];
    for (name, args) in cases {
        let mut outputs = Vec::new();
        for (i, threads) in ["1", "1", "4"].into_iter().enumerate() {
            let mut a = args.clone();
            a.extend(["--threads", threads]);
            let (c, text) = run_to_file(dir.path(), &format!("{i}-{name}"), &a);
            assert_eq!(c, 0, "{args:?}");
            outputs.push(text);
        }
        assert!(!outputs[0].is_empty());
        assert_eq!(outputs[0], outputs[1], "{name}: repeat differs");
        assert_eq!(outputs[0], outputs[2], "{name}: thread count changed the output");
    }
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "version = 1\nalpha = \"sqrt2m1\"\nn = [4]\ntheta = [\"0\"]\n").unwrap();
    let c = cfg.to_str().unwrap();
    let (code_a, a) = run_to_file(dir.path(), "a.csv", &["walk", "--config", c]);
    let (code_b, b) = run_to_file(dir.path(), "b.csv", &["walk", "--config", c, "--alpha", "golden"]);
    assert_eq!((code_a, code_b), (0, 0));
    assert!(a.contains("# alpha = \"sqrt2m1\""));
    assert!(b.contains("# alpha = \"golden\""));
    // the echoed header reproduces the run
    let header: String = b
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect();
    let echoed = dir.path().join("echo.toml");
    std::fs::write(&echoed, header).unwrap();
    let (_, again) = run_to_file(dir.path(), "c.csv", &["walk", "--config", echoed.to_str().unwrap()]);
    assert_eq!(again, b);
}

#[test]
fn every_output_parses_with_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let (c, text) = run_to_file(d, "w.csv", &["walk", "--seed", "2", "--n-theta", "3", "--n", "1,50,500"]);
    assert_eq!(c, 0);
    let rows = parse_walk_csv(&text).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.counts.values().sum::<u64>() == r.n));

    let (c, text) = run_to_file(d, "k.json", &["constants", "--seed", "2", "--n", "1000", "--n-theta", "4", "--v-max", "40"]);
    assert_eq!(c, 0);
    let table = parse_json::<ConstantsTable>(CONSTANTS_FORMAT, &text).unwrap().result;
    assert!(table.c_v.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(table.seed, Some(2));

    let (c, text) = run_to_file(d, "s.toml", &["schedule", "--m-max", "4", "--bound", "const:2"]);
    assert_eq!(c, 0);
    let schedule = Schedule::from_document(&text).unwrap();
    assert_eq!(schedule.intervals.len(), 4);
    let report: ConditionReport =
        parse_json(SCHEDULE_REPORT_FORMAT, &read(&d.join("s.toml.report.json"))).unwrap().result;
    assert!(report.passes && report.passes_margin);

    // a desk schedule verified against the measured table
    let k = d.join("k.json");
    let (c, _) = run_to_file(d, "desk.toml", &["schedule", "--pairs", "2:6,30:5", "--constants-table", k.to_str().unwrap()]);
    assert_eq!(c, 0);
    let desk: ConditionReport =
        parse_json(SCHEDULE_REPORT_FORMAT, &read(&d.join("desk.toml.report.json"))).unwrap().result;
    assert!(!desk.passes);
    assert!(desk.constants.starts_with("table"));

    let (c, text) = run_to_file(
        d,
        "a.csv",
        &["average", "--seed", "2", "--pairs", "2:6,30:300", "--n", "100,331,400", "--n-theta", "64", "--n-omega", "256"],
    );
    assert_eq!(c, 0);
    let entries = parse_average_csv(&text).unwrap();
    assert!(entries.iter().any(|e| e.method == Method::Exact));
    let report: AverageReport =
        parse_json(AVERAGE_REPORT_FORMAT, &read(&d.join("a.csv.report.json"))).unwrap().result;
    assert!(report.gate.passed && !report.gate.checks.is_empty());
    assert_eq!(report.gate.literal_reference, "complement of E");
    assert_eq!(report.accepted_fraction, 1.0);

    let (c, text) = run_to_file(d, "r.json", &["ratio", "--seed", "2", "--n", "100,1000", "--n-theta", "4", "--v", "-1,1"]);
    assert_eq!(c, 0);
    let ratio = parse_json::<cocycle::averages::RatioTable>(RATIO_FORMAT, &text).unwrap().result;
    assert_eq!(ratio.summary.len(), 4);

    let (c, text) = run_to_file(d, "e.json", &["entropy-proxy", "--seed", "2", "--n", "1,1000", "--n-theta", "4"]);
    assert_eq!(c, 0);
    let ent = parse_json::<cocycle::averages::EntropyTable>(ENTROPY_FORMAT, &text).unwrap().result;
    assert_eq!(ent.max_by_n[0], (1, 1.0));

    let (c, text) = run_to_file(d, "g.json", &["ergodicity", "--seed", "2", "--n", "2", "--n-theta", "400"]);
    assert_eq!(c, 0);
    let erg = parse_json::<ErgodicityResult>(ERGODICITY_FORMAT, &text).unwrap();
    // n = 0 contributes mu(D) = 1/2; at n = 1 the two coordinates are independent, 1/4
    assert_eq!(erg.result.exact, Some(0.375));
    assert_eq!(erg.config.seed, Some(2));
    let back: RunConfig = erg.config;
    assert_eq!(back.threads, None);
}

#[test]
fn empty_set_gives_zero_series() {
    let out = cocycle(&["average", "--seed", "3", "--pairs", "", "--n", "10,100,1000", "--n-theta", "32", "--n-omega", "4000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let csv_part = text.split("{\n").next().unwrap();
    let entries = parse_average_csv(csv_part).unwrap();
    assert!(!entries.is_empty());
    assert!(entries.iter().all(|e| e.a == 0.0));
}

#[test]
fn fault_injection_trips_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["average", "--seed", "1", "--pairs", "2:6,30:300", "--n", "100,200,400", "--n-theta", "200", "--n-omega", "2000"];
    let (c, _) = run_to_file(dir.path(), "ok.csv", &args);
    assert_eq!(c, 0);
    let mut faulty = args.to_vec();
    faulty.push("--inject-fault");
    let (c, text) = run_to_file(dir.path(), "bad.csv", &faulty);
    assert_eq!(c, 3);
    // outputs are still written for inspection
    assert!(!text.is_empty());
    let report: AverageReport =
        parse_json(AVERAGE_REPORT_FORMAT, &read(&dir.path().join("bad.csv.report.json"))).unwrap().result;
    assert!(!report.gate.passed);
}

#[test]
fn filtered_average_uses_reduced_reference() {
    let out = cocycle(&[
        "average", "--seed", "4", "--pairs", "2:3", "--n", "64,128", "--n-theta", "64", "--n-omega", "512",
        "--filter-q", "0.2", "--filter-horizon", "256", "--filter-samples", "50",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("reduced zero side"));
    assert!(!text.contains(",exact,"));
}

#[test]
fn pinned_constants_reproduce_exactly() {
    let out = cocycle(&["constants", "--alpha", "golden", "--seed", "1", "--n", "1000000", "--n-theta", "100", "--v-max", "0"]);
    assert_eq!(code(&out), 0);
    let doc = parse_json::<ConstantsTable>(CONSTANTS_FORMAT, &String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(doc.result.m_v[&0], pinned("constants", "m0"));
}

#[test]
fn desk_demo_reaches_pinned_oscillation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_root().join("config/desk.toml");
    let (c, _) = run_to_file(dir.path(), "desk.csv", &["average", "--config", cfg.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(c, 0);
    let report: AverageReport =
        parse_json(AVERAGE_REPORT_FORMAT, &read(&dir.path().join("desk.csv.report.json"))).unwrap().result;
    let osc = report.oscillation.oscillation;
    assert!(osc >= pinned("desk", "required"), "{osc}");
    let expected = pinned("desk", "oscillation");
    let tolerance = pilot()["tolerance"].as_float().unwrap();
    assert!((osc - expected).abs() <= tolerance * expected, "{osc} vs pinned {expected}");
}

#[test]
fn fuzz_corpus_seeds_replay_without_panics() {
    let corpus = repo_root().join("fuzz/corpus");
    let mut seen = 0;
    for target in std::fs::read_dir(&corpus).unwrap() {
        let target = target.unwrap().path();
        let name = target.file_name().unwrap().to_str().unwrap().to_string();
        for seed in std::fs::read_dir(&target).unwrap() {
            let bytes = std::fs::read(seed.unwrap().path()).unwrap();
            cocycle_cli::fuzzing::replay(&name, &bytes);
            seen += 1;
        }
    }
    assert!(seen >= 7, "corpus has only {seen} seeds");
}
