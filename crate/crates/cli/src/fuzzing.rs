//! Entry points shared by the fuzz targets and the corpus replay test.
//!
//! Each function must accept arbitrary bytes without panicking; where a
//! parse succeeds, the value is re-serialized and must parse back unchanged.

use cocycle::eset::{BoundFn, LogNum, Schedule};
use cocycle::rotation::{resolve_alpha, AlphaSpec};

use crate::commands::{AverageReport, AVERAGE_REPORT_FORMAT};
use crate::config::{parse_angle, RunConfig};
use crate::io::{parse_average_csv, parse_json, parse_walk_csv, write_average_csv, write_walk_csv};

/// Target names, matching the `fuzz/fuzz_targets/*.rs` files.
pub const TARGETS: [&str; 9] = [
    "alpha",
    "angle",
    "bound",
    "lognum",
    "run_config",
    "schedule_doc",
    "walk_csv",
    "average_csv",
    "report_json",
];

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn alpha(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(spec) = s.parse::<AlphaSpec>() {
        let again: AlphaSpec = spec.to_string().parse().expect("display re-parses");
        assert_eq!(again, spec);
        resolve_alpha(&spec).expect("validated specs resolve");
    }
}

pub fn angle(data: &[u8]) {
    if let Some(s) = text(data) {
        let _ = parse_angle(s);
    }
}

pub fn bound(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(b) = s.parse::<BoundFn>() {
        let again: BoundFn = b.to_string().parse().expect("display re-parses");
        assert_eq!(again, b);
        for v in [LogNum::Int(2), LogNum::Int(1 << 40), LogNum::tower(3, 1e6)] {
            let _ = b.eval(v);
        }
    }
}

pub fn lognum(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(x) = s.parse::<LogNum>() {
        let again: LogNum = x.to_string().parse().expect("display re-parses");
        assert_eq!(again, x);
        let _ = (x.ln(), x.exp(), x.next_up(), x.next_down(), x.square(), x.sqrt());
    }
}

pub fn run_config(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(cfg) = RunConfig::parse(s) {
        let echoed: String = cfg
            .header_lines()
            .iter()
            .map(|l| format!("{}\n", &l[2..]))
            .collect();
        let back = RunConfig::parse(&echoed).expect("echoed config re-parses");
        assert_eq!(back, cfg.provenance());
    }
}

pub fn schedule_doc(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(schedule) = Schedule::from_document(s) {
        let back = Schedule::from_document(&schedule.to_document()).expect("documents re-parse");
        assert_eq!(back, schedule);
        let _ = schedule.to_eset();
        let _ = schedule.subsequence_points();
    }
}

pub fn walk_csv(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(rows) = parse_walk_csv(s) {
        let again = parse_walk_csv(&write_walk_csv(&RunConfig::default(), &rows)).expect("rows re-parse");
        assert_eq!(again, rows);
    }
}

pub fn average_csv(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(entries) = parse_average_csv(s) {
        let again =
            parse_average_csv(&write_average_csv(&RunConfig::default(), &entries)).expect("rows re-parse");
        assert_eq!(again, entries);
    }
}

pub fn report_json(data: &[u8]) {
    if let Some(s) = text(data) {
        let _ = parse_json::<AverageReport>(AVERAGE_REPORT_FORMAT, s);
    }
}

/// Dispatches by target name; unknown names are a caller bug.
pub fn replay(target: &str, data: &[u8]) {
    match target {
        "alpha" => alpha(data),
        "angle" => angle(data),
        "bound" => bound(data),
        "lognum" => lognum(data),
        "run_config" => run_config(data),
        "schedule_doc" => schedule_doc(data),
        "walk_csv" => walk_csv(data),
        "average_csv" => average_csv(data),
        "report_json" => report_json(data),
        other => panic!("unknown fuzz target `{other}`"),
    }
}
