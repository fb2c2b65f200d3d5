//! Output schemas and their parsers.
//!
//! CSV outputs start with the effective configuration as `# `-prefixed TOML
//! lines, followed by a header row. JSON outputs wrap their payload as
//! `{ "format", "config", "result" }`.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use cocycle::averages::{Method, SeriesEntry};
use cocycle::rotation::FixedAngle;
use cocycle::walk::WalkSummary;

use crate::config::RunConfig;

pub const WALK_HEADER: [&str; 6] = ["theta0_hex", "N", "min_h", "max_h", "a_N", "occupation"];
pub const AVERAGE_HEADER: [&str; 6] = ["N", "A", "stderr", "method", "n_theta", "seed"];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("{0}")]
pub struct SchemaError(pub String);

fn err(msg: impl Into<String>) -> SchemaError {
    SchemaError(msg.into())
}

/// One walk CSV row: the state after the first `n` heights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkRow {
    pub theta0: FixedAngle,
    pub n: u64,
    pub min_h: i64,
    pub max_h: i64,
    /// Distinct heights visited; equals `max_h - min_h + 1`.
    pub a_n: u64,
    /// `v -> Psi_n^(v)`, positive counts only, summing to `n`.
    pub counts: BTreeMap<i64, u64>,
}

impl WalkRow {
    /// One row per checkpoint of `summary`.
    pub fn from_summary(summary: &WalkSummary) -> Vec<WalkRow> {
        summary
            .checkpoints
            .iter()
            .filter(|c| c.n >= 1)
            .map(|c| {
                let (min_h, max_h) = c.histogram.support().expect("n >= 1");
                WalkRow {
                    theta0: summary.theta0,
                    n: c.n,
                    min_h,
                    max_h,
                    a_n: (max_h - min_h + 1) as u64,
                    counts: c.histogram.to_map(),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<(), SchemaError> {
        if self.n == 0 || self.min_h > self.max_h {
            return Err(err("empty walk row"));
        }
        let span = self.max_h.checked_sub(self.min_h).and_then(|d| d.checked_add(1));
        if span != Some(self.a_n as i64) {
            return Err(err("a_N must equal max_h - min_h + 1"));
        }
        let mut total: u64 = 0;
        for (&v, &c) in &self.counts {
            if c == 0 || v < self.min_h || v > self.max_h {
                return Err(err(format!("occupation entry {v}:{c} outside the visited range")));
            }
            total = total.checked_add(c).ok_or_else(|| err("occupation overflow"))?;
        }
        if self.counts.len() as u64 != self.a_n {
            return Err(err("visited heights must be contiguous"));
        }
        if total != self.n {
            return Err(err("occupation counts must sum to N"));
        }
        Ok(())
    }
}

fn comment_block(config: &RunConfig) -> String {
    let mut out = String::new();
    for line in config.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn csv_body(rows: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>) -> String {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(&mut buf);
        rows(&mut w).expect("writing to memory cannot fail");
        w.flush().expect("writing to memory cannot fail");
    }
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn write_walk_csv(config: &RunConfig, rows: &[WalkRow]) -> String {
    let body = csv_body(|w| {
        w.write_record(WALK_HEADER)?;
        for r in rows {
            let mut record = vec![
                r.theta0.to_hex(),
                r.n.to_string(),
                r.min_h.to_string(),
                r.max_h.to_string(),
                r.a_n.to_string(),
            ];
            record.extend(r.counts.iter().map(|(v, c)| format!("{v}:{c}")));
            w.write_record(&record)?;
        }
        Ok(())
    });
    comment_block(config) + &body
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes())
}

fn check_header(r: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), SchemaError> {
    let header = r.headers().map_err(|e| err(format!("header: {e}")))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(err(format!("expected header {}", expected.join(","))));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, SchemaError> {
    rec.get(i)
        .ok_or_else(|| err(format!("missing column {name}")))?
        .parse()
        .map_err(|_| err(format!("bad {name} `{}`", rec.get(i).unwrap_or(""))))
}

pub fn parse_walk_csv(text: &str) -> Result<Vec<WalkRow>, SchemaError> {
    let mut r = reader(text);
    check_header(&mut r, &WALK_HEADER)?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| err(format!("row {line}: {e}")))?;
        if rec.len() < 6 {
            return Err(err(format!("row {line}: too few columns")));
        }
        let theta0 = FixedAngle::from_hex(&rec[0])
            .filter(|_| rec[0].len() == 32)
            .ok_or_else(|| err(format!("row {line}: bad theta0_hex")))?;
        let mut counts = BTreeMap::new();
        for cell in rec.iter().skip(5) {
            let (v, c) = cell
                .split_once(':')
                .ok_or_else(|| err(format!("row {line}: occupation `{cell}` is not v:count")))?;
            let v: i64 = v.parse().map_err(|_| err(format!("row {line}: bad height `{v}`")))?;
            let c: u64 = c.parse().map_err(|_| err(format!("row {line}: bad count `{c}`")))?;
            if counts.insert(v, c).is_some() {
                return Err(err(format!("row {line}: repeated height {v}")));
            }
        }
        let row = WalkRow {
            theta0,
            n: field(&rec, 1, "N")?,
            min_h: field(&rec, 2, "min_h")?,
            max_h: field(&rec, 3, "max_h")?,
            a_n: field(&rec, 4, "a_N")?,
            counts,
        };
        row.validate().map_err(|e| err(format!("row {line}: {e}")))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Shortest decimal that round-trips.
fn float(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_average_csv(config: &RunConfig, entries: &[SeriesEntry]) -> String {
    let body = csv_body(|w| {
        w.write_record(AVERAGE_HEADER)?;
        for e in entries {
            w.write_record([
                e.n.to_string(),
                float(e.a),
                float(e.stderr),
                e.method.as_str().to_string(),
                e.n_theta.to_string(),
                e.seed.map_or(String::new(), |s| s.to_string()),
            ])?;
        }
        Ok(())
    });
    comment_block(config) + &body
}

pub fn parse_average_csv(text: &str) -> Result<Vec<SeriesEntry>, SchemaError> {
    let mut r = reader(text);
    check_header(&mut r, &AVERAGE_HEADER)?;
    let mut entries = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| err(format!("row {line}: {e}")))?;
        if rec.len() != AVERAGE_HEADER.len() {
            return Err(err(format!("row {line}: expected {} columns", AVERAGE_HEADER.len())));
        }
        let a: f64 = field(&rec, 1, "A")?;
        let stderr: f64 = field(&rec, 2, "stderr")?;
        if !(0.0..=1.0).contains(&a) || !(stderr.is_finite() && stderr >= 0.0) {
            return Err(err(format!("row {line}: A must lie in [0, 1] and stderr be >= 0")));
        }
        let method: Method = rec[3].parse().map_err(|e: String| err(format!("row {line}: {e}")))?;
        let seed = match &rec[5] {
            "" => None,
            s => Some(s.parse().map_err(|_| err(format!("row {line}: bad seed `{s}`")))?),
        };
        entries.push(SeriesEntry {
            n: field(&rec, 0, "N")?,
            a,
            stderr,
            method,
            n_theta: field(&rec, 4, "n_theta")?,
            seed,
        });
    }
    Ok(entries)
}

/// Envelope of every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonDocument<T> {
    pub format: String,
    pub config: RunConfig,
    pub result: T,
}

pub fn write_json<T: Serialize>(format: &str, config: &RunConfig, result: &T) -> String {
    let doc = JsonDocument {
        format: format.to_string(),
        config: config.provenance(),
        result,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("documents always serialize");
    text.push('\n');
    text
}

pub fn parse_json<T: DeserializeOwned>(format: &str, text: &str) -> Result<JsonDocument<T>, SchemaError> {
    let doc: JsonDocument<T> = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    if doc.format != format {
        return Err(err(format!("expected format `{format}`, found `{}`", doc.format)));
    }
    Ok(doc)
}
