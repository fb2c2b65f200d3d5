//! Text form of a [`Schedule`].
//!
//! ```toml
//! format = "cocycle-schedule/1"
//! mode = "paper"            # or "desk"
//! margin = 0.99
//! provenance = "generated bound=const:2 m_max=2"
//! next_l = "exp^2(...)"     # optional
//!
//! [[interval]]
//! m = 1
//! l = "2"                   # decimal when exact
//! r = "8886109"
//! ```
//!
//! Values beyond the exact range are written `exp^k(x)`, so `exp^1(x)`
//! carries the natural logarithm `x` directly.

use serde::{Deserialize, Serialize};

use super::{ESet, Interval, LogNum, Schedule, ScheduleMode};

pub const SCHEDULE_FORMAT: &str = "cocycle-schedule/1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("schedule document: {0}")]
pub struct ParseScheduleError(pub String);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    mode: ScheduleMode,
    margin: f64,
    provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    next_l: Option<LogNum>,
    #[serde(default)]
    interval: Vec<IntervalDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalDoc {
    m: u64,
    l: LogNum,
    r: LogNum,
}

impl Schedule {
    pub fn to_document(&self) -> String {
        let doc = Document {
            format: SCHEDULE_FORMAT.to_string(),
            mode: self.mode,
            margin: self.margin,
            provenance: self.provenance.clone(),
            next_l: self.next_l,
            interval: self
                .intervals
                .iter()
                .enumerate()
                .map(|(i, iv)| IntervalDoc {
                    m: i as u64 + 1,
                    l: iv.l,
                    r: iv.r,
                })
                .collect(),
        };
        toml::to_string(&doc).expect("schedule documents always serialize")
    }

    /// Parses and structurally validates a document. Desk schedules must be
    /// exact and well ordered; bound conditions are left to the verifier.
    pub fn from_document(text: &str) -> Result<Schedule, ParseScheduleError> {
        let doc: Document = toml::from_str(text).map_err(|e| ParseScheduleError(e.to_string()))?;
        if doc.format != SCHEDULE_FORMAT {
            return Err(ParseScheduleError(format!(
                "unsupported format `{}` (expected `{SCHEDULE_FORMAT}`)",
                doc.format
            )));
        }
        if !(doc.margin.is_finite() && doc.margin > 0.0 && doc.margin <= 1.0) {
            return Err(ParseScheduleError(format!(
                "margin {} outside (0, 1]",
                doc.margin
            )));
        }
        for (i, iv) in doc.interval.iter().enumerate() {
            if iv.m != i as u64 + 1 {
                return Err(ParseScheduleError(format!(
                    "interval {} has m = {} (expected consecutive from 1)",
                    i + 1,
                    iv.m
                )));
            }
        }
        let schedule = Schedule {
            mode: doc.mode,
            intervals: doc
                .interval
                .iter()
                .map(|iv| Interval { l: iv.l, r: iv.r })
                .collect(),
            next_l: doc.next_l,
            margin: doc.margin,
            provenance: doc.provenance,
        };
        if schedule.mode == ScheduleMode::Desk {
            let pairs: Option<Vec<(u64, u64)>> = schedule
                .intervals
                .iter()
                .map(|iv| Some((iv.l.as_int()?, iv.r.as_int()?)))
                .collect();
            let pairs = pairs.ok_or_else(|| {
                ParseScheduleError("desk schedules must hold exact integers".into())
            })?;
            ESet::from_pairs(&pairs).map_err(|e| ParseScheduleError(e.to_string()))?;
        }
        Ok(schedule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eset::{generate_paper_schedule, make_desk_schedule, BoundFn, ConstantsSource};

    #[test]
    fn generated_schedule_roundtrip() {
        let s = generate_paper_schedule(BoundFn::Constant(2.0), 10, 0.99);
        let text = s.to_document();
        assert!(text.contains("r = \"8886109\"") || text.contains("format"));
        let back = Schedule::from_document(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn desk_roundtrip_and_validation() {
        let d = make_desk_schedule(&[(2, 6), (30, 300)], &ConstantsSource::Bound(BoundFn::Constant(2.0)))
            .unwrap();
        let text = d.schedule.to_document();
        assert!(text.contains("l = \"30\""));
        assert_eq!(Schedule::from_document(&text).unwrap(), d.schedule);

        let overlapping = text.replace("l = \"30\"", "l = \"8\"");
        assert!(Schedule::from_document(&overlapping).is_err());
        let inexact = text.replace("r = \"300\"", "r = \"300.5\"");
        assert!(Schedule::from_document(&inexact).is_err());
        let renumbered = text.replace("m = 2", "m = 3");
        assert!(Schedule::from_document(&renumbered).is_err());
        let wrong_format = text.replace(SCHEDULE_FORMAT, "cocycle-schedule/0");
        assert!(Schedule::from_document(&wrong_format).is_err());
        assert!(Schedule::from_document("mode = 3").is_err());
    }
}
