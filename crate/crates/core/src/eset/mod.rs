//! The symmetric interval set `E`, its schedules and their condition checks.
//!
//! Desk schedules hold exact integers and compile to an [`ESet`]; generated
//! schedules hold [`LogNum`] values whose magnitudes cannot be materialized,
//! and are only ever compared and verified.

mod document;
mod lognum;
mod schedule;
mod set;

pub use document::{ParseScheduleError, SCHEDULE_FORMAT};
pub use lognum::{LogNum, ParseLogNumError};
pub use schedule::{
    generate_paper_schedule, make_desk_schedule, verify_schedule, BoundFn, ConditionReport,
    ConditionRow, ConstantsSource, DeskSchedule, Inequality, Interval, Schedule, ScheduleMode,
    EXACT_MARGIN,
};
pub use set::{EMask, ESet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EsetError {
    #[error("interval {index} overlaps or touches the previous one (gaps are required)")]
    OverlappingIntervals { index: usize },
    #[error("interval {index}: {reason}")]
    BadOrder { index: usize, reason: &'static str },
    #[error("no constant available for height {v}")]
    MissingConstants { v: String },
    #[error("schedule holds log-space values; pointwise membership is unavailable")]
    PaperModeNotQueryable,
}
