use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ESet, EsetError, LogNum};
use crate::walk::ConstantsTable;

/// Nondecreasing bound `v -> C_v` used in place of a measured constants table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundFn {
    Constant(f64),
    /// `base + slope * ln(1 + v)`
    Logarithmic { base: f64, slope: f64 },
    /// `scale * (1 + v)^exponent`
    Power { scale: f64, exponent: f64 },
}

impl BoundFn {
    pub fn eval(&self, v: LogNum) -> LogNum {
        match *self {
            BoundFn::Constant(c) => LogNum::real(c),
            BoundFn::Logarithmic { base, slope } => {
                let log = v.add_f64(1.0).ln();
                if slope == 0.0 {
                    LogNum::real(base)
                } else {
                    log.scale(slope).add_f64(base)
                }
            }
            BoundFn::Power { scale, exponent } => {
                if exponent == 0.0 {
                    return LogNum::real(scale);
                }
                v.add_f64(1.0)
                    .ln()
                    .scale(exponent)
                    .add_f64(scale.ln())
                    .exp()
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        let ok = match *self {
            BoundFn::Constant(c) => c.is_finite() && c > 0.0,
            BoundFn::Logarithmic { base, slope } => {
                base.is_finite() && slope.is_finite() && base > 0.0 && slope >= 0.0
            }
            BoundFn::Power { scale, exponent } => {
                scale.is_finite() && exponent.is_finite() && scale > 0.0 && exponent >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(format!("bound `{self}` must be positive and nondecreasing"))
        }
    }
}

impl fmt::Display for BoundFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundFn::Constant(c) => write!(f, "const:{c}"),
            BoundFn::Logarithmic { base, slope } => write!(f, "log:{base},{slope}"),
            BoundFn::Power { scale, exponent } => write!(f, "pow:{scale},{exponent}"),
        }
    }
}

impl FromStr for BoundFn {
    type Err = String;

    /// `const:C`, `log:BASE,SLOPE` or `pow:SCALE,EXPONENT`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid bound `{s}` (expected const:C, log:B,S or pow:A,P)");
        let (kind, args) = s.trim().split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let bound = match (kind, nums.as_slice()) {
            ("const", [c]) => BoundFn::Constant(*c),
            ("log", [base, slope]) => BoundFn::Logarithmic {
                base: *base,
                slope: *slope,
            },
            ("pow", [scale, exponent]) => BoundFn::Power {
                scale: *scale,
                exponent: *exponent,
            },
            _ => return Err(bad()),
        };
        bound.validate()?;
        Ok(bound)
    }
}

/// Where the constants `C_v` come from.
#[derive(Debug, Clone, Copy)]
pub enum ConstantsSource<'a> {
    Table(&'a ConstantsTable),
    Bound(BoundFn),
}

impl ConstantsSource<'_> {
    pub fn c(&self, v: LogNum) -> Result<LogNum, EsetError> {
        match self {
            ConstantsSource::Bound(f) => Ok(f.eval(v)),
            ConstantsSource::Table(t) => v
                .as_int()
                .and_then(|v| t.c(v))
                .map(LogNum::real)
                .ok_or_else(|| EsetError::MissingConstants { v: v.to_string() }),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ConstantsSource::Bound(f) => format!("bound {f}"),
            ConstantsSource::Table(t) => format!(
                "table horizon={} samples={} seed={} v_max={}",
                t.horizon,
                t.samples,
                t.seed.map_or("-".into(), |s| s.to_string()),
                t.v_max
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Desk,
    Paper,
}

/// The interval `[l, l + r]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub l: LogNum,
    pub r: LogNum,
}

impl Interval {
    pub fn end(&self) -> LogNum {
        self.l + self.r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub mode: ScheduleMode,
    pub intervals: Vec<Interval>,
    /// Left end of the interval after the last one, so the gap condition can
    /// be checked at the final index.
    pub next_l: Option<LogNum>,
    /// Target margin the schedule was generated for (1 = exact inequalities).
    pub margin: f64,
    pub provenance: String,
}

impl Schedule {
    /// Membership set; only schedules with all-exact values can be queried.
    pub fn to_eset(&self) -> Result<ESet, EsetError> {
        let pairs: Option<Vec<(u64, u64)>> = self
            .intervals
            .iter()
            .map(|i| Some((i.l.as_int()?, i.r.as_int()?)))
            .collect();
        match pairs {
            Some(p) if self.mode == ScheduleMode::Desk => ESet::from_pairs(&p),
            _ => Err(EsetError::PaperModeNotQueryable),
        }
    }

    /// Averages along `N = l_{m+1}` ("low") and `N = l_m + r_m + 1` ("high").
    pub fn subsequence_points(&self) -> Vec<(u64, Option<u64>, Option<u64>)> {
        self.intervals
            .iter()
            .enumerate()
            .map(|(i, iv)| {
                let next = self
                    .intervals
                    .get(i + 1)
                    .map(|n| n.l)
                    .or(if i + 1 == self.intervals.len() {
                        self.next_l
                    } else {
                        None
                    });
                let low = next.and_then(LogNum::as_int);
                let high = iv.end().add_f64(1.0).as_int();
                (i as u64 + 1, low, high)
            })
            .collect()
    }
}

/// One displayed inequality, in the rearranged form `lhs > rhs`.
///
/// `lhs` is the logarithm of the far endpoint; `rhs` the squared product
/// `(m * C * x)^2`; `margin_rhs` the same divided by `margin^2`. The original
/// quotient form `m * C * x / sqrt(lhs)` is reported as `ratio` when it is
/// resolvable in double precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: LogNum,
    pub rhs: LogNum,
    pub margin_rhs: LogNum,
    pub holds: bool,
    pub within_margin: bool,
    pub ratio: Option<f64>,
}

impl Inequality {
    fn evaluate(lhs: LogNum, m: u64, c: LogNum, x: LogNum, margin: f64) -> Self {
        let rhs = threshold(m, c, x, 1.0);
        let margin_rhs = threshold(m, c, x, margin);
        let ratio = rhs.approx_ratio(lhs).map(f64::sqrt);
        Inequality {
            lhs,
            rhs,
            margin_rhs,
            holds: lhs > rhs,
            within_margin: lhs > margin_rhs,
            ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub m: u64,
    /// `r_m > l_m`
    pub length_order: bool,
    pub interval_bound: Inequality,
    /// `l_{m+1} > l_m + r_m`; absent when the next left end is unknown.
    pub gap_order: Option<bool>,
    pub gap_bound: Option<Inequality>,
}

impl ConditionRow {
    fn holds(&self) -> bool {
        self.length_order
            && self.interval_bound.holds
            && self.gap_order.unwrap_or(true)
            && self.gap_bound.as_ref().is_none_or(|g| g.holds)
    }

    fn within_margin(&self) -> bool {
        self.holds()
            && self.interval_bound.within_margin
            && self.gap_bound.as_ref().is_none_or(|g| g.within_margin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub margin: f64,
    pub constants: String,
    /// `l_1 > 1`
    pub first_left: bool,
    pub rows: Vec<ConditionRow>,
    pub passes: bool,
    pub passes_margin: bool,
}

/// Default margin: the inequalities exactly as stated.
pub const EXACT_MARGIN: f64 = 1.0;

/// `(m * c * x / margin)^2`.
fn threshold(m: u64, c: LogNum, x: LogNum, margin: f64) -> LogNum {
    (c * x).scale(m as f64 / margin).square()
}

/// Checks `l_1 > 1`, and for each `m` the length order, the interval bound,
/// the gap order and the gap bound, at both the exact and the target margin.
pub fn verify_schedule(
    s: &Schedule,
    constants: &ConstantsSource<'_>,
    margin: f64,
) -> Result<ConditionReport, EsetError> {
    let mut rows = Vec::with_capacity(s.intervals.len());
    for (i, iv) in s.intervals.iter().enumerate() {
        let m = i as u64 + 1;
        let end = iv.end();
        let interval_bound =
            Inequality::evaluate(end.ln(), m, constants.c(iv.l)?, iv.l, margin);
        let next = s.intervals.get(i + 1).map(|n| n.l).or(if i + 1 == s.intervals.len() {
            s.next_l
        } else {
            None
        });
        let (gap_order, gap_bound) = match next {
            Some(next) => (
                Some(next > end),
                Some(Inequality::evaluate(
                    next.ln(),
                    m,
                    constants.c(end)?,
                    end.add_f64(1.0),
                    margin,
                )),
            ),
            None => (None, None),
        };
        rows.push(ConditionRow {
            m,
            length_order: iv.r > iv.l,
            interval_bound,
            gap_order,
            gap_bound,
        });
    }
    let first_left = s.intervals.first().is_none_or(|iv| iv.l > LogNum::ONE);
    let passes = first_left && rows.iter().all(ConditionRow::holds);
    let passes_margin = passes && rows.iter().all(ConditionRow::within_margin);
    Ok(ConditionReport {
        margin,
        constants: constants.describe(),
        first_left,
        rows,
        passes,
        passes_margin,
    })
}

/// Least `x > lower` with `ln(offset + x) > t`.
fn least_above(lower: LogNum, offset: LogNum, t: LogNum) -> LogNum {
    let pred = |x: LogNum| x > lower && (offset + x).ln() > t;
    if let (Some(lo), Some(off), Some(tv)) = (lower.as_int(), offset.as_int(), t.small()) {
        if tv < 43.0 {
            let guess = (tv.exp().floor() as u64).saturating_sub(off);
            let mut x = guess.max(lo + 1);
            while !pred(LogNum::Int(x)) {
                x += 1;
            }
            while x > lo + 1 && pred(LogNum::Int(x - 1)) {
                x -= 1;
            }
            return LogNum::Int(x);
        }
    }
    let mut x = t.next_up().exp().max(lower.next_up());
    while !pred(x) {
        x = x.next_up();
    }
    x
}

/// Greedy-minimal schedule: `l_1 = 2`, then each `r_m` and `l_{m+1}` is the
/// least value satisfying its order and bound conditions at `margin`.
pub fn generate_paper_schedule(bound: BoundFn, m_max: u64, margin: f64) -> Schedule {
    let source = ConstantsSource::Bound(bound);
    let c = |v: LogNum| source.c(v).expect("bound functions are total");
    let mut intervals = Vec::with_capacity(m_max as usize);
    let mut l = LogNum::Int(2);
    for m in 1..=m_max {
        let r = least_above(l, l, threshold(m, c(l), l, margin));
        let end = l + r;
        let next = least_above(end, LogNum::ZERO, threshold(m, c(end), end.add_f64(1.0), margin));
        intervals.push(Interval { l, r });
        l = next;
    }
    Schedule {
        mode: ScheduleMode::Paper,
        next_l: (m_max > 0).then_some(l),
        intervals,
        margin,
        provenance: format!("generated bound={bound} m_max={m_max}"),
    }
}

/// A desk-scale schedule: exact pairs, its membership set and the condition
/// report (normally failing the bounds, which desk scale cannot reach).
#[derive(Debug, Clone)]
pub struct DeskSchedule {
    pub schedule: Schedule,
    pub set: ESet,
    pub report: ConditionReport,
}

pub fn make_desk_schedule(
    pairs: &[(u64, u64)],
    constants: &ConstantsSource<'_>,
) -> Result<DeskSchedule, EsetError> {
    let set = ESet::from_pairs(pairs)?;
    let schedule = Schedule {
        mode: ScheduleMode::Desk,
        intervals: pairs
            .iter()
            .map(|&(l, r)| Interval {
                l: LogNum::Int(l),
                r: LogNum::Int(r),
            })
            .collect(),
        next_l: None,
        margin: EXACT_MARGIN,
        provenance: format!("desk {}", constants.describe()),
    };
    let report = verify_schedule(&schedule, constants, EXACT_MARGIN)?;
    Ok(DeskSchedule {
        schedule,
        set,
        report,
    })
}
