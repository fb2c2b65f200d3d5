//! Positive reals far beyond floating-point range.
//!
//! A [`LogNum`] is either an exact integer below `2^63` or an iterated
//! exponential `exp^level(top)` with a double-precision `top`. The level is
//! canonical: `level >= 1` implies `ln(2^63) < top <= 2^63`, so values order
//! lexicographically by `(level, top)`. Every operation rounds only the `top`
//! of its result, giving relative error about `1e-16` on the stored
//! logarithm at the result's level.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest top at any level (2^63).
const CAP: f64 = 9_223_372_036_854_775_808.0;
/// `ln(2^63)`; tops at or below this are lowered one level.
const LN_CAP: f64 = 43.668_272_375_276_55;
/// Exact integers stay below this.
const INT_LIMIT: u64 = 1 << 63;

#[derive(Clone, Copy, Debug)]
pub enum LogNum {
    Int(u64),
    Tower { level: u32, top: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid log-space number `{0}`")]
pub struct ParseLogNumError(pub String);

impl LogNum {
    pub const ZERO: LogNum = LogNum::Int(0);
    pub const ONE: LogNum = LogNum::Int(1);

    /// Exact integer; values at or above `2^63` fall back to a rounded real.
    pub fn int(n: u64) -> LogNum {
        if n < INT_LIMIT {
            LogNum::Int(n)
        } else {
            LogNum::real(n as f64)
        }
    }

    /// A finite real at level 0, lifted if it exceeds `2^63`.
    pub fn real(x: f64) -> LogNum {
        Self::tower(0, x)
    }

    /// `exp^level(top)`, canonicalized.
    pub fn tower(level: u32, top: f64) -> LogNum {
        assert!(top.is_finite(), "non-finite tower top {top}");
        let (mut level, mut top) = (level, top);
        while top > CAP {
            top = top.ln();
            level += 1;
        }
        while level > 0 && top <= LN_CAP {
            top = top.exp();
            level -= 1;
        }
        // Collapse -0.0 so equality and ordering agree.
        if top == 0.0 {
            top = 0.0;
        }
        LogNum::Tower { level, top }
    }

    pub fn level(self) -> u32 {
        match self {
            LogNum::Int(_) => 0,
            LogNum::Tower { level, .. } => level,
        }
    }

    pub fn as_int(self) -> Option<u64> {
        match self {
            LogNum::Int(n) => Some(n),
            LogNum::Tower { .. } => None,
        }
    }

    /// The value as `f64` when it lives at level 0.
    pub fn small(self) -> Option<f64> {
        match self {
            LogNum::Int(n) => Some(n as f64),
            LogNum::Tower { level: 0, top } => Some(top),
            LogNum::Tower { .. } => None,
        }
    }

    /// Lossy conversion; `+inf` above floating-point range.
    pub fn to_f64(self) -> f64 {
        match self {
            LogNum::Tower { level: 1, top } => top.exp(),
            other => other.small().unwrap_or(f64::INFINITY),
        }
    }

    /// Natural logarithm. Panics on non-positive values.
    pub fn ln(self) -> LogNum {
        match self {
            LogNum::Int(n) => {
                assert!(n > 0, "ln of zero");
                LogNum::real((n as f64).ln())
            }
            LogNum::Tower { level: 0, top } => {
                assert!(top > 0.0, "ln of non-positive {top}");
                LogNum::real(top.ln())
            }
            LogNum::Tower { level, top } => LogNum::tower(level - 1, top),
        }
    }

    pub fn exp(self) -> LogNum {
        match self {
            LogNum::Int(n) => LogNum::tower(1, n as f64),
            LogNum::Tower { level, top } => LogNum::tower(level + 1, top),
        }
    }

    /// `self - other` as `f64`, saturating to `+-inf` when the difference is
    /// beyond floating-point range (exactly `0` for identical towers).
    pub fn diff(self, other: LogNum) -> f64 {
        match (self, other) {
            (LogNum::Int(a), LogNum::Int(b)) => a as f64 - b as f64,
            _ => match (self.small(), other.small()) {
                (Some(a), Some(b)) => a - b,
                _ => match self.cmp(&other) {
                    Ordering::Equal => 0.0,
                    Ordering::Less => f64::NEG_INFINITY,
                    Ordering::Greater => f64::INFINITY,
                },
            },
        }
    }

    /// `self + c` for a real constant of either sign; `self + c` must stay positive
    /// whenever `self` is beyond level 0.
    pub fn add_f64(self, c: f64) -> LogNum {
        if let Some(x) = self.small() {
            if let (LogNum::Int(n), true) = (self, c.fract() == 0.0 && c.abs() < INT_LIMIT as f64) {
                let sum = n as i128 + c as i128;
                if (0..INT_LIMIT as i128).contains(&sum) {
                    return LogNum::Int(sum as u64);
                }
            }
            return LogNum::real(x + c);
        }
        if c == 0.0 {
            return self;
        }
        // c / self via logarithms; zero once self dwarfs any f64.
        let ln_self = self.ln();
        let ratio = match ln_self.small() {
            Some(l) => c.signum() * (c.abs().ln() - l).exp(),
            None => 0.0,
        };
        if ratio == 0.0 {
            return self;
        }
        ln_self.add_f64(ratio.ln_1p()).exp()
    }

    /// Sum of two non-negative values.
    fn sum(self, other: LogNum) -> LogNum {
        if let (LogNum::Int(a), LogNum::Int(b)) = (self, other) {
            if let Some(s) = a.checked_add(b).filter(|&s| s < INT_LIMIT) {
                return LogNum::Int(s);
            }
        }
        if let (Some(a), Some(b)) = (self.small(), other.small()) {
            return LogNum::real(a + b);
        }
        let (big, small) = if self >= other {
            (self, other)
        } else {
            (other, self)
        };
        if let Some(s) = small.small() {
            return big.add_f64(s);
        }
        // Both beyond level 0: small/big is 1 for identical values, else negligible.
        let ratio = small.ln().diff(big.ln()).exp();
        if ratio == 0.0 {
            return big;
        }
        big.ln().add_f64(ratio.ln_1p()).exp()
    }

    /// Product of two positive values.
    fn product(self, other: LogNum) -> LogNum {
        if let (LogNum::Int(a), LogNum::Int(b)) = (self, other) {
            if let Some(p) = a.checked_mul(b).filter(|&p| p < INT_LIMIT) {
                return LogNum::Int(p);
            }
        }
        match (self.small(), other.small()) {
            (Some(a), Some(b)) => LogNum::real(a * b),
            (Some(a), None) => other.ln().add_f64(a.ln()).exp(),
            (None, Some(b)) => self.ln().add_f64(b.ln()).exp(),
            (None, None) => (self.ln() + other.ln()).exp(),
        }
    }

    /// Multiply by a positive real constant.
    pub fn scale(self, c: f64) -> LogNum {
        self * LogNum::real(c)
    }

    pub fn square(self) -> LogNum {
        self * self
    }

    pub fn sqrt(self) -> LogNum {
        match self.small() {
            Some(x) => LogNum::real(x.sqrt()),
            None => self.ln().scale(0.5).exp(),
        }
    }

    /// Smallest representable value above `self`.
    pub fn next_up(self) -> LogNum {
        match self {
            LogNum::Int(n) => LogNum::int(n + 1),
            LogNum::Tower { level, top } => LogNum::tower(level, top.next_up()),
        }
    }

    /// Largest representable value below `self` (saturating at zero).
    pub fn next_down(self) -> LogNum {
        match self {
            LogNum::Int(n) => LogNum::Int(n.saturating_sub(1)),
            LogNum::Tower { level, top } => LogNum::tower(level, top.next_down()),
        }
    }

    /// `self / other` when it can be resolved in double precision.
    ///
    /// Returns `None` when both values are so large that the rounding of their
    /// logarithms exceeds `1e-6` in the logarithm of the quotient.
    pub fn approx_ratio(self, other: LogNum) -> Option<f64> {
        if let (Some(a), Some(b)) = (self.small(), other.small()) {
            return Some(a / b);
        }
        let (la, lb) = (self.ln().small()?, other.ln().small()?);
        let scale = la.abs().max(lb.abs());
        let rounding = 4.0 * (scale.next_up() - scale);
        (rounding < 1e-6).then(|| (la - lb).exp())
    }
}

fn cmp_int_real(n: u64, x: f64) -> Ordering {
    if x >= CAP {
        return Ordering::Less;
    }
    if x < 0.0 {
        return Ordering::Greater;
    }
    let floor = x.floor();
    n.cmp(&(floor as u64)).then(if x > floor {
        Ordering::Less
    } else {
        Ordering::Equal
    })
}


impl Add for LogNum {
    type Output = LogNum;

    fn add(self, other: LogNum) -> LogNum {
        self.sum(other)
    }
}

impl Mul for LogNum {
    type Output = LogNum;

    fn mul(self, other: LogNum) -> LogNum {
        self.product(other)
    }
}
impl Ord for LogNum {
    fn cmp(&self, other: &Self) -> Ordering {
        use LogNum::*;
        match (*self, *other) {
            (Int(a), Int(b)) => a.cmp(&b),
            (Int(a), Tower { level: 0, top }) => cmp_int_real(a, top),
            (Tower { level: 0, top }, Int(b)) => cmp_int_real(b, top).reverse(),
            (Int(_), Tower { .. }) => Ordering::Less,
            (Tower { .. }, Int(_)) => Ordering::Greater,
            (Tower { level: la, top: ta }, Tower { level: lb, top: tb }) => {
                la.cmp(&lb).then(ta.total_cmp(&tb))
            }
        }
    }
}

impl PartialOrd for LogNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for LogNum {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for LogNum {}

impl fmt::Display for LogNum {
    /// Exact integers print in decimal, level-0 reals with a decimal point or
    /// exponent, deeper values as `exp^k(top)`; all forms round-trip.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LogNum::Int(n) => write!(f, "{n}"),
            LogNum::Tower { level: 0, top } => write!(f, "{top:?}"),
            LogNum::Tower { level, top } => write!(f, "exp^{level}({top:?})"),
        }
    }
}

impl FromStr for LogNum {
    type Err = ParseLogNumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseLogNumError(s.to_string());
        let t = s.trim();
        if let Some(rest) = t.strip_prefix("exp^") {
            let (level, top) = rest.split_once('(').ok_or_else(err)?;
            let top = top.strip_suffix(')').ok_or_else(err)?;
            let level: u32 = level.parse().map_err(|_| err())?;
            let top: f64 = top.parse().map_err(|_| err())?;
            if !top.is_finite() || top <= 0.0 || level > 1 << 16 {
                return Err(err());
            }
            return Ok(LogNum::tower(level, top));
        }
        if !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) {
            let n: u64 = t.parse().map_err(|_| err())?;
            return if n < INT_LIMIT { Ok(LogNum::Int(n)) } else { Err(err()) };
        }
        let x: f64 = t.parse().map_err(|_| err())?;
        if !x.is_finite() || x < 0.0 {
            return Err(err());
        }
        Ok(LogNum::real(x))
    }
}

impl Serialize for LogNum {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LogNum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
