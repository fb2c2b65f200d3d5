//! Exact circle arithmetic on 128-bit fixed-point angles.
//!
//! A [`FixedAngle`] stores `bits / 2^128`, so every rotation step is a single
//! wrapping `u128` addition and orbits of any length are bit-reproducible.
//! The rotation number is quantized once, from continued-fraction convergents
//! evaluated in exact integer arithmetic.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RotationError {
    #[error("unknown alpha preset `{0}` (expected golden, sqrt2m1, sqrt3m1 or cf:...)")]
    UnknownPreset(String),
    #[error("partial quotient {quotient} exceeds the declared bound {bound}")]
    UnboundedQuotients { quotient: u64, bound: u64 },
    #[error("finite continued fraction describes a rational number; alpha must be irrational")]
    FiniteCf,
    #[error("partial quotients after the integer part must be positive")]
    InvalidQuotient,
    #[error("malformed continued fraction `{0}`")]
    Malformed(String),
}

/// A point of the circle `[0, 1)` with 128 fractional bits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FixedAngle(u128);

impl FixedAngle {
    pub const ZERO: FixedAngle = FixedAngle(0);
    pub const HALF: FixedAngle = FixedAngle(1 << 127);
    pub const QUARTER: FixedAngle = FixedAngle(1 << 126);

    pub const fn from_bits(bits: u128) -> Self {
        FixedAngle(bits)
    }

    pub const fn bits(self) -> u128 {
        self.0
    }

    /// Nearest representable angle to `x mod 1` (53 significant bits at most).
    pub fn from_f64(x: f64) -> Self {
        let frac = x - x.floor();
        // 2^128 * frac is exact in binary floating point; the cast saturates at 1.
        let scaled = frac * 2f64.powi(128);
        if scaled >= 2f64.powi(128) {
            FixedAngle(0)
        } else {
            FixedAngle(scaled as u128)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2f64.powi(128)
    }

    pub fn wrapping_add(self, other: FixedAngle) -> FixedAngle {
        FixedAngle(self.0.wrapping_add(other.0))
    }

    pub fn wrapping_sub(self, other: FixedAngle) -> FixedAngle {
        FixedAngle(self.0.wrapping_sub(other.0))
    }

    /// Fixed-width lowercase hex of the raw bits (32 digits).
    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        if s.is_empty() || s.len() > 32 {
            return None;
        }
        u128::from_str_radix(s, 16).ok().map(FixedAngle)
    }
}

impl fmt::Debug for FixedAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FixedAngle(0x{:032x} ~ {:.17})", self.0, self.to_f64())
    }
}

impl fmt::Display for FixedAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

/// `theta + n * alpha (mod 1)`, exact in fixed point.
#[inline]
pub fn advance(theta: FixedAngle, alpha: FixedAngle, n: u64) -> FixedAngle {
    FixedAngle(theta.0.wrapping_add((n as u128).wrapping_mul(alpha.0)))
}

/// The half-circle step function: `+1` on `[0, 1/2)`, `-1` on `[1/2, 1)`.
#[inline]
pub fn phi(theta: FixedAngle) -> i64 {
    if theta.0 < FixedAngle::HALF.0 {
        1
    } else {
        -1
    }
}

/// How the rotation number is specified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaSpec {
    /// `(sqrt 5 - 1) / 2 = [0; 1, 1, 1, ...]`
    Golden,
    /// `sqrt 2 - 1 = [0; 2, 2, 2, ...]`
    Sqrt2m1,
    /// `sqrt 3 - 1 = [0; 1, 2, 1, 2, ...]`
    Sqrt3m1,
    /// `[0; preperiod..., period, period, ...]` with every quotient at most `bound`.
    Custom {
        preperiod: Vec<u64>,
        period: Vec<u64>,
        bound: u64,
    },
}

impl AlphaSpec {
    fn quotients(&self) -> (Vec<u64>, Vec<u64>) {
        match self {
            AlphaSpec::Golden => (vec![], vec![1]),
            AlphaSpec::Sqrt2m1 => (vec![], vec![2]),
            AlphaSpec::Sqrt3m1 => (vec![], vec![1, 2]),
            AlphaSpec::Custom {
                preperiod, period, ..
            } => (preperiod.clone(), period.clone()),
        }
    }

    fn validate(&self) -> Result<(), RotationError> {
        if let AlphaSpec::Custom {
            preperiod,
            period,
            bound,
        } = self
        {
            if period.is_empty() {
                return Err(RotationError::FiniteCf);
            }
            for &q in preperiod.iter().chain(period) {
                if q == 0 {
                    return Err(RotationError::InvalidQuotient);
                }
                if q > *bound {
                    return Err(RotationError::UnboundedQuotients {
                        quotient: q,
                        bound: *bound,
                    });
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::Golden => f.write_str("golden"),
            AlphaSpec::Sqrt2m1 => f.write_str("sqrt2m1"),
            AlphaSpec::Sqrt3m1 => f.write_str("sqrt3m1"),
            AlphaSpec::Custom {
                preperiod,
                period,
                bound,
            } => {
                let join = |v: &[u64]| {
                    v.iter()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                };
                write!(f, "cf:{}/{};k={}", join(preperiod), join(period), bound)
            }
        }
    }
}

impl FromStr for AlphaSpec {
    type Err = RotationError;

    /// Accepts `golden`, `sqrt2m1`, `sqrt3m1`, or `cf:PRE/PERIOD;k=BOUND`
    /// where `PRE` and `PERIOD` are comma-separated partial quotients after the
    /// integer part. `cf:1,2;k=2` (no `/`) is a finite expansion and rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "golden" => return Ok(AlphaSpec::Golden),
            "sqrt2m1" => return Ok(AlphaSpec::Sqrt2m1),
            "sqrt3m1" => return Ok(AlphaSpec::Sqrt3m1),
            _ => {}
        }
        let Some(body) = s.strip_prefix("cf:") else {
            return Err(RotationError::UnknownPreset(s.to_string()));
        };
        let malformed = || RotationError::Malformed(s.to_string());
        let (quotients, bound) = body.split_once(';').ok_or_else(malformed)?;
        let bound = bound
            .trim()
            .strip_prefix("k=")
            .ok_or_else(malformed)?
            .trim()
            .parse::<u64>()
            .map_err(|_| malformed())?;
        let parse_list = |list: &str| -> Result<Vec<u64>, RotationError> {
            let list = list.trim();
            if list.is_empty() {
                return Ok(Vec::new());
            }
            list.split(',')
                .map(|q| q.trim().parse::<u64>().map_err(|_| malformed()))
                .collect()
        };
        let spec = match quotients.split_once('/') {
            Some((pre, period)) => AlphaSpec::Custom {
                preperiod: parse_list(pre)?,
                period: parse_list(period)?,
                bound,
            },
            None => AlphaSpec::Custom {
                preperiod: parse_list(quotients)?,
                period: Vec::new(),
                bound,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Quantize the rotation number to the nearest 128-bit fixed-point angle.
///
/// Convergents `p/q` are generated until `q > 2^130`; since
/// `|alpha - p/q| < 1/q^2`, rounding `p * 2^128 / q` lands within `2^-128` of
/// `alpha`.
pub fn resolve_alpha(spec: &AlphaSpec) -> Result<FixedAngle, RotationError> {
    spec.validate()?;
    let (pre, period) = spec.quotients();
    let limit = BigUint::one() << 130u32;

    // p_{-1} = 1, p_0 = a_0 = 0; q_{-1} = 0, q_0 = 1.
    let (mut p_prev, mut p) = (BigUint::one(), BigUint::zero());
    let (mut q_prev, mut q) = (BigUint::zero(), BigUint::one());
    let mut quotients = pre.iter().chain(period.iter().cycle());
    while q <= limit {
        let a = BigUint::from(*quotients.next().expect("period is nonempty"));
        let p_next = &a * &p + &p_prev;
        let q_next = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }

    // round(p * 2^128 / q) = floor((p * 2^129 + q) / (2q))
    let numerator = (p << 129u32) + &q;
    let rounded = numerator / (q << 1u32);
    let modulus = BigUint::one() << 128u32;
    let bits = (rounded % modulus)
        .to_u128()
        .expect("reduced below 2^128");
    Ok(FixedAngle(bits))
}
