//! Exact integration of functions of `phi_n` over the circle.
//!
//! `phi_n` is a step function of `theta` whose jumps lie in
//! `{-k alpha, 1/2 - k alpha : k < n}`. [`PartitionStepFn`] keeps its cells
//! and refines them by the two new breakpoints each step, so all cell
//! lengths are exact differences of 128-bit angles.

use crate::eset::ESet;
use crate::rotation::{phi, FixedAngle};

use super::{AverageSeries, AveragesError, Method, SeriesEntry};

/// Largest horizon the exact route accepts (work grows quadratically).
pub const EXACT_CAP: u64 = 1 << 14;

/// Sum of circle measures in units of `2^-128`, wide enough for `2^14` full circles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Measure {
    hi: u64,
    lo: u128,
}

impl Measure {
    pub const FULL_CIRCLE: Measure = Measure { hi: 1, lo: 0 };

    pub fn from_bits(lo: u128) -> Self {
        Measure { hi: 0, lo }
    }

    /// `(hi, lo)` with value `hi * 2^128 + lo`.
    pub fn parts(self) -> (u64, u128) {
        (self.hi, self.lo)
    }

    /// Value in units of whole circles.
    pub fn to_f64(self) -> f64 {
        self.hi as f64 + self.lo as f64 * 2f64.powi(-128)
    }
}

impl std::ops::Add for Measure {
    type Output = Measure;

    fn add(self, other: Measure) -> Measure {
        let (lo, carry) = self.lo.overflowing_add(other.lo);
        Measure {
            hi: self.hi + other.hi + u64::from(carry),
            lo,
        }
    }
}

/// `theta -> phi_n(theta)` as sorted cells `[start_i, start_{i+1})`, the
/// last one running to the end of the circle. The first cell starts at 0;
/// neighbouring cells carry different values.
#[derive(Debug, Clone)]
pub struct PartitionStepFn {
    alpha: FixedAngle,
    n: u64,
    cells: Vec<(u128, i64)>,
}

impl PartitionStepFn {
    /// `phi_0 = 0` on the whole circle.
    pub fn new(alpha: FixedAngle) -> Self {
        PartitionStepFn {
            alpha,
            n: 0,
            cells: vec![(0, 0)],
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn cells(&self) -> &[(u128, i64)] {
        &self.cells
    }

    fn split_at(&mut self, point: u128) {
        let i = self.cells.partition_point(|&(s, _)| s <= point);
        // i >= 1 because the first cell starts at 0
        if self.cells[i - 1].0 != point {
            let value = self.cells[i - 1].1;
            self.cells.insert(i, (point, value));
        }
    }

    /// `phi_{n+1} = phi_n + phi(. + n alpha)`.
    pub fn step(&mut self) {
        let shift = self.alpha.bits().wrapping_mul(self.n as u128);
        self.split_at(shift.wrapping_neg());
        self.split_at(FixedAngle::HALF.bits().wrapping_sub(shift));
        for cell in &mut self.cells {
            cell.1 += phi(FixedAngle::from_bits(cell.0.wrapping_add(shift)));
        }
        self.cells.dedup_by(|next, prev| next.1 == prev.1);
        self.n += 1;
    }

    /// Measure of `{theta : keep(phi_n(theta))}`.
    pub fn measure_where(&self, mut keep: impl FnMut(i64) -> bool) -> Measure {
        let mut total = Measure::default();
        for (i, &(start, value)) in self.cells.iter().enumerate() {
            if !keep(value) {
                continue;
            }
            let len = match self.cells.get(i + 1) {
                Some(&(end, _)) => Measure::from_bits(end - start),
                None if start == 0 => Measure::FULL_CIRCLE,
                None => Measure::from_bits(start.wrapping_neg()),
            };
            total = total + len;
        }
        total
    }

    /// Value at a single angle (for cross-checks).
    pub fn value_at(&self, theta: FixedAngle) -> i64 {
        let i = self.cells.partition_point(|&(s, _)| s <= theta.bits());
        self.cells[i - 1].1
    }
}

/// Exact averages `(1/2N) sum_{n<N} m(phi_n in E)` for each `N` in `n_list`.
pub fn exact_average_series(
    alpha: FixedAngle,
    e: &ESet,
    n_list: &[u64],
) -> Result<AverageSeries, AveragesError> {
    super::check_horizons(n_list)?;
    let n_max = *n_list.last().expect("nonempty");
    if n_max > EXACT_CAP {
        return Err(AveragesError::BudgetExceeded {
            n: n_max,
            cap: EXACT_CAP,
        });
    }
    let mut f = PartitionStepFn::new(alpha);
    let mut acc = Measure::default();
    let mut entries = Vec::with_capacity(n_list.len());
    let mut next = 0;
    for n in 0..n_max {
        acc = acc + f.measure_where(|v| e.contains(v));
        if n + 1 == n_list[next] {
            let big = n_list[next];
            entries.push(SeriesEntry {
                n: big,
                a: 0.5 * acc.to_f64() / big as f64,
                stderr: 0.0,
                method: Method::Exact,
                n_theta: 0,
                seed: None,
            });
            next += 1;
        }
        if n + 1 < n_max {
            f.step();
        }
    }
    Ok(AverageSeries { entries })
}

pub fn exact_average(alpha: FixedAngle, e: &ESet, n: u64) -> Result<f64, AveragesError> {
    Ok(exact_average_series(alpha, e, &[n])?.entries[0].a)
}
