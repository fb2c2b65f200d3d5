//! Points of the circle times the two-sided shift space, held on finite
//! windows of symbols.
//!
//! A [`SymbolWindow`] stores `omega(j)` for absolute coordinates
//! `|j| <= radius` and an offset `k`; it represents the shifted sequence
//! `s -> omega(s + k)`. Shifting changes the offset only. Reads outside the
//! stored range fail with [`SymbolicError::WindowExceeded`].
//!
//! Windows are filled centre-out (`0, 1, -1, 2, -2, ...`) from the seeded
//! stream, so a wider window with the same seed extends a narrower one.

use rand::Rng;
use thiserror::Error;

use crate::averages::{AverageSeries, Method, SeriesEntry};
use crate::eset::{EMask, ESet};
use crate::rotation::{advance, phi, FixedAngle};
use crate::sampling::{self, MeanEstimate, Purpose};
use crate::walk::cocycle;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("coordinate {coordinate} lies outside the symbol window of radius {radius}")]
    WindowExceeded { coordinate: i64, radius: u64 },
    #[error("collapsed and literal indicators disagree at n = {n} for theta {theta}")]
    RouteMismatch { n: u64, theta: String },
    #[error("cylinder constrains coordinate {0} more than once")]
    DuplicateCoordinate(i64),
    #[error("symbols are +1 or -1, got {0}")]
    InvalidSymbol(i64),
    #[error("N list must be nonempty, positive and strictly increasing")]
    BadHorizons,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolWindow {
    radius: u64,
    offset: i64,
    values: Vec<i8>,
}

/// `0, 1, -1, 2, -2, ...`
fn centre_out(k: u64) -> i64 {
    let half = k.div_ceil(2) as i64;
    if k % 2 == 1 {
        half
    } else {
        -half
    }
}

impl SymbolWindow {
    /// I.i.d. uniform symbols on `[-radius, radius]` from stream `index` of `seed`.
    pub fn sample(radius: u64, seed: u64, index: u64) -> Self {
        let mut rng = sampling::stream(seed, Purpose::Omega, index);
        let len = 2 * radius + 1;
        let mut values = vec![0i8; len as usize];
        for k in 0..len {
            let j = centre_out(k);
            values[(j + radius as i64) as usize] = if rng.random::<bool>() { 1 } else { -1 };
        }
        SymbolWindow {
            radius,
            offset: 0,
            values,
        }
    }

    /// Window over `[-radius, radius]` with the given symbols, unshifted.
    pub fn from_values(values: Vec<i8>) -> Result<Self, SymbolicError> {
        if values.len() % 2 == 0 {
            return Err(SymbolicError::WindowExceeded {
                coordinate: values.len() as i64 / 2,
                radius: (values.len() as u64).saturating_sub(1) / 2,
            });
        }
        if let Some(&bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(SymbolicError::InvalidSymbol(bad as i64));
        }
        Ok(SymbolWindow {
            radius: (values.len() as u64 - 1) / 2,
            offset: 0,
            values,
        })
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    fn exceeded(&self, coordinate: i64) -> SymbolicError {
        SymbolicError::WindowExceeded {
            coordinate,
            radius: self.radius,
        }
    }

    /// The current sequence at coordinate `s`, i.e. the stored `omega(s + offset)`.
    #[inline]
    pub fn read(&self, s: i64) -> Result<i8, SymbolicError> {
        let abs = s + self.offset;
        if abs.unsigned_abs() > self.radius {
            return Err(self.exceeded(abs));
        }
        Ok(self.values[(abs + self.radius as i64) as usize])
    }

    /// Shift by `k`: the new sequence is `s -> old(s + k)`.
    #[inline]
    pub fn shift(&mut self, k: i64) -> Result<(), SymbolicError> {
        let offset = self.offset + k;
        if offset.unsigned_abs() > self.radius {
            return Err(self.exceeded(offset));
        }
        self.offset = offset;
        Ok(())
    }

    /// Negate every stored symbol whose current coordinate is outside `E`.
    pub fn flip_outside(&mut self, e: &EMask) {
        let first = -(self.radius as i64) - self.offset;
        for (i, v) in self.values.iter_mut().enumerate() {
            if !e.contains(first + i as i64) {
                *v = -*v;
            }
        }
    }

    /// The stored symbols over `[-radius, radius]` (absolute coordinates).
    pub fn values(&self) -> &[i8] {
        &self.values
    }
}

/// Sequence sample for seed `seed` (stream 0).
pub fn sample_omega(radius: u64, seed: u64) -> SymbolWindow {
    SymbolWindow::sample(radius, seed, 0)
}

/// Flip outside `E`; an involution.
pub fn apply_pi_e(w: &SymbolWindow, e: &ESet) -> SymbolWindow {
    let mut out = w.clone();
    out.flip_outside(&e.mask(w.radius + w.offset.unsigned_abs()));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicPoint {
    pub theta: FixedAngle,
    pub window: SymbolWindow,
}

impl SymbolicPoint {
    pub fn new(theta: FixedAngle, window: SymbolWindow) -> Self {
        SymbolicPoint { theta, window }
    }

    /// `(theta, omega) -> (theta + alpha, shift^{phi(theta)} omega)`.
    #[inline]
    pub fn step(&mut self, alpha: FixedAngle) -> Result<(), SymbolicError> {
        self.window.shift(phi(self.theta))?;
        self.theta = advance(self.theta, alpha, 1);
        Ok(())
    }

    /// The conjugate map: flip outside `E`, step, flip outside `E`.
    pub fn conjugate_step(&mut self, alpha: FixedAngle, e: &EMask) -> Result<(), SymbolicError> {
        self.window.flip_outside(e);
        let stepped = self.step(alpha);
        self.window.flip_outside(e);
        stepped
    }
}

pub fn apply_t(p: &SymbolicPoint, alpha: FixedAngle) -> Result<SymbolicPoint, SymbolicError> {
    let mut q = p.clone();
    q.step(alpha)?;
    Ok(q)
}

pub fn apply_s(
    p: &SymbolicPoint,
    alpha: FixedAngle,
    e: &ESet,
) -> Result<SymbolicPoint, SymbolicError> {
    let mut q = p.clone();
    q.conjugate_step(alpha, &e.mask(q.window.radius + q.window.offset.unsigned_abs() + 1))?;
    Ok(q)
}

/// A cylinder: prescribed symbols at finitely many coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CylinderSpec {
    constraints: Vec<(i64, i8)>,
}

impl CylinderSpec {
    /// The whole sequence space.
    pub fn everything() -> Self {
        CylinderSpec::default()
    }

    pub fn new(constraints: &[(i64, i64)]) -> Result<Self, SymbolicError> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(constraints.len());
        for &(j, symbol) in constraints {
            if symbol != 1 && symbol != -1 {
                return Err(SymbolicError::InvalidSymbol(symbol));
            }
            if !seen.insert(j) {
                return Err(SymbolicError::DuplicateCoordinate(j));
            }
            out.push((j, symbol as i8));
        }
        Ok(CylinderSpec { constraints: out })
    }

    pub fn measure(&self) -> f64 {
        0.5f64.powi(self.constraints.len() as i32)
    }

    /// Largest `|j|` constrained (0 when unconstrained).
    pub fn reach(&self) -> u64 {
        self.constraints
            .iter()
            .map(|&(j, _)| j.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn contains(&self, w: &SymbolWindow) -> Result<bool, SymbolicError> {
        for &(j, symbol) in &self.constraints {
            if w.read(j)? != symbol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Whether `T^n x` and `S^n x` both read `+1` at coordinate 0.
///
/// Evaluated twice: by iterating both maps on full windows, and by the
/// collapsed predicate `omega(h) = 1` and (`h` in `E` iff `0` in `E`) where
/// `h = phi_n(theta0)`. The outer flip of the conjugate map negates
/// coordinate 0 exactly when 0 lies outside `E`, which is why the collapsed
/// predicate compares membership of `h` with membership of `0`.
pub fn triple_indicator(
    theta0: FixedAngle,
    omega: &SymbolWindow,
    alpha: FixedAngle,
    e: &ESet,
    n: u64,
) -> Result<bool, SymbolicError> {
    let mask = e.mask(2 * omega.radius + 1);
    let mut t_point = SymbolicPoint::new(theta0, omega.clone());
    let mut s_point = t_point.clone();
    for _ in 0..n {
        t_point.step(alpha)?;
        s_point.conjugate_step(alpha, &mask)?;
    }
    let literal = t_point.window.read(0)? == 1 && s_point.window.read(0)? == 1;
    let collapsed = collapsed_indicator(omega, &mask, cocycle(theta0, alpha, n))?;
    if literal != collapsed {
        return Err(SymbolicError::RouteMismatch {
            n,
            theta: theta0.to_hex(),
        });
    }
    Ok(literal)
}

/// The membership-only form of [`triple_indicator`] at height `h`.
#[inline]
pub fn collapsed_indicator(omega: &SymbolWindow, e: &EMask, h: i64) -> Result<bool, SymbolicError> {
    Ok(omega.read(h)? == 1 && e.contains(h) == e.contains(0))
}

/// Default window radius for walks of length `n`.
pub fn default_radius(n: u64) -> u64 {
    4 * u64::from(n.max(2).next_power_of_two().trailing_zeros()) + 16
}

pub(crate) fn check_horizons(n_list: &[u64]) -> Result<(), SymbolicError> {
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SymbolicError::BadHorizons);
    }
    Ok(())
}

/// Options for [`mc_triple_average`].
#[derive(Debug, Clone, Copy, Default)]
pub struct MonteCarloOptions {
    /// Starting window radius; `None` picks [`default_radius`].
    pub radius: Option<u64>,
    /// Invert every reported indicator after the route check (gate testing only).
    pub inject_fault: bool,
}

/// One sample's running indicator counts, recorded at each horizon.
fn triple_counts(
    theta: FixedAngle,
    omega: &SymbolWindow,
    alpha: FixedAngle,
    mask: &EMask,
    n_list: &[u64],
    inject_fault: bool,
) -> Result<Vec<u64>, SymbolicError> {
    let n_max = *n_list.last().expect("checked nonempty");
    let mut counts = Vec::with_capacity(n_list.len());
    let mut t_point = SymbolicPoint::new(theta, omega.clone());
    let mut s_point = t_point.clone();
    let mut h = 0i64;
    let mut count = 0u64;
    let mut next = 0;
    for n in 0..n_max {
        let literal = t_point.window.read(0)? == 1 && s_point.window.read(0)? == 1;
        if literal != collapsed_indicator(omega, mask, h)? {
            return Err(SymbolicError::RouteMismatch {
                n,
                theta: theta.to_hex(),
            });
        }
        count += u64::from(literal != inject_fault);
        if n + 1 == n_list[next] {
            counts.push(count);
            next += 1;
        }
        if n + 1 < n_max {
            h += phi(t_point.theta);
            t_point.step(alpha)?;
            s_point.conjugate_step(alpha, mask)?;
        }
    }
    Ok(counts)
}

/// Monte Carlo estimate of `(1/N) sum_{n<N} mu(A_1, T^-n A_2, S^-n A_3)` with
/// `A_1 = B x Sigma` (`B` given by `accept`) and `A_2 = A_3` the cylinder
/// `omega(0) = 1`, sampling `(theta_i, omega_i)` for `i < n_theta`.
pub fn mc_triple_average(
    alpha: FixedAngle,
    e: &ESet,
    n_list: &[u64],
    n_theta: usize,
    seed: u64,
    accept: &(dyn Fn(FixedAngle) -> bool + Sync),
    options: MonteCarloOptions,
) -> Result<AverageSeries, SymbolicError> {
    check_horizons(n_list)?;
    let n_max = *n_list.last().unwrap_or(&1);
    let base_radius = options.radius.unwrap_or_else(|| default_radius(n_max));
    let per_sample = sampling::try_ordered_map(n_theta, |i| {
        let theta = sampling::sample_theta(seed, Purpose::Theta, i as u64);
        if !accept(theta) {
            return Ok(vec![0u64; n_list.len()]);
        }
        let mut radius = base_radius;
        loop {
            let omega = SymbolWindow::sample(radius, seed, i as u64);
            let mask = e.mask(2 * radius + 1);
            match triple_counts(theta, &omega, alpha, &mask, n_list, options.inject_fault) {
                Err(SymbolicError::WindowExceeded { .. }) if radius < n_max => radius *= 2,
                other => return other,
            }
        }
    })?;
    let entries = n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let fractions: Vec<f64> = per_sample.iter().map(|c| c[k] as f64 / n as f64).collect();
            let est = MeanEstimate::from_samples(&fractions);
            SeriesEntry {
                n,
                a: est.mean,
                stderr: est.stderr,
                method: Method::MonteCarlo,
                n_theta: n_theta as u64,
                seed: Some(seed),
            }
        })
        .collect();
    Ok(AverageSeries { entries })
}
