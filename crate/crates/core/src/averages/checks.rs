//! Ratio convergence, range decay and correlation checks.

use serde::{Deserialize, Serialize};

use crate::rotation::FixedAngle;
use crate::sampling::{self, median, MeanEstimate, Purpose};
use crate::symbolic::{default_radius, CylinderSpec, SymbolWindow, SymbolicError, SymbolicPoint};
use crate::walk::{run_walk, WalkError};

use super::partition::{PartitionStepFn, EXACT_CAP};
use super::AveragesError;

/// Finite union of half-open arcs `[start, end)`; an arc with `end <= start`
/// wraps through 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcSet {
    Circle,
    Arcs(Vec<(FixedAngle, FixedAngle)>),
}

impl ArcSet {
    pub fn contains(&self, theta: FixedAngle) -> bool {
        match self {
            ArcSet::Circle => true,
            ArcSet::Arcs(arcs) => arcs.iter().any(|&(a, b)| {
                let len = b.bits().wrapping_sub(a.bits());
                theta.bits().wrapping_sub(a.bits()) < len
            }),
        }
    }

    /// Sum of arc lengths (overlaps are counted twice).
    pub fn measure(&self) -> f64 {
        match self {
            ArcSet::Circle => 1.0,
            ArcSet::Arcs(arcs) => arcs
                .iter()
                .map(|&(a, b)| FixedAngle::from_bits(b.bits().wrapping_sub(a.bits())).to_f64())
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub sample: usize,
    pub v: i64,
    pub n: u64,
    /// `Psi_n^(v) / Psi_n^(0)`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub v: i64,
    pub n: u64,
    pub median_ratio: f64,
    /// Median over samples of `|ratio - 1|`.
    pub median_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    pub summary: Vec<RatioSummary>,
}

impl RatioTable {
    pub fn summary_at(&self, v: i64, n: u64) -> Option<&RatioSummary> {
        self.summary.iter().find(|s| s.v == v && s.n == n)
    }
}

/// `Psi_n^(v) / Psi_n` per sample, height and time, with medians per `(v, n)`.
/// `Psi_n >= 1` for `n >= 1` because the walk starts at height 0.
pub fn ratio_check(
    alpha: FixedAngle,
    thetas: &[FixedAngle],
    v_list: &[i64],
    checkpoints: &[u64],
) -> Result<RatioTable, WalkError> {
    let mut times: Vec<u64> = checkpoints.iter().copied().filter(|&n| n >= 1).collect();
    times.sort_unstable();
    times.dedup();
    let horizon = *times.last().ok_or(WalkError::EmptyWalk)?;
    let summaries = sampling::try_ordered_map(thetas.len(), |i| {
        run_walk(thetas[i], alpha, horizon, &times)
    })?;
    let mut rows = Vec::new();
    for (sample, s) in summaries.iter().enumerate() {
        for cp in &s.checkpoints {
            let base = cp.histogram.get(0) as f64;
            for &v in v_list {
                rows.push(RatioRow {
                    sample,
                    v,
                    n: cp.n,
                    ratio: cp.histogram.get(v) as f64 / base,
                });
            }
        }
    }
    let mut summary = Vec::new();
    for &n in &times {
        for &v in v_list {
            let ratios: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n && r.v == v)
                .map(|r| r.ratio)
                .collect();
            let deviations: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
            summary.push(RatioSummary {
                v,
                n,
                median_ratio: median(&ratios),
                median_deviation: median(&deviations),
            });
        }
    }
    Ok(RatioTable { rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTable {
    /// `(sample, N, a_N / N)`
    pub rows: Vec<(usize, u64, f64)>,
    /// `(N, max over samples of a_N / N)`
    pub max_by_n: Vec<(u64, f64)>,
}

/// Range decay `a_N / N` per sample and horizon.
pub fn zero_entropy_proxy(
    alpha: FixedAngle,
    thetas: &[FixedAngle],
    n_list: &[u64],
) -> Result<EntropyTable, WalkError> {
    let mut times: Vec<u64> = n_list.iter().copied().filter(|&n| n >= 1).collect();
    times.sort_unstable();
    times.dedup();
    let horizon = *times.last().ok_or(WalkError::EmptyWalk)?;
    let summaries = sampling::try_ordered_map(thetas.len(), |i| {
        run_walk(thetas[i], alpha, horizon, &times)
    })?;
    let mut rows = Vec::new();
    for (sample, s) in summaries.iter().enumerate() {
        for cp in &s.checkpoints {
            let (lo, hi) = cp.histogram.support().expect("n >= 1");
            rows.push((sample, cp.n, (hi - lo + 1) as f64 / cp.n as f64));
        }
    }
    let max_by_n = times
        .iter()
        .map(|&n| {
            let max = rows
                .iter()
                .filter(|r| r.1 == n)
                .map(|r| r.2)
                .fold(0.0, f64::max);
            (n, max)
        })
        .collect();
    Ok(EntropyTable { rows, max_by_n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub n: u64,
    pub samples: usize,
    pub seed: u64,
    /// Estimate of `(1/N) sum_{n<N} mu(P_A and T^-n P_B)`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `mu(P_A) mu(P_B)`.
    pub rhs: f64,
}

impl CorrelationEstimate {
    /// `|lhs - rhs|` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs_stderr
    }
}

/// Monte Carlo Cesàro correlation of the product sets `arc_a x cyl_a` and
/// `arc_b x cyl_b` under the skew product.
#[allow(clippy::too_many_arguments)]
pub fn ergodicity_correlation(
    alpha: FixedAngle,
    cyl_a: &CylinderSpec,
    cyl_b: &CylinderSpec,
    arc_a: &ArcSet,
    arc_b: &ArcSet,
    n: u64,
    n_samples: usize,
    seed: u64,
) -> Result<CorrelationEstimate, AveragesError> {
    if n == 0 {
        return Err(WalkError::EmptyWalk.into());
    }
    if n_samples < 2 {
        return Err(AveragesError::TooFewSamples {
            required: 2,
            got: n_samples,
        });
    }
    let reach = cyl_a.reach().max(cyl_b.reach());
    let fractions = sampling::try_ordered_map(n_samples, |i| -> Result<f64, SymbolicError> {
        let theta = sampling::sample_theta(seed, Purpose::Theta, i as u64);
        let mut radius = default_radius(n) + reach;
        loop {
            let omega = SymbolWindow::sample(radius, seed, i as u64);
            if !arc_a.contains(theta) || !cyl_a.contains(&omega)? {
                return Ok(0.0);
            }
            let mut p = SymbolicPoint::new(theta, omega);
            let mut hits = 0u64;
            let outcome = (|| {
                for k in 0..n {
                    if arc_b.contains(p.theta) && cyl_b.contains(&p.window)? {
                        hits += 1;
                    }
                    if k + 1 < n {
                        p.step(alpha)?;
                    }
                }
                Ok(hits as f64 / n as f64)
            })();
            match outcome {
                Err(SymbolicError::WindowExceeded { .. }) if radius < n + reach => radius *= 2,
                other => return other,
            }
        }
    })?;
    let est = MeanEstimate::from_samples(&fractions);
    Ok(CorrelationEstimate {
        n,
        samples: n_samples,
        seed,
        lhs: est.mean,
        lhs_stderr: est.stderr,
        rhs: arc_a.measure() * cyl_a.measure() * arc_b.measure() * cyl_b.measure(),
    })
}

/// Exact `(1/N) sum_{n<N} mu(D and T^-n D)` for `D = circle x {omega(0) = 1}`:
/// each term is `1/4 + m(phi_n = 0) / 4`.
pub fn exact_correlation_average(alpha: FixedAngle, n: u64) -> Result<f64, AveragesError> {
    if n == 0 {
        return Err(WalkError::EmptyWalk.into());
    }
    if n > EXACT_CAP {
        return Err(AveragesError::BudgetExceeded { n, cap: EXACT_CAP });
    }
    let mut f = PartitionStepFn::new(alpha);
    let mut returns = 0.0;
    for k in 0..n {
        returns += f.measure_where(|v| v == 0).to_f64();
        if k + 1 < n {
            f.step();
        }
    }
    Ok(0.25 + 0.25 * returns / n as f64)
}
