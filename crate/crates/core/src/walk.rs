//! The discrepancy cocycle as a deterministic walk on the integers.
//!
//! Starting from height `0` at `theta0`, the walk steps by `phi(theta0 + k alpha)`
//! at time `k`. A [`WalkSummary`] records how often each height is visited
//! among the first `N` heights `phi_0, ..., phi_{N-1}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotation::{advance, phi, FixedAngle};
use crate::sampling::{self, MeanEstimate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("walk height overflowed 64 bits at step {step}")]
    HeightOverflow { step: u64 },
    #[error("walk length must be at least 1")]
    EmptyWalk,
    #[error("horizon {horizon} too short; at least {minimum} steps are required")]
    HorizonTooShort { horizon: u64, minimum: u64 },
    #[error("need at least {required} theta samples, got {got}")]
    InsufficientSamples { required: usize, got: usize },
}

/// A point of the skew product over the integers: angle plus current height.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkState {
    pub theta0: FixedAngle,
    pub alpha: FixedAngle,
    pub n: u64,
    pub theta_n: FixedAngle,
    pub height: i64,
}

impl WalkState {
    pub fn new(theta0: FixedAngle, alpha: FixedAngle) -> Self {
        WalkState {
            theta0,
            alpha,
            n: 0,
            theta_n: theta0,
            height: 0,
        }
    }

    pub fn step(self) -> Result<WalkState, WalkError> {
        let height = self
            .height
            .checked_add(phi(self.theta_n))
            .ok_or(WalkError::HeightOverflow { step: self.n })?;
        Ok(WalkState {
            n: self.n + 1,
            theta_n: advance(self.theta_n, self.alpha, 1),
            height,
            ..self
        })
    }
}

/// Iterator over the heights `phi_0(theta0), phi_1(theta0), ...`.
#[derive(Debug, Clone)]
pub struct Heights {
    theta: u128,
    alpha: u128,
    height: i64,
}

impl Heights {
    pub fn new(theta0: FixedAngle, alpha: FixedAngle) -> Self {
        Heights {
            theta: theta0.bits(),
            alpha: alpha.bits(),
            height: 0,
        }
    }

    /// Angle at which the next step is taken.
    pub fn theta(&self) -> FixedAngle {
        FixedAngle::from_bits(self.theta)
    }
}

impl Iterator for Heights {
    type Item = i64;

    #[inline]
    fn next(&mut self) -> Option<i64> {
        let current = self.height;
        self.height += if self.theta < FixedAngle::HALF.bits() {
            1
        } else {
            -1
        };
        self.theta = self.theta.wrapping_add(self.alpha);
        Some(current)
    }
}

/// `phi_n(theta0)` by direct summation.
pub fn cocycle(theta0: FixedAngle, alpha: FixedAngle, n: u64) -> i64 {
    Heights::new(theta0, alpha).nth(n as usize).unwrap_or(0)
}

/// Visit counts per height over a contiguous range of heights.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OccupationHistogram {
    min: i64,
    counts: Vec<u64>,
}

impl OccupationHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn record(&mut self, v: i64) {
        let idx = v.wrapping_sub(self.min) as u64 as usize;
        match self.counts.get_mut(idx) {
            Some(c) => *c += 1,
            None => self.grow_and_record(v),
        }
    }

    #[cold]
    fn grow_and_record(&mut self, v: i64) {
        if self.counts.is_empty() {
            self.min = v;
            self.counts.push(1);
        } else if v < self.min {
            let extra = (self.min - v) as usize;
            self.counts.splice(0..0, std::iter::repeat_n(0, extra));
            self.min = v;
            self.counts[0] = 1;
        } else {
            let idx = (v - self.min) as usize;
            self.counts.resize(idx + 1, 0);
            self.counts[idx] = 1;
        }
    }

    pub fn get(&self, v: i64) -> u64 {
        let idx = v.wrapping_sub(self.min) as u64 as usize;
        self.counts.get(idx).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Smallest and largest recorded heights, `None` when empty.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.counts.is_empty() {
            None
        } else {
            Some((self.min, self.min + self.counts.len() as i64 - 1))
        }
    }

    /// Nonzero `(height, count)` pairs in increasing height order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (self.min + i as i64, c))
    }

    pub fn to_map(&self) -> BTreeMap<i64, u64> {
        self.iter().collect()
    }

    /// Rebuild from sparse counts; zero counts are dropped.
    pub fn from_map(map: &BTreeMap<i64, u64>) -> Self {
        let mut h = OccupationHistogram::new();
        let nonzero: Vec<_> = map.iter().filter(|(_, &c)| c > 0).collect();
        if let (Some((&lo, _)), Some((&hi, _))) = (nonzero.first(), nonzero.last()) {
            h.min = lo;
            h.counts = vec![0; (hi - lo) as usize + 1];
            for (&v, &c) in nonzero {
                h.counts[(v - lo) as usize] = c;
            }
        }
        h
    }
}

impl Serialize for OccupationHistogram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for OccupationHistogram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        BTreeMap::<i64, u64>::deserialize(d).map(|m| OccupationHistogram::from_map(&m))
    }
}

/// State of the walk at a requested time `n`: `height = phi_n` and the
/// histogram of `phi_0, ..., phi_{n-1}` (so `histogram.get(v)` is `Psi_n^(v)`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub height: i64,
    pub histogram: OccupationHistogram,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub theta0: FixedAngle,
    pub n: u64,
    pub histogram: OccupationHistogram,
    pub min_height: i64,
    pub max_height: i64,
    /// `phi_N(theta0)`, the height after the last recorded one.
    pub final_height: i64,
    pub checkpoints: Vec<Checkpoint>,
}

impl WalkSummary {
    /// Number of distinct heights among the first `N`.
    pub fn range(&self) -> u64 {
        (self.max_height - self.min_height + 1) as u64
    }

    pub fn checkpoint(&self, n: u64) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.n == n)
    }
}

/// Walk `n` steps from `theta0`, recording `phi_0, ..., phi_{n-1}`.
///
/// Checkpoints in `0..=n` are captured (duplicates collapse, values above
/// `n` are never reached and are ignored).
pub fn run_walk(
    theta0: FixedAngle,
    alpha: FixedAngle,
    n: u64,
    checkpoints: &[u64],
) -> Result<WalkSummary, WalkError> {
    if n == 0 {
        return Err(WalkError::EmptyWalk);
    }
    // |phi_k| <= k, so heights cannot overflow below this horizon.
    if n >= i64::MAX as u64 {
        return Err(WalkError::HeightOverflow { step: i64::MAX as u64 });
    }
    let mut stops: Vec<u64> = checkpoints.iter().copied().filter(|&c| c <= n).collect();
    stops.sort_unstable();
    stops.dedup();

    let mut hist = OccupationHistogram::new();
    let mut theta = theta0.bits();
    let a = alpha.bits();
    let mut height: i64 = 0;
    let mut done: u64 = 0;
    let mut taken = Vec::with_capacity(stops.len());

    let mut run_to = |target: u64, hist: &mut OccupationHistogram, theta: &mut u128, height: &mut i64| {
        for _ in done..target {
            hist.record(*height);
            *height += if *theta < FixedAngle::HALF.bits() { 1 } else { -1 };
            *theta = theta.wrapping_add(a);
        }
        done = target;
    };

    for &stop in &stops {
        run_to(stop, &mut hist, &mut theta, &mut height);
        taken.push(Checkpoint {
            n: stop,
            height,
            histogram: hist.clone(),
        });
    }
    run_to(n, &mut hist, &mut theta, &mut height);

    let (min_height, max_height) = hist.support().expect("n >= 1 heights recorded");
    Ok(WalkSummary {
        theta0,
        n,
        histogram: hist,
        min_height,
        max_height,
        final_height: height,
        checkpoints: taken,
    })
}

/// `Psi_N^(v)`: visits to height `v` among the first `N` heights.
pub fn psi(summary: &WalkSummary, v: i64) -> u64 {
    summary.histogram.get(v)
}

/// `a_N`: number of distinct heights among the first `N`.
pub fn range_stat(summary: &WalkSummary) -> u64 {
    summary.range()
}

/// Powers of ten below `horizon`, followed by `horizon` itself.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(10u64), |p| p.checked_mul(10))
        .take_while(|&p| p < horizon)
        .collect();
    out.push(horizon);
    out
}

/// `Psi * sqrt(ln n) / n`, the normalization under which occupation times
/// stay bounded for badly approximable rotations.
pub fn normalized_occupation(count: u64, n: u64) -> f64 {
    count as f64 * (n as f64).ln().sqrt() / n as f64
}

/// Per-time aggregate of `Psi_n = Psi_n^(0)` over the theta sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationBand {
    pub n: u64,
    pub mean: f64,
    pub sup: f64,
    /// `mean * sqrt(ln n) / n`
    pub normalized_mean: f64,
    pub sup_over_mean: f64,
}

/// Empirical stand-ins for the occupation constants `M_v`, `C_v` and `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    pub horizon: u64,
    pub checkpoints: Vec<u64>,
    pub v_max: u64,
    /// `M_v` for `v = -v_max ..= v_max`.
    pub m_v: BTreeMap<i64, f64>,
    /// `C_v = max{M_u : |u| <= v}` for `v = 0 ..= v_max`.
    pub c_v: Vec<f64>,
    /// Smallest `M` with `sup <= M mean` and `mean = M^{+-1} n / sqrt(ln n)`
    /// at every checkpoint.
    pub global_m: f64,
    pub bands: Vec<OccupationBand>,
    pub samples: usize,
    pub seed: Option<u64>,
    pub quantile: Option<f64>,
}

impl ConstantsTable {
    /// `C_v` for `|v| <= v_max`.
    pub fn c(&self, v: u64) -> Option<f64> {
        self.c_v.get(v as usize).copied()
    }
}

/// Smallest checkpoint at which `sqrt(ln n)` is comfortably above 1.
pub const MIN_CONSTANTS_HORIZON: u64 = 16;

/// Estimate `M_v` as the maximum of `Psi_n^(v) sqrt(ln n) / n` over the sampled
/// angles and the checkpoint times `n >= 16` (default: powers of ten and the
/// horizon).
pub fn estimate_constants(
    alpha: FixedAngle,
    theta_samples: &[FixedAngle],
    horizon: u64,
    v_max: u64,
    checkpoints: Option<&[u64]>,
) -> Result<ConstantsTable, WalkError> {
    if horizon < MIN_CONSTANTS_HORIZON {
        return Err(WalkError::HorizonTooShort {
            horizon,
            minimum: MIN_CONSTANTS_HORIZON,
        });
    }
    if theta_samples.len() < 2 {
        return Err(WalkError::InsufficientSamples {
            required: 2,
            got: theta_samples.len(),
        });
    }
    let mut times: Vec<u64> = match checkpoints {
        Some(c) => c.to_vec(),
        None => default_checkpoints(horizon),
    };
    times.retain(|&n| (MIN_CONSTANTS_HORIZON..=horizon).contains(&n));
    times.sort_unstable();
    times.dedup();
    if times.is_empty() {
        times.push(horizon);
    }
    let vm = v_max as i64;

    let summaries = sampling::try_ordered_map(theta_samples.len(), |i| {
        run_walk(theta_samples[i], alpha, horizon, &times)
    })?;

    let mut m_v: BTreeMap<i64, f64> = (-vm..=vm).map(|v| (v, 0.0)).collect();
    for s in &summaries {
        for cp in &s.checkpoints {
            for v in -vm..=vm {
                let x = normalized_occupation(cp.histogram.get(v), cp.n);
                let slot = m_v.get_mut(&v).expect("v in range");
                if x > *slot {
                    *slot = x;
                }
            }
        }
    }
    let mut c_v = Vec::with_capacity(v_max as usize + 1);
    let mut running: f64 = 0.0;
    for v in 0..=vm {
        running = running.max(m_v[&v]).max(m_v[&-v]);
        c_v.push(running);
    }

    let mut bands = Vec::with_capacity(times.len());
    let mut global_m: f64 = 1.0;
    for (k, &n) in times.iter().enumerate() {
        let psi0: Vec<f64> = summaries
            .iter()
            .map(|s| s.checkpoints[k].histogram.get(0) as f64)
            .collect();
        let mean = MeanEstimate::from_samples(&psi0).mean;
        let sup = psi0.iter().copied().fold(0.0, f64::max);
        let normalized_mean = mean * (n as f64).ln().sqrt() / n as f64;
        let sup_over_mean = sup / mean;
        global_m = global_m
            .max(sup_over_mean)
            .max(normalized_mean)
            .max(1.0 / normalized_mean);
        bands.push(OccupationBand {
            n,
            mean,
            sup,
            normalized_mean,
            sup_over_mean,
        });
    }

    Ok(ConstantsTable {
        horizon,
        checkpoints: times,
        v_max,
        m_v,
        c_v,
        global_m,
        bands,
        samples: theta_samples.len(),
        seed: None,
        quantile: None,
    })
}
