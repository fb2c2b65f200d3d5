//! Triple-correlation averages and the auxiliary ergodic checks.
//!
//! The average `A_N` is evaluated by three independent routes:
//! [`reduced_average_series`] streams walks for sampled angles and counts
//! visits to a height set, [`exact_average_series`] integrates the same
//! count exactly over the circle, and
//! [`mc_triple_average`](crate::symbolic::mc_triple_average) samples points
//! of the skew product and evaluates the orbit indicators literally.
//!
//! The first two compute `(1/2N) sum_{n<N} m(B and phi_n in H)` for a
//! height set `H`. The literal triple correlation for `E` equals this with
//! `H = E.zero_side()`: the conjugating flip negates coordinate 0 exactly
//! when 0 is outside `E`.

mod checks;
mod partition;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eset::{ConditionReport, ESet, Schedule};
use crate::rotation::FixedAngle;
use crate::sampling::{self, MeanEstimate, Purpose};
use crate::symbolic::SymbolicError;
use crate::walk::{default_checkpoints, run_walk, Heights, WalkError};

pub use checks::{
    ergodicity_correlation, exact_correlation_average, ratio_check, zero_entropy_proxy, ArcSet,
    CorrelationEstimate, EntropyTable, RatioRow, RatioSummary, RatioTable,
};
pub use partition::{exact_average, exact_average_series, Measure, PartitionStepFn, EXACT_CAP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AveragesError {
    #[error("no sampled angle passed the filter")]
    EmptyAfterFilter,
    #[error("need at least {required} angle samples, got {got}")]
    TooFewSamples { required: usize, got: usize },
    #[error("horizon {n} exceeds the exact-route cap {cap}")]
    BudgetExceeded { n: u64, cap: u64 },
    #[error("series lacks entries at N = {0:?}")]
    MissingEntries(Vec<u64>),
    #[error("filter quantile {0} outside [0, 1)")]
    BadQuantile(f64),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Reduced,
    Exact,
    #[serde(rename = "montecarlo")]
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Reduced => "reduced",
            Method::Exact => "exact",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reduced" => Ok(Method::Reduced),
            "exact" => Ok(Method::Exact),
            "montecarlo" => Ok(Method::MonteCarlo),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub n: u64,
    pub a: f64,
    /// Zero for the exact route.
    pub stderr: f64,
    pub method: Method,
    /// Angle samples behind the estimate (0 for the exact route).
    pub n_theta: u64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AverageSeries {
    pub entries: Vec<SeriesEntry>,
}

impl AverageSeries {
    pub fn get(&self, n: u64) -> Option<&SeriesEntry> {
        self.entries.iter().find(|e| e.n == n)
    }

    /// `max A - min A` over the entries (0 when empty).
    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self.entries.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.a), hi.max(e.a))
        });
        if self.entries.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

/// Two estimates agree if they differ by at most `k` combined standard
/// errors; two exact values must agree to `1e-12`.
pub fn agree(a: &SeriesEntry, b: &SeriesEntry, k: f64) -> bool {
    let sigma = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    let diff = (a.a - b.a).abs();
    if sigma == 0.0 {
        diff <= 1e-12
    } else {
        diff <= k * sigma
    }
}

/// Pairwise comparison of routes at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteComparison {
    pub n: u64,
    pub first: Method,
    pub second: Method,
    pub difference: f64,
    pub sigma: f64,
    pub agree: bool,
}

/// All pairwise comparisons at every horizon present in each series.
pub fn compare_routes(series: &[&AverageSeries], k: f64) -> Vec<RouteComparison> {
    let mut out = Vec::new();
    for (i, a) in series.iter().enumerate() {
        for b in &series[i + 1..] {
            for ea in &a.entries {
                if let Some(eb) = b.get(ea.n) {
                    out.push(RouteComparison {
                        n: ea.n,
                        first: ea.method,
                        second: eb.method,
                        difference: ea.a - eb.a,
                        sigma: (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt(),
                        agree: agree(ea, eb, k),
                    });
                }
            }
        }
    }
    out
}

pub(crate) fn check_horizons(n_list: &[u64]) -> Result<(), AveragesError> {
    crate::symbolic::check_horizons(n_list).map_err(AveragesError::from)
}

/// Predicate on angles standing in for the good set `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThetaFilter {
    AcceptAll,
    /// Rejects angles whose occupation score exceeds a calibrated quantile.
    Quantile {
        alpha: FixedAngle,
        /// Fraction of calibration angles rejected.
        q: f64,
        horizon: u64,
        v_max: u64,
        threshold: f64,
    },
}

/// `max_{n, |v| <= v_max} Psi_n^(v) sqrt(ln n) / n` over checkpoint times `n >= 16`.
pub fn occupation_score(
    alpha: FixedAngle,
    theta: FixedAngle,
    horizon: u64,
    v_max: u64,
) -> Result<f64, WalkError> {
    let times: Vec<u64> = default_checkpoints(horizon)
        .into_iter()
        .filter(|&n| n >= crate::walk::MIN_CONSTANTS_HORIZON)
        .collect();
    let summary = run_walk(theta, alpha, horizon, &times)?;
    let mut score: f64 = 0.0;
    for cp in &summary.checkpoints {
        let scale = (cp.n as f64).ln().sqrt() / cp.n as f64;
        for v in -(v_max as i64)..=v_max as i64 {
            score = score.max(cp.histogram.get(v) as f64 * scale);
        }
    }
    Ok(score)
}

impl ThetaFilter {
    /// Calibrates the rejection threshold on `samples` angles drawn from the
    /// calibration stream of `seed`.
    pub fn calibrate(
        alpha: FixedAngle,
        q: f64,
        horizon: u64,
        v_max: u64,
        samples: usize,
        seed: u64,
    ) -> Result<Self, AveragesError> {
        if !(0.0..1.0).contains(&q) {
            return Err(AveragesError::BadQuantile(q));
        }
        if horizon < crate::walk::MIN_CONSTANTS_HORIZON {
            return Err(WalkError::HorizonTooShort {
                horizon,
                minimum: crate::walk::MIN_CONSTANTS_HORIZON,
            }
            .into());
        }
        if samples < 2 {
            return Err(AveragesError::TooFewSamples {
                required: 2,
                got: samples,
            });
        }
        let scores = sampling::try_ordered_map(samples, |i| {
            let theta = sampling::sample_theta(seed, Purpose::Calibration, i as u64);
            occupation_score(alpha, theta, horizon, v_max)
        })?;
        Ok(ThetaFilter::Quantile {
            alpha,
            q,
            horizon,
            v_max,
            threshold: sampling::quantile(&scores, 1.0 - q),
        })
    }

    pub fn accepts(&self, theta: FixedAngle) -> bool {
        match *self {
            ThetaFilter::AcceptAll => true,
            ThetaFilter::Quantile {
                alpha,
                horizon,
                v_max,
                threshold,
                ..
            } => occupation_score(alpha, theta, horizon, v_max).is_ok_and(|s| s <= threshold),
        }
    }
}

/// Minimum angle sample count for the reduced route.
pub const MIN_REDUCED_SAMPLES: usize = 16;

/// `A_N = (1/2) mean_i [theta_i in B] #{n < N : phi_n(theta_i) in H} / N` with
/// standard errors from the sample variance. Rejected angles contribute 0,
/// which folds the empirical measure of `B` into the estimate.
pub fn reduced_average_series(
    alpha: FixedAngle,
    h: &ESet,
    filter: &ThetaFilter,
    n_list: &[u64],
    n_theta: usize,
    seed: u64,
) -> Result<AverageSeries, AveragesError> {
    check_horizons(n_list)?;
    if n_theta < MIN_REDUCED_SAMPLES {
        return Err(AveragesError::TooFewSamples {
            required: MIN_REDUCED_SAMPLES,
            got: n_theta,
        });
    }
    let n_max = *n_list.last().expect("nonempty");
    let mask = h.mask(4096);
    let per_sample: Vec<Option<Vec<u64>>> = sampling::ordered_map(n_theta, |i| {
        let theta = sampling::sample_theta(seed, Purpose::Theta, i as u64);
        if !filter.accepts(theta) {
            return None;
        }
        let mut counts = Vec::with_capacity(n_list.len());
        let mut heights = Heights::new(theta, alpha);
        let mut count = 0u64;
        let mut n = 0u64;
        for &target in n_list {
            while n < target {
                count += u64::from(mask.contains(heights.next().expect("infinite")));
                n += 1;
            }
            counts.push(count);
        }
        debug_assert_eq!(n, n_max);
        Some(counts)
    });
    if per_sample.iter().all(Option::is_none) {
        return Err(AveragesError::EmptyAfterFilter);
    }
    let entries = n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let values: Vec<f64> = per_sample
                .iter()
                .map(|c| c.as_ref().map_or(0.0, |c| 0.5 * c[k] as f64 / n as f64))
                .collect();
            let est = MeanEstimate::from_samples(&values);
            SeriesEntry {
                n,
                a: est.mean,
                stderr: est.stderr,
                method: Method::Reduced,
                n_theta: n_theta as u64,
                seed: Some(seed),
            }
        })
        .collect();
    Ok(AverageSeries { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationRow {
    pub m: u64,
    pub n_low: Option<u64>,
    pub a_low: Option<f64>,
    pub bound_low: f64,
    pub n_high: Option<u64>,
    pub a_high: Option<f64>,
    pub bound_high: f64,
    /// Bound checks, made only when the schedule satisfies its conditions.
    pub low_within_bound: Option<bool>,
    pub high_within_bound: Option<bool>,
    pub conditions_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub rows: Vec<OscillationRow>,
    pub min_a: f64,
    pub max_a: f64,
    pub oscillation: f64,
}

/// Tabulates the series along `N = l_{m+1}` and `N = l_m + r_m + 1`.
///
/// Every such `N` inside the series range must have an entry; those outside
/// are reported as absent.
pub fn oscillation_report(
    series: &AverageSeries,
    schedule: &Schedule,
    conditions: Option<&ConditionReport>,
) -> Result<OscillationReport, AveragesError> {
    let lo = series.entries.iter().map(|e| e.n).min().unwrap_or(0);
    let hi = series.entries.iter().map(|e| e.n).max().unwrap_or(0);
    let conditions_hold = conditions.is_some_and(|c| c.passes);
    let mut missing = Vec::new();
    let mut lookup = |n: Option<u64>| -> Option<f64> {
        let n = n?;
        let found = series.get(n).map(|e| e.a);
        if found.is_none() && (lo..=hi).contains(&n) {
            missing.push(n);
        }
        found
    };
    let mut rows = Vec::new();
    for (m, n_low, n_high) in schedule.subsequence_points() {
        let a_low = lookup(n_low);
        let a_high = lookup(n_high);
        let bound_low = 1.0 / m as f64;
        let bound_high = 0.5 - 1.0 / m as f64;
        rows.push(OscillationRow {
            m,
            n_low,
            a_low,
            bound_low,
            n_high,
            a_high,
            bound_high,
            low_within_bound: a_low.filter(|_| conditions_hold).map(|a| a <= bound_low),
            high_within_bound: a_high.filter(|_| conditions_hold).map(|a| a >= bound_high),
            conditions_hold,
        });
    }
    if !missing.is_empty() {
        return Err(AveragesError::MissingEntries(missing));
    }
    let (min_a, max_a) = if series.entries.is_empty() {
        (0.0, 0.0)
    } else {
        series.entries.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| {
            (a.min(e.a), b.max(e.a))
        })
    };
    Ok(OscillationReport {
        rows,
        min_a,
        max_a,
        oscillation: max_a - min_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eset::{make_desk_schedule, BoundFn, ConstantsSource};
    use crate::rotation::{resolve_alpha, AlphaSpec};
    use crate::symbolic::{mc_triple_average, MonteCarloOptions};

    fn golden() -> FixedAngle {
        resolve_alpha(&AlphaSpec::Golden).unwrap()
    }

    #[test]
    fn reduced_reference_sets() {
        let a = golden();
        let n_list = [1, 10, 100];
        let all = ThetaFilter::AcceptAll;
        let zero = reduced_average_series(a, &ESet::empty(), &all, &n_list, 32, 1).unwrap();
        assert!(zero.entries.iter().all(|e| e.a == 0.0 && e.stderr == 0.0));
        let half = reduced_average_series(a, &ESet::full(), &all, &n_list, 32, 1).unwrap();
        assert!(half.entries.iter().all(|e| e.a == 0.5 && e.stderr == 0.0));
        let e = ESet::from_pairs(&[(2, 6)]).unwrap();
        let s = reduced_average_series(a, &e, &all, &n_list, 32, 1).unwrap();
        assert_eq!(s.entries[0].a, 0.0);
        assert!(s.entries.iter().all(|x| (0.0..=0.5).contains(&x.a)));
        assert!(matches!(
            reduced_average_series(a, &e, &all, &n_list, 8, 1),
            Err(AveragesError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn three_routes_agree() {
        let a = golden();
        let e = ESet::from_pairs(&[(2, 3), (9, 20)]).unwrap();
        let h = e.zero_side();
        let n_list = [16, 64, 128];
        let all = |_: FixedAngle| true;
        let exact = exact_average_series(a, &h, &n_list).unwrap();
        let reduced =
            reduced_average_series(a, &h, &ThetaFilter::AcceptAll, &n_list, 3000, 2).unwrap();
        let mc = mc_triple_average(a, &e, &n_list, 3000, 3, &all, MonteCarloOptions::default())
            .unwrap();
        let cmp = compare_routes(&[&exact, &reduced, &mc], 3.0);
        assert_eq!(cmp.len(), 9);
        assert!(cmp.iter().all(|c| c.agree), "{cmp:#?}");
        // the occupation of E itself is the complementary quantity
        let direct = exact_average_series(a, &e, &n_list).unwrap();
        for (x, y) in direct.entries.iter().zip(&exact.entries) {
            assert!((x.a + y.a - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_in_the_set() {
        let a = golden();
        let small = ESet::from_pairs(&[(2, 2)]).unwrap();
        let big = ESet::from_pairs(&[(2, 5), (9, 5)]).unwrap();
        let n_list = [50, 500];
        let all = ThetaFilter::AcceptAll;
        let s = reduced_average_series(a, &small, &all, &n_list, 200, 5).unwrap();
        let b = reduced_average_series(a, &big, &all, &n_list, 200, 5).unwrap();
        for (x, y) in s.entries.iter().zip(&b.entries) {
            assert!(x.a <= y.a);
        }
        let s = exact_average_series(a, &small, &n_list).unwrap();
        let b = exact_average_series(a, &big, &n_list).unwrap();
        for (x, y) in s.entries.iter().zip(&b.entries) {
            assert!(x.a <= y.a);
        }
    }

    #[test]
    fn quantile_filter_rejects_about_q() {
        let a = golden();
        let f = ThetaFilter::calibrate(a, 0.2, 1000, 1, 200, 9).unwrap();
        let accepted = (0..400)
            .filter(|&i| f.accepts(sampling::sample_theta(77, Purpose::Theta, i)))
            .count();
        let frac = accepted as f64 / 400.0;
        assert!((0.65..=0.92).contains(&frac), "{frac}");
        assert!(ThetaFilter::AcceptAll.accepts(FixedAngle::ZERO));
        assert!(matches!(
            ThetaFilter::calibrate(a, 1.0, 1000, 1, 10, 1),
            Err(AveragesError::BadQuantile(_))
        ));
        // a filtered estimate never exceeds the unfiltered one
        let e = ESet::from_pairs(&[(2, 6)]).unwrap();
        let plain =
            reduced_average_series(a, &e, &ThetaFilter::AcceptAll, &[500], 100, 3).unwrap();
        let filtered = reduced_average_series(a, &e, &f, &[500], 100, 3).unwrap();
        assert!(filtered.entries[0].a <= plain.entries[0].a);
    }

    #[test]
    fn oscillation_examples() {
        let sched = make_desk_schedule(&[(2, 6), (30, 300)], &ConstantsSource::Bound(BoundFn::Constant(2.0)))
            .unwrap();
        let flat = |a: f64| AverageSeries {
            entries: [9u64, 30, 331]
                .iter()
                .map(|&n| SeriesEntry {
                    n,
                    a,
                    stderr: 0.0,
                    method: Method::Exact,
                    n_theta: 0,
                    seed: None,
                })
                .collect(),
        };
        for a in [0.0, 0.5] {
            let rep = oscillation_report(&flat(a), &sched.schedule, Some(&sched.report)).unwrap();
            assert_eq!(rep.oscillation, 0.0);
            assert_eq!(rep.rows[0].n_low, Some(30));
            assert_eq!(rep.rows[0].n_high, Some(9));
            assert_eq!(rep.rows[1].n_high, Some(331));
            assert_eq!(rep.rows[1].n_low, None);
            assert_eq!(rep.rows[0].low_within_bound, None);
        }
        let mut gappy = flat(0.1);
        gappy.entries.remove(1);
        assert_eq!(
            oscillation_report(&gappy, &sched.schedule, None),
            Err(AveragesError::MissingEntries(vec![30]))
        );
    }

    #[test]
    fn method_names() {
        for m in [Method::Reduced, Method::Exact, Method::MonteCarlo] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }
}
