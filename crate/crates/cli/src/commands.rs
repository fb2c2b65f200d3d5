//! One function per subcommand. Each returns the text of its outputs; the
//! caller decides where they go and how the process exits.

use serde::{Deserialize, Serialize};

use cocycle::averages::{
    agree, ergodicity_correlation, exact_average_series, exact_correlation_average,
    oscillation_report, ratio_check, reduced_average_series, zero_entropy_proxy, ArcSet,
    AverageSeries, CorrelationEstimate, EntropyTable, OscillationReport, RatioTable, SeriesEntry,
    ThetaFilter, EXACT_CAP,
};
use cocycle::eset::{
    generate_paper_schedule, make_desk_schedule, verify_schedule, ConditionReport,
    ConstantsSource, ESet, Schedule, ScheduleMode, EXACT_MARGIN,
};
use cocycle::rotation::FixedAngle;
use cocycle::sampling::{sample_thetas, with_threads};
use cocycle::symbolic::{mc_triple_average, CylinderSpec, MonteCarloOptions};
use cocycle::walk::{estimate_constants, run_walk, ConstantsTable};

use crate::config::{parse_bound, RunConfig};
use crate::error::CliError;
use crate::io::{parse_json, write_average_csv, write_json, write_walk_csv, WalkRow};

pub const CONSTANTS_FORMAT: &str = "cocycle-constants/1";
pub const SCHEDULE_REPORT_FORMAT: &str = "cocycle-schedule-report/1";
pub const AVERAGE_REPORT_FORMAT: &str = "cocycle-average-report/1";
pub const RATIO_FORMAT: &str = "cocycle-ratio/1";
pub const ENTROPY_FORMAT: &str = "cocycle-entropy/1";
pub const ERGODICITY_FORMAT: &str = "cocycle-ergodicity/1";

/// Default margin for generated schedules, so the certificate has slack.
pub const DEFAULT_GENERATION_MARGIN: f64 = 0.99;

/// Texts produced by a command. `secondary` is written next to the primary
/// output with the given suffix appended to its path.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub primary: String,
    pub secondary: Option<(&'static str, String)>,
    /// Set when the oracle gate failed; outputs are still written.
    pub gate_failure: Option<String>,
}

impl Output {
    fn single(primary: String) -> Self {
        Output {
            primary,
            secondary: None,
            gate_failure: None,
        }
    }
}

fn run_threaded<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> T {
    with_threads(cfg.threads.unwrap_or(0), f)
}

fn sampled_thetas(cfg: &RunConfig, default: usize) -> Result<Vec<FixedAngle>, CliError> {
    let seed = cfg.require_seed()?;
    Ok(sample_thetas(seed, cfg.n_theta(default)))
}

pub fn walk(cfg: &RunConfig) -> Result<Output, CliError> {
    let (_, alpha) = cfg.alpha()?;
    let n_list = cfg.horizons("walk")?;
    let thetas = match cfg.explicit_thetas()? {
        Some(t) if t.is_empty() => return Err(CliError::Config("theta: empty list".into())),
        Some(t) => t,
        None if cfg.seed.is_some() => sampled_thetas(cfg, 1)?,
        None => {
            return Err(CliError::Config(
                "walk needs explicit angles (--theta) or a seed for sampled ones".into(),
            ))
        }
    };
    let n_max = *n_list.last().expect("nonempty");
    cfg.check_budget(thetas.len() as u128 * u128::from(n_max))?;
    let summaries = run_threaded(cfg, || {
        cocycle::sampling::try_ordered_map(thetas.len(), |i| run_walk(thetas[i], alpha, n_max, &n_list))
    })?;
    let rows: Vec<WalkRow> = summaries.iter().flat_map(WalkRow::from_summary).collect();
    Ok(Output::single(write_walk_csv(cfg, &rows)))
}

pub fn constants(cfg: &RunConfig) -> Result<Output, CliError> {
    let (_, alpha) = cfg.alpha()?;
    let n_list = cfg.horizons("constants")?;
    let horizon = *n_list.last().expect("nonempty");
    let thetas = sampled_thetas(cfg, 100)?;
    cfg.check_budget(thetas.len() as u128 * u128::from(horizon))?;
    let checkpoints = (n_list.len() > 1).then_some(n_list.as_slice());
    let mut table = run_threaded(cfg, || {
        estimate_constants(alpha, &thetas, horizon, cfg.v_max.unwrap_or(3), checkpoints)
    })?;
    table.seed = cfg.seed;
    Ok(Output::single(write_json(CONSTANTS_FORMAT, cfg, &table)))
}

/// The schedule named by the configuration with its constants source.
struct ResolvedSchedule {
    schedule: Schedule,
    report: ConditionReport,
}

fn load_table(path: &std::path::Path) -> Result<ConstantsTable, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_json::<ConstantsTable>(CONSTANTS_FORMAT, &text)
        .map(|d| d.result)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn resolve_schedule(cfg: &RunConfig) -> Result<Option<ResolvedSchedule>, CliError> {
    let Some(sc) = &cfg.schedule else {
        return Ok(None);
    };
    let table = sc.constants_table.as_deref().map(load_table).transpose()?;
    let bound = parse_bound(sc.bound.as_deref().unwrap_or("const:2"))?;
    let source = match &table {
        Some(t) => ConstantsSource::Table(t),
        None => ConstantsSource::Bound(bound),
    };
    let margin = sc.margin;
    if let Some(m) = margin {
        if !(m.is_finite() && m > 0.0 && m <= 1.0) {
            return Err(CliError::Config(format!("schedule.margin: {m} outside (0, 1]")));
        }
    }
    let sources = [sc.pairs.is_some(), sc.file.is_some(), sc.m_max.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(CliError::Config(
            "schedule: give exactly one of pairs, file or m_max".into(),
        ));
    }
    let resolved = if let Some(pairs) = &sc.pairs {
        let desk = make_desk_schedule(pairs, &source)?;
        let report = match margin {
            Some(m) => verify_schedule(&desk.schedule, &source, m)?,
            None => desk.report,
        };
        ResolvedSchedule {
            schedule: desk.schedule,
            report,
        }
    } else if let Some(path) = &sc.file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let schedule = Schedule::from_document(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let report = verify_schedule(&schedule, &source, margin.unwrap_or(schedule.margin))?;
        ResolvedSchedule { schedule, report }
    } else {
        let m_max = sc.m_max.expect("one source present");
        if m_max == 0 || m_max > 64 {
            return Err(CliError::Config("schedule.m_max: must lie in 1..=64".into()));
        }
        let margin = margin.unwrap_or(DEFAULT_GENERATION_MARGIN);
        let schedule = generate_paper_schedule(bound, m_max, margin);
        let report = verify_schedule(&schedule, &source, margin)?;
        ResolvedSchedule { schedule, report }
    };
    Ok(Some(resolved))
}

pub fn schedule(cfg: &RunConfig) -> Result<Output, CliError> {
    let resolved = resolve_schedule(cfg)?
        .ok_or_else(|| CliError::Config("schedule: missing [schedule] section".into()))?;
    let mut primary: String = cfg
        .header_lines()
        .into_iter()
        .map(|l| l + "\n")
        .collect();
    primary.push_str(&resolved.schedule.to_document());
    Ok(Output {
        primary,
        secondary: Some((
            ".report.json",
            write_json(SCHEDULE_REPORT_FORMAT, cfg, &resolved.report),
        )),
        gate_failure: None,
    })
}

/// One pairwise comparison made by the oracle gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCheck {
    pub n: u64,
    pub left: String,
    pub left_a: f64,
    pub left_stderr: f64,
    pub right: String,
    pub right_a: f64,
    pub right_stderr: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub enabled: bool,
    pub k: f64,
    pub max_n: u64,
    /// Set the literal route is compared against (`E` or its zero side).
    pub literal_reference: String,
    pub checks: Vec<GateCheck>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageReport {
    pub oscillation: OscillationReport,
    pub conditions: Option<ConditionReport>,
    /// Empirical fraction of angles accepted by the filter.
    pub accepted_fraction: f64,
    pub gate: GateReport,
}

fn compare(
    checks: &mut Vec<GateCheck>,
    k: f64,
    max_n: u64,
    (left, ls): (&str, &AverageSeries),
    (right, rs): (&str, &AverageSeries),
) {
    for l in ls.entries.iter().filter(|e| e.n <= max_n) {
        if let Some(r) = rs.get(l.n) {
            checks.push(GateCheck {
                n: l.n,
                left: left.to_string(),
                left_a: l.a,
                left_stderr: l.stderr,
                right: right.to_string(),
                right_a: r.a,
                right_stderr: r.stderr,
                agree: agree(l, r, k),
            });
        }
    }
}

pub fn average(cfg: &RunConfig, inject_fault: bool) -> Result<Output, CliError> {
    let (_, alpha) = cfg.alpha()?;
    let seed = cfg.require_seed()?;
    let mut n_list = cfg.horizons("average")?;
    let n_theta = cfg.n_theta(1000);
    let resolved = resolve_schedule(cfg)?;
    let e = match &resolved {
        Some(r) => r.schedule.to_eset()?,
        None => ESet::empty(),
    };
    // the subsequence times inside the requested range become checkpoints
    if let Some(r) = &resolved {
        let (lo, hi) = (n_list[0], *n_list.last().expect("nonempty"));
        for (_, low, high) in r.schedule.subsequence_points() {
            n_list.extend([low, high].into_iter().flatten().filter(|n| (lo..=hi).contains(n)));
        }
        n_list.sort_unstable();
        n_list.dedup();
    }
    let n_max = *n_list.last().expect("nonempty");
    let gate_cfg = cfg.gate.clone().unwrap_or_default();
    let gate_on = gate_cfg.enabled.unwrap_or(true);
    let k = gate_cfg.k.unwrap_or(3.0);
    let gate_max = gate_cfg.max_n.unwrap_or(512).min(EXACT_CAP);
    let gate_n: Vec<u64> = n_list.iter().copied().filter(|&n| n <= gate_max).collect();
    let n_omega = cfg.n_omega.unwrap_or(10_000);
    let exact_n: Vec<u64> = n_list.iter().copied().filter(|&n| n <= EXACT_CAP).collect();
    if !(k.is_finite() && k > 0.0) {
        return Err(CliError::Config(format!("gate.k: {k} must be positive")));
    }

    let filter_work = cfg
        .filter
        .as_ref()
        .map_or(0, |f| (f.samples as u128 + n_theta as u128 + n_omega as u128) * u128::from(f.horizon));
    let exact_max = exact_n.last().copied().unwrap_or(0) as u128;
    let gate_work = if gate_on {
        let g = gate_n.last().copied().unwrap_or(0) as u128;
        2 * n_omega as u128 * g + g * g
    } else {
        0
    };
    cfg.check_budget(n_theta as u128 * n_max as u128 + filter_work + exact_max * exact_max + gate_work)?;

    run_threaded(cfg, || -> Result<Output, CliError> {
        let filter = match &cfg.filter {
            Some(f) => ThetaFilter::calibrate(alpha, f.q, f.horizon, f.v_max, f.samples, seed)?,
            None => ThetaFilter::AcceptAll,
        };
        let accept_all = matches!(filter, ThetaFilter::AcceptAll);
        let reduced = reduced_average_series(alpha, &e, &filter, &n_list, n_theta, seed)?;
        let accepted = sample_thetas(seed, n_theta)
            .into_iter()
            .filter(|&t| filter.accepts(t))
            .count();
        // the exact route integrates over the whole circle, so it only
        // matches the estimate when no angles are filtered out
        let exact = if accept_all && !exact_n.is_empty() {
            Some(exact_average_series(alpha, &e, &exact_n)?)
        } else {
            None
        };

        let zero_side = e.zero_side();
        let literal_reference = if zero_side == e { "E" } else { "complement of E" };
        let mut checks = Vec::new();
        if gate_on && !gate_n.is_empty() {
            let accept = |t: FixedAngle| filter.accepts(t);
            let options = MonteCarloOptions {
                radius: None,
                inject_fault,
            };
            let mc = mc_triple_average(alpha, &e, &gate_n, n_omega, seed, &accept, options)?;
            if let Some(exact) = &exact {
                compare(&mut checks, k, gate_max, ("reduced", &reduced), ("exact", exact));
                let reference = exact_average_series(alpha, &zero_side, &gate_n)?;
                compare(&mut checks, k, gate_max, ("montecarlo", &mc), ("exact zero side", &reference));
            } else {
                let reference =
                    reduced_average_series(alpha, &zero_side, &filter, &gate_n, n_omega, seed)?;
                compare(&mut checks, k, gate_max, ("montecarlo", &mc), ("reduced zero side", &reference));
            }
        }
        let passed = checks.iter().all(|c| c.agree);
        let gate = GateReport {
            enabled: gate_on,
            k,
            max_n: gate_max,
            literal_reference: literal_reference.to_string(),
            checks,
            passed,
        };

        let oscillation = match &resolved {
            Some(r) => oscillation_report(&reduced, &r.schedule, Some(&r.report))?,
            None => oscillation_report(&reduced, &empty_desk_schedule(), None)?,
        };
        let mut entries: Vec<SeriesEntry> = reduced.entries.clone();
        if let Some(exact) = &exact {
            entries.extend(exact.entries.iter().cloned());
        }
        let gate_failure = (!passed).then(|| {
            let bad = gate.checks.iter().filter(|c| !c.agree).count();
            format!("{bad} of {} route comparisons disagree beyond {k} standard errors", gate.checks.len())
        });
        let report = AverageReport {
            oscillation,
            conditions: resolved.as_ref().map(|r| r.report.clone()),
            accepted_fraction: accepted as f64 / n_theta as f64,
            gate,
        };
        Ok(Output {
            primary: write_average_csv(cfg, &entries),
            secondary: Some((".report.json", write_json(AVERAGE_REPORT_FORMAT, cfg, &report))),
            gate_failure,
        })
    })
}

pub fn ratio(cfg: &RunConfig) -> Result<Output, CliError> {
    let (_, alpha) = cfg.alpha()?;
    let n_list = cfg.horizons("ratio")?;
    let thetas = sampled_thetas(cfg, 100)?;
    let v_list = cfg.v.clone().unwrap_or_else(|| vec![-3, -2, -1, 1, 2, 3]);
    cfg.check_budget(thetas.len() as u128 * u128::from(*n_list.last().expect("nonempty")))?;
    let table: RatioTable = run_threaded(cfg, || ratio_check(alpha, &thetas, &v_list, &n_list))?;
    Ok(Output::single(write_json(RATIO_FORMAT, cfg, &table)))
}

pub fn entropy_proxy(cfg: &RunConfig) -> Result<Output, CliError> {
    let (_, alpha) = cfg.alpha()?;
    let n_list = cfg.horizons("entropy-proxy")?;
    let thetas = sampled_thetas(cfg, 100)?;
    cfg.check_budget(thetas.len() as u128 * u128::from(*n_list.last().expect("nonempty")))?;
    let table: EntropyTable = run_threaded(cfg, || zero_entropy_proxy(alpha, &thetas, &n_list))?;
    Ok(Output::single(write_json(ENTROPY_FORMAT, cfg, &table)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityResult {
    pub estimate: CorrelationEstimate,
    /// Absent when the estimate has zero spread.
    pub z_score: Option<f64>,
    /// Exact Cesàro average, available for the default sets at `N <= 2^14`.
    pub exact: Option<f64>,
}

fn arcs(list: &Option<Vec<(f64, f64)>>) -> Result<ArcSet, CliError> {
    match list {
        None => Ok(ArcSet::Circle),
        Some(arcs) => arcs
            .iter()
            .map(|&(a, b)| {
                if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
                    Ok((FixedAngle::from_f64(a), FixedAngle::from_f64(b)))
                } else {
                    Err(CliError::Config(format!("ergodicity: arc [{a}, {b}) outside [0, 1]")))
                }
            })
            .collect::<Result<_, _>>()
            .map(ArcSet::Arcs),
    }
}

pub fn ergodicity(cfg: &RunConfig) -> Result<Output, CliError> {
    let (_, alpha) = cfg.alpha()?;
    let seed = cfg.require_seed()?;
    let n = *cfg.horizons("ergodicity")?.last().expect("nonempty");
    let samples = cfg.n_theta(10_000);
    let erg = cfg.ergodicity.clone().unwrap_or_default();
    let default_cyl = vec![(0, 1)];
    let cyl_a = CylinderSpec::new(erg.cyl_a.as_ref().unwrap_or(&default_cyl))?;
    let cyl_b = CylinderSpec::new(erg.cyl_b.as_ref().unwrap_or(&default_cyl))?;
    let arc_a = arcs(&erg.arc_a)?;
    let arc_b = arcs(&erg.arc_b)?;
    let standard = erg.cyl_a.is_none()
        && erg.cyl_b.is_none()
        && arc_a == ArcSet::Circle
        && arc_b == ArcSet::Circle;
    let exact_n = if standard && n <= EXACT_CAP { n } else { 0 };
    cfg.check_budget(samples as u128 * u128::from(n) + u128::from(exact_n) * u128::from(exact_n))?;
    let (estimate, exact) = run_threaded(cfg, || -> Result<_, CliError> {
        let estimate =
            ergodicity_correlation(alpha, &cyl_a, &cyl_b, &arc_a, &arc_b, n, samples, seed)?;
        let exact = (exact_n > 0)
            .then(|| exact_correlation_average(alpha, n))
            .transpose()?;
        Ok((estimate, exact))
    })?;
    let result = ErgodicityResult {
        z_score: Some(estimate.z_score()).filter(|z| z.is_finite()),
        estimate,
        exact,
    };
    Ok(Output::single(write_json(ERGODICITY_FORMAT, cfg, &result)))
}

/// A schedule with no intervals, for reporting on the empty set.
fn empty_desk_schedule() -> Schedule {
    Schedule {
        mode: ScheduleMode::Desk,
        intervals: Vec::new(),
        next_l: None,
        margin: EXACT_MARGIN,
        provenance: "empty".into(),
    }
}
