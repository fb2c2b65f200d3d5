//! Versioned run configuration: a TOML file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cocycle::eset::BoundFn;
use cocycle::rotation::{resolve_alpha, AlphaSpec, FixedAngle};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// Default walk-step budget per command (roughly minutes of single-core work).
pub const DEFAULT_MAX_STEPS: u64 = 100_000_000_000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores); never changes output bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Horizons or checkpoint times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    /// Sample count for the Monte Carlo oracle route.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_omega: Option<usize>,
    /// Explicit starting angles: `0x`-prefixed raw bits or a decimal in `[0, 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ergodicity: Option<ErgodicityConfig>,
}

/// Exactly one source: `pairs` (desk), `file` (schedule document) or
/// `m_max` (generated). `bound` names the constants used for generation and
/// verification unless `constants_table` points at a `constants` output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(u64, u64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants_table: Option<PathBuf>,
}

/// Quantile filter on starting angles; absent means accept all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub q: f64,
    pub horizon: u64,
    pub v_max: u64,
    pub samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    /// Allowed distance in combined standard errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Largest horizon the oracle routes are run at.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_n: Option<u64>,
}

/// Product sets `arc x cylinder`; cylinders are `(coordinate, symbol)` lists
/// and arcs are `[start, end)` pairs in turns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cyl_a: Option<Vec<(i64, i64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cyl_b: Option<Vec<(i64, i64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc_a: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc_b: Option<Vec<(f64, f64)>>,
}

fn overlay<T>(base: &mut Option<T>, top: Option<T>) {
    if top.is_some() {
        *base = top;
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        match cfg.version {
            Some(CONFIG_VERSION) => Ok(cfg),
            Some(v) => Err(CliError::Config(format!(
                "config: unsupported version {v} (expected {CONFIG_VERSION})"
            ))),
            None => Err(CliError::Config(format!(
                "config: missing `version = {CONFIG_VERSION}`"
            ))),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Values set in `top` replace those in `self`; nested tables merge per field.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay(&mut self.version, top.version);
        overlay(&mut self.alpha, top.alpha);
        overlay(&mut self.seed, top.seed);
        overlay(&mut self.threads, top.threads);
        overlay(&mut self.out, top.out);
        overlay(&mut self.n, top.n);
        overlay(&mut self.n_theta, top.n_theta);
        overlay(&mut self.n_omega, top.n_omega);
        overlay(&mut self.theta, top.theta);
        overlay(&mut self.v_max, top.v_max);
        overlay(&mut self.v, top.v);
        overlay(&mut self.max_steps, top.max_steps);
        overlay(&mut self.filter, top.filter);
        self.schedule = match (self.schedule, top.schedule) {
            (Some(mut s), Some(t)) => {
                // a new source replaces the old one wholesale
                if t.pairs.is_some() || t.file.is_some() || t.m_max.is_some() {
                    s.pairs = t.pairs;
                    s.file = t.file;
                    s.m_max = t.m_max;
                }
                overlay(&mut s.bound, t.bound);
                overlay(&mut s.margin, t.margin);
                overlay(&mut s.constants_table, t.constants_table);
                Some(s)
            }
            (s, t) => t.or(s),
        };
        self.gate = match (self.gate, top.gate) {
            (Some(mut g), Some(t)) => {
                overlay(&mut g.enabled, t.enabled);
                overlay(&mut g.k, t.k);
                overlay(&mut g.max_n, t.max_n);
                Some(g)
            }
            (g, t) => t.or(g),
        };
        self.ergodicity = match (self.ergodicity, top.ergodicity) {
            (Some(mut e), Some(t)) => {
                overlay(&mut e.cyl_a, t.cyl_a);
                overlay(&mut e.cyl_b, t.cyl_b);
                overlay(&mut e.arc_a, t.arc_a);
                overlay(&mut e.arc_b, t.arc_b);
                Some(e)
            }
            (e, t) => t.or(e),
        };
        self
    }

    /// The effective configuration without the fields that may not affect
    /// output bytes (thread count, output path).
    pub fn provenance(&self) -> RunConfig {
        RunConfig {
            version: Some(CONFIG_VERSION),
            threads: None,
            out: None,
            ..self.clone()
        }
    }

    /// Provenance as TOML, one `# `-prefixed line per entry.
    pub fn header_lines(&self) -> Vec<String> {
        let text = toml::to_string(&self.provenance()).expect("config always serializes");
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| format!("# {l}"))
            .collect()
    }

    pub fn alpha(&self) -> Result<(AlphaSpec, FixedAngle), CliError> {
        let text = self.alpha.as_deref().unwrap_or("golden");
        let spec: AlphaSpec = text
            .parse()
            .map_err(|e| CliError::Config(format!("alpha: {e}")))?;
        let alpha = resolve_alpha(&spec).map_err(|e| CliError::Config(format!("alpha: {e}")))?;
        Ok((spec, alpha))
    }

    /// Stochastic runs must name their seed.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("seed: required for sampled runs (--seed)".into()))
    }

    /// Strictly increasing, positive horizons.
    pub fn horizons(&self, what: &str) -> Result<Vec<u64>, CliError> {
        let n = self
            .n
            .clone()
            .ok_or_else(|| CliError::Config(format!("n: required for {what} (--n)")))?;
        if n.is_empty() {
            return Err(CliError::Config("n: empty list".into()));
        }
        if n.contains(&0) {
            return Err(CliError::Config("n: horizons must be at least 1".into()));
        }
        if n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("n: horizons must be strictly increasing".into()));
        }
        Ok(n)
    }

    pub fn n_theta(&self, default: usize) -> usize {
        self.n_theta.unwrap_or(default)
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps.unwrap_or(DEFAULT_MAX_STEPS)
    }

    /// Fails with the budget error when `work` walk steps exceed the budget.
    pub fn check_budget(&self, work: u128) -> Result<(), CliError> {
        let budget = self.max_steps();
        if work > u128::from(budget) {
            return Err(CliError::Budget(format!(
                "estimated {work} walk steps exceed max_steps = {budget}"
            )));
        }
        Ok(())
    }

    pub fn explicit_thetas(&self) -> Result<Option<Vec<FixedAngle>>, CliError> {
        self.theta
            .as_ref()
            .map(|list| list.iter().map(|t| parse_angle(t)).collect())
            .transpose()
    }
}

/// `0x`-prefixed raw bits, or a decimal in `[0, 1)`.
pub fn parse_angle(text: &str) -> Result<FixedAngle, CliError> {
    let text = text.trim();
    if text.starts_with("0x") {
        return FixedAngle::from_hex(text)
            .ok_or_else(|| CliError::Config(format!("theta: bad hex angle `{text}`")));
    }
    match text.parse::<f64>() {
        Ok(x) if (0.0..1.0).contains(&x) => Ok(FixedAngle::from_f64(x)),
        _ => Err(CliError::Config(format!(
            "theta: `{text}` is neither 0x-hex nor a decimal in [0, 1)"
        ))),
    }
}

pub fn parse_bound(text: &str) -> Result<BoundFn, CliError> {
    text.parse()
        .map_err(|e| CliError::Config(format!("schedule.bound: {e}")))
}
