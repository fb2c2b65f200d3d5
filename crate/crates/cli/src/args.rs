//! Command-line surface. Every flag maps onto a [`RunConfig`] field and
//! overrides the value from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ErgodicityConfig, FilterConfig, GateConfig, RunConfig, ScheduleConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cocycle", version, about = "Discrepancy cocycle walks and triple-correlation averages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run walks and write per-checkpoint occupation rows (CSV).
    Walk {
        #[command(flatten)]
        common: Common,
        /// Starting angles: 0x-prefixed raw bits or decimals in [0, 1).
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<String>>,
    },
    /// Estimate the occupation constants from sampled walks (JSON).
    Constants {
        #[command(flatten)]
        common: Common,
        /// Estimate constants for heights |v| <= this.
        #[arg(long)]
        v_max: Option<u64>,
    },
    /// Generate or load a schedule, verify its conditions (TOML + JSON report).
    Schedule {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Number of intervals to generate.
        #[arg(long)]
        m_max: Option<u64>,
        /// Target margin of the generated inequalities, in (0, 1].
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Estimate the triple-correlation averages with the oracle gate (CSV + JSON report).
    Average {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Samples for the Monte Carlo oracle route.
        #[arg(long)]
        n_omega: Option<usize>,
        /// Reject this fraction of angles by occupation score.
        #[arg(long)]
        filter_q: Option<f64>,
        /// Walk length used to score angles (default 1000).
        #[arg(long, requires = "filter_q")]
        filter_horizon: Option<u64>,
        /// Heights |v| <= this enter the score (default 2).
        #[arg(long, requires = "filter_q")]
        filter_v_max: Option<u64>,
        /// Angles used to calibrate the rejection threshold (default 200).
        #[arg(long, requires = "filter_q")]
        filter_samples: Option<usize>,
        /// Allowed route disagreement in combined standard errors.
        #[arg(long)]
        gate_k: Option<f64>,
        /// Largest horizon checked by the oracle gate.
        #[arg(long)]
        gate_max_n: Option<u64>,
        /// Skip the route comparison.
        #[arg(long)]
        no_gate: bool,
        /// Corrupt the Monte Carlo route so the gate must trip.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Occupation ratios against the return count (JSON).
    Ratio {
        #[command(flatten)]
        common: Common,
        /// Heights to compare with 0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        v: Option<Vec<i64>>,
    },
    /// Range decay a_N / N (JSON).
    EntropyProxy {
        #[command(flatten)]
        common: Common,
    },
    /// Cesàro correlation of two product sets (JSON).
    Ergodicity {
        #[command(flatten)]
        common: Common,
        /// Cylinder constraints `coordinate:symbol`, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        cyl_a: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        cyl_b: Option<Vec<String>>,
        /// Arcs `start:end` in turns, comma separated.
        #[arg(long, value_delimiter = ',')]
        arc_a: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        arc_b: Option<Vec<String>>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// golden, sqrt2m1, sqrt3m1 or cf:PRE/PERIOD;k=BOUND
    #[arg(long)]
    pub alpha: Option<String>,
    /// Seed for all sampled angles and symbol windows.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores); output is identical for any value.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file; reports go next to it with a suffix. Default: stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML run configuration (`version = 1`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Horizons / checkpoint times, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    /// Number of sampled angles.
    #[arg(long)]
    pub n_theta: Option<usize>,
    /// Walk-step budget; larger runs exit with the budget code.
    #[arg(long)]
    pub max_steps: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Desk intervals `l:r`, comma separated.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Schedule document to load.
    #[arg(long)]
    pub schedule_file: Option<PathBuf>,
    /// Constants bound: const:C, log:B,S or pow:A,P.
    #[arg(long)]
    pub bound: Option<String>,
    /// Constants table written by the `constants` command.
    #[arg(long)]
    pub constants_table: Option<PathBuf>,
}

fn split_pair<'a>(s: &'a str, what: &str) -> Result<(&'a str, &'a str), CliError> {
    s.split_once(':')
        .ok_or_else(|| CliError::Config(format!("{what}: `{s}` is not of the form a:b")))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{what}: bad number `{s}`")))
}

fn pairs<A: std::str::FromStr, B: std::str::FromStr>(
    items: &[String],
    what: &str,
) -> Result<Vec<(A, B)>, CliError> {
    items
        .iter()
        .map(|item| {
            let (a, b) = split_pair(item, what)?;
            Ok((parse_num(a, what)?, parse_num(b, what)?))
        })
        .collect()
}

impl ScheduleArgs {
    fn into_config(self) -> Result<Option<ScheduleConfig>, CliError> {
        let pairs = match self.pairs {
            Some(p) if p.trim().is_empty() => Some(Vec::new()),
            Some(p) => {
                let items: Vec<String> = p.split(',').map(str::to_string).collect();
                Some(pairs::<u64, u64>(&items, "pairs")?)
            }
            None => None,
        };
        let sc = ScheduleConfig {
            pairs,
            file: self.schedule_file,
            bound: self.bound,
            constants_table: self.constants_table,
            ..Default::default()
        };
        Ok((sc != ScheduleConfig::default()).then_some(sc))
    }
}

impl Common {
    fn into_config(self) -> (Option<PathBuf>, RunConfig) {
        let cfg = RunConfig {
            alpha: self.alpha,
            seed: self.seed,
            threads: self.threads,
            out: self.out,
            n: self.n,
            n_theta: self.n_theta,
            max_steps: self.max_steps,
            ..Default::default()
        };
        (self.config, cfg)
    }
}

/// Which command to run, with its fully merged configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Walk,
    Constants,
    Schedule,
    Average { inject_fault: bool },
    Ratio,
    EntropyProxy,
    Ergodicity,
}

impl Command {
    /// Loads `--config` (if any) and overlays the flags.
    pub fn resolve(self) -> Result<(Action, RunConfig), CliError> {
        let (action, common, flags) = match self {
            Command::Walk { common, theta } => (
                Action::Walk,
                common,
                RunConfig {
                    theta,
                    ..Default::default()
                },
            ),
            Command::Constants { common, v_max } => (
                Action::Constants,
                common,
                RunConfig {
                    v_max,
                    ..Default::default()
                },
            ),
            Command::Schedule {
                common,
                schedule,
                m_max,
                margin,
            } => {
                let mut sc = schedule.into_config()?;
                if m_max.is_some() || margin.is_some() {
                    let s = sc.get_or_insert_with(Default::default);
                    s.m_max = m_max;
                    s.margin = margin;
                }
                (
                    Action::Schedule,
                    common,
                    RunConfig {
                        schedule: sc,
                        ..Default::default()
                    },
                )
            }
            Command::Average {
                common,
                schedule,
                n_omega,
                filter_q,
                filter_horizon,
                filter_v_max,
                filter_samples,
                gate_k,
                gate_max_n,
                no_gate,
                inject_fault,
            } => {
                let filter = filter_q.map(|q| FilterConfig {
                    q,
                    horizon: filter_horizon.unwrap_or(1000),
                    v_max: filter_v_max.unwrap_or(2),
                    samples: filter_samples.unwrap_or(200),
                });
                let gate = GateConfig {
                    enabled: no_gate.then_some(false),
                    k: gate_k,
                    max_n: gate_max_n,
                };
                (
                    Action::Average { inject_fault },
                    common,
                    RunConfig {
                        schedule: schedule.into_config()?,
                        n_omega,
                        filter,
                        gate: (gate != GateConfig::default()).then_some(gate),
                        ..Default::default()
                    },
                )
            }
            Command::Ratio { common, v } => (
                Action::Ratio,
                common,
                RunConfig {
                    v,
                    ..Default::default()
                },
            ),
            Command::EntropyProxy { common } => (Action::EntropyProxy, common, RunConfig::default()),
            Command::Ergodicity {
                common,
                cyl_a,
                cyl_b,
                arc_a,
                arc_b,
            } => {
                let erg = ErgodicityConfig {
                    cyl_a: cyl_a.map(|c| pairs(&c, "cyl-a")).transpose()?,
                    cyl_b: cyl_b.map(|c| pairs(&c, "cyl-b")).transpose()?,
                    arc_a: arc_a.map(|c| pairs(&c, "arc-a")).transpose()?,
                    arc_b: arc_b.map(|c| pairs(&c, "arc-b")).transpose()?,
                };
                (
                    Action::Ergodicity,
                    common,
                    RunConfig {
                        ergodicity: (erg != ErgodicityConfig::default()).then_some(erg),
                        ..Default::default()
                    },
                )
            }
        };
        let (config_path, common_flags) = common.into_config();
        let base = match config_path {
            Some(path) => RunConfig::load(&path)?,
            None => RunConfig::default(),
        };
        Ok((action, base.overlay(common_flags).overlay(flags)))
    }
}
