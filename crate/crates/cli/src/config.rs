//! Experiment configuration files.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use modehb::scheduler::LadderSpec;
use modehb::{tae_budget, BenchmarkSpec, DeParams, FidelityLadder, Problem, StoppingCriteria, Variant};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    ModehbNsga2,
    ModehbEpsnet,
    RandomSearch,
}

impl OptimizerName {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerName::ModehbNsga2 => Variant::Nsga2.name(),
            OptimizerName::ModehbEpsnet => Variant::EpsNet.name(),
            OptimizerName::RandomSearch => modehb::modehb::RANDOM_SEARCH,
        }
    }

    pub fn variant(&self) -> Option<Variant> {
        match self {
            OptimizerName::ModehbNsga2 => Some(Variant::Nsga2),
            OptimizerName::ModehbEpsnet => Some(Variant::EpsNet),
            OptimizerName::RandomSearch => None,
        }
    }
}

impl fmt::Display for OptimizerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Partial overrides of the DE defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeOverrides {
    pub scaling_factor: Option<f64>,
    pub crossover_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub name: OptimizerName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de: Option<DeOverrides>,
}

/// The on-disk experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkSpec,
    pub optimizers: Vec<OptimizerConfig>,
    pub ladder: LadderSpec,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub stop: Option<StoppingCriteria>,
    /// Relative paths are resolved against the config file's directory.
    pub output_dir: PathBuf,
    /// Size of the run worker pool; defaults to the number of CPUs.
    #[serde(default)]
    pub workers: Option<usize>,
}

/// One optimizer, ready to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimizer {
    pub name: OptimizerName,
    pub de: DeParams,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub benchmark: modehb::Benchmark,
    pub ladder: FidelityLadder,
    pub optimizers: Vec<Optimizer>,
    pub stop: StoppingCriteria,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parses config text; errors carry `source:line:column`.
    pub fn parse(text: &str, source: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("{source}:{}:{}: {e}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Checks every cross-field invariant and builds the run inputs.
    /// `base` resolves a relative `output_dir`.
    pub fn validate(self, base: &Path) -> Result<Experiment, CliError> {
        let bad = |msg: String| CliError::Config(msg);
        if self.seeds.is_empty() {
            return Err(bad("seeds: at least one seed is required".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(bad(format!("seeds: duplicate seed {dup}")));
        }
        if self.optimizers.is_empty() {
            return Err(bad("optimizers: at least one optimizer is required".into()));
        }
        let mut names = HashSet::new();
        let mut optimizers = Vec::with_capacity(self.optimizers.len());
        for opt in &self.optimizers {
            if !names.insert(opt.name) {
                return Err(bad(format!("optimizers: {} listed twice", opt.name)));
            }
            let de = match (opt.name.variant(), opt.de) {
                (None, Some(_)) => return Err(bad(format!("optimizers: {} takes no DE settings", opt.name))),
                (_, None) => DeParams::default(),
                (Some(_), Some(o)) => {
                    let d = DeParams::default();
                    DeParams::new(
                        o.scaling_factor.unwrap_or(d.scaling_factor()),
                        o.crossover_prob.unwrap_or(d.crossover_prob()),
                    )
                    .map_err(|e| bad(format!("optimizers: {}: {e}", opt.name)))?
                }
            };
            optimizers.push(Optimizer { name: opt.name, de });
        }
        if self.workers == Some(0) {
            return Err(bad("workers: must be at least 1".into()));
        }
        let ladder = FidelityLadder::try_from(self.ladder).map_err(|e| bad(format!("ladder: {e}")))?;
        let benchmark = self.benchmark.build(&ladder).map_err(|e| bad(format!("benchmark: {e}")))?;
        let stop = match self.stop {
            Some(s) => {
                s.validate().map_err(|e| bad(format!("stop: {e}")))?;
                s
            }
            None => StoppingCriteria::tae(tae_budget(benchmark.space().dim())),
        };
        let output_dir = base.join(&self.output_dir);
        Ok(Experiment {
            config: self,
            benchmark,
            ladder,
            optimizers,
            stop,
            output_dir,
        })
    }
}
