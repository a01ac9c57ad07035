//! Experiment configuration. Every section is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use semibroadcast::interact::InteractionSpec;
use semibroadcast::thermal::HamiltonianSpec;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub memory: MemoryConfig,
    pub interaction: Option<InteractionSpec>,
    pub experiment: Option<Experiment>,
    /// Global seed; `--seed` overrides it.
    pub seed: Option<u64>,
    /// Output directory; `--out` overrides it.
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Number of random instances for `hl-bound`.
    pub instances: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Sequential,
    Global,
    Reconstruct,
    Nogo,
    CmaxSweep,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "d_S", default = "default_d_s")]
    pub d_s: usize,
    pub state: Option<StateSpec>,
    /// Seed of a random system state; defaults to the global seed.
    pub seed: Option<u64>,
}

fn default_d_s() -> usize {
    2
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            d_s: default_d_s(),
            state: None,
            seed: None,
        }
    }
}

/// `"random"`, a diagonal `[p_0, p_1, ...]`, or a basis index.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Pure(usize),
    Diagonal(Vec<f64>),
    Random(RandomWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum RandomWord {
    #[serde(rename = "random")]
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryState {
    #[default]
    Thermal,
    /// Lowest-energy eigenstate: a pure, zero-temperature memory.
    Ground,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryConfig {
    /// Number of memory components.
    #[serde(rename = "N")]
    pub n_components: Option<usize>,
    /// Qubits per component when no Hamiltonian is given.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_beta_omega")]
    pub beta_omega: f64,
    pub hamiltonian: Option<HamiltonianSpec>,
    #[serde(default)]
    pub state: MemoryState,
}

fn default_n() -> usize {
    1
}

fn default_beta_omega() -> f64 {
    1.0
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            n_components: None,
            n: default_n(),
            beta_omega: default_beta_omega(),
            hamiltonian: None,
            state: MemoryState::Thermal,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_n_step")]
    pub n_step: usize,
    #[serde(default = "default_beta_omegas")]
    pub beta_omegas: Vec<f64>,
}

fn default_n_min() -> usize {
    1
}

fn default_n_max() -> usize {
    409
}

fn default_n_step() -> usize {
    2
}

fn default_beta_omegas() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 1.0]
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_min: default_n_min(),
            n_max: default_n_max(),
            n_step: default_n_step(),
            beta_omegas: default_beta_omegas(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let cfg: Self = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.system.d_s < 2 {
            return bad(format!("system.d_S = {} must be >= 2", self.system.d_s));
        }
        if let Some(StateSpec::Pure(i)) = self.system.state {
            if i >= self.system.d_s {
                return bad(format!("system.state index {i} >= d_S"));
            }
        }
        if let Some(StateSpec::Diagonal(d)) = &self.system.state {
            if d.len() != self.system.d_s {
                return bad(format!(
                    "system.state has {} entries, d_S = {}",
                    d.len(),
                    self.system.d_s
                ));
            }
        }
        let m = &self.memory;
        if !(m.beta_omega.is_finite() && m.beta_omega >= 0.0) {
            return bad(format!(
                "memory.beta_omega = {} must be finite and >= 0",
                m.beta_omega
            ));
        }
        if m.n == 0 {
            return bad("memory.n must be >= 1".into());
        }
        if m.n_components == Some(0) {
            return bad("memory.N must be >= 1".into());
        }
        let s = &self.sweep;
        if s.n_min == 0 || s.n_step == 0 || s.n_min > s.n_max {
            return bad(format!(
                "sweep range n_min={} n_max={} n_step={} is empty or invalid",
                s.n_min, s.n_max, s.n_step
            ));
        }
        if s.beta_omegas.is_empty() || s.beta_omegas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("sweep.beta_omegas must be a nonempty list of finite values >= 0".into());
        }
        if self.instances == Some(0) {
            return bad("instances must be >= 1".into());
        }
        Ok(())
    }

    /// Rejects an `experiment` field that names a different subcommand.
    pub fn expect_experiment(&self, allowed: &[Experiment]) -> CliResult<()> {
        match self.experiment {
            Some(e) if !allowed.contains(&e) => Err(CliError::Config(format!(
                "experiment {e:?} does not match this subcommand (allowed: {allowed:?})"
            ))),
            _ => Ok(()),
        }
    }

    pub fn interaction(&self) -> InteractionSpec {
        self.interaction
            .clone()
            .unwrap_or(InteractionSpec::Noninvasive {})
    }
}
