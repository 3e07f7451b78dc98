//! Experiment configuration, read from a TOML file.
//!
//! ```toml
//! command = "sweep"
//!
//! [weights.omega1]
//! kind = "distance-boundary"
//! exponent = -4.0
//!
//! [weights.omega2]
//! kind = "distance-boundary"
//! exponent = -1.0
//!
//! [mesh]
//! a = 0.0
//! b = 1.0
//! n = 256
//! symmetric = true
//!
//! [physics]
//! p = 3.0
//! lambda_lo = 0.5
//! lambda_hi = 1.5
//! relative_lambda = true
//! ```
//!
//! Every section except `weights` and `mesh` has defaults.

use std::path::{Path, PathBuf};

use hardy_core::parabolic::EvolutionConfig;
use hardy_core::{MeshSpec, WeightSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckWeights,
    Eigen,
    EigenStudy,
    Evolve,
    Sweep,
    TruncationStudy,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CheckWeights => "check-weights",
            Self::Eigen => "eigen",
            Self::EigenStudy => "eigen-study",
            Self::Evolve => "evolve",
            Self::Sweep => "sweep",
            Self::TruncationStudy => "truncation-study",
        }
    }

    fn needs_evolution(&self) -> bool {
        matches!(self, Self::Evolve | Self::Sweep | Self::TruncationStudy)
    }
}

/// A weight given inline or as a two-column CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightEntry {
    Table { table_path: PathBuf },
    Inline(WeightSpec),
}

impl WeightEntry {
    /// Resolves table paths relative to `base`.
    pub fn resolve(&self, base: &Path) -> Result<WeightSpec, CliError> {
        match self {
            Self::Inline(w) => {
                w.validate().map_err(CliError::precondition)?;
                Ok(w.clone())
            }
            Self::Table { table_path } => {
                let path = base.join(table_path);
                WeightSpec::tabulated_from_csv(&path)
                    .map_err(|e| CliError::parse(format!("weight table {}: {e}", path.display())))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    pub omega1: WeightEntry,
    pub omega2: WeightEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub p: f64,
    /// Reaction strength for `evolve` and `truncation-study`.
    pub lambda: f64,
    /// Single truncation level of ω₁ (`evolve`, `eigen`).
    pub m: Option<f64>,
    /// Truncation levels for the studies.
    pub m_list: Vec<f64>,
    /// Exponents of the admissibility conditions.
    pub q: f64,
    pub s: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub bisection_steps: usize,
    /// Read `lambda`, `lambda_lo`, `lambda_hi` as multiples of the
    /// eigensolver's estimate of the first eigenvalue.
    pub relative_lambda: bool,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            p: 3.0,
            lambda: 0.0,
            m: None,
            m_list: vec![10.0, 1e2, 1e3, 1e4],
            q: 4.0,
            s: 6.0,
            lambda_lo: 0.5,
            lambda_hi: 1.5,
            bisection_steps: 12,
            relative_lambda: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Time {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt_min: f64,
}

impl Default for Time {
    fn default() -> Self {
        let e = EvolutionConfig::default();
        Self { dt: e.dt, t_final: e.t_final, dt_min: e.dt_min }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Solver {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub eps: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub blowup_factor: f64,
}

impl Default for Solver {
    fn default() -> Self {
        let e = EvolutionConfig::default();
        let r = hardy_core::eigen::RayleighOptions::default();
        Self {
            tol: r.tol,
            max_iters: r.max_iters,
            seed: r.seed,
            eps: e.eps,
            picard_tol: e.picard_tol,
            picard_max: e.picard_max,
            blowup_factor: e.blowup_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Io {
    pub output_dir: PathBuf,
}

impl Default for Io {
    fn default() -> Self {
        Self { output_dir: PathBuf::from("out") }
    }
}

/// Initial data for the evolution commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Initial {
    /// `amplitude · sin(π (x - a)/(b - a))`, or a cosine half-wave when the
    /// left end is the (free) origin of a radial mesh.
    Bump { amplitude: f64 },
    Zero,
    /// Two-column CSV (node, value) on the configured mesh.
    File { path: PathBuf },
}

impl Default for Initial {
    fn default() -> Self {
        Self::Bump { amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub weights: WeightsSection,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub time: Time,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub io: Io,
    #[serde(default)]
    pub initial: Initial,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::precondition(format!("config not representable as TOML: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks the per-command field requirements.
    pub fn validate(&self) -> Result<(), CliError> {
        let ph = &self.physics;
        if self.solver.seed > i64::MAX as u64 {
            // TOML integers are signed 64-bit
            return Err(CliError::precondition(format!("seed must be <= {}", i64::MAX)));
        }
        if !ph.p.is_finite() || ph.p < 2.0 {
            return Err(CliError::precondition(format!("p must be >= 2, got {}", ph.p)));
        }
        if self.command.needs_evolution() && ph.p <= 2.0 {
            return Err(CliError::precondition(format!("{} needs p > 2, got {}", self.command.name(), ph.p)));
        }
        match self.command {
            Command::CheckWeights if !(ph.p > 2.0 && ph.p < ph.q && ph.q < ph.s) => Err(CliError::precondition(
                format!("check-weights needs 2 < p < q < s, got p={}, q={}, s={}", ph.p, ph.q, ph.s),
            )),
            Command::EigenStudy | Command::TruncationStudy
                if ph.m_list.is_empty() || ph.m_list.windows(2).any(|w| w[1] <= w[0]) =>
            {
                Err(CliError::precondition("m_list must be nonempty and strictly increasing"))
            }
            Command::Sweep if !(ph.lambda_lo >= 0.0 && ph.lambda_lo < ph.lambda_hi) => {
                Err(CliError::precondition("sweep needs 0 <= lambda_lo < lambda_hi"))
            }
            _ => Ok(()),
        }
    }
}
