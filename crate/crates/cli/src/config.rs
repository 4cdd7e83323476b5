use std::path::{Path, PathBuf};

use fermion_magic::monitoring::{check_schedule, Protocol};
use fermion_magic::scaling::{Approach, SlopeKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Snapshot times, either a uniform grid `every, 2 every, ..., until` (plus
/// `t = 0`) or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Schedule {
    Uniform { until: f64, every: f64 },
    Times(Vec<f64>),
}

impl Schedule {
    pub fn times(&self) -> Vec<f64> {
        match self {
            Schedule::Uniform { until, every } => {
                let n = (until / every + 1e-9).floor() as usize;
                (0..=n).map(|k| k as f64 * every).collect()
            }
            Schedule::Times(t) => t.clone(),
        }
    }

    fn validate(&self) -> CliResult<()> {
        match self {
            Schedule::Uniform { until, every } => {
                if !(*every > 0.0 && every.is_finite() && *until >= 0.0 && until.is_finite()) {
                    return Err(CliError::config(format!(
                        "schedule: need every > 0 and until >= 0, got every={every}, until={until}"
                    )));
                }
                if until / every > 1e6 {
                    return Err(CliError::config("schedule: more than 10^6 snapshots"));
                }
            }
            Schedule::Times(t) => {
                if t.is_empty() || t.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                    return Err(CliError::config(
                        "schedule.times: need a non-empty list of finite non-negative times",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Initial product state, tiled over the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    Vacuum,
    /// `1010...`
    Neel,
    /// A `0`/`1` pattern repeated over the chain, e.g. `"1000"` for quarter filling.
    Pattern(String),
}

impl InitialState {
    pub fn occupations(&self, sites: usize) -> Vec<bool> {
        match self {
            InitialState::Vacuum => vec![false; sites],
            InitialState::Neel => (0..sites).map(|j| j % 2 == 0).collect(),
            InitialState::Pattern(p) => {
                let bits: Vec<bool> = p.chars().map(|c| c == '1').collect();
                (0..sites).map(|j| bits[j % bits.len()]).collect()
            }
        }
    }

    /// Mean filling of the tiled pattern.
    pub fn filling(&self) -> f64 {
        match self {
            InitialState::Vacuum => 0.0,
            InitialState::Neel => 0.5,
            InitialState::Pattern(p) => p.chars().filter(|&c| c == '1').count() as f64 / p.len() as f64,
        }
    }

    fn validate(&self) -> CliResult<()> {
        if let InitialState::Pattern(p) = self {
            if p.is_empty() || p.chars().any(|c| c != '0' && c != '1') {
                return Err(CliError::config(format!(
                    "initial_state.pattern must be a non-empty string of 0 and 1, got {p:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Time window in units of the system size: `[lo L, hi L]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub lo: f64,
    pub hi: f64,
}

impl WindowSpec {
    pub fn at(&self, sites: usize) -> fermion_magic::scaling::Window {
        fermion_magic::scaling::Window {
            lo: self.lo * sites as f64,
            hi: self.hi * sites as f64,
        }
    }

    fn validate(&self, field: &str) -> CliResult<()> {
        if !(self.lo >= 0.0 && self.lo <= self.hi && self.hi.is_finite()) {
            return Err(CliError::config(format!(
                "{field}: need 0 <= lo <= hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

fn default_gammas() -> Vec<f64> {
    vec![0.0]
}
fn default_alphas() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_dt() -> f64 {
    0.05
}
fn default_coupling() -> f64 {
    1.0
}
fn default_field() -> f64 {
    0.5
}
fn default_samples() -> usize {
    1000
}
fn default_n_traj() -> usize {
    1
}

/// A simulation run. Every defaulted field is echoed in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub sizes: Vec<usize>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub schedule: Schedule,
    pub initial_state: InitialState,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default = "default_field")]
    pub field: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub subsystem: Option<usize>,
    /// Stationary window; defaults to `[L/8, L/4]` for the unmonitored
    /// hopping chain at half filling, `[L/4, L/2]` for other unmonitored runs
    /// and `[2L, 4L]` for monitored and no-click runs.
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub save_trajectories: bool,
    #[serde(default)]
    pub refresh_every: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Fills in the default window so that it is echoed explicitly.
    pub fn resolve(mut self) -> Self {
        if self.window.is_none() {
            let unitary = self.protocol != Protocol::IsingNoclick && self.gammas.iter().all(|&g| g == 0.0);
            let half_filled_hopping =
                self.protocol == Protocol::HoppingProjective && (self.initial_state.filling() - 0.5).abs() < 1e-12;
            self.window = Some(match (unitary, half_filled_hopping) {
                (true, true) => WindowSpec { lo: 0.125, hi: 0.25 },
                (true, false) => WindowSpec { lo: 0.25, hi: 0.5 },
                (false, _) => WindowSpec { lo: 2.0, hi: 4.0 },
            });
        }
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.sizes.is_empty() {
            return Err(CliError::config("sizes: need at least one system size"));
        }
        if let Some(&l) = self.sizes.iter().find(|&&l| l < 2) {
            return Err(CliError::config(format!("sizes: {l} is below the minimum of 2")));
        }
        if self.gammas.is_empty() {
            return Err(CliError::config("gammas: need at least one rate"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::config(format!("dt: must be positive, got {}", self.dt)));
        }
        for &g in &self.gammas {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(CliError::config(format!("gammas: invalid rate {g}")));
            }
            if self.protocol != Protocol::IsingNoclick {
                check_schedule(g, self.dt).map_err(|e| CliError::config(format!("gammas: {e}")))?;
            }
        }
        if self.alphas.is_empty() {
            return Err(CliError::config("alphas: need at least one Renyi index"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(CliError::config(format!("alphas: invalid index {a}")));
        }
        if !(self.coupling.is_finite() && self.field.is_finite()) {
            return Err(CliError::config("coupling and field must be finite"));
        }
        if self.samples < 2 {
            return Err(CliError::config("samples: need at least 2"));
        }
        if self.n_traj == 0 {
            return Err(CliError::config("n_traj: need at least 1"));
        }
        self.schedule.validate()?;
        self.initial_state.validate()?;
        if let Some(l) = self.subsystem {
            let smallest = *self.sizes.iter().min().unwrap();
            if l == 0 || l > smallest {
                return Err(CliError::config(format!("subsystem: {l} outside [1, {smallest}]")));
            }
        }
        if let Some(w) = &self.window {
            w.validate("window")?;
        }
        Ok(())
    }
}

/// Closed-form grid of stationary subsystem entropies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GgeConfig {
    pub fillings: Vec<f64>,
    pub alphas: Vec<f64>,
    pub subsystems: Vec<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl GgeConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.fillings.is_empty() || self.alphas.is_empty() || self.subsystems.is_empty() {
            return Err(CliError::config("fillings, alphas and subsystems must be non-empty"));
        }
        if let Some(n) = self.fillings.iter().find(|n| !(0.0..=1.0).contains(*n)) {
            return Err(CliError::config(format!("fillings: {n} outside [0, 1]")));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(CliError::config(format!("alphas: invalid index {a}")));
        }
        if self.subsystems.contains(&0) {
            return Err(CliError::config("subsystems: sizes must be at least 1"));
        }
        Ok(())
    }
}

/// One slope window of a relaxation profile, in units of `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeSpec {
    pub kind: SlopeKind,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationSpec {
    pub approach: Approach,
    pub slopes: Vec<SlopeSpec>,
}

/// Post-processing of ensemble CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Ensemble CSV files, or directories searched for `ensemble_*.csv`.
    pub inputs: Vec<PathBuf>,
    pub window: WindowSpec,
    #[serde(default)]
    pub inverse_term: bool,
    #[serde(default)]
    pub relaxation: Option<RelaxationSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl AnalyzeConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.inputs.is_empty() {
            return Err(CliError::config("inputs: need at least one file or directory"));
        }
        self.window.validate("window")?;
        if let Some(r) = &self.relaxation {
            for s in &r.slopes {
                WindowSpec { lo: s.lo, hi: s.hi }.validate("relaxation.slopes")?;
            }
        }
        Ok(())
    }
}

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}
