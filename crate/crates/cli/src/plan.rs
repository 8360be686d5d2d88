//! Experiment plans read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use entropic_clt::dynamics::{FrequencyMap, NoiseSpec, SumMode, SystemConfig};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Exact `Bin(n, ½)` laws against the fixed-n bounds for fair coins.
    Binomial,
    /// Exact Poisson-binomial laws: residual rows and heterogeneous-bound diagnostics.
    PoissonBinomial,
    /// Sums of random unit-lattice laws with their Bernoulli parts.
    Decomposition,
    /// Monte Carlo sums of discretized frequencies of a simulated system.
    Hamiltonian,
    /// The Hamiltonian experiment repeated over a sweep of lattice spacings.
    CorollaryLSweep,
}

impl Mode {
    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Mode::Hamiltonian | Mode::CorollaryLSweep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub offset: f64,
    pub spacing: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec {
            offset: 0.0,
            spacing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    pub mode: Mode,
    pub n_schedule: Vec<usize>,
    /// Lattice of every coordinate; in `decomposition` mode the spacing the
    /// sum laws are rescaled to.
    #[serde(default)]
    pub lattice: LatticeSpec,
    /// Per-coordinate spacings in `hamiltonian` mode, the spacing sweep in
    /// `corollary-l-sweep` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacings: Option<Vec<f64>>,
    #[serde(default)]
    pub mc_count: usize,
    #[serde(default)]
    pub seed: u64,
    /// CSV destination; the manifest goes next to it.
    pub output: PathBuf,
    /// System for the Monte Carlo modes. Its own seed is replaced by the plan's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    /// Success probabilities for `poisson-binomial`; drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_mode: Option<SumMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

impl ExperimentPlan {
    pub fn from_json_str(s: &str) -> CliResult<Self> {
        let plan: ExperimentPlan = serde_json::from_str(s).map_err(|e| invalid(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let sched = &self.n_schedule;
        if sched.is_empty() {
            return Err(invalid("n_schedule must be nonempty"));
        }
        if sched.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_schedule must be strictly increasing"));
        }
        let floor = if self.mode == Mode::Binomial { 2 } else { 1 };
        if sched[0] < floor {
            return Err(invalid(format!(
                "n_schedule entries must be at least {floor} in this mode"
            )));
        }
        let LatticeSpec { offset, spacing } = self.lattice;
        if !offset.is_finite() || !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(format!(
                "lattice ({offset}, {spacing}) needs a finite offset and positive spacing"
            )));
        }
        if self.mode.is_monte_carlo() && self.mc_count < 2 {
            return Err(invalid("mc_count must be at least 2 for Monte Carlo modes"));
        }
        if matches!(self.mode, Mode::Binomial | Mode::PoissonBinomial)
            && self.lattice != LatticeSpec::default()
        {
            return Err(invalid(
                "binomial modes live on the integers; lattice must be (0, 1)",
            ));
        }
        if self.ps.is_some() && self.mode != Mode::PoissonBinomial {
            return Err(invalid("ps applies to poisson-binomial mode only"));
        }
        if (self.alpha.is_some() || self.beta.is_some()) && self.mode != Mode::PoissonBinomial {
            return Err(invalid(
                "alpha and beta apply to poisson-binomial mode only",
            ));
        }
        if let Some(ps) = &self.ps {
            if ps.len() < *sched.last().expect("nonempty") {
                return Err(invalid(
                    "ps must hold at least max(n_schedule) probabilities",
                ));
            }
        }
        if !self.mode.is_monte_carlo() && (self.system.is_some() || self.sum_mode.is_some()) {
            return Err(invalid(
                "system and sum_mode apply to Monte Carlo modes only",
            ));
        }
        if let Some(sys) = &self.system {
            sys.validate()?;
        }
        match (self.mode, &self.spacings) {
            (Mode::Hamiltonian, Some(l)) => {
                let d = self.system_config()?.dim;
                if l.len() != d {
                    return Err(invalid(format!(
                        "spacings has {} entries for a {d}-dimensional system",
                        l.len()
                    )));
                }
            }
            (Mode::Hamiltonian, None) => {}
            (Mode::CorollaryLSweep, Some(l)) if !l.is_empty() => {}
            (Mode::CorollaryLSweep, _) => {
                return Err(invalid("corollary-l-sweep needs a nonempty spacings sweep"))
            }
            (_, Some(_)) => return Err(invalid("spacings applies to Monte Carlo modes only")),
            (_, None) => {}
        }
        if let Some(l) = &self.spacings {
            if let Some(bad) = l.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                return Err(invalid(format!("spacing {bad} must be positive")));
            }
        }
        if self.mode == Mode::Hamiltonian && self.system.is_none() {
            return Err(invalid("hamiltonian mode needs a system"));
        }
        Ok(())
    }

    /// The system to simulate, seeded from the plan. Sweeps without a system
    /// use one coordinate with zero frequency and unit Wiener angle noise.
    pub fn system_config(&self) -> CliResult<SystemConfig> {
        let mut cfg = match (&self.system, self.mode) {
            (Some(cfg), _) => cfg.clone(),
            (None, Mode::CorollaryLSweep) => SystemConfig {
                dim: 1,
                omega: FrequencyMap::Constant { c: 0.0 },
                theta0: vec![0.0],
                i0: vec![0.0],
                eta: NoiseSpec::wiener(1.0),
                xi: NoiseSpec::wiener(1.0),
                dt: 1.0 / 64.0,
                seed: 0,
            },
            (None, _) => return Err(invalid("this mode needs a system")),
        };
        cfg.seed = self.seed;
        Ok(cfg)
    }

    /// Manifest path: the CSV path with its extension replaced by `manifest.json`.
    pub fn manifest_path(&self) -> PathBuf {
        self.output.with_extension("manifest.json")
    }
}
