use std::path::{Path, PathBuf};

use dissipath_core::bath::{discretize, Discretization, SpectralDensity};
use dissipath_core::dissipation::{RunSettings, TimeHorizon};
use dissipath_core::heom::HeomConfig;
use dissipath_core::mqme::{QuadratureSpec, Subsystem};
use dissipath_core::numeric::uniform_grid;
use dissipath_core::tss::{DisorderTopology, SigmaMode, TssRunConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DimerLocalBath,
    SpinBoson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MethodKind {
    MqmeD,
    MqmeDTss,
    Heom,
    HeomD,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::MqmeD => "mqme_d",
            MethodKind::MqmeDTss => "mqme_d_tss",
            MethodKind::Heom => "heom",
            MethodKind::HeomD => "heom_d",
        }
    }

    fn is_mqme(self) -> bool {
        matches!(self, MethodKind::MqmeD | MethodKind::MqmeDTss)
    }

    fn is_heom(self) -> bool {
        matches!(self, MethodKind::Heom | MethodKind::HeomD)
    }
}

/// Subsystem Hamiltonian. The dimer takes `energies = [E_1, E_2]`, the
/// spin-boson model a `bias`; both take the electronic `coupling`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    pub coupling: f64,
    /// Initial populations; defaults to the first state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathBlock {
    pub density: SpectralDensity,
    #[serde(default)]
    pub discretization: Discretization,
}

/// Uniform frequency grid `start, start + step, ..., stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl FrequencyGrid {
    pub fn points(&self) -> Vec<f64> {
        uniform_grid(self.start, self.stop, self.step)
    }
}

/// Population propagation of the MQME methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationBlock {
    pub dt: f64,
    pub output_points: usize,
    pub horizon: TimeHorizon,
    /// Step of the energy-conservation grid; `None` skips the check.
    pub conservation_step: Option<f64>,
    /// Relative conservation error above which the run is a physics
    /// validation failure.
    pub conservation_tolerance: f64,
}

impl Default for PropagationBlock {
    fn default() -> Self {
        let s = RunSettings::new(Vec::new(), Vec::new());
        Self {
            dt: s.dt,
            output_points: s.output_points,
            horizon: s.horizon,
            conservation_step: s.conservation_step,
            conservation_tolerance: 0.03,
        }
    }
}

/// Ensemble settings; the seed is the experiment's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TssBlock {
    pub eta: f64,
    pub cutoff: f64,
    pub trajectories: usize,
    #[serde(default)]
    pub sigma_mode: SigmaMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<DisorderTopology>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    pub huang_rhys: f64,
    /// Channels to probe; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub method: MethodKind,
    /// Inverse temperature. Optional in the file so that its absence is
    /// reported by validation rather than as a parse error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub subsystem: SubsystemBlock,
    pub baths: Vec<BathBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<FrequencyGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation: Option<PropagationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tss: Option<TssBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heom: Option<HeomConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeBlock>,
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn require_block<T>(
    field: &str,
    block: &Option<T>,
    needed: bool,
    method: MethodKind,
) -> Result<(), CliError> {
    match (block.is_some(), needed) {
        (false, true) => Err(invalid(
            field,
            format!("required by method {}", method.name()),
        )),
        (true, false) => Err(invalid(
            field,
            format!("not used by method {}", method.name()),
        )),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn beta(&self) -> Result<f64, CliError> {
        match self.beta {
            Some(b) if b > 0.0 && b.is_finite() => Ok(b),
            Some(b) => Err(invalid(
                "beta",
                format!("must be positive and finite, got {b}"),
            )),
            None => Err(invalid("beta", "missing")),
        }
    }

    pub fn initial(&self) -> Vec<f64> {
        self.subsystem
            .initial
            .clone()
            .unwrap_or_else(|| vec![1.0, 0.0])
    }

    /// Checks everything that can be checked without running a pipeline.
    pub fn validate(&self) -> Result<(), CliError> {
        let m = self.method;
        self.beta()?;
        let s = &self.subsystem;
        match self.model {
            ModelKind::DimerLocalBath => {
                match &s.energies {
                    Some(e) if e.len() == 2 => {}
                    Some(e) => {
                        return Err(invalid(
                            "subsystem.energies",
                            format!("needs 2 entries, got {}", e.len()),
                        ))
                    }
                    None => return Err(invalid("subsystem.energies", "missing")),
                }
                if s.bias.is_some() {
                    return Err(invalid(
                        "subsystem.bias",
                        "only used by the spin_boson model",
                    ));
                }
                if self.baths.len() != 2 {
                    return Err(invalid(
                        "baths",
                        format!("the dimer needs 2 baths, got {}", self.baths.len()),
                    ));
                }
            }
            ModelKind::SpinBoson => {
                if s.bias.is_none() {
                    return Err(invalid("subsystem.bias", "missing"));
                }
                if s.energies.is_some() {
                    return Err(invalid(
                        "subsystem.energies",
                        "only used by the dimer_local_bath model",
                    ));
                }
                if self.baths.len() != 1 {
                    return Err(invalid(
                        "baths",
                        format!(
                            "the spin-boson model needs 1 bath, got {}",
                            self.baths.len()
                        ),
                    ));
                }
            }
        }
        let initial = self.initial();
        if initial.len() != 2
            || initial.iter().any(|&p| p < 0.0)
            || (initial.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(invalid(
                "subsystem.initial",
                "needs 2 non-negative populations summing to 1",
            ));
        }
        for (i, b) in self.baths.iter().enumerate() {
            b.density
                .validate()
                .map_err(|e| invalid(&format!("baths[{i}].density"), e.to_string()))?;
        }
        require_block("frequencies", &self.frequencies, m != MethodKind::Heom, m)?;
        if self.quadrature.is_some() && !m.is_mqme() {
            return Err(invalid(
                "quadrature",
                format!("not used by method {}", m.name()),
            ));
        }
        if self.propagation.is_some() && !m.is_mqme() {
            return Err(invalid(
                "propagation",
                format!("not used by method {}", m.name()),
            ));
        }
        require_block("tss", &self.tss, m == MethodKind::MqmeDTss, m)?;
        require_block("heom", &self.heom, m.is_heom(), m)?;
        require_block("probe", &self.probe, m == MethodKind::HeomD, m)?;
        if let Some(g) = &self.frequencies {
            if !(g.start > 0.0 && g.step > 0.0 && g.stop >= g.start) {
                return Err(invalid(
                    "frequencies",
                    "needs 0 < start <= stop and step > 0",
                ));
            }
        }
        if let Some(q) = &self.quadrature {
            q.validate()
                .map_err(|e| invalid("quadrature", e.to_string()))?;
        }
        if let Some(t) = &self.tss {
            self.tss_config(t)
                .validate()
                .map_err(|e| invalid("tss", e.to_string()))?;
            if t.topology == Some(DisorderTopology::AntiCorrelated)
                && self.model == ModelKind::DimerLocalBath
            {
                return Err(invalid(
                    "tss.topology",
                    "anti_correlated needs the spin_boson model",
                ));
            }
        }
        if let Some(h) = &self.heom {
            h.validate().map_err(|e| invalid("heom", e.to_string()))?;
            if self
                .baths
                .iter()
                .any(|b| !matches!(b.density, SpectralDensity::DrudeLorentz { .. }))
            {
                return Err(invalid(
                    "baths",
                    "hierarchy methods support Drude-Lorentz baths only",
                ));
            }
        }
        if let Some(p) = &self.probe {
            if !(p.huang_rhys > 0.0) {
                return Err(invalid("probe.huang_rhys", "must be positive"));
            }
            if let Some(ch) = &p.channels {
                if ch.is_empty() || ch.iter().any(|&c| c >= self.baths.len()) {
                    return Err(invalid("probe.channels", "needs existing channel indices"));
                }
            }
        }
        Ok(())
    }

    pub fn tss_config(&self, t: &TssBlock) -> TssRunConfig {
        TssRunConfig {
            eta: t.eta,
            cutoff: t.cutoff,
            trajectories: t.trajectories,
            seed: self.seed,
            sigma_mode: t.sigma_mode,
            topology: t.topology,
        }
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.frequencies.map(|g| g.points()).unwrap_or_default()
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        self.quadrature.unwrap_or_default()
    }

    pub fn propagation_block(&self) -> PropagationBlock {
        self.propagation.unwrap_or_default()
    }

    pub fn run_settings(&self) -> RunSettings {
        let p = self.propagation_block();
        let mut s = RunSettings::new(self.omegas(), self.initial());
        s.dt = p.dt;
        s.output_points = p.output_points;
        s.horizon = p.horizon;
        s.conservation_step = p.conservation_step;
        s
    }

    /// Discretized subsystem.
    pub fn subsystem(&self) -> Result<Subsystem, CliError> {
        let baths = self
            .baths
            .iter()
            .map(|b| discretize(b.density, &b.discretization))
            .collect::<Result<Vec<_>, _>>()?;
        let s = &self.subsystem;
        let sub = match self.model {
            ModelKind::DimerLocalBath => {
                let e = s.energies.as_deref().unwrap_or_default();
                let mut baths = baths.into_iter();
                match (baths.next(), baths.next()) {
                    (Some(b1), Some(b2)) => Subsystem::dimer(e[0], e[1], s.coupling, b1, b2)?,
                    _ => return Err(invalid("baths", "the dimer needs 2 baths")),
                }
            }
            ModelKind::SpinBoson => {
                let bath = baths
                    .into_iter()
                    .next()
                    .ok_or_else(|| invalid("baths", "missing"))?;
                Subsystem::spin_boson(s.bias.unwrap_or_default(), s.coupling, bath)?
            }
        };
        Ok(sub)
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    ExperimentConfig::from_toml(&text)
}
