use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use super::spectral::SpectralDensity;
use super::split::TssSplit;
use crate::error::{positive, Error, Result};

/// One harmonic mode of a discretized bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathMode {
    pub frequency: f64,
    pub reorganization: f64,
}

impl BathMode {
    /// Displacement `d = sqrt(2 lambda) / omega` between the coupled surfaces.
    pub fn displacement(&self) -> f64 {
        (2.0 * self.reorganization).sqrt() / self.frequency
    }
}

/// Discretization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Discretization {
    pub modes: usize,
    pub omega_max: f64,
    /// Allowed relative deviation of `sum lambda_j` from the truncated
    /// continuum reorganization energy. `None` skips the check.
    pub tolerance: Option<f64>,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            modes: 2000,
            omega_max: 15.0,
            tolerance: Some(0.02),
        }
    }
}

impl Discretization {
    pub fn new(modes: usize, omega_max: f64) -> Self {
        Self {
            modes,
            omega_max,
            ..Self::default()
        }
    }

    pub fn unchecked(mut self) -> Self {
        self.tolerance = None;
        self
    }
}

/// Finite set of modes standing in for one coupling channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedBath {
    modes: Vec<BathMode>,
    source: SpectralDensity,
    omega_max: f64,
    split: Option<TssSplit>,
}

impl DiscretizedBath {
    /// Builds a bath from explicit modes; frequencies must be positive and
    /// strictly increasing, reorganization energies nonnegative.
    pub fn from_modes(
        source: SpectralDensity,
        omega_max: f64,
        modes: Vec<BathMode>,
    ) -> Result<Self> {
        source.validate()?;
        positive("omega_max", omega_max)?;
        let mut previous = 0.0;
        for m in &modes {
            if !(m.frequency > previous) || !m.frequency.is_finite() {
                return Err(Error::Parameter {
                    name: "mode frequency",
                    requirement: "positive and strictly increasing",
                    value: m.frequency,
                });
            }
            if !(m.reorganization >= 0.0) || !m.reorganization.is_finite() {
                return Err(Error::Parameter {
                    name: "mode reorganization energy",
                    requirement: "nonnegative and finite",
                    value: m.reorganization,
                });
            }
            previous = m.frequency;
        }
        Ok(Self {
            modes,
            source,
            omega_max,
            split: None,
        })
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn source(&self) -> &SpectralDensity {
        &self.source
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// Splitting applied to produce this bath, if it is a fast component.
    pub fn split(&self) -> Option<&TssSplit> {
        self.split.as_ref()
    }

    /// `sum_j lambda_j`.
    pub fn total_reorganization(&self) -> f64 {
        self.modes.iter().map(|m| m.reorganization).sum()
    }

    /// Analytic `J(omega)/omega` of the channel this bath represents,
    /// including the fast-component weight when the bath came from a split.
    pub fn density_over_omega(&self, omega: f64) -> f64 {
        let weight = self.split.map_or(1.0, |s| s.fast_weight(omega));
        weight * self.source.over_omega(omega)
    }

    pub(crate) fn with_split(&self, split: TssSplit, modes: Vec<BathMode>) -> Self {
        Self {
            modes,
            source: self.source,
            omega_max: self.omega_max,
            split: Some(split),
        }
    }

    /// Checks `sum lambda_j` against the truncated continuum integral.
    pub fn check_sum_rule(&self, tolerance: f64) -> Result<()> {
        let target = self.source.reorganization_energy(self.omega_max)?;
        let recovered = self.total_reorganization();
        let relative = (recovered - target).abs() / target;
        if relative > tolerance {
            return Err(Error::SumRule {
                recovered,
                target,
                relative,
                tolerance,
            });
        }
        Ok(())
    }

    /// Writes the two-column table `omega_j lambda_j`.
    pub fn write_table<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# omega lambda")?;
        for m in &self.modes {
            writeln!(out, "{:.17e} {:.17e}", m.frequency, m.reorganization)?;
        }
        Ok(())
    }
}

/// Dispatches on the spectral-density variant.
pub fn discretize(model: SpectralDensity, spec: &Discretization) -> Result<DiscretizedBath> {
    match model {
        SpectralDensity::DrudeLorentz { .. } => discretize_drude_lorentz(model, spec),
        SpectralDensity::BrownianOscillator { .. } => discretize_brownian(model, spec),
    }
}

/// Quadratic frequency placement `omega_j = (j/N)^2 omega_max`.
pub fn discretize_drude_lorentz(
    model: SpectralDensity,
    spec: &Discretization,
) -> Result<DiscretizedBath> {
    if !matches!(model, SpectralDensity::DrudeLorentz { .. }) {
        return Err(Error::Model(
            "Drude-Lorentz discretization requires a Drude-Lorentz spectral density".into(),
        ));
    }
    validate_spec(spec)?;
    let bath = quadratic_window(model, spec.modes, spec.omega_max)?;
    finish(bath, spec)
}

/// Two-window placement around the oscillator peak, or the quadratic
/// scheme when the spectral density has no interior maximum.
pub fn discretize_brownian(
    model: SpectralDensity,
    spec: &Discretization,
) -> Result<DiscretizedBath> {
    let SpectralDensity::BrownianOscillator {
        reorganization,
        frequency: w0,
        damping: gamma,
    } = model
    else {
        return Err(Error::Model(
            "Brownian discretization requires a Brownian-oscillator spectral density".into(),
        ));
    };
    validate_spec(spec)?;
    let n = spec.modes;
    let wmax = spec.omega_max;
    if !n.is_multiple_of(2) {
        return Err(Error::Parameter {
            name: "mode count",
            requirement: "even for the Brownian-oscillator scheme",
            value: n as f64,
        });
    }
    if w0 >= wmax {
        return Err(Error::Parameter {
            name: "oscillator frequency",
            requirement: "below omega_max",
            value: w0,
        });
    }
    let peak = (w0 * w0 - 2.0 * gamma * gamma).max(0.0).sqrt();
    if peak == 0.0 {
        return finish(quadratic_window(model, n, wmax)?, spec);
    }
    if gamma >= w0 {
        return Err(Error::Parameter {
            name: "damping",
            requirement: "below the oscillator frequency",
            value: gamma,
        });
    }

    let nf = n as f64;
    let mut modes = Vec::with_capacity(n);
    // Lower window: omega = [1 - (1 - 2j/N)^2] Omega, density N / (4 sqrt((Omega - w) Omega)).
    for j in 1..n / 2 {
        let u = 1.0 - 2.0 * j as f64 / nf;
        let w = (1.0 - u * u) * peak;
        let spacing = 4.0 * ((peak - w) * peak).sqrt() / nf;
        modes.push(BathMode {
            frequency: w,
            reorganization: model.over_omega(w) * spacing,
        });
    }
    modes.push(BathMode {
        frequency: peak,
        reorganization: 2.0 * reorganization / (PI * nf * nf) * wmax * w0 * w0
            / (gamma * (w0 * w0 - gamma * gamma)),
    });
    // Upper window: omega = Omega + (2j/N)^2 (omega_max - Omega).
    for j in 1..=n / 2 {
        let r = 2.0 * j as f64 / nf;
        let w = peak + r * r * (wmax - peak);
        let spacing = 4.0 * ((w - peak) * (wmax - peak)).sqrt() / nf;
        modes.push(BathMode {
            frequency: w,
            reorganization: model.over_omega(w) * spacing,
        });
    }
    finish(DiscretizedBath::from_modes(model, wmax, modes)?, spec)
}

fn validate_spec(spec: &Discretization) -> Result<()> {
    if spec.modes == 0 {
        return Err(Error::Parameter {
            name: "mode count",
            requirement: "at least 1",
            value: 0.0,
        });
    }
    positive("omega_max", spec.omega_max)?;
    if let Some(tol) = spec.tolerance {
        positive("discretization tolerance", tol)?;
    }
    Ok(())
}

/// `lambda_j = (J(w_j)/w_j) * 2 sqrt(w_j omega_max) / N`, which for the
/// Drude-Lorentz form equals `(4 Lambda / (j pi)) w_c w_j / (w_j^2 + w_c^2)`.
fn quadratic_window(model: SpectralDensity, n: usize, wmax: f64) -> Result<DiscretizedBath> {
    let nf = n as f64;
    let modes = (1..=n)
        .map(|j| {
            let jf = j as f64;
            let w = jf * jf / (nf * nf) * wmax;
            BathMode {
                frequency: w,
                reorganization: model.over_omega(w) * 2.0 * jf * wmax / (nf * nf),
            }
        })
        .collect();
    DiscretizedBath::from_modes(model, wmax, modes)
}

fn finish(bath: DiscretizedBath, spec: &Discretization) -> Result<DiscretizedBath> {
    if let Some(tol) = spec.tolerance {
        bath.check_sum_rule(tol)?;
    }
    Ok(bath)
}
