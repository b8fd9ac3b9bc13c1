use serde::{Deserialize, Serialize};

use super::discretize::{BathMode, DiscretizedBath};
use crate::error::{positive, Error, Result};
use crate::numeric::thermal_factor;

/// Slow/fast partition of a spectral density, `S(w) = eta (1 - (w/w*)^2)^2`
/// below the cutoff `w*` and zero above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TssSplit {
    pub eta: f64,
    pub cutoff: f64,
}

impl TssSplit {
    pub fn new(eta: f64, cutoff: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Parameter {
                name: "eta",
                requirement: "within [0, 1]",
                value: eta,
            });
        }
        positive("splitting cutoff", cutoff)?;
        Ok(Self { eta, cutoff })
    }

    /// Slow fraction `S(omega)`.
    pub fn slow_fraction(&self, omega: f64) -> f64 {
        if omega < self.cutoff {
            let r = omega / self.cutoff;
            let u = 1.0 - r * r;
            self.eta * u * u
        } else {
            0.0
        }
    }

    /// Fast fraction `1 - S(omega)`.
    pub fn fast_weight(&self, omega: f64) -> f64 {
        1.0 - self.slow_fraction(omega)
    }
}

/// Result of splitting a discretized bath.
#[derive(Debug, Clone)]
pub struct SplitBath {
    pub fast: DiscretizedBath,
    /// `sum_j S(w_j) lambda_j w_j coth(beta w_j / 2)`, the discrete form of
    /// `\int J_slow(w) coth(beta w / 2) dw`.
    pub sigma_slow: f64,
}

/// Splits `bath` into its fast component and the static-disorder scale of
/// the slow component.
pub fn split_tss(bath: &DiscretizedBath, split: TssSplit, beta: f64) -> Result<SplitBath> {
    positive("beta", beta)?;
    let mut sigma = 0.0;
    let modes = bath
        .modes()
        .iter()
        .map(|m| {
            let s = split.slow_fraction(m.frequency);
            if s > 0.0 {
                sigma += s * m.reorganization * m.frequency * thermal_factor(beta, m.frequency);
            }
            BathMode {
                frequency: m.frequency,
                reorganization: m.reorganization - s * m.reorganization,
            }
        })
        .collect();
    Ok(SplitBath {
        fast: bath.with_split(split, modes),
        sigma_slow: sigma,
    })
}
