use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{positive, Error, Result};
use crate::numeric::{integrate, QuadTolerance};

/// Analytic bath spectral density `J(omega)`.
///
/// Both variants are normalized so that `\int_0^\infty J(w)/w dw` equals the
/// reorganization energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralDensity {
    DrudeLorentz {
        reorganization: f64,
        cutoff: f64,
    },
    BrownianOscillator {
        reorganization: f64,
        frequency: f64,
        damping: f64,
    },
}

impl SpectralDensity {
    pub fn drude_lorentz(reorganization: f64, cutoff: f64) -> Result<Self> {
        let model = SpectralDensity::DrudeLorentz {
            reorganization,
            cutoff,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn brownian_oscillator(reorganization: f64, frequency: f64, damping: f64) -> Result<Self> {
        let model = SpectralDensity::BrownianOscillator {
            reorganization,
            frequency,
            damping,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpectralDensity::DrudeLorentz {
                reorganization,
                cutoff,
            } => {
                positive("reorganization energy", reorganization)?;
                positive("cutoff frequency", cutoff)?;
            }
            SpectralDensity::BrownianOscillator {
                reorganization,
                frequency,
                damping,
            } => {
                positive("reorganization energy", reorganization)?;
                positive("oscillator frequency", frequency)?;
                positive("damping", damping)?;
            }
        }
        Ok(())
    }

    /// Total reorganization energy over the full half line.
    pub fn reorganization(&self) -> f64 {
        match *self {
            SpectralDensity::DrudeLorentz { reorganization, .. }
            | SpectralDensity::BrownianOscillator { reorganization, .. } => reorganization,
        }
    }

    /// `J(omega)`; negative frequencies are rejected.
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 || omega.is_nan() {
            return Err(Error::NegativeFrequency(omega));
        }
        Ok(self.value(omega))
    }

    /// `J(omega)` without domain checking.
    pub fn value(&self, omega: f64) -> f64 {
        omega * self.over_omega(omega)
    }

    /// `J(omega) / omega`, finite at `omega = 0`.
    pub fn over_omega(&self, omega: f64) -> f64 {
        match *self {
            SpectralDensity::DrudeLorentz {
                reorganization,
                cutoff,
            } => 2.0 * reorganization / PI * cutoff / (omega * omega + cutoff * cutoff),
            SpectralDensity::BrownianOscillator {
                reorganization,
                frequency,
                damping,
            } => {
                let w0sq = frequency * frequency;
                let detune = omega * omega - w0sq;
                4.0 * reorganization * damping * w0sq
                    / PI
                    / (detune * detune + 4.0 * damping * damping * omega * omega)
            }
        }
    }

    /// Frequencies where the integrand of the reorganization integral
    /// has structure worth splitting the quadrature at.
    pub fn features(&self) -> Vec<f64> {
        match *self {
            SpectralDensity::DrudeLorentz { cutoff, .. } => vec![cutoff],
            SpectralDensity::BrownianOscillator {
                frequency, damping, ..
            } => {
                let mut v = vec![frequency];
                for k in [-4.0, -1.0, 1.0, 4.0] {
                    let x = frequency + k * damping;
                    if x > 0.0 {
                        v.push(x);
                    }
                }
                v
            }
        }
    }

    /// `\int_0^{omega_max} J(w)/w dw`; `omega_max` may be infinite.
    pub fn reorganization_energy(&self, omega_max: f64) -> Result<f64> {
        if !(omega_max > 0.0) {
            return Err(Error::Parameter {
                name: "omega_max",
                requirement: "positive or infinite",
                value: omega_max,
            });
        }
        if omega_max.is_infinite() {
            if let SpectralDensity::DrudeLorentz { reorganization, .. } = *self {
                return Ok(reorganization);
            }
        }
        let q = integrate(
            |w| self.over_omega(w),
            0.0,
            omega_max,
            &self.features(),
            QuadTolerance::default(),
        )?;
        Ok(q.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn drude_lorentz_at_cutoff() {
        let j = SpectralDensity::drude_lorentz(0.7, 0.5).unwrap();
        assert_relative_eq!(j.evaluate(0.5).unwrap(), 0.7 / PI, max_relative = 1e-15);
        assert_eq!(j.evaluate(0.0).unwrap(), 0.0);
    }

    #[test]
    fn brownian_at_resonance_matches_direct_form() {
        let (lam, w0, g) = (0.05, 2.062, 0.05);
        let j = SpectralDensity::brownian_oscillator(lam, w0, g).unwrap();
        // J_BO(w) = (2 lam g / pi) * 2 w0^2 w / ((w^2 - w0^2)^2 + 4 g^2 w^2); at w = w0
        // the detuning vanishes and it reduces to lam w0 / (pi g).
        let direct = lam * w0 / (PI * g);
        assert_relative_eq!(j.evaluate(w0).unwrap(), direct, max_relative = 1e-14);
        assert_eq!(j.evaluate(0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_frequency_rejected() {
        let j = SpectralDensity::drude_lorentz(0.2, 0.5).unwrap();
        assert_eq!(j.evaluate(-1.0), Err(Error::NegativeFrequency(-1.0)));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(SpectralDensity::drude_lorentz(0.0, 0.5).is_err());
        assert!(SpectralDensity::brownian_oscillator(0.1, 2.0, -1.0).is_err());
    }

    #[test]
    fn normalizations() {
        let dl = SpectralDensity::drude_lorentz(0.2, 0.5).unwrap();
        assert_eq!(dl.reorganization_energy(f64::INFINITY).unwrap(), 0.2);
        for g in [0.05, 0.25, 1.0] {
            let bo = SpectralDensity::brownian_oscillator(0.25, 2.062, g).unwrap();
            assert_relative_eq!(
                bo.reorganization_energy(f64::INFINITY).unwrap(),
                0.25,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn truncated_drude_lorentz_matches_arctangent() {
        let dl = SpectralDensity::drude_lorentz(1.0, 0.5).unwrap();
        let exact = 2.0 / PI * (15.0f64 / 0.5).atan();
        assert_relative_eq!(
            dl.reorganization_energy(15.0).unwrap(),
            exact,
            max_relative = 1e-12
        );
        assert!((exact - 0.979).abs() < 0.001);
    }
}
