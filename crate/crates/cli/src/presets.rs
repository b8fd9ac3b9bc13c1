use std::path::PathBuf;

use dissipath_core::bath::{Discretization, SpectralDensity};
use dissipath_core::heom::HeomConfig;

use crate::config::{
    BathBlock, ExperimentConfig, FrequencyGrid, MethodKind, ModelKind, ProbeBlock, SubsystemBlock,
    TssBlock,
};
use crate::error::CliError;

/// Dimer conditions: `(label, Lambda, T, dt_max, N_hier, N_Matsu, s_bp)`.
const DIMER: [(&str, f64, f64, f64, usize, usize, f64); 6] = [
    ("i", 0.05, 1.0, 0.02, 4, 30, 2e-6),
    ("ii", 0.2, 1.0, 0.1, 7, 30, 1e-5),
    ("iii", 1.0, 1.0, 0.05, 10, 30, 1e-5),
    ("iv", 2.0, 1.0, 0.05, 13, 30, 1e-5),
    ("v", 0.2, 0.5, 0.1, 7, 100, 1e-5),
    ("vi", 0.2, 0.25, 0.1, 7, 100, 1e-5),
];
const DIMER_GAPS: [(&str, f64); 3] = [("0", 0.0), ("1", 1.0), ("2", 2.0)];

/// Spin-boson conditions: `(label, Lambda)`.
const SPIN_BOSON: [(&str, f64); 3] = [("i", 0.05), ("ii", 0.25), ("iii", 1.0)];
const DAMPINGS: [(&str, f64); 3] = [("1", 1.0), ("0.25", 0.25), ("0.05", 0.05)];
/// Brownian-oscillator peak matched to the eigenenergy gap of `E = 2`,
/// `V = 0.25`.
const PEAK: f64 = 2.062;

pub fn names() -> Vec<String> {
    let mut out = Vec::new();
    for (c, ..) in DIMER {
        for (g, _) in DIMER_GAPS {
            out.push(format!("table1_cond_{c}_dE{g}"));
        }
    }
    for (c, _) in SPIN_BOSON {
        for (g, _) in DAMPINGS {
            out.push(format!("table2_cond_{c}_gamma{g}"));
        }
    }
    out
}

/// Methods a preset can be instantiated with.
pub fn methods(name: &str) -> Vec<MethodKind> {
    if name.starts_with("table2_") {
        vec![MethodKind::MqmeD, MethodKind::MqmeDTss]
    } else {
        vec![
            MethodKind::MqmeD,
            MethodKind::MqmeDTss,
            MethodKind::Heom,
            MethodKind::HeomD,
        ]
    }
}

/// Full configuration of a bundled preset for `method`.
pub fn preset(name: &str, method: MethodKind) -> Result<ExperimentConfig, CliError> {
    let unknown = || CliError::UnknownPreset(name.to_string());
    let cfg = if let Some(rest) = name.strip_prefix("table1_cond_") {
        let (cond, gap) = rest.split_once("_dE").ok_or_else(unknown)?;
        let &(_, lam, temp, dt_max, n_hier, n_matsu, s_bp) =
            DIMER.iter().find(|d| d.0 == cond).ok_or_else(unknown)?;
        let &(_, de) = DIMER_GAPS.iter().find(|g| g.0 == gap).ok_or_else(unknown)?;
        let bath = BathBlock {
            density: SpectralDensity::DrudeLorentz {
                reorganization: lam,
                cutoff: 0.5,
            },
            discretization: Discretization::default(),
        };
        let mut heom = HeomConfig::new(n_hier, n_matsu, dt_max);
        if method == MethodKind::HeomD {
            // Probe ladders multiply the state size; only the Drude
            // pole is kept at full depth.
            heom.deep_matsubara = 0;
        }
        ExperimentConfig {
            model: ModelKind::DimerLocalBath,
            method,
            beta: Some(1.0 / temp),
            seed: 1,
            output: None,
            subsystem: SubsystemBlock {
                energies: Some(vec![de, 0.0]),
                bias: None,
                coupling: 0.25,
                initial: Some(vec![1.0, 0.0]),
            },
            baths: vec![bath.clone(), bath],
            frequencies: (method != MethodKind::Heom).then_some(FrequencyGrid {
                start: 0.1,
                stop: 3.0,
                step: 0.05,
            }),
            quadrature: None,
            propagation: None,
            tss: (method == MethodKind::MqmeDTss).then_some(TssBlock {
                eta: 0.99,
                cutoff: 0.2,
                trajectories: if cond == "i" { 10_000 } else { 1000 },
                sigma_mode: Default::default(),
                topology: None,
            }),
            heom: matches!(method, MethodKind::Heom | MethodKind::HeomD).then_some(heom),
            probe: (method == MethodKind::HeomD).then_some(ProbeBlock {
                huang_rhys: s_bp,
                channels: None,
            }),
        }
    } else if let Some(rest) = name.strip_prefix("table2_cond_") {
        let (cond, gamma) = rest.split_once("_gamma").ok_or_else(unknown)?;
        let &(_, lam) = SPIN_BOSON
            .iter()
            .find(|d| d.0 == cond)
            .ok_or_else(unknown)?;
        let &(_, damping) = DAMPINGS.iter().find(|g| g.0 == gamma).ok_or_else(unknown)?;
        if !methods(name).contains(&method) {
            return Err(CliError::Validation {
                field: "method".into(),
                message: format!(
                    "{name} has no {} recipe; hierarchy methods need Drude-Lorentz baths",
                    method.name()
                ),
            });
        }
        let modes = if lam == 0.05 && damping == 0.05 {
            20_000
        } else {
            5000
        };
        ExperimentConfig {
            model: ModelKind::SpinBoson,
            method,
            beta: Some(1.0),
            seed: 1,
            output: None,
            subsystem: SubsystemBlock {
                energies: None,
                bias: Some(2.0),
                coupling: 0.25,
                initial: Some(vec![1.0, 0.0]),
            },
            baths: vec![BathBlock {
                density: SpectralDensity::BrownianOscillator {
                    reorganization: lam,
                    frequency: PEAK,
                    damping,
                },
                discretization: Discretization::new(modes, 15.0),
            }],
            frequencies: Some(FrequencyGrid {
                start: 0.1,
                stop: 3.0,
                step: 0.005,
            }),
            quadrature: None,
            propagation: None,
            tss: (method == MethodKind::MqmeDTss).then_some(TssBlock {
                eta: 0.6,
                cutoff: 0.2,
                trajectories: 1000,
                sigma_mode: Default::default(),
                topology: None,
            }),
            heom: None,
            probe: None,
        }
    } else {
        return Err(unknown());
    };
    Ok(ExperimentConfig {
        output: Some(PathBuf::from("runs").join(format!("{name}_{}", method.name()))),
        ..cfg
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_for_its_methods() {
        for name in names() {
            for m in methods(&name) {
                let cfg = preset(&name, m).unwrap();
                cfg.validate()
                    .unwrap_or_else(|e| panic!("{name} {m:?}: {e}"));
                let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
                assert_eq!(back, cfg);
            }
        }
        assert_eq!(names().len(), 27);
    }
}
