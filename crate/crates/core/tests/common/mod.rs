#![allow(dead_code)]

use dissipath_core::bath::*;
use dissipath_core::mqme::*;

/// Reorganization energy and temperature of the dimer conditions.
pub const CONDITIONS: [(f64, f64); 6] = [
    (0.05, 1.0),
    (0.2, 1.0),
    (1.0, 1.0),
    (2.0, 1.0),
    (0.2, 0.5),
    (0.2, 0.25),
];

pub fn drude_bath(lam: f64) -> DiscretizedBath {
    let dl = SpectralDensity::drude_lorentz(lam, 0.5).unwrap();
    discretize(dl, &Discretization::default()).unwrap()
}

/// Dimer with `E_1 = de`, `E_2 = 0`, `V = 0.25` and identical local baths.
pub fn dimer(condition: usize, de: f64) -> (Subsystem, f64) {
    let (lam, temp) = CONDITIONS[condition];
    let bath = drude_bath(lam);
    (
        Subsystem::dimer(de, 0.0, 0.25, bath.clone(), bath).unwrap(),
        1.0 / temp,
    )
}
