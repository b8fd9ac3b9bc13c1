use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{positive, Error, Result};

/// One term `c exp(-nu t)` of a bath correlation function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coefficient: Complex64,
    pub rate: f64,
}

/// Drude pole plus `n_matsubara` Matsubara terms of
/// `C(t) = \int_0^\infty J(w) [coth(beta w/2) cos(w t) - i sin(w t)] dw`
/// for the Drude-Lorentz density with reorganization energy `lambda` and
/// cutoff `gamma`.
pub fn drude_lorentz_terms(
    lambda: f64,
    gamma: f64,
    beta: f64,
    n_matsubara: usize,
) -> Result<Vec<ExpTerm>> {
    positive("reorganization energy", lambda)?;
    positive("cutoff frequency", gamma)?;
    positive("beta", beta)?;
    let mut terms = Vec::with_capacity(n_matsubara + 1);
    let half = 0.5 * beta * gamma;
    if (half / PI - (half / PI).round()).abs() < 1e-10 && half > 0.5 {
        return Err(Error::Model(format!(
            "cutoff {gamma} coincides with a Matsubara frequency at beta = {beta}"
        )));
    }
    terms.push(ExpTerm {
        coefficient: Complex64::new(lambda * gamma / half.tan(), -lambda * gamma),
        rate: gamma,
    });
    for k in 1..=n_matsubara {
        let nu = 2.0 * PI * k as f64 / beta;
        terms.push(ExpTerm {
            coefficient: Complex64::new(
                4.0 * lambda * gamma / beta * nu / (nu * nu - gamma * gamma),
                0.0,
            ),
            rate: nu,
        });
    }
    Ok(terms)
}

/// `sum_k c_k exp(-nu_k t)`.
pub fn correlation(terms: &[ExpTerm], t: f64) -> Complex64 {
    terms
        .iter()
        .map(|x| x.coefficient * (-x.rate * t).exp())
        .sum()
}
