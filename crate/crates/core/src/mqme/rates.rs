use rayon::prelude::*;

use super::envelope::{LineShapes, PairEnvelope};
use super::subsystem::Subsystem;
use crate::error::{Error, Result};

/// One rate constant with its quadrature diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstant {
    pub value: f64,
    pub tail_ratio: f64,
    /// Set when the integrand had not decayed below the tail tolerance.
    pub tail_warning: bool,
}

/// Transfer rates `K_BA` (from `A` to `B`).
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    n: usize,
    k: Vec<f64>,
}

impl RateMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            k: vec![0.0; n * n],
        }
    }

    /// Builds from a row-major matrix with entry `[b][a] = K_BA`.
    pub fn from_rows(n: usize, k: Vec<f64>) -> Result<Self> {
        if k.len() != n * n {
            return Err(Error::Model(
                "rate matrix has the wrong number of entries".into(),
            ));
        }
        for b in 0..n {
            for a in 0..n {
                let v = k[b * n + a];
                if !v.is_finite() || v < 0.0 || (a == b && v != 0.0) {
                    return Err(Error::Model(format!(
                        "rate K_{}{} = {v} must be finite, nonnegative and zero on the diagonal",
                        b + 1,
                        a + 1
                    )));
                }
            }
        }
        Ok(Self { n, k })
    }

    /// Two-level matrix from `K12` (2 -> 1) and `K21` (1 -> 2).
    pub fn two_level(k12: f64, k21: f64) -> Result<Self> {
        Self::from_rows(2, vec![0.0, k12, k21, 0.0])
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    /// `K_BA`, the rate from `a` to `b`.
    pub fn rate(&self, b: usize, a: usize) -> f64 {
        self.k[b * self.n + a]
    }

    pub(crate) fn set(&mut self, b: usize, a: usize, v: f64) {
        self.k[b * self.n + a] = v;
    }

    /// Generator `G` with `G_BA = K_BA` and columns summing to zero.
    pub fn generator(&self) -> Vec<f64> {
        let n = self.n;
        let mut g = self.k.clone();
        for a in 0..n {
            let drain: f64 = (0..n).filter(|&b| b != a).map(|b| self.k[b * n + a]).sum();
            g[a * n + a] = -drain;
        }
        g
    }
}

/// Rate constants for every ordered pair, with the envelopes they were
/// built from.
#[derive(Debug, Clone)]
pub struct RateSet {
    pub matrix: RateMatrix,
    /// `(b, a, constant)` for every ordered pair with nonzero coupling.
    pub constants: Vec<(usize, usize, RateConstant)>,
}

impl RateSet {
    pub fn warnings(&self) -> Vec<String> {
        self.constants
            .iter()
            .filter(|c| c.2.tail_warning)
            .map(|&(b, a, c)| {
                format!(
                    "rate K_{}{}: integrand tail ratio {:.3e} above tolerance",
                    b + 1,
                    a + 1,
                    c.tail_ratio
                )
            })
            .collect()
    }
}

/// `K_BA = 2 V_AB^2 Re int_0^T exp(-i t (E_B - E_A + Lambda_AA - 2 Lambda_AB + Lambda_BB)) F_AB(t) dt`.
pub fn rate_constant(
    sub: &Subsystem,
    a: usize,
    b: usize,
    shapes: &LineShapes,
) -> Result<RateConstant> {
    if a == b || a >= sub.n_states() || b >= sub.n_states() {
        return Err(Error::Model(format!("invalid state pair ({a}, {b})")));
    }
    let v = sub.coupling(a, b);
    if v == 0.0 {
        return Ok(RateConstant {
            value: 0.0,
            tail_ratio: 0.0,
            tail_warning: false,
        });
    }
    let env = PairEnvelope::new(sub, shapes, a, b);
    Ok(rate_from_envelope(sub.energies(), v, a, b, &env, shapes))
}

pub(crate) fn rate_from_envelope(
    energies: &[f64],
    v: f64,
    a: usize,
    b: usize,
    env: &PairEnvelope,
    shapes: &LineShapes,
) -> RateConstant {
    let delta = energies[b] - energies[a] + env.reorganization();
    let value = 2.0 * v * v * env.phased(delta).integral();
    let tail_ratio = env.tail_ratio();
    RateConstant {
        value,
        tail_ratio,
        tail_warning: tail_ratio > shapes.quadrature().tail_tolerance,
    }
}

/// All rate constants of a subsystem, evaluated in parallel over pairs.
///
/// Small negative values produced by quadrature noise in strongly uphill
/// directions are clamped to zero so the matrix stays a valid generator.
pub fn rate_matrix(sub: &Subsystem, shapes: &LineShapes) -> Result<RateSet> {
    let n = sub.n_states();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (b, a)))
        .filter(|&(b, a)| a != b && sub.coupling(a, b) != 0.0)
        .collect();
    let constants: Vec<(usize, usize, RateConstant)> = pairs
        .par_iter()
        .map(|&(b, a)| rate_constant(sub, a, b, shapes).map(|c| (b, a, c)))
        .collect::<Result<_>>()?;
    let mut matrix = RateMatrix::zeros(n);
    for &(b, a, c) in &constants {
        matrix.set(b, a, c.value.max(0.0));
    }
    Ok(RateSet { matrix, constants })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_columns_sum_to_zero() {
        let k =
            RateMatrix::from_rows(3, vec![0.0, 0.3, 0.1, 0.2, 0.0, 0.5, 0.7, 0.4, 0.0]).unwrap();
        let g = k.generator();
        for a in 0..3 {
            let s: f64 = (0..3).map(|b| g[b * 3 + a]).sum();
            assert!(s.abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_rates_rejected() {
        assert!(RateMatrix::from_rows(2, vec![0.0, -1.0, 0.0, 0.0]).is_err());
        assert!(RateMatrix::from_rows(2, vec![1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(RateMatrix::from_rows(2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}
