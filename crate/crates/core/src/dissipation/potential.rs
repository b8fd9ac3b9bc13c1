use crate::error::{Error, Result};
use crate::mqme::{LineShapes, PairEnvelope, Subsystem, Topology};

/// `I_BA(omega)` for one ordered pair on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativePotential {
    pub a: usize,
    pub b: usize,
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    pub tail_ratio: f64,
    pub tail_warning: bool,
}

/// Dissipative potential of the local-bath model,
/// `Re int exp(-i t (E_B - E_A + Lambda_AA + Lambda_BB) - g_AA - g_BB) [cos w t - i coth(beta w/2) sin w t] dt`.
pub fn dissipative_potential(
    sub: &Subsystem,
    a: usize,
    b: usize,
    shapes: &LineShapes,
    omegas: &[f64],
) -> Result<DissipativePotential> {
    if sub.topology() != Topology::LocalBath {
        return Err(Error::Model(
            "the dissipative potential is defined for the local-bath model; use the generalized kernel".into(),
        ));
    }
    generalized_potential(sub, a, b, shapes, omegas)
}

/// Same integral for any channel topology, with the pair phase
/// `E_B - E_A + Lambda_AA - 2 Lambda_AB + Lambda_BB` and envelope
/// `exp(-g_AA + 2 g_AB - g_BB)`.
pub fn generalized_potential(
    sub: &Subsystem,
    a: usize,
    b: usize,
    shapes: &LineShapes,
    omegas: &[f64],
) -> Result<DissipativePotential> {
    check_pair(sub, a, b)?;
    check_grid(omegas)?;
    let env = PairEnvelope::new(sub, shapes, a, b);
    Ok(potential_from_envelope(
        sub.energies(),
        a,
        b,
        &env,
        shapes,
        omegas,
    ))
}

pub(crate) fn potential_from_envelope(
    energies: &[f64],
    a: usize,
    b: usize,
    env: &PairEnvelope,
    shapes: &LineShapes,
    omegas: &[f64],
) -> DissipativePotential {
    let delta = energies[b] - energies[a] + env.reorganization();
    let values = env.phased(delta).kernel(omegas, shapes.beta());
    DissipativePotential {
        a,
        b,
        omegas: omegas.to_vec(),
        values,
        tail_ratio: env.tail_ratio(),
        tail_warning: env.tail_ratio() > shapes.quadrature().tail_tolerance,
    }
}

/// `J^C_BA(omega) = 2 V_AB^2 (J_CC(omega)/omega) I_BA(omega)` for the
/// local-bath model, with `J_CC` the analytic density of channel `c`.
pub fn dissipative_spectral_density(
    sub: &Subsystem,
    c: usize,
    potential: &DissipativePotential,
) -> Result<Vec<f64>> {
    let (a, b) = (potential.a, potential.b);
    if sub.topology() != Topology::LocalBath {
        return Err(Error::Model(
            "channel-resolved densities need the local-bath model".into(),
        ));
    }
    if c != a && c != b {
        return Err(Error::Model(format!(
            "channel {} does not take part in the {} -> {} transfer",
            c + 1,
            a + 1,
            b + 1
        )));
    }
    let v = sub.coupling(a, b);
    let bath = &sub.channels()[c].bath;
    Ok(potential
        .omegas
        .iter()
        .zip(&potential.values)
        .map(|(&w, &i)| 2.0 * v * v * bath.density_over_omega(w) * i)
        .collect())
}

/// `2 V_AB^2 (sum_c (kappa_Ac - kappa_Bc)^2 J_c(omega)/omega) I_BA(omega)`:
/// the frequency density of energy flowing into all channels together.
pub fn generalized_spectral_density(sub: &Subsystem, potential: &DissipativePotential) -> Vec<f64> {
    let (a, b) = (potential.a, potential.b);
    let v = sub.coupling(a, b);
    potential
        .omegas
        .iter()
        .zip(&potential.values)
        .map(|(&w, &i)| {
            let density: f64 = sub
                .channels()
                .iter()
                .enumerate()
                .map(|(c, ch)| sub.pair_weight(c, a, b) * ch.bath.density_over_omega(w))
                .sum();
            2.0 * v * v * density * i
        })
        .collect()
}

pub(crate) fn check_pair(sub: &Subsystem, a: usize, b: usize) -> Result<()> {
    if a == b || a >= sub.n_states() || b >= sub.n_states() {
        return Err(Error::Model(format!("invalid state pair ({a}, {b})")));
    }
    Ok(())
}

pub(crate) fn check_grid(omegas: &[f64]) -> Result<()> {
    if let Some(&w) = omegas.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::NegativeFrequency(w));
    }
    Ok(())
}
