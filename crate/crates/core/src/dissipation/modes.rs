use super::potential::{check_pair, potential_from_envelope};
use crate::error::{Error, Result};
use crate::mqme::{LineShapes, PairEnvelope, PopulationTrajectory, Subsystem};
use crate::numeric::trapezoid;

/// Per-mode dissipation rate constants `K^j_BA` for one ordered pair,
/// indexed `[channel][mode]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRates {
    pub a: usize,
    pub b: usize,
    pub per_channel: Vec<Vec<f64>>,
}

/// Mode rates for every ordered pair with nonzero coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDissipationRates {
    pub n_states: usize,
    pub pairs: Vec<ModeRates>,
}

/// `K^j_BA = 2 V_AB^2 (lambda^j_AA - 2 lambda^j_AB + lambda^j_BB) Re int exp(-i Delta t) F_AB(t)
/// [cos w_j t - i coth(beta w_j/2) sin w_j t] dt` for every mode of every channel.
pub fn mode_dissipation_rates_for_pair(
    sub: &Subsystem,
    a: usize,
    b: usize,
    shapes: &LineShapes,
) -> Result<ModeRates> {
    check_pair(sub, a, b)?;
    let v = sub.coupling(a, b);
    let env = PairEnvelope::new(sub, shapes, a, b);
    let per_channel = sub
        .channels()
        .iter()
        .enumerate()
        .map(|(c, ch)| {
            let weight = sub.pair_weight(c, a, b);
            if v == 0.0 || weight == 0.0 {
                return vec![0.0; ch.bath.len()];
            }
            let freqs: Vec<f64> = ch.bath.modes().iter().map(|m| m.frequency).collect();
            let kernel = potential_from_envelope(sub.energies(), a, b, &env, shapes, &freqs);
            ch.bath
                .modes()
                .iter()
                .zip(&kernel.values)
                .map(|(m, &i)| 2.0 * v * v * weight * m.reorganization * i)
                .collect()
        })
        .collect();
    Ok(ModeRates { a, b, per_channel })
}

/// Single entry `K^j_BA` of channel `c`.
pub fn mode_dissipation_rate_constant(
    sub: &Subsystem,
    a: usize,
    b: usize,
    c: usize,
    j: usize,
    shapes: &LineShapes,
) -> Result<f64> {
    check_pair(sub, a, b)?;
    let ch = sub
        .channels()
        .get(c)
        .ok_or_else(|| Error::Model(format!("no channel {c}")))?;
    let mode = ch
        .bath
        .modes()
        .get(j)
        .ok_or_else(|| Error::Model(format!("no mode {j} in channel {c}")))?;
    let v = sub.coupling(a, b);
    let prefactor = sub.mode_reorganization(c, j, a, a) - 2.0 * sub.mode_reorganization(c, j, a, b)
        + sub.mode_reorganization(c, j, b, b);
    if v == 0.0 || prefactor == 0.0 {
        return Ok(0.0);
    }
    let env = PairEnvelope::new(sub, shapes, a, b);
    let kernel = potential_from_envelope(sub.energies(), a, b, &env, shapes, &[mode.frequency]);
    Ok(2.0 * v * v * prefactor * kernel.values[0])
}

/// Mode rates for all ordered pairs.
pub fn mode_dissipation_rates(
    sub: &Subsystem,
    shapes: &LineShapes,
) -> Result<ModeDissipationRates> {
    let n = sub.n_states();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && sub.coupling(a, b) != 0.0 {
                pairs.push(mode_dissipation_rates_for_pair(sub, a, b, shapes)?);
            }
        }
    }
    Ok(ModeDissipationRates { n_states: n, pairs })
}

/// `dE_j/dt = sum_{A != B} K^j_BA P_A(t)` at lattice index `k`, per channel.
pub fn total_mode_rate(
    traj: &PopulationTrajectory,
    rates: &ModeDissipationRates,
    k: usize,
) -> Vec<Vec<f64>> {
    let p = traj.populations(k);
    combine(rates, |a| p[a])
}

/// `int_0^T dE_j/dt dt` per channel and mode, by trapezoid on the
/// population lattice.
pub fn mode_energies(traj: &PopulationTrajectory, rates: &ModeDissipationRates) -> Vec<Vec<f64>> {
    let occupation: Vec<f64> = (0..traj.n_states())
        .map(|a| {
            let series: Vec<f64> = traj.rows().map(|p| p[a]).collect();
            trapezoid(&series, traj.dt())
        })
        .collect();
    combine(rates, |a| occupation[a])
}

fn combine<F: Fn(usize) -> f64>(rates: &ModeDissipationRates, weight: F) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = match rates.pairs.first() {
        Some(p) => p.per_channel.iter().map(|v| vec![0.0; v.len()]).collect(),
        None => return Vec::new(),
    };
    for pair in &rates.pairs {
        let w = weight(pair.a);
        for (acc, ch) in out.iter_mut().zip(&pair.per_channel) {
            for (x, k) in acc.iter_mut().zip(ch) {
                *x += k * w;
            }
        }
    }
    out
}

/// Bins per-mode energies of one channel into a density on `edges`
/// (energy per unit frequency in each bin).
pub fn bin_modes(frequencies: &[f64], energies: &[f64], edges: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; edges.len().saturating_sub(1)];
    for (&w, &e) in frequencies.iter().zip(energies) {
        if let Some(i) = edges.windows(2).position(|b| w >= b[0] && w < b[1]) {
            out[i] += e;
        }
    }
    for (i, x) in out.iter_mut().enumerate() {
        *x /= edges[i + 1] - edges[i];
    }
    out
}
