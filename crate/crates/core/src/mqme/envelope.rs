use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::subsystem::Subsystem;
use crate::bath::{lattice_len, line_broadening, LineBroadening};
use crate::error::{positive, Error, Result};
use crate::numeric::thermal_factor;

/// Envelope samples below this magnitude (relative to `|F(0)| = 1`) are
/// dropped from the end of the lattice.
const ENVELOPE_FLOOR: f64 = 1e-18;
const RESEED: usize = 2048;
const LANES: usize = 4;

/// Trapezoid settings for the oscillatory time integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub dt: f64,
    pub t_int: f64,
    /// `|integrand(T_int)| / max |integrand|` above which a result is flagged.
    pub tail_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_int: 5000.0,
            tail_tolerance: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        positive("quadrature step", self.dt)?;
        positive("tail tolerance", self.tail_tolerance)?;
        if !(self.t_int >= self.dt) || !self.t_int.is_finite() {
            return Err(Error::Parameter {
                name: "integration horizon",
                requirement: "finite and at least one step",
                value: self.t_int,
            });
        }
        Ok(())
    }
}

/// Line-broadening tables for every channel of a subsystem.
#[derive(Debug, Clone)]
pub struct LineShapes {
    beta: f64,
    quad: QuadratureSpec,
    tables: Vec<LineBroadening>,
}

impl LineShapes {
    pub fn new(sub: &Subsystem, beta: f64, quad: QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        positive("beta", beta)?;
        let mut tables: Vec<LineBroadening> = Vec::with_capacity(sub.channels().len());
        for (c, ch) in sub.channels().iter().enumerate() {
            let reuse = sub.channels()[..c].iter().position(|p| p.bath == ch.bath);
            let table = match reuse {
                Some(p) => tables[p].clone(),
                None => line_broadening(&ch.bath, beta, quad.dt, quad.t_int)?,
            };
            tables.push(table);
        }
        Ok(Self { beta, quad, tables })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn table(&self, channel: usize) -> &LineBroadening {
        &self.tables[channel]
    }
}

/// `F_AB(t) = exp(-sum_c (kappa_Ac - kappa_Bc)^2 g_c(t))`, the bath factor
/// shared by the rate and dissipation integrals of one state pair.
#[derive(Debug, Clone)]
pub struct PairEnvelope {
    dt: f64,
    /// Trapezoid-weighted samples `w_k dt F(t_k)` up to the last one above
    /// the floor.
    weighted: Vec<Complex64>,
    reorganization: f64,
    tail_ratio: f64,
}

impl PairEnvelope {
    pub fn new(sub: &Subsystem, shapes: &LineShapes, a: usize, b: usize) -> Self {
        let quad = shapes.quadrature();
        let n = lattice_len(quad.dt, quad.t_int);
        let weights: Vec<(usize, f64)> = (0..sub.channels().len())
            .map(|c| (c, sub.pair_weight(c, a, b)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        let mut values: Vec<Complex64> = (0..n)
            .map(|k| {
                let mut exponent = Complex64::new(0.0, 0.0);
                for &(c, w) in &weights {
                    exponent -= shapes.table(c).values()[k] * w;
                }
                exponent.exp()
            })
            .collect();
        let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tail_ratio = if peak > 0.0 {
            values[n - 1].norm() / peak
        } else {
            0.0
        };
        let support = values
            .iter()
            .rposition(|v| v.norm() > ENVELOPE_FLOOR * peak)
            .map_or(1, |k| k + 1)
            .max(2)
            .min(n);
        let full = support == n;
        values.truncate(support);
        for v in values.iter_mut() {
            *v *= quad.dt;
        }
        values[0] *= 0.5;
        if full {
            values[n - 1] *= 0.5;
        }
        Self {
            dt: quad.dt,
            weighted: values,
            reorganization: sub.pair_reorganization(a, b),
            tail_ratio,
        }
    }

    /// `Lambda_AA - 2 Lambda_AB + Lambda_BB`.
    pub fn reorganization(&self) -> f64 {
        self.reorganization
    }

    /// `|F(T_int)| / max |F|`.
    pub fn tail_ratio(&self) -> f64 {
        self.tail_ratio
    }

    /// Number of lattice points kept after dropping the decayed tail.
    pub fn support(&self) -> usize {
        self.weighted.len()
    }

    /// Quadrature weights `w_k dt F(t_k) exp(-i delta t_k)`.
    pub fn phased(&self, delta: f64) -> PhasedEnvelope {
        let mut out = Vec::with_capacity(self.weighted.len());
        let (rs, rc) = (delta * self.dt).sin_cos();
        let rot = Complex64::new(rc, -rs);
        for (block, chunk) in self.weighted.chunks(RESEED).enumerate() {
            let t0 = (block * RESEED) as f64 * self.dt;
            let (s, c) = (delta * t0).sin_cos();
            let mut phase = Complex64::new(c, -s);
            for f in chunk {
                out.push(f * phase);
                phase *= rot;
            }
        }
        PhasedEnvelope {
            dt: self.dt,
            values: out,
        }
    }
}

/// Phase-weighted envelope for one transfer direction.
#[derive(Debug, Clone)]
pub struct PhasedEnvelope {
    dt: f64,
    values: Vec<Complex64>,
}

impl PhasedEnvelope {
    /// `Re int_0^T exp(-i delta t) F(t) dt`.
    pub fn integral(&self) -> f64 {
        self.values.iter().map(|v| v.re).sum()
    }

    /// `Re int_0^T exp(-i delta t) F(t) [cos w t - i coth(beta w/2) sin w t] dt`
    /// for every `w` in `omegas`; `w = 0` uses the limit `coth sin -> (2/beta) t`.
    pub fn kernel(&self, omegas: &[f64], beta: f64) -> Vec<f64> {
        let mut out = vec![0.0; omegas.len()];
        let mut idx = 0;
        while idx < omegas.len() {
            let end = (idx + LANES).min(omegas.len());
            let mut w = [0.0; LANES];
            w[..end - idx].copy_from_slice(&omegas[idx..end]);
            let sums = self.cos_sin_sums(&w);
            for l in 0..end - idx {
                let (cos_re, sin_im) = sums[l];
                out[idx + l] = if w[l] == 0.0 {
                    cos_re + 2.0 / beta * self.time_moment_im()
                } else {
                    cos_re + thermal_factor(beta, w[l]) * sin_im
                };
            }
            idx = end;
        }
        out
    }

    /// `Im sum G_k t_k`.
    fn time_moment_im(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v.im * (k as f64 * self.dt))
            .sum()
    }

    /// `(Re sum G_k cos w t_k, Im sum G_k sin w t_k)` per lane.
    fn cos_sin_sums(&self, w: &[f64; LANES]) -> [(f64, f64); LANES] {
        let mut rot_c = [0.0; LANES];
        let mut rot_s = [0.0; LANES];
        for l in 0..LANES {
            let (s, c) = (w[l] * self.dt).sin_cos();
            rot_c[l] = c;
            rot_s[l] = s;
        }
        let mut acc_c = [0.0; LANES];
        let mut acc_s = [0.0; LANES];
        for (block, chunk) in self.values.chunks(RESEED).enumerate() {
            let t0 = (block * RESEED) as f64 * self.dt;
            let mut c = [0.0; LANES];
            let mut s = [0.0; LANES];
            for l in 0..LANES {
                let (sv, cv) = (w[l] * t0).sin_cos();
                c[l] = cv;
                s[l] = sv;
            }
            for g in chunk {
                for l in 0..LANES {
                    acc_c[l] += g.re * c[l];
                    acc_s[l] += g.im * s[l];
                    let cn = c[l] * rot_c[l] - s[l] * rot_s[l];
                    let sn = s[l] * rot_c[l] + c[l] * rot_s[l];
                    c[l] = cn;
                    s[l] = sn;
                }
            }
        }
        let mut out = [(0.0, 0.0); LANES];
        for l in 0..LANES {
            out[l] = (acc_c[l], acc_s[l]);
        }
        out
    }
}
