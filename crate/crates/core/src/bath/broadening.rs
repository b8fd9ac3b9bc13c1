use num_complex::Complex64;

use super::discretize::DiscretizedBath;
use crate::error::{positive, Error, Result};
use crate::numeric::thermal_factor;

/// Exact `sin_cos` is re-evaluated at the start of every block so that the
/// phasor recurrence never runs longer than this many steps.
const BLOCK: usize = 1024;
/// Modes advanced together in the inner loop.
const LANES: usize = 8;

/// `g(t)` of one channel on the lattice `t_k = k dt`, `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct LineBroadening {
    dt: f64,
    beta: f64,
    reorganization: f64,
    values: Vec<Complex64>,
}

impl LineBroadening {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `sum_j lambda_j` of the bath the table was built from; the long-time
    /// slope of `-Im g`.
    pub fn reorganization(&self) -> f64 {
        self.reorganization
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Number of lattice points in `{0, dt, ..., t_int}`.
pub fn lattice_len(dt: f64, t_int: f64) -> usize {
    (t_int / dt).round() as usize + 1
}

/// Line-broadening function
/// `g(t) = sum_j (lambda_j / w_j) [coth(beta w_j / 2)(1 - cos w_j t) + i (sin w_j t - w_j t)]`.
pub fn line_broadening(
    bath: &DiscretizedBath,
    beta: f64,
    dt: f64,
    t_int: f64,
) -> Result<LineBroadening> {
    positive("beta", beta)?;
    positive("time step", dt)?;
    if !(t_int >= dt) {
        return Err(Error::Parameter {
            name: "integration horizon",
            requirement: "at least one time step",
            value: t_int,
        });
    }
    let n = lattice_len(dt, t_int);
    let modes = bath.modes();
    let mut re = vec![0.0f64; n];
    let mut im = vec![0.0f64; n];

    for group in modes.chunks(LANES) {
        let mut a = [0.0; LANES];
        let mut b = [0.0; LANES];
        let mut w = [0.0; LANES];
        for (l, m) in group.iter().enumerate() {
            let ratio = m.reorganization / m.frequency;
            a[l] = ratio * thermal_factor(beta, m.frequency);
            b[l] = ratio;
            w[l] = m.frequency;
        }
        let mut rot_c = [1.0; LANES];
        let mut rot_s = [0.0; LANES];
        for l in 0..LANES {
            let (s, c) = (w[l] * dt).sin_cos();
            rot_c[l] = c;
            rot_s[l] = s;
        }
        let mut start = 0;
        while start < n {
            let end = (start + BLOCK).min(n);
            let t0 = start as f64 * dt;
            let mut c = [1.0; LANES];
            let mut s = [0.0; LANES];
            for l in 0..LANES {
                let (sv, cv) = (w[l] * t0).sin_cos();
                c[l] = cv;
                s[l] = sv;
            }
            for k in start..end {
                let mut dre = 0.0;
                let mut dim = 0.0;
                for l in 0..LANES {
                    dre += a[l] * (1.0 - c[l]);
                    dim += b[l] * s[l];
                    let cn = c[l] * rot_c[l] - s[l] * rot_s[l];
                    let sn = s[l] * rot_c[l] + c[l] * rot_s[l];
                    c[l] = cn;
                    s[l] = sn;
                }
                re[k] += dre;
                im[k] += dim;
            }
            start = end;
        }
    }

    let total = bath.total_reorganization();
    let values = re
        .into_iter()
        .zip(im)
        .enumerate()
        .map(|(k, (r, i))| Complex64::new(r, i - total * (k as f64 * dt)))
        .collect();
    Ok(LineBroadening {
        dt,
        beta,
        reorganization: total,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathMode, SpectralDensity};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn single(w: f64, lam: f64) -> DiscretizedBath {
        let dl = SpectralDensity::drude_lorentz(1.0, 1.0).unwrap();
        DiscretizedBath::from_modes(
            dl,
            10.0,
            vec![BathMode {
                frequency: w,
                reorganization: lam,
            }],
        )
        .unwrap()
    }

    #[test]
    fn zero_at_origin() {
        let g = line_broadening(&single(1.3, 0.4), 1.0, 0.01, 10.0).unwrap();
        assert_eq!(g.values()[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_mode_low_temperature_period() {
        // t = 2 pi lands on the lattice for dt = 2 pi / 1000.
        let dt = 2.0 * PI / 1000.0;
        let g = line_broadening(&single(1.0, 1.0), 1e3, dt, 4.0 * PI).unwrap();
        let v = g.values()[1000];
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, -2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn matches_direct_evaluation_past_block_boundary() {
        let dl = SpectralDensity::drude_lorentz(0.2, 0.5).unwrap();
        let modes: Vec<BathMode> = (1..=13)
            .map(|j| BathMode {
                frequency: 0.37 * j as f64,
                reorganization: 0.01 / j as f64,
            })
            .collect();
        let bath = DiscretizedBath::from_modes(dl, 15.0, modes.clone()).unwrap();
        let g = line_broadening(&bath, 0.7, 0.01, 50.0).unwrap();
        for k in [0usize, 1, 1023, 1024, 1025, 3333, 5000] {
            let t = k as f64 * 0.01;
            let mut direct = Complex64::new(0.0, 0.0);
            for m in &modes {
                let r = m.reorganization / m.frequency;
                let c = 1.0 / (0.35 * m.frequency).tanh();
                direct += Complex64::new(
                    r * c * (1.0 - (m.frequency * t).cos()),
                    r * ((m.frequency * t).sin() - m.frequency * t),
                );
            }
            assert_abs_diff_eq!(g.values()[k].re, direct.re, epsilon = 1e-13);
            assert_abs_diff_eq!(g.values()[k].im, direct.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn lattice_len_includes_endpoint() {
        assert_eq!(lattice_len(0.01, 5000.0), 500_001);
    }
}
