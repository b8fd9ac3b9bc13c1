use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Embedded explicit Runge-Kutta pair of orders 4 and 5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tableau {
    pub c: [f64; 6],
    pub a: [[f64; 5]; 6],
    pub b5: [f64; 6],
    pub b4: [f64; 6],
}

pub const CASH_KARP: Tableau = Tableau {
    c: [0.0, 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0],
    a: [
        [0.0; 5],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0, 0.0, 0.0],
        [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
        ],
    ],
    b5: [
        37.0 / 378.0,
        0.0,
        250.0 / 621.0,
        125.0 / 594.0,
        0.0,
        512.0 / 1771.0,
    ],
    b4: [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        1.0 / 4.0,
    ],
};

pub const FEHLBERG: Tableau = Tableau {
    c: [0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0],
    a: [
        [0.0; 5],
        [1.0 / 4.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
        [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
        [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
        [
            -8.0 / 27.0,
            2.0,
            -3544.0 / 2565.0,
            1859.0 / 4104.0,
            -11.0 / 40.0,
        ],
    ],
    b5: [
        16.0 / 135.0,
        0.0,
        6656.0 / 12825.0,
        28561.0 / 56430.0,
        -9.0 / 50.0,
        2.0 / 55.0,
    ],
    b4: [
        25.0 / 216.0,
        0.0,
        1408.0 / 2565.0,
        2197.0 / 4104.0,
        -1.0 / 5.0,
        0.0,
    ],
};

/// Choice of embedded pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    CashKarp,
    /// Its stages run backwards in time (`c_6 < c_5`), which amplifies
    /// fast-decaying components under the integrating factor.
    Fehlberg,
}

impl Method {
    pub fn tableau(self) -> &'static Tableau {
        match self {
            Method::CashKarp => &CASH_KARP,
            Method::Fehlberg => &FEHLBERG,
        }
    }
}

/// `dy/dt = L y + N(y)` with `L` diagonal and applied exactly.
pub trait SplitSystem: Sync {
    fn dim(&self) -> usize;
    /// `y <- exp(tau L) y`.
    fn apply_exp(&self, tau: f64, y: &mut [Complex64]);
    /// `out <- N(y)`.
    fn rhs(&self, y: &[Complex64], out: &mut [Complex64]);
    /// Scalar error of a step given the two embedded solutions' difference
    /// and the new state; a step is accepted when this is at most 1.
    fn error(&self, difference: &[Complex64], state: &[Complex64]) -> f64;
    /// Largest real decay rate of `L`, used to keep `exp(tau L)` finite.
    fn stiffness(&self) -> f64 {
        0.0
    }
}

/// Step-size controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub max_step: f64,
    pub min_step: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

const CHUNK: usize = 4096;

/// `out = base + sum_j w_j x_j`, one pass over memory in cache-sized chunks.
fn combine(out: &mut [Complex64], base: &[Complex64], terms: &[(f64, &[Complex64])]) {
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, o)| {
        let range = c * CHUNK..c * CHUNK + o.len();
        o.copy_from_slice(&base[range.clone()]);
        for &(w, x) in terms {
            for (a, b) in o.iter_mut().zip(&x[range.clone()]) {
                *a += b * w;
            }
        }
    });
}

/// `out += sum_j w_j x_j`.
fn combine_into(out: &mut [Complex64], terms: &[(f64, &[Complex64])]) {
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, o)| {
        let range = c * CHUNK..c * CHUNK + o.len();
        for &(w, x) in terms {
            for (a, b) in o.iter_mut().zip(&x[range.clone()]) {
                *a += b * w;
            }
        }
    });
}

/// Integrating-factor (Lawson) embedded Runge-Kutta integrator.
pub struct Lawson {
    tableau: &'static Tableau,
    control: StepControl,
    k: Vec<Vec<Complex64>>,
    stage: Vec<Complex64>,
    next: Vec<Complex64>,
    diff: Vec<Complex64>,
    h: f64,
    pub stats: StepStats,
}

impl Lawson {
    pub fn new(method: Method, control: StepControl, dim: usize) -> Self {
        Self {
            tableau: method.tableau(),
            control,
            k: vec![vec![Complex64::default(); dim]; 6],
            stage: vec![Complex64::default(); dim],
            next: vec![Complex64::default(); dim],
            diff: vec![Complex64::default(); dim],
            h: control.max_step,
            stats: StepStats::default(),
        }
    }

    /// Bytes held by the work buffers for a state of `dim` entries.
    pub fn workspace_bytes(dim: usize) -> usize {
        9 * dim * std::mem::size_of::<Complex64>()
    }

    /// Attempts one step of size `h`; on success `y` holds the new state
    /// and the error norm is returned.
    fn attempt<S: SplitSystem>(&mut self, sys: &S, y: &mut [Complex64], h: f64) -> f64 {
        let tab = self.tableau;
        for i in 0..6 {
            // U_i = y + h sum_j a_ij K_j in the frame of t_n, in one pass.
            let coef: Vec<(f64, &[Complex64])> = (0..i)
                .filter(|&j| tab.a[i][j] != 0.0)
                .map(|j| (tab.a[i][j] * h, self.k[j].as_slice()))
                .collect();
            combine(&mut self.stage, y, &coef);
            // K_i = exp(-c_i h L) N(exp(c_i h L) U_i)
            let c = tab.c[i] * h;
            if c != 0.0 {
                sys.apply_exp(c, &mut self.stage);
            }
            sys.rhs(&self.stage, &mut self.k[i]);
            if c != 0.0 {
                sys.apply_exp(-c, &mut self.k[i]);
            }
        }
        let high: Vec<(f64, &[Complex64])> = (0..6)
            .filter(|&j| tab.b5[j] != 0.0)
            .map(|j| (tab.b5[j] * h, self.k[j].as_slice()))
            .collect();
        combine(&mut self.next, y, &high);
        let gap: Vec<(f64, &[Complex64])> = (0..6)
            .filter(|&j| tab.b5[j] != tab.b4[j])
            .map(|j| ((tab.b5[j] - tab.b4[j]) * h, self.k[j].as_slice()))
            .collect();
        self.diff.iter_mut().for_each(|d| *d = Complex64::default());
        combine_into(&mut self.diff, &gap);
        sys.apply_exp(h, &mut self.next);
        sys.apply_exp(h, &mut self.diff);
        sys.error(&self.diff, &self.next)
    }

    /// Advances `y` from `t` to exactly `t_end`.
    pub fn advance<S: SplitSystem>(
        &mut self,
        sys: &S,
        y: &mut [Complex64],
        t: &mut f64,
        t_end: f64,
    ) -> Result<()> {
        let stiff = sys.stiffness();
        let cap = if stiff > 0.0 {
            (600.0 / stiff).min(self.control.max_step)
        } else {
            self.control.max_step
        };
        while *t < t_end {
            let remaining = t_end - *t;
            let mut h = self.h.min(cap);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            if h < self.control.min_step && !last {
                return Err(Error::StepUnderflow {
                    step: h,
                    floor: self.control.min_step,
                    time: *t,
                });
            }
            let err = self.attempt(sys, y, h);
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            if err <= 1.0 && err.is_finite() {
                y.copy_from_slice(&self.next);
                *t = if last { t_end } else { *t + h };
                self.stats.accepted += 1;
                if !last || factor < 1.0 {
                    self.h = (h * factor).min(cap);
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * if err.is_finite() {
                    factor.min(0.9)
                } else {
                    0.2
                };
                if self.h < self.control.min_step {
                    return Err(Error::StepUnderflow {
                        step: self.h,
                        floor: self.control.min_step,
                        time: *t,
                    });
                }
            }
        }
        Ok(())
    }
}
