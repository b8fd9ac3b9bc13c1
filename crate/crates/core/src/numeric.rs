//! Small numerical kernels shared across modules: guarded hyperbolic
//! cotangent, adaptive Gauss-Kronrod quadrature and trapezoid sums.

use crate::error::{Error, Result};

/// Below this argument `coth` switches to its Laurent series.
pub const COTH_SERIES_THRESHOLD: f64 = 1e-4;

/// `coth(x)` with the series `1/x + x/3` near zero.
pub fn coth(x: f64) -> f64 {
    if x.abs() < COTH_SERIES_THRESHOLD {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

/// Thermal factor `coth(beta * omega / 2)`.
pub fn thermal_factor(beta: f64, omega: f64) -> f64 {
    coth(0.5 * beta * omega)
}

// Published Gauss-Kronrod nodes and weights, kept at full printed precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadTolerance {
    pub absolute: f64,
    pub relative: f64,
    pub max_intervals: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self {
            absolute: 1e-13,
            relative: 1e-11,
            max_intervals: 4000,
        }
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// `b` may be `f64::INFINITY`, in which case the half line is mapped onto
/// `[0, 1)` with `x = a + u / (1 - u)`. Interior `breakpoints` seed the
/// initial partition, which helps with narrow peaks.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: QuadTolerance,
) -> Result<QuadEstimate> {
    if b.is_infinite() {
        let mapped = |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - u;
            f(a + u / s) / (s * s)
        };
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .filter(|&&x| x > a)
            .map(|&x| (x - a) / (1.0 + x - a))
            .collect();
        cuts.sort_by(f64::total_cmp);
        return adaptive(&mapped, 0.0, 1.0, &cuts, tol);
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    adaptive(&f, a, b, &cuts, tol)
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    cuts: &[f64],
    tol: QuadTolerance,
) -> Result<QuadEstimate> {
    // (a, b, value, error)
    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut left = a;
    for &c in cuts.iter().chain(std::iter::once(&b)) {
        if c > left {
            let (v, e) = kronrod15(f, left, c);
            intervals.push((left, c, v, e));
            left = c;
        }
    }
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature {
                value,
                residual: error,
            });
        }
        if error <= tol.absolute.max(tol.relative * value.abs()) {
            return Ok(QuadEstimate { value, error });
        }
        if intervals.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                value,
                residual: error,
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::Quadrature {
                value,
                residual: error,
            });
        }
        let (v1, e1) = kronrod15(f, lo, mid);
        let (v2, e2) = kronrod15(f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Trapezoid integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            step * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid integral of samples on an arbitrary increasing abscissa.
pub fn trapezoid_nonuniform(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Inclusive uniform grid `start, start + step, ...` up to `stop`.
///
/// Points are generated as `start + k * step` so that long grids do not
/// accumulate rounding from repeated addition.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coth_series_matches_direct_at_threshold() {
        let x = COTH_SERIES_THRESHOLD;
        assert_relative_eq!(
            coth(x * 0.999),
            1.0 / (x * 0.999).tanh(),
            max_relative = 1e-12
        );
        assert_relative_eq!(coth(x), 1.0 / x.tanh(), max_relative = 1e-12);
        assert_relative_eq!(
            coth(2.0),
            2.0f64.cosh() / 2.0f64.sinh(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn gauss_kronrod_polynomial_and_gaussian() {
        let q = integrate(|x| x * x, 0.0, 3.0, &[], QuadTolerance::default()).unwrap();
        assert_relative_eq!(q.value, 9.0, max_relative = 1e-14);
        let q = integrate(
            |x: f64| (-x * x).exp(),
            0.0,
            f64::INFINITY,
            &[],
            QuadTolerance::default(),
        )
        .unwrap();
        assert_relative_eq!(
            q.value,
            0.5 * std::f64::consts::PI.sqrt(),
            max_relative = 1e-11
        );
    }

    #[test]
    fn lorentzian_peak_with_breakpoint() {
        let g = 1e-3;
        let f = |x: f64| g / ((x - 2.0).powi(2) + g * g);
        let q = integrate(f, 0.0, 10.0, &[2.0], QuadTolerance::default()).unwrap();
        let exact = (8.0f64 / g).atan() + (2.0f64 / g).atan();
        assert_relative_eq!(q.value, exact, max_relative = 1e-10);
    }

    #[test]
    fn divergent_integral_reports_residual() {
        let tol = QuadTolerance {
            max_intervals: 50,
            ..QuadTolerance::default()
        };
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0, &[], tol).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        let v: Vec<f64> = (0..11).map(|k| 2.0 * k as f64 * 0.1 + 1.0).collect();
        assert_relative_eq!(trapezoid(&v, 0.1), 2.0, max_relative = 1e-14);
        let x = [0.0, 0.5, 2.0];
        assert_relative_eq!(trapezoid_nonuniform(&x, &x), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = uniform_grid(0.1, 3.0, 0.05);
        assert_eq!(g.len(), 59);
        assert_relative_eq!(*g.last().unwrap(), 3.0, epsilon = 1e-12);
        assert!(uniform_grid(1.0, 0.0, 0.1).is_empty());
    }
}
