use super::rates::RateMatrix;
use crate::error::{positive, Error, Result};

/// Populations on the lattice `t_k = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTrajectory {
    dt: f64,
    n_states: usize,
    data: Vec<f64>,
}

impl PopulationTrajectory {
    pub fn from_rows(dt: f64, n_states: usize, data: Vec<f64>) -> Result<Self> {
        positive("time step", dt)?;
        if n_states == 0 || data.is_empty() || !data.len().is_multiple_of(n_states) {
            return Err(Error::Model(
                "population rows do not match the state count".into(),
            ));
        }
        Ok(Self { dt, n_states, data })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Number of stored time points.
    pub fn len(&self) -> usize {
        self.data.len() / self.n_states
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn populations(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_states..(k + 1) * self.n_states]
    }

    pub fn initial(&self) -> &[f64] {
        self.populations(0)
    }

    pub fn last(&self) -> &[f64] {
        self.populations(self.len() - 1)
    }

    /// `P_1 - P_2` for two-level systems.
    pub fn sigma_z(&self) -> Option<Vec<f64>> {
        (self.n_states == 2).then(|| self.data.chunks(2).map(|p| p[0] - p[1]).collect())
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_states)
    }
}

fn matvec(g: &[f64], p: &[f64], out: &mut [f64]) {
    let n = p.len();
    for (b, o) in out.iter_mut().enumerate() {
        *o = g[b * n..(b + 1) * n]
            .iter()
            .zip(p)
            .map(|(x, y)| x * y)
            .sum();
    }
}

/// Classical RK4 for `dP/dt = G P` on `t in [0, t_end]`.
pub fn propagate_populations(
    k: &RateMatrix,
    p0: &[f64],
    dt: f64,
    t_end: f64,
) -> Result<PopulationTrajectory> {
    let n = k.n_states();
    positive("time step", dt)?;
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Parameter {
            name: "end time",
            requirement: "finite and nonnegative",
            value: t_end,
        });
    }
    if p0.len() != n {
        return Err(Error::Model(format!(
            "initial populations have {} entries for {n} states",
            p0.len()
        )));
    }
    let total: f64 = p0.iter().sum();
    if p0.iter().any(|&x| !(x >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::Model(
            "initial populations must be a probability vector".into(),
        ));
    }
    let g = k.generator();
    let steps = (t_end / dt).round() as usize;
    let mut data = Vec::with_capacity((steps + 1) * n);
    data.extend_from_slice(p0);
    let mut p = p0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for _ in 0..steps {
        matvec(&g, &p, &mut k1);
        for i in 0..n {
            tmp[i] = p[i] + 0.5 * dt * k1[i];
        }
        matvec(&g, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = p[i] + 0.5 * dt * k2[i];
        }
        matvec(&g, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = p[i] + dt * k3[i];
        }
        matvec(&g, &tmp, &mut k4);
        for i in 0..n {
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        data.extend_from_slice(&p);
    }
    PopulationTrajectory::from_rows(dt, n, data)
}

/// `<sigma_z(t)> = s_inf + (s0 - s_inf) exp(-(K12 + K21) t)` with
/// `s_inf = (K12 - K21) / (K12 + K21)`.
pub fn analytic_two_level(k12: f64, k21: f64, sz0: f64, t: f64) -> Result<f64> {
    let total = k12 + k21;
    if !(total > 0.0) {
        return Err(Error::DegenerateRates);
    }
    let s_inf = (k12 - k21) / total;
    Ok(s_inf + (sz0 - s_inf) * (-total * t).exp())
}

/// Normalized kernel vector of the generator.
pub fn steady_state(k: &RateMatrix) -> Result<Vec<f64>> {
    let n = k.n_states();
    let g = k.generator();
    let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let rank = if scale == 0.0 {
        0
    } else {
        rank(g.clone(), n, scale * 1e-12 * n as f64)
    };
    if rank + 1 < n {
        return Err(Error::DisconnectedGenerator {
            dimension: n - rank,
        });
    }
    // Replace the first equation by the normalization sum P = 1.
    let mut a = g;
    for col in 0..n {
        a[col] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[0] = 1.0;
    let mut p = solve(a, rhs, n)?;
    for x in p.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    Ok(p)
}

fn rank(mut a: Vec<f64>, n: usize, tol: f64) -> usize {
    let mut r = 0;
    for col in 0..n {
        if r == n {
            break;
        }
        let pivot = (r..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()));
        let Some(p) = pivot else { break };
        if a[p * n + col].abs() <= tol {
            continue;
        }
        for c in 0..n {
            a.swap(r * n + c, p * n + c);
        }
        for i in r + 1..n {
            let f = a[i * n + col] / a[r * n + col];
            for c in col..n {
                a[i * n + c] -= f * a[r * n + c];
            }
        }
        r += 1;
    }
    r
}

fn solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        if a[p * n + col] == 0.0 {
            return Err(Error::DisconnectedGenerator { dimension: 2 });
        }
        for c in 0..n {
            a.swap(col * n + c, p * n + c);
        }
        b.swap(col, p);
        for i in col + 1..n {
            let f = a[i * n + col] / a[col * n + col];
            for c in col..n {
                a[i * n + c] -= f * a[col * n + c];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|c| a[i * n + c] * x[c]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rates_freeze_populations() {
        let traj = propagate_populations(&RateMatrix::zeros(2), &[0.3, 0.7], 0.01, 1.0).unwrap();
        assert_eq!(traj.len(), 101);
        assert!(traj.rows().all(|p| p == [0.3, 0.7]));
    }

    #[test]
    fn analytic_limits() {
        assert_eq!(analytic_two_level(0.3, 0.1, 1.0, 0.0).unwrap(), 1.0);
        assert!((analytic_two_level(0.3, 0.1, 1.0, 1e4).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(analytic_two_level(0.2, 0.2, -1.0, 1e4).unwrap(), 0.0);
        assert_eq!(
            analytic_two_level(0.0, 0.0, 1.0, 1.0),
            Err(Error::DegenerateRates)
        );
    }

    #[test]
    fn steady_state_two_level_and_single() {
        let p = steady_state(&RateMatrix::two_level(0.3, 0.1).unwrap()).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);
        assert_eq!(steady_state(&RateMatrix::zeros(1)).unwrap(), vec![1.0]);
    }

    #[test]
    fn disconnected_graph_rejected() {
        let err = steady_state(&RateMatrix::zeros(3)).unwrap_err();
        assert_eq!(err, Error::DisconnectedGenerator { dimension: 3 });
    }

    #[test]
    fn rejects_non_probability_start() {
        assert!(propagate_populations(&RateMatrix::zeros(2), &[0.5, 0.6], 0.01, 1.0).is_err());
    }
}
