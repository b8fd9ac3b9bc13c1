use crate::error::{Error, Result};
use crate::mqme::PopulationTrajectory;

/// Rate density `D(omega, t)` and cumulative density `E(omega, t)` of one
/// channel on a frequency x time lattice. Both are stored frequency-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationGrid {
    pub label: String,
    pub omegas: Vec<f64>,
    pub times: Vec<f64>,
    pub rate: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// Lattice indices `0, stride, 2 stride, ...` plus the last index.
pub fn output_indices(len: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

impl DissipationGrid {
    /// Builds `D(omega, t) = sum_A coefficients[A](omega) P_A(t)` and its
    /// exact trapezoid integral on the population lattice, sampled at
    /// every `stride`-th step.
    pub fn from_populations(
        label: impl Into<String>,
        omegas: &[f64],
        coefficients: &[Vec<f64>],
        traj: &PopulationTrajectory,
        stride: usize,
    ) -> Result<Self> {
        let n = traj.n_states();
        if coefficients.len() != n || coefficients.iter().any(|c| c.len() != omegas.len()) {
            return Err(Error::Model(
                "coefficient table does not match states and frequencies".into(),
            ));
        }
        let idx = output_indices(traj.len(), stride);
        // Running trapezoid integrals of each population.
        let mut occupation = vec![vec![0.0; idx.len()]; n];
        let mut running = vec![0.0; n];
        let mut next = 0;
        let dt = traj.dt();
        for k in 0..traj.len() {
            if k > 0 {
                let (prev, cur) = (traj.populations(k - 1), traj.populations(k));
                for a in 0..n {
                    running[a] += 0.5 * dt * (prev[a] + cur[a]);
                }
            }
            if next < idx.len() && idx[next] == k {
                for a in 0..n {
                    occupation[a][next] = running[a];
                }
                next += 1;
            }
        }
        let nt = idx.len();
        let mut rate = vec![0.0; omegas.len() * nt];
        let mut cumulative = vec![0.0; omegas.len() * nt];
        for i in 0..omegas.len() {
            for (s, &k) in idx.iter().enumerate() {
                let p = traj.populations(k);
                let mut d = 0.0;
                let mut e = 0.0;
                for a in 0..n {
                    d += coefficients[a][i] * p[a];
                    e += coefficients[a][i] * occupation[a][s];
                }
                rate[i * nt + s] = d;
                cumulative[i * nt + s] = e;
            }
        }
        Ok(Self {
            label: label.into(),
            omegas: omegas.to_vec(),
            times: idx.iter().map(|&k| traj.time(k)).collect(),
            rate,
            cumulative,
        })
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn rate_at(&self, i: usize, s: usize) -> f64 {
        self.rate[i * self.n_times() + s]
    }

    pub fn cumulative_at(&self, i: usize, s: usize) -> f64 {
        self.cumulative[i * self.n_times() + s]
    }

    /// `E(omega, t_end)` for every frequency.
    pub fn steady(&self) -> Vec<f64> {
        let nt = self.n_times();
        (0..self.omegas.len())
            .map(|i| self.cumulative[i * nt + nt - 1])
            .collect()
    }

    /// `E(omega_i, t)` series for one frequency.
    pub fn cumulative_series(&self, i: usize) -> &[f64] {
        let nt = self.n_times();
        &self.cumulative[i * nt..(i + 1) * nt]
    }
}

/// Recomputes `E` from `D` by trapezoid integration on the grid's own time
/// lattice.
pub fn accumulate(mut grid: DissipationGrid) -> DissipationGrid {
    let nt = grid.n_times();
    for i in 0..grid.omegas.len() {
        let row = i * nt;
        let mut acc = 0.0;
        grid.cumulative[row] = 0.0;
        for s in 1..nt {
            acc += 0.5
                * (grid.times[s] - grid.times[s - 1])
                * (grid.rate[row + s - 1] + grid.rate[row + s]);
            grid.cumulative[row + s] = acc;
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_include_last() {
        assert_eq!(output_indices(10, 4), vec![0, 4, 8, 9]);
        assert_eq!(output_indices(9, 4), vec![0, 4, 8]);
        assert_eq!(output_indices(1, 4), vec![0]);
    }

    #[test]
    fn constant_rate_accumulates_linearly() {
        let traj = PopulationTrajectory::from_rows(0.5, 1, vec![1.0; 11]).unwrap();
        let grid =
            DissipationGrid::from_populations("x", &[1.0, 2.0], &[vec![0.3, -0.1]], &traj, 2)
                .unwrap();
        assert_eq!(grid.cumulative_at(0, 0), 0.0);
        for (s, &t) in grid.times.iter().enumerate() {
            assert!((grid.cumulative_at(0, s) - 0.3 * t).abs() < 1e-15);
            assert!((grid.cumulative_at(1, s) + 0.1 * t).abs() < 1e-15);
        }
        let re = accumulate(grid.clone());
        for (x, y) in re.cumulative.iter().zip(&grid.cumulative) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
