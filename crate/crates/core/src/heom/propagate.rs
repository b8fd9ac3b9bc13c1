use num_complex::Complex64;

use super::integrator::{Lawson, StepControl, StepStats};
use super::system::{HeomConfig, HeomSystem};
use crate::error::{positive, Result};

/// Samples of a hierarchy propagation on a uniform output lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct HeomTrajectory {
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    /// `Tr[H_bp (sigma'(t) - sigma'(0))]` when a probe is attached.
    pub probe_energy: Option<Vec<f64>>,
    pub max_trace_error: f64,
    pub max_hermiticity: f64,
    pub stats: StepStats,
}

impl HeomTrajectory {
    /// `P_1 - P_2` for two-level systems.
    pub fn sigma_z(&self) -> Option<Vec<f64>> {
        self.populations
            .first()
            .filter(|p| p.len() == 2)
            .map(|_| self.populations.iter().map(|p| p[0] - p[1]).collect())
    }

    pub fn last_populations(&self) -> &[f64] {
        self.populations.last().map_or(&[], |p| p.as_slice())
    }
}

/// Resumable propagation that records a sample every `output_step`.
pub struct HeomPropagator<'a> {
    sys: &'a HeomSystem,
    y: Vec<Complex64>,
    t: f64,
    samples: usize,
    output_step: f64,
    lawson: Lawson,
    e0: Option<f64>,
    traj: HeomTrajectory,
}

impl<'a> HeomPropagator<'a> {
    pub fn new(sys: &'a HeomSystem, cfg: &HeomConfig, y0: Vec<Complex64>) -> Result<Self> {
        cfg.validate()?;
        let lawson = Lawson::new(
            cfg.method,
            StepControl {
                max_step: cfg.dt_max,
                min_step: cfg.min_step,
            },
            y0.len(),
        );
        let e0 = sys.probe_energy(sys.root(&y0));
        let mut p = Self {
            sys,
            y: y0,
            t: 0.0,
            samples: 0,
            output_step: cfg.output_step,
            lawson,
            e0,
            traj: HeomTrajectory {
                times: Vec::new(),
                populations: Vec::new(),
                probe_energy: e0.map(|_| Vec::new()),
                max_trace_error: 0.0,
                max_hermiticity: 0.0,
                stats: StepStats::default(),
            },
        };
        p.record();
        Ok(p)
    }

    fn record(&mut self) {
        let root = self.sys.root(&self.y);
        self.traj.times.push(self.t);
        self.traj.populations.push(self.sys.populations(root));
        if let (Some(series), Some(e0)) = (self.traj.probe_energy.as_mut(), self.e0) {
            series.push(self.sys.probe_energy(root).unwrap_or(e0) - e0);
        }
        let trace = (self.sys.trace(root) - 1.0).norm();
        self.traj.max_trace_error = self.traj.max_trace_error.max(trace);
        self.traj.max_hermiticity = self.traj.max_hermiticity.max(self.sys.hermiticity(root));
        self.samples += 1;
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn trajectory(&self) -> &HeomTrajectory {
        &self.traj
    }

    pub fn state(&self) -> &[Complex64] {
        &self.y
    }

    /// Propagates through every output time up to `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        loop {
            let next = self.samples as f64 * self.output_step;
            if next > t_end * (1.0 + 1e-12) {
                break;
            }
            self.lawson
                .advance(self.sys, &mut self.y, &mut self.t, next)?;
            self.t = next;
            self.record();
        }
        self.traj.stats = self.lawson.stats;
        Ok(())
    }

    pub fn finish(self) -> HeomTrajectory {
        self.traj
    }
}

/// Propagates from `y0` over `[0, t_end]`.
pub fn propagate_heom(
    sys: &HeomSystem,
    cfg: &HeomConfig,
    y0: Vec<Complex64>,
    t_end: f64,
) -> Result<HeomTrajectory> {
    positive("t_end", t_end)?;
    let mut p = HeomPropagator::new(sys, cfg, y0)?;
    p.advance_to(t_end)?;
    Ok(p.finish())
}
