use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::{Arc, RwLock};

use super::decomposition::drude_lorentz_terms;
use super::hierarchy::{Hierarchy, Term};
use super::integrator::{Lawson, Method, SplitSystem};
use super::probe::{boltzmann_levels, default_coverage};
use crate::bath::SpectralDensity;
use crate::error::{positive, Error, Result};
use crate::mqme::Subsystem;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `out += -i h src`.
fn add_minus_i(out: &mut [Complex64], src: &[Complex64], h: f64) {
    for (o, s) in out.iter_mut().zip(src) {
        o.re += h * s.im;
        o.im -= h * s.re;
    }
}

/// ADM blocks per parallel task, so that small blocks are batched.
fn grain(d: usize) -> usize {
    (16384 / (d * d)).max(1)
}

fn default_deep_matsubara() -> usize {
    3
}
fn default_rel_tol() -> f64 {
    1e-7
}
fn default_output_step() -> f64 {
    0.5
}
fn default_stationarity() -> f64 {
    1e-4
}
fn default_t_sim_max() -> f64 {
    5000.0
}
fn default_memory_cap() -> usize {
    3 << 30
}
fn default_min_step() -> f64 {
    1e-9
}

/// Hierarchy, truncation and step-control settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeomConfig {
    pub n_hier: usize,
    pub n_matsu: usize,
    /// Matsubara terms per channel kept at full depth; the rest enter at
    /// tier 1 only.
    #[serde(default = "default_deep_matsubara")]
    pub deep_matsubara: usize,
    pub dt_max: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Propagation horizon; `None` picks it from a probe-free run.
    #[serde(default)]
    pub t_sim: Option<f64>,
    #[serde(default = "default_output_step")]
    pub output_step: f64,
    /// Threshold on `|dP/dt|` for stationarity.
    #[serde(default = "default_stationarity")]
    pub stationarity: f64,
    /// Longest horizon the automatic choice may return.
    #[serde(default = "default_t_sim_max")]
    pub t_sim_max: f64,
    /// Refuse hierarchies whose buffers exceed this many bytes.
    #[serde(default = "default_memory_cap")]
    pub memory_cap: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_min_step")]
    pub min_step: f64,
}

impl HeomConfig {
    pub fn new(n_hier: usize, n_matsu: usize, dt_max: f64) -> Self {
        Self {
            n_hier,
            n_matsu,
            deep_matsubara: default_deep_matsubara(),
            dt_max,
            rel_tol: default_rel_tol(),
            t_sim: None,
            output_step: default_output_step(),
            stationarity: default_stationarity(),
            t_sim_max: default_t_sim_max(),
            memory_cap: default_memory_cap(),
            method: Method::CashKarp,
            min_step: default_min_step(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("maximum step", self.dt_max)?;
        positive("relative tolerance", self.rel_tol)?;
        positive("output step", self.output_step)?;
        positive("stationarity threshold", self.stationarity)?;
        positive("maximum t_sim", self.t_sim_max)?;
        positive("minimum step", self.min_step)?;
        if let Some(t) = self.t_sim {
            positive("t_sim", t)?;
        }
        Ok(())
    }
}

/// Harmonic probe mode attached to one coupling channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeModeSpec {
    pub channel: usize,
    pub frequency: f64,
    /// Huang-Rhys factor `s`; the probe reorganization energy is `s w`.
    pub huang_rhys: f64,
    pub n_levels: usize,
    pub coverage: f64,
}

impl ProbeModeSpec {
    /// Ladder size from the Boltzmann coverage rule.
    pub fn new(channel: usize, frequency: f64, huang_rhys: f64, beta: f64) -> Result<Self> {
        let coverage = default_coverage(frequency);
        Ok(Self {
            channel,
            frequency,
            huang_rhys,
            n_levels: boltzmann_levels(frequency, beta, coverage)?,
            coverage,
        })
    }

    pub fn validate(&self) -> Result<()> {
        positive("probe frequency", self.frequency)?;
        if !(self.huang_rhys >= 0.0) || !self.huang_rhys.is_finite() {
            return Err(Error::Parameter {
                name: "probe Huang-Rhys factor",
                requirement: "finite and nonnegative",
                value: self.huang_rhys,
            });
        }
        if self.n_levels == 0 {
            return Err(Error::Parameter {
                name: "probe levels",
                requirement: "at least 1",
                value: 0.0,
            });
        }
        Ok(())
    }

    /// `sqrt(2 s / w)`.
    pub fn displacement(&self) -> f64 {
        (2.0 * self.huang_rhys / self.frequency).sqrt()
    }

    /// Truncated thermal ladder, normalized to one.
    pub fn thermal_populations(&self, beta: f64) -> Vec<f64> {
        let w: Vec<f64> = (0..self.n_levels)
            .map(|m| (-beta * self.frequency * m as f64).exp())
            .collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }
}

/// Drude-Lorentz channel with per-state diagonal coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeomChannel {
    pub reorganization: f64,
    pub cutoff: f64,
    pub coupling: Vec<f64>,
}

/// Subsystem Hamiltonian and analytic baths for the hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeomModel {
    pub energies: Vec<f64>,
    /// Row-major `n x n` electronic couplings.
    pub couplings: Vec<f64>,
    pub channels: Vec<HeomChannel>,
}

impl HeomModel {
    /// Uses the analytic density behind each discretized channel; only
    /// Drude-Lorentz baths have an exponential decomposition here.
    pub fn from_subsystem(sub: &Subsystem) -> Result<Self> {
        let n = sub.n_states();
        let channels = sub
            .channels()
            .iter()
            .map(|c| match *c.bath.source() {
                SpectralDensity::DrudeLorentz {
                    reorganization,
                    cutoff,
                } => Ok(HeomChannel {
                    reorganization,
                    cutoff,
                    coupling: c.coupling.clone(),
                }),
                SpectralDensity::BrownianOscillator { .. } => Err(Error::Model(
                    "hierarchy propagation supports Drude-Lorentz baths only".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut couplings = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    couplings[a * n + b] = sub.coupling(a, b);
                }
            }
        }
        Ok(Self {
            energies: sub.energies().to_vec(),
            couplings,
            channels,
        })
    }

    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    /// Reorganization energy of state `a`, `sum_c kappa_c(a)^2 Lambda_c`.
    pub fn site_reorganization(&self, a: usize) -> f64 {
        self.channels
            .iter()
            .map(|c| c.coupling[a] * c.coupling[a] * c.reorganization)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        if n == 0 || self.couplings.len() != n * n {
            return Err(Error::Model(
                "coupling matrix does not match the state count".into(),
            ));
        }
        for a in 0..n {
            for b in 0..n {
                if self.couplings[a * n + b] != self.couplings[b * n + a] {
                    return Err(Error::Model("coupling matrix must be symmetric".into()));
                }
            }
        }
        for c in &self.channels {
            positive("reorganization energy", c.reorganization)?;
            positive("cutoff frequency", c.cutoff)?;
            if c.coupling.len() != n {
                return Err(Error::Model(
                    "channel coupling does not match the state count".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Probe Hamiltonian `H_bp` on the extended space, for energy read-out.
#[derive(Debug, Clone)]
struct ProbeOperator {
    diag: Vec<f64>,
    off: Vec<(usize, usize, f64)>,
}

/// Hierarchy generator on the subsystem (optionally extended by a probe
/// ladder): `L` holds the diagonal Hamiltonian phases and the hierarchy
/// decay, `N` the off-diagonal Hamiltonian and the tier couplings.
pub struct HeomSystem {
    n_states: usize,
    levels: usize,
    dim: usize,
    h_diag: Vec<f64>,
    /// Electronic couplings, `n x n`; they connect `|a, m>` and `|b, m>`.
    v_el: Vec<f64>,
    /// Probe matrix element between `|a, m>` and `|a, m + 1>` at index
    /// `a * levels + m`.
    ladder: Vec<f64>,
    hier: Hierarchy,
    /// Tier couplings of ADM `n` are `link_target[link_start[n]..link_start[n + 1]]`, each with
    /// `n_states^2` block factors in `link_factor`.
    link_start: Vec<usize>,
    link_target: Vec<usize>,
    link_factor: Vec<Complex64>,
    probe: Option<ProbeOperator>,
    rel_tol: f64,
    max_decay: f64,
    decay_cache: RwLock<Vec<(u64, Arc<Vec<f64>>)>>,
}

impl HeomSystem {
    pub fn new(
        model: &HeomModel,
        beta: f64,
        cfg: &HeomConfig,
        probe: Option<&ProbeModeSpec>,
    ) -> Result<Self> {
        model.validate()?;
        cfg.validate()?;
        positive("beta", beta)?;
        let n = model.n_states();
        if let Some(p) = probe {
            p.validate()?;
            if p.channel >= model.channels.len() {
                return Err(Error::Model(format!(
                    "probe channel {} does not exist",
                    p.channel
                )));
            }
        }
        let levels = probe.map_or(1, |p| p.n_levels);
        let dim = n * levels;

        let mut terms = Vec::new();
        let mut term_coupling = Vec::new();
        for (c, ch) in model.channels.iter().enumerate() {
            let decomposition =
                drude_lorentz_terms(ch.reorganization, ch.cutoff, beta, cfg.n_matsu)?;
            for (k, t) in decomposition.into_iter().enumerate() {
                terms.push(Term {
                    channel: c,
                    coefficient: t.coefficient,
                    rate: t.rate,
                    deep: k <= cfg.deep_matsubara,
                });
                term_coupling.push(ch.coupling.clone());
            }
        }
        let deep = terms.iter().filter(|t| t.deep).count();
        let adm = super::hierarchy::adm_count(cfg.n_hier, deep, terms.len() - deep);
        let estimate = adm
            .saturating_mul(dim * dim)
            .saturating_mul(std::mem::size_of::<Complex64>())
            .saturating_add(Lawson::workspace_bytes(adm.saturating_mul(dim * dim)));
        if estimate > cfg.memory_cap {
            return Err(Error::MemoryCap {
                estimate,
                cap: cfg.memory_cap,
            });
        }
        let hier = Hierarchy::new(terms, cfg.n_hier);

        // Extended basis |a, m>, index a * levels + m.
        let mut h_diag = vec![0.0; dim];
        let mut ladder = vec![0.0; dim];
        for a in 0..n {
            let site = model.energies[a] + model.site_reorganization(a);
            for m in 0..levels {
                h_diag[a * levels + m] = site;
            }
        }
        let mut v_el = model.couplings.clone();
        for a in 0..n {
            v_el[a * n + a] = 0.0;
        }
        let probe_op = probe.map(|p| {
            let w = p.frequency;
            let d = p.displacement();
            let kappa = &model.channels[p.channel].coupling;
            let mut diag = vec![0.0; dim];
            let mut off = Vec::new();
            for a in 0..n {
                let v = kappa[a];
                for m in 0..levels {
                    let r = a * levels + m;
                    diag[r] = w * (m as f64 + 0.5) + v * v * w * w * d * d / 2.0;
                    if m + 1 < levels && v != 0.0 {
                        let x = -v * w * w * d * ((m as f64 + 1.0) / (2.0 * w)).sqrt();
                        off.push((r, r + 1, x));
                    }
                }
            }
            for (r, h) in h_diag.iter_mut().enumerate() {
                *h += diag[r];
            }
            for &(r, _, x) in &off {
                ladder[r] = x;
            }
            ProbeOperator { diag, off }
        });
        let max_decay = hier.decay().iter().copied().fold(0.0, f64::max);
        let mut link_start = vec![0];
        let mut link_target = Vec::new();
        let mut link_factor = Vec::new();
        for i in 0..hier.len() {
            for link in hier.up(i) {
                let v = &term_coupling[link.term];
                link_target.push(link.target);
                for a in 0..n {
                    for b in 0..n {
                        link_factor.push(-I * link.scale * (v[a] - v[b]));
                    }
                }
            }
            for link in hier.down(i) {
                let v = &term_coupling[link.term];
                let c = hier.terms()[link.term].coefficient;
                link_target.push(link.target);
                for a in 0..n {
                    for b in 0..n {
                        link_factor.push(-I * link.scale * (c * v[a] - c.conj() * v[b]));
                    }
                }
            }
            link_start.push(link_target.len());
        }
        Ok(Self {
            n_states: n,
            levels,
            dim,
            h_diag,
            v_el,
            ladder,
            hier,
            link_start,
            link_target,
            link_factor,
            probe: probe_op,
            rel_tol: cfg.rel_tol,
            max_decay,
            decay_cache: RwLock::new(Vec::new()),
        })
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hier
    }

    pub fn adm_count(&self) -> usize {
        self.hier.len()
    }

    /// Extended subsystem dimension.
    pub fn extended_dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn has_probe(&self) -> bool {
        self.probe.is_some()
    }

    /// `sigma(0) (x) rho_probe` with every auxiliary matrix zero.
    pub fn initial_state(
        &self,
        populations: &[f64],
        ladder: Option<&[f64]>,
    ) -> Result<Vec<Complex64>> {
        if populations.len() != self.n_states {
            return Err(Error::Model(
                "initial populations do not match the state count".into(),
            ));
        }
        let total: f64 = populations.iter().sum();
        if populations.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Model(
                "initial populations must be a probability vector".into(),
            ));
        }
        let uniform = [1.0];
        let ladder = ladder.unwrap_or(&uniform);
        if ladder.len() != self.levels {
            return Err(Error::Model(
                "probe ladder does not match the level count".into(),
            ));
        }
        let mut y = vec![Complex64::default(); self.hier.len() * self.dim * self.dim];
        for a in 0..self.n_states {
            for m in 0..self.levels {
                let r = a * self.levels + m;
                y[r * self.dim + r] = Complex64::new(populations[a] * ladder[m], 0.0);
            }
        }
        Ok(y)
    }

    /// Reduced density matrix block of `y`.
    pub fn root<'a>(&self, y: &'a [Complex64]) -> &'a [Complex64] {
        &y[..self.dim * self.dim]
    }

    /// Electronic populations, traced over the probe.
    pub fn populations(&self, root: &[Complex64]) -> Vec<f64> {
        (0..self.n_states)
            .map(|a| {
                (0..self.levels)
                    .map(|m| {
                        let r = a * self.levels + m;
                        root[r * self.dim + r].re
                    })
                    .sum()
            })
            .collect()
    }

    pub fn trace(&self, root: &[Complex64]) -> Complex64 {
        (0..self.dim).map(|r| root[r * self.dim + r]).sum()
    }

    /// `max |rho - rho^dagger|`.
    pub fn hermiticity(&self, root: &[Complex64]) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((root[i * d + j] - root[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// `Tr[H_bp rho]`, or `None` without a probe.
    pub fn probe_energy(&self, root: &[Complex64]) -> Option<f64> {
        let p = self.probe.as_ref()?;
        let d = self.dim;
        let mut e: f64 = p
            .diag
            .iter()
            .enumerate()
            .map(|(r, h)| h * root[r * d + r].re)
            .sum();
        for &(r, s, x) in &p.off {
            e += x * (root[s * d + r].re + root[r * d + s].re);
        }
        Some(e)
    }

    /// `exp(-tau sum_k n_k nu_k)` per ADM; the step size is usually
    /// constant, so recent values of `tau` are cached.
    fn decay_factors(&self, tau: f64) -> Arc<Vec<f64>> {
        let key = tau.to_bits();
        if let Some((_, f)) = self
            .decay_cache
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .find(|(k, _)| *k == key)
        {
            return Arc::clone(f);
        }
        let f = Arc::new(
            self.hier
                .decay()
                .iter()
                .map(|g| (-g * tau).exp())
                .collect::<Vec<_>>(),
        );
        let mut cache = self.decay_cache.write().unwrap_or_else(|e| e.into_inner());
        if cache.len() >= 32 {
            cache.clear();
        }
        cache.push((key, Arc::clone(&f)));
        f
    }

    /// `o += -i [H_off, rho]` for the electronic and probe couplings.
    fn commutator(&self, rho: &[Complex64], o: &mut [Complex64]) {
        let (n, l, d) = (self.n_states, self.levels, self.dim);
        for a in 0..n {
            for b in 0..n {
                let v = self.v_el[a * n + b];
                if v == 0.0 {
                    continue;
                }
                for m in 0..l {
                    let (r, s) = (a * l + m, b * l + m);
                    add_minus_i(&mut o[r * d..(r + 1) * d], &rho[s * d..(s + 1) * d], v);
                }
                for i in 0..d {
                    let (oa, rb) = (i * d + a * l, i * d + b * l);
                    add_minus_i(&mut o[oa..oa + l], &rho[rb..rb + l], -v);
                }
            }
        }
        if !self.has_probe() || l < 2 {
            return;
        }
        for r in 0..d {
            let x = self.ladder[r];
            if x != 0.0 {
                add_minus_i(
                    &mut o[r * d..(r + 1) * d],
                    &rho[(r + 1) * d..(r + 2) * d],
                    x,
                );
                add_minus_i(
                    &mut o[(r + 1) * d..(r + 2) * d],
                    &rho[r * d..(r + 1) * d],
                    x,
                );
            }
        }
        for i in 0..d {
            for a in 0..n {
                let base = i * d + a * l;
                let x = &self.ladder[a * l..a * l + l - 1];
                let (orow, rrow) = (&mut o[base..base + l], &rho[base..base + l]);
                // (rho H)_{i,m} gets rho_{i,m+1} x_m, (rho H)_{i,m+1} gets rho_{i,m} x_m.
                for m in 0..l - 1 {
                    let (up, here) = (rrow[m + 1], rrow[m]);
                    orow[m].re -= x[m] * up.im;
                    orow[m].im += x[m] * up.re;
                    orow[m + 1].re -= x[m] * here.im;
                    orow[m + 1].im += x[m] * here.re;
                }
            }
        }
    }

    fn add_blocks(&self, out: &mut [Complex64], src: &[Complex64], factors: &[Complex64]) {
        let (n, l, d) = (self.n_states, self.levels, self.dim);
        if l == 1 {
            // Element (a, b) and its factor share the index a * n + b.
            for ((o, s), f) in out.iter_mut().zip(src).zip(factors) {
                *o += f * s;
            }
            return;
        }
        for a in 0..n {
            for b in 0..n {
                let f = factors[a * n + b];
                if f == Complex64::default() {
                    continue;
                }
                for i in a * l..(a + 1) * l {
                    let row = i * d + b * l;
                    for (o, s) in out[row..row + l].iter_mut().zip(&src[row..row + l]) {
                        *o += f * s;
                    }
                }
            }
        }
    }
}

impl SplitSystem for HeomSystem {
    fn dim(&self) -> usize {
        self.hier.len() * self.dim * self.dim
    }

    fn apply_exp(&self, tau: f64, y: &mut [Complex64]) {
        let d = self.dim;
        let phase: Vec<Complex64> = self
            .h_diag
            .iter()
            .map(|&h| Complex64::from_polar(1.0, -h * tau))
            .collect();
        let mut q = vec![Complex64::default(); d * d];
        for i in 0..d {
            for j in 0..d {
                q[i * d + j] = phase[i] * phase[j].conj();
            }
        }
        let decay = self.decay_factors(tau);
        y.par_chunks_mut(d * d)
            .with_min_len(grain(d))
            .enumerate()
            .for_each(|(n, block)| {
                let s = decay[n];
                for (x, f) in block.iter_mut().zip(&q) {
                    *x *= f * s;
                }
            });
    }

    fn rhs(&self, y: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        let dd = d * d;
        out.par_chunks_mut(dd)
            .with_min_len(grain(d))
            .enumerate()
            .for_each(|(n, o)| {
                let rho = &y[n * dd..(n + 1) * dd];
                o.iter_mut().for_each(|x| *x = Complex64::default());
                self.commutator(rho, o);
                let nn = self.n_states * self.n_states;
                for l in self.link_start[n]..self.link_start[n + 1] {
                    let target = self.link_target[l];
                    self.add_blocks(
                        o,
                        &y[target * dd..(target + 1) * dd],
                        &self.link_factor[l * nn..(l + 1) * nn],
                    );
                }
            });
    }

    fn error(&self, difference: &[Complex64], state: &[Complex64]) -> f64 {
        let root = self.root(difference);
        let local = root.iter().fold(0.0f64, |m, x| m.max(x.norm()));
        let trace = (self.trace(self.root(state)) - 1.0).norm();
        local.max(trace) / self.rel_tol
    }

    fn stiffness(&self) -> f64 {
        self.max_decay
    }
}
