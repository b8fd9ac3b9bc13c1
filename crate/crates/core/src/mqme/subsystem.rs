use serde::{Deserialize, Serialize};

use crate::bath::DiscretizedBath;
use crate::error::{Error, Result};

/// How bath channels couple to subsystem states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// One private bath per state.
    LocalBath,
    /// One shared bath coupled through `sigma_z`.
    SpinBoson,
}

/// A bath together with the diagonal coupling `kappa_A` of every state.
///
/// State `A` couples to the channel through `kappa_A * sum_j w_j^2 d_j x_j`,
/// so the mode reorganization energies between states `A` and `B` are
/// `kappa_A kappa_B lambda_j`.
#[derive(Debug, Clone)]
pub struct Channel {
    pub bath: DiscretizedBath,
    pub coupling: Vec<f64>,
}

/// Subsystem energies, couplings and bath channels.
#[derive(Debug, Clone)]
pub struct Subsystem {
    labels: Vec<String>,
    energies: Vec<f64>,
    couplings: Vec<f64>,
    topology: Topology,
    channels: Vec<Channel>,
}

impl Subsystem {
    /// Local-bath model: state `A` couples only to `baths[A]`.
    /// `couplings` is the row-major `n x n` matrix `V_AB`.
    pub fn local_bath(
        energies: Vec<f64>,
        couplings: Vec<f64>,
        baths: Vec<DiscretizedBath>,
    ) -> Result<Self> {
        let n = energies.len();
        if baths.len() != n {
            return Err(Error::Model(format!(
                "local-bath model needs one bath per state ({n} states, {} baths)",
                baths.len()
            )));
        }
        let channels = baths
            .into_iter()
            .enumerate()
            .map(|(a, bath)| {
                let mut coupling = vec![0.0; n];
                coupling[a] = 1.0;
                Channel { bath, coupling }
            })
            .collect();
        let labels = (1..=n).map(|a| a.to_string()).collect();
        Self::new(labels, energies, couplings, Topology::LocalBath, channels)
    }

    /// Two-state dimer with energies `(e1, e2)`, coupling `v` and local baths.
    pub fn dimer(
        e1: f64,
        e2: f64,
        v: f64,
        bath1: DiscretizedBath,
        bath2: DiscretizedBath,
    ) -> Result<Self> {
        Self::local_bath(vec![e1, e2], vec![0.0, v, v, 0.0], vec![bath1, bath2])
    }

    /// Spin-boson model with `E_+ = bias/2`, `E_- = -bias/2` and
    /// anti-correlated coupling `kappa = (+1, -1)` to a single bath.
    pub fn spin_boson(bias: f64, coupling: f64, bath: DiscretizedBath) -> Result<Self> {
        Self::new(
            vec!["+".into(), "-".into()],
            vec![0.5 * bias, -0.5 * bias],
            vec![0.0, coupling, coupling, 0.0],
            Topology::SpinBoson,
            vec![Channel {
                bath,
                coupling: vec![1.0, -1.0],
            }],
        )
    }

    fn new(
        labels: Vec<String>,
        energies: Vec<f64>,
        couplings: Vec<f64>,
        topology: Topology,
        channels: Vec<Channel>,
    ) -> Result<Self> {
        let n = energies.len();
        if n == 0 {
            return Err(Error::Model("subsystem needs at least one state".into()));
        }
        if couplings.len() != n * n {
            return Err(Error::Model(format!(
                "coupling matrix has {} entries, expected {}",
                couplings.len(),
                n * n
            )));
        }
        if energies.iter().chain(&couplings).any(|x| !x.is_finite()) {
            return Err(Error::Model("energies and couplings must be finite".into()));
        }
        for a in 0..n {
            if couplings[a * n + a] != 0.0 {
                return Err(Error::Model(format!(
                    "coupling matrix has nonzero diagonal at state {}",
                    a + 1
                )));
            }
            for b in 0..a {
                if couplings[a * n + b] != couplings[b * n + a] {
                    return Err(Error::Model(format!(
                        "coupling matrix is not symmetric at ({}, {})",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        for c in &channels {
            if c.coupling.len() != n {
                return Err(Error::Model(
                    "channel coupling length differs from state count".into(),
                ));
            }
        }
        Ok(Self {
            labels,
            energies,
            couplings,
            topology,
            channels,
        })
    }

    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, a: usize) -> f64 {
        self.energies[a]
    }

    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        self.couplings[a * self.n_states() + b]
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// `(kappa_A - kappa_B)^2` for channel `c`: the weight of that channel's
    /// `g` and reorganization energy in the `A <-> B` transfer.
    pub fn pair_weight(&self, c: usize, a: usize, b: usize) -> f64 {
        let k = &self.channels[c].coupling;
        (k[a] - k[b]) * (k[a] - k[b])
    }

    /// `Lambda_AA - 2 Lambda_AB + Lambda_BB` from the discretized baths.
    pub fn pair_reorganization(&self, a: usize, b: usize) -> f64 {
        (0..self.channels.len())
            .map(|c| self.pair_weight(c, a, b) * self.channels[c].bath.total_reorganization())
            .sum()
    }

    /// Generalized reorganization energy `Lambda_AB = sum_c kappa_A kappa_B Lambda_c`.
    pub fn reorganization(&self, a: usize, b: usize) -> f64 {
        self.channels
            .iter()
            .map(|c| c.coupling[a] * c.coupling[b] * c.bath.total_reorganization())
            .sum()
    }

    /// Mode reorganization `lambda^j_AB` of mode `j` in channel `c`.
    pub fn mode_reorganization(&self, c: usize, j: usize, a: usize, b: usize) -> f64 {
        let ch = &self.channels[c];
        ch.coupling[a] * ch.coupling[b] * ch.bath.modes()[j].reorganization
    }

    /// Same subsystem with every channel's bath replaced by `f(bath)`.
    pub fn map_baths<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&DiscretizedBath) -> Result<DiscretizedBath>,
    {
        let mut out = self.clone();
        for c in &mut out.channels {
            c.bath = f(&c.bath)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{discretize, Discretization, SpectralDensity};

    fn bath() -> DiscretizedBath {
        let dl = SpectralDensity::drude_lorentz(0.2, 0.5).unwrap();
        discretize(dl, &Discretization::new(200, 15.0).unchecked()).unwrap()
    }

    #[test]
    fn spin_boson_sign_algebra() {
        let sb = Subsystem::spin_boson(2.0, 0.25, bath()).unwrap();
        for j in [0, 10, 199] {
            let lam = sb.channels()[0].bath.modes()[j].reorganization;
            assert_eq!(sb.mode_reorganization(0, j, 0, 0), lam);
            assert_eq!(sb.mode_reorganization(0, j, 1, 1), lam);
            assert_eq!(sb.mode_reorganization(0, j, 0, 1), -lam);
            let prefactor = sb.mode_reorganization(0, j, 0, 0)
                - 2.0 * sb.mode_reorganization(0, j, 0, 1)
                + sb.mode_reorganization(0, j, 1, 1);
            assert_eq!(prefactor, 4.0 * lam);
        }
        assert_eq!(sb.pair_weight(0, 0, 1), 4.0);
        assert_eq!(sb.energies(), &[1.0, -1.0]);
    }

    #[test]
    fn local_bath_has_no_cross_reorganization() {
        let d = Subsystem::dimer(2.0, 0.0, 0.25, bath(), bath()).unwrap();
        assert_eq!(d.reorganization(0, 1), 0.0);
        assert_eq!(d.mode_reorganization(0, 5, 0, 1), 0.0);
        let lam = d.channels()[0].bath.total_reorganization();
        assert_eq!(d.pair_reorganization(0, 1), 2.0 * lam);
    }

    #[test]
    fn malformed_couplings_rejected() {
        let asym = Subsystem::local_bath(
            vec![0.0, 1.0],
            vec![0.0, 0.1, 0.2, 0.0],
            vec![bath(), bath()],
        );
        assert!(asym.is_err());
        let diag = Subsystem::local_bath(
            vec![0.0, 1.0],
            vec![0.1, 0.1, 0.1, 0.0],
            vec![bath(), bath()],
        );
        assert!(diag.is_err());
        assert!(Subsystem::local_bath(vec![0.0, 1.0], vec![0.0; 4], vec![bath()]).is_err());
    }
}
