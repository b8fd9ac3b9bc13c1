//! Bath spectral densities, their discretization into harmonic modes,
//! line-broadening functions and the slow/fast spectral split.

mod broadening;
mod discretize;
mod spectral;
mod split;

pub use broadening::{lattice_len, line_broadening, LineBroadening};
pub use discretize::{
    discretize, discretize_brownian, discretize_drude_lorentz, BathMode, Discretization,
    DiscretizedBath,
};
pub use spectral::SpectralDensity;
pub use split::{split_tss, SplitBath, TssSplit};
