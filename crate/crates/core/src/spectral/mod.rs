//! Exact diagonalization of small boxes.

pub mod fourier;
pub mod gap;
pub mod green;
pub mod hamiltonian;
pub mod model;

pub use fourier::{irb_check, schwinger_fourier, FourierTable, IrbReport};
pub use gap::{gap_scan, wired_magnetization, GapScan};
pub use green::e_function;
pub use hamiltonian::Hamiltonian;
pub use model::{Beta, Observable, SpectralModel};
