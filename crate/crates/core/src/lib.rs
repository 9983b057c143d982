//! Exact diagonalization of a single itinerant excitation on a ring, coupled to
//! Einstein phonons through Peierls (hopping-modulating) and breathing-mode
//! (density-displacement) interactions.
//!
//! The pipeline is:
//!
//! 1. [`fock`] enumerates and ranks the truncated phonon basis.
//! 2. [`hamiltonian`] assembles the Hermitian matrix of each total-quasimomentum
//!    sector in the Bloch-summed basis.
//! 3. [`eigen`] finds each sector's lowest eigenpair with Lanczos and picks the
//!    global ground state, with a dense real-space oracle for small systems.
//! 4. [`entanglement`] reduces the ground state to the excitation density matrix
//!    and extracts its entanglement spectrum and entropy.
//! 5. [`sweep`] drives coupling sweeps, transition detection, convergence
//!    certification and CSV/JSON output.

pub mod eigen;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod model;
pub mod sweep;

pub use eigen::{ground_state_over_k, lowest_eigenpair, GroundStateRecord, SolverSettings};
pub use entanglement::{entropy, reduced_density, spectrum, svd_cross_check, EntanglementSpectrum};
pub use error::{Error, Result};
pub use fock::{BasisIndexMap, PhononConfig};
pub use hamiltonian::{Momentum, SparseSectorHamiltonian};
pub use model::ModelParams;
pub use sweep::{converge, run_sweep, solve_point, SweepConfig, SweepRow, SweepTable};
