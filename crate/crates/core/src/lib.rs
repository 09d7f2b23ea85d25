//! Simulator for a Rydberg-blockade controlled multi-qubit gate in which a
//! single control atom switches electromagnetically induced transparency
//! in a mesoscopic ensemble of target atoms.
//!
//! Units: angular frequencies in rad/s with ħ = 1, times in seconds.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod gate;
pub mod hamiltonian;
pub mod hilbert;
pub mod interferometer;
pub mod params;
pub mod susceptibility;
pub mod sweep;

pub use config::Config;
pub use dynamics::{evolve, evolve_piecewise, evolve_sampled, EmbeddedPair, EvolutionReport, IntegratorConfig, Method};
pub use error::{Error, Result};
pub use hamiltonian::{Hamiltonian, HamiltonianSpec};
pub use hilbert::{CompositeState, ControlLevel, EnsembleLevel, LevelScheme, Model, C64};
pub use params::{PhysParams, RamanPulse};
pub use sweep::{run_sweep, Axis, Experiment, SweepSpec};
