//! Simulation library for a kite-shunted fluxonium ("harmonium") qubit:
//! circuit construction, grid discretization, sparse diagonalization,
//! noise-rate estimation, dephasing, gates, readout, and parameter
//! optimization.

pub mod basis;
pub mod bo;
pub mod circuit;
pub mod config;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod hamiltonian;
pub mod model;
pub mod noise;
pub mod operator;
pub mod optimize;
pub mod readout;
pub mod units;

pub use basis::{BasisSpec, ProductBasis};
pub use circuit::{CircuitParams, FluxBias, NoiseEnvironment};
pub use config::{BasisConfig, Config};
pub use error::{Error, Result};
pub use operator::SparseOperator;
