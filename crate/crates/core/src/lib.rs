//! Sparse Pauli noise tomography, probabilistic error reduction and virtual
//! zero-noise extrapolation, with a density-matrix simulator to run it against.

pub mod circuit;
pub mod clifford;
pub mod demo;
pub mod density;
pub mod dressed;
pub mod error;
pub mod executor;
pub mod linalg;
pub mod nnls;
pub mod per;
pub mod pnt;
pub mod qpd;
pub mod noise;
pub mod pauli;
pub mod real;
pub mod stats;
pub mod trotter;

pub use circuit::{Circuit, Gate};
pub use clifford::{CliffordGate, CliffordKind, CliffordLayer, LayerId};
pub use dressed::{distinct_clifford_layers, parse_dressed, DressedCircuit, DressedLayer};
pub use error::{Error, Result};
pub use pauli::{enumerate_model_terms, path_edges, Pauli, PauliString};
pub use real::Real;

pub type SparseNoiseModel = noise::SparseNoiseModel<f64>;
pub type SparseNoiseModelF32 = noise::SparseNoiseModel<f32>;
pub type NoiseSpec = noise::NoiseSpec<f64>;
