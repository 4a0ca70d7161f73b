//! Monte Carlo laboratory for the charged-polymer Hamiltonian
//! `H_n = Σ_{i<j} q_i q_j 1{S_i = S_j}` of a simple random walk `S` on `Z^d`
//! carrying i.i.d. charges `q`.

pub mod brownian;
pub mod charges;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod lattice;
pub mod oracle;
pub mod replicates;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{LabError, Result};
