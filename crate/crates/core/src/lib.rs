//! Exact simulation and verification tools for one-way quantum computing on
//! lattices whose native entangler acts on three qubits at once.
//!
//! The crate is organized around a dense state-vector engine ([`state`]), a
//! byproduct-operator tracker for Pauli and controlled-phase corrections
//! ([`frame`]), lattice geometry and initialization assignments ([`lattice`]),
//! the measurement protocols built on top of them ([`protocols`]), and the
//! effective three-site spin model the entangler descends from ([`heff`]).
//! [`verify`] bundles the end-to-end checks exposed by `bowtie-mbqc verify`.

pub mod error;
pub mod frame;
pub mod heff;
pub mod lattice;
pub mod protocols;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
