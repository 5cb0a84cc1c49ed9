//! Simulation of a driven three-level flux qubit coupled dispersively to an
//! electric and a mechanical resonator, and of the effective photon–phonon
//! beam-splitter coupling it induces.
//!
//! Units throughout: frequencies and rates are configured as ordinary
//! frequencies in MHz, operators are in rad/µs and times in µs.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod model;
pub mod operators;
pub mod solver;
pub mod validation;

pub use error::{Error, Result};
