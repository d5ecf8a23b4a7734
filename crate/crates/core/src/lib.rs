//! Quantum state transfer through a cavity bus beyond the rotating-wave
//! approximation.
//!
//! Two qubits `Q1`, `Q2` couple in turn to one cavity mode `C` through the
//! Rabi interaction. The crate propagates the bus, extracts the resulting
//! qubit channel, and evaluates its coherent information and geometry.

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod dynamics;
pub mod experiment;
pub mod fano;
pub mod error;
pub mod hilbert;
pub mod information;
pub mod integrate;
pub mod io;
pub mod simplex;

pub use error::{Error, Result};
