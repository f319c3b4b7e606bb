//! Pulse-level simulation of a hybrid electron/nuclear spin register in an
//! NV center.
//!
//! The crate compiles controlled-rotation (CR) gates on the electron/¹⁴N
//! register into pulse schedules, optionally protecting them with dynamical
//! decoupling (DD) of the electron, and evolves the 9-level density matrix
//! through those schedules under configurable noise.
//!
//! Layout:
//!
//! - [`operators`]: spin-1 algebra, 9-level embedding, computational
//!   subspace bookkeeping and state metrics.
//! - [`hamiltonian`]: register parameters, static Hamiltonian, transition
//!   frequencies and drive operators.
//! - [`schedule`]: the pulse-schedule data model and its text format.
//! - [`compiler`]: gate- and experiment-level compilation into schedules.
//! - [`engine`]: rotating-frame propagation, Lindblad dissipation and
//!   classical detuning noise.
//! - [`experiments`]: input states, θ-sweeps, analytic signal models,
//!   tomography and decay fitting.
//! - [`cli`]: the command-line front end used by the `nvdd` binary.
//!
//! All frequencies are in Hz (not angular), times in seconds and angles in
//! the schedule format in degrees.

pub mod cli;
pub mod compiler;
pub mod engine;
mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod operators;
pub mod schedule;

pub use error::{Error, Result};
pub use hamiltonian::{Channel, NvParams, System, Transition};
pub use operators::{DensityMatrix9, LevelIndex, Operator9, C64};
pub use schedule::Schedule;
