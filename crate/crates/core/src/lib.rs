//! Nonlocal elliptic operators on the flat torus with cone-elliptic kernels:
//! symbols, coercivity certificates, constant and frozen-coefficient solvers,
//! fractional p-Laplacian difference quotients and inequality verifiers.

pub mod const_solver;
pub mod frozen_solver;
pub mod error;
pub mod estimate_verifier;
pub mod rng;
pub mod symbolics;
pub mod kernels;
pub mod plap_lab;
pub mod torus_field;

pub use error::{Error, Result};
