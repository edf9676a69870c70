//! Lattice periodization of frozen kernels, their Fourier symbols, and the
//! explicit coercivity constant for cone kernels.

mod coercivity;
mod periodize;
mod quadrature;
mod symbol;

pub use coercivity::{explicit_constant, first_root, verify_coercivity, CoercivityCertificate, ExplicitConstant, ModeRatio};
pub use periodize::{periodize, periodize_direction, sphere_integral, tail_bound, Direction, PeriodizedKernel};
pub use quadrature::{composite, gauss_legendre, piecewise, RadialProfile};
pub use symbol::{compute_symbol, Symbol, SYMBOL_TARGET};

/// Default lattice truncation per dimension.
pub fn default_truncation(dim: usize) -> usize {
    match dim {
        1 => 512,
        2 => 16,
        _ => 8,
    }
}
