//! Numerical laboratory for the axisymmetric Navier-Stokes equations written in
//! the azimuthal vorticity `omega` and swirl `u` on the half-plane
//! `Omega = {r > 0, z in R}`:
//!
//! ```text
//!   d_t omega - L omega = -div_*(u~ omega) + d_z(u^2)/r
//!   d_t u     - L u     = -div_*(u~ u) - 2 u u^r / r
//!   L = d_r^2 + d_z^2 + (1/r) d_r - 1/r^2,   div_* f = d_r f^r + d_z f^z
//! ```
//!
//! where `u~ = (u^r, u^z)` comes from `omega` by the axisymmetric Biot-Savart law.

pub mod biot_savart;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod initial_data;
pub mod mild;
pub mod parallel;
pub mod quadrature;
pub mod semigroup;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

/// A ratio that may be the indeterminate `0/0`, kept apart from real values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Value(f64),
    ZeroOverZero,
}

impl Ratio {
    pub fn of(num: f64, den: f64) -> Ratio {
        if num == 0.0 && den == 0.0 {
            Ratio::ZeroOverZero
        } else {
            Ratio::Value(num / den)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(*v),
            Ratio::ZeroOverZero => None,
        }
    }

    /// `true` for the sentinel or for a finite value not above `bound`.
    pub fn within(&self, bound: f64) -> bool {
        match self {
            Ratio::Value(v) => v.is_finite() && *v <= bound,
            Ratio::ZeroOverZero => true,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{v:.6e}"),
            Ratio::ZeroOverZero => f.write_str("0/0"),
        }
    }
}
