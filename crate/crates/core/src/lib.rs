//! Numerical laboratory for two families of superintegrable planar
//! Hamiltonians: the deformed Kepler-Coulomb system
//!
//! ```text
//! H = p² - Q/r + αk²/(4r²cos²(kφ/2)) + βk²/(4r²sin²(kφ/2))
//! ```
//!
//! and the TTW oscillator `H = p² + ω²ρ² + αk²ρ⁻²sec²(kθ) + βk²ρ⁻²csc²(kθ)`,
//! together with the Stäckel (coupling constant metamorphosis) map that
//! carries one onto the other.
//!
//! Modules:
//! - [`specfun`]: Chebyshev, Laguerre, Jacobi recurrences and Gauss-Legendre rules.
//! - [`systems`]: parameters, phase points, Hamiltonians, bounded-motion algebra.
//! - [`dynamics`]: adaptive integration, periods, closure, closed-form orbit residuals.
//! - [`invariants`]: `L1`, the higher-order integrals and numerical Poisson brackets.
//! - [`stackel`]: the oscillator-to-Coulomb transform on Hamiltonians, points,
//!   trajectories and wavefunctions.
//! - [`quantum`]: spectrum, degeneracy and Schrödinger residuals.

pub mod dynamics;
pub mod error;
pub mod invariants;
pub mod kv;
pub mod quantum;
pub mod specfun;
pub mod stackel;
pub mod systems;

pub use error::{Error, Result};
pub use systems::{Chart, DCParams, PhasePoint, RationalIndex, System, TTWParams};
