//! Solver and diagnostics for a viscous Cahn–Hilliard–Oono phase field coupled
//! to a chemotactic nutrient, with a singular logarithmic potential.
//!
//! * [`grid`]: tensor-product Neumann grids, discrete operators, dual norms.
//! * [`potential`]: the logarithmic potential and its κ-regularization.
//! * [`dynamics`]: the energy-stable time stepper and linear dispersion.
//! * [`diagnostics`]: energies, dissipation, the barrier comparison.
//! * [`steady`]: stationary residuals and relaxation to equilibrium.
//! * [`experiments`]: config files, initial data, output formats, drivers.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod potential;
pub mod steady;

pub use error::{Error, Result};
