//! Exact pure-dephasing dynamics of a qubit coupled to an Ohmic-family
//! bosonic reservoir.
//!
//! All internal quantities are dimensionless: frequencies are measured in
//! units of the cutoff frequency (`x = ω/ω_c`), times in units of its inverse
//! (`τ = ω_c t`) and temperatures as `T̃ = 2 k_B T / ω_c`.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`] – Gamma and digamma functions.
//! * [`spectral`] – spectral densities, cutoff functions, the thermal
//!   weight `g(x, T̃)` and its low-frequency classification.
//! * [`quadrature`] – semi-infinite and oscillatory quadrature.
//! * [`dynamics`] – decoherence factor `Λ(τ)`, dephasing rate `γ(τ)` and
//!   stationary coherences.
//! * [`nonmarkov`] – channel capacity, information back-flow intervals and
//!   the `N_Q` measure.
//! * [`optimizer`] – optimal Ohmicity search and parameter sweeps.
//! * [`cli`] – the `dephasim` command-line front end.

pub mod cli;
pub mod dynamics;
mod error;
pub mod nonmarkov;
pub mod optimizer;
pub mod quadrature;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
