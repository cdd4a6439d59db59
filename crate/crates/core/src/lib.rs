//! SVEIR epidemic model with imperfect vaccination and an environmental
//! reservoir `C` feeding a saturating force of infection.
//!
//! The crate covers simulation ([`integrator`]), the disease-free threshold
//! ([`equilibria`]), endemic states and the transcritical point
//! ([`bifurcation`]), parameter fitting ([`calibration`]) and elasticities of
//! R0 ([`sensitivity`]). The `epidemio` binary wraps these as subcommands.

pub mod bifurcation;
pub mod calibration;
pub mod cli;
pub mod equilibria;
pub mod error;
pub mod integrator;
pub mod io;
pub mod model;
pub mod params;
pub mod sensitivity;

pub use error::{Error, Result};
pub use model::StateVector;
pub use params::{load_params, ModelParams, ParamName};
