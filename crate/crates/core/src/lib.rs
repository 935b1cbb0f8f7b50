//! Numerical laboratory for strongly interacting K-bubble blow-up in the 2D cubic NLS.
//!
//! The crate is organized by task: [`groundstate`] for the Townes profile and its
//! linearization, [`interactions`] for overlap asymptotics, [`ansatz`] for the
//! K-bubble approximate solution, [`reduced_ode`] for the modulation dynamics and the
//! topological shooting, [`pde`] for the split-step solver, and [`modulation_fit`]
//! for decomposing simulated fields.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::type_complexity)]

pub mod acceptance;
pub mod ansatz;
mod dopri;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod groundstate;
pub mod interactions;
pub mod modulation_fit;
pub mod oracle;
pub mod pde;
pub mod profile;
pub mod provenance;
pub mod reduced_ode;

pub use error::{Error, Result};
pub use grid::RadialGrid;
pub use profile::RadialProfile;
pub use ansatz::{ParamState, ParamVelocity};
pub use field::ComplexField2D;
pub use groundstate::GroundStateData;
pub use interactions::GeometryConstants;
