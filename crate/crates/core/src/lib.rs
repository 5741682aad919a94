//! Dengue transmission dynamics with a constant adulticide control.
//!
//! The model couples four human compartments (susceptible, exposed,
//! infected, resistant) with a mosquito aquatic phase and three adult
//! female compartments (susceptible, exposed, infected). This crate
//! evaluates the model, integrates it in time, locates its equilibria,
//! computes the basic reproduction number and local stability, and finds the
//! smallest constant control that pushes R0 below one.
//!
//! ```
//! use dengue_core::{model, ControlLevel, ModelParameters};
//!
//! let p = ModelParameters::cape_verde_2009();
//! let r0 = model::r0(&p, ControlLevel::NONE).unwrap();
//! assert!((r0 - 2.396).abs() < 1e-3);
//! ```

pub mod equilibrium;
pub mod error;
pub mod integrator;
pub mod model;
pub mod scenario;

pub use equilibrium::{EquilibriumKind, EquilibriumReport, Stability, SweepRow};
pub use error::{Error, ErrorClass, Result};
pub use integrator::{IntegrationConfig, Method, Trajectory};
pub use model::{Compartment, ControlLevel, DerivativeVector, ModelParameters, SystemState};
pub use scenario::Scenario;
