//! SU(2) gauge fields on a periodic cubic lattice.
//!
//! The crate evolves connections by the Yang-Mills heat flow (caloric and
//! DeTurck gauges), extends the flow to the time component, evolves the
//! hyperbolic Yang-Mills system in temporal gauge, assembles the
//! caloric-temporal gauge and checks the weighted estimates along the way.

pub mod algebra;
pub mod error;
pub mod estimates;
pub mod gauge;
pub mod heatflow;
pub mod hyperbolic;
pub mod lattice;
pub mod tolerances;

pub use error::{Error, Result};
