//! Regulation capacity offering for aggregated plug-in electric vehicles.
//!
//! The crate covers the whole chain: signal preprocessing, chance
//! constraint reformulation, a day-ahead stochastic MILP, an hour-ahead
//! second-order cone program, real-time dispatch with settlement, and a
//! multi-day campaign comparing offering strategies.

pub mod campaign;
pub mod dayahead;
pub mod error;
pub mod fleetgen;
pub mod hourahead;
pub mod io;
pub mod signals;
pub mod simulator;
pub mod uncertainty;

pub use error::{Error, Result};
