//! Equivalent-circuit hydropower plant models with numerical linearization.
//!
//! The penstock is an RLC ladder of `n` elements feeding a quasi-static
//! turbine described by polar characteristic curves. [`linearize`] produces an
//! LTI state-space model around a steady operating point, and [`bench`]
//! scores it against the nonlinear model over a grid of step changes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod circuit;
pub mod config;
pub mod curves;
pub mod error;
pub mod linearize;
pub mod sim;

pub use circuit::{PlantConfig, PlantInput, StateLayout};
pub use config::{load_plant, parse_plant, BundledPlant, HeadSignal, Plant};
pub use curves::{Curves, HillChart, TurbineKind, TurbineState};
pub use error::{Error, Result};
pub use linearize::{LinearStateSpace, Steps};
pub use sim::{find_equilibrium, OperatingPoint, SimOptions, Trajectory};
