//! Resolution-adaptive signal detection.
//!
//! Given a posterior over signal locations, select a disjoint set of regions
//! that maximizes resolution-weighted expected power subject to a Bayesian
//! error-rate constraint (FDR, local FDR, PFER or FWER).

pub mod blip;
pub mod ecc;
pub mod error;
pub mod groups;
pub mod io;
pub mod lp;
pub mod pips;
pub mod preprocess;
pub mod samplers;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
pub use types::*;
