//! Monte Carlo and exact tools for low-temperature 3D Potts and random-cluster
//! interfaces above hard and soft floors.

pub mod error;
pub mod experiments;
pub mod fuzzy;
pub mod interfaces;
pub mod lattice;
pub mod oracle;
pub mod par;
pub mod potts_sampler;
pub mod rates;
pub mod rc_coupling;
pub mod stats;
pub mod walls;

pub use error::{Error, Result};
