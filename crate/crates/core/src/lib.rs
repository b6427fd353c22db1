//! Robust joint beamforming and movable-antenna positioning for a multiuser
//! downlink with imperfect user-location knowledge.

pub mod ao;
pub mod baselines;
pub mod certify;
pub mod error;
pub mod model;
pub mod surrogate;
pub mod verify;

pub use error::{Error, Result};
