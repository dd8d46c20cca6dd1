//! Privacy-preserving association rule mining: fake-transaction insertion,
//! MASK bit distortion, their hybrid, and the privacy and error analysis
//! around them.

pub mod apriori;
pub mod attack_sim;
mod bitmap;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod fs_scheme;
pub mod hs_scheme;
pub mod market_basket;
pub mod privacy_analysis;
pub mod ps_scheme;

pub use error::{Error, Result};
