//! Simulation and processing chain for locating a single backscatter tag
//! around corners with an FMCW MIMO radar.

pub mod channel;
pub mod codes;
pub mod error;
pub mod fsmusic;
pub mod harness;
pub mod locate;
pub mod receiver;
pub mod scene;
pub mod waveform;

pub use error::{Error, Result};
