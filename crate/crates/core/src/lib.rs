pub mod array;
pub mod backhaul;
pub mod channel;
pub mod config;
pub mod error;
pub mod hybrid;
pub mod output;
pub mod power;
pub mod precoding;
pub mod relay;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
pub use nalgebra;
