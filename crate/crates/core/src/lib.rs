pub mod cli;
pub mod dist;
pub mod equilibria;
pub mod error;
pub mod mcsim;
pub mod quad;
pub mod sweep;
pub mod verify;
pub mod welfare;

pub use error::{Error, Result};
