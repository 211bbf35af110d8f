pub mod assembly;
pub mod config;
pub mod driver;
pub mod error;
pub mod estimator;
pub mod export;
pub mod mesh;
pub mod problem;
pub mod solver;
pub mod space;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
