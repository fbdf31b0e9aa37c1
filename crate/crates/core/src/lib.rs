pub mod error;
pub mod exec;
pub mod kg;
pub mod corpus;
pub mod logic;
pub mod matrix;
pub mod nn;
pub mod numeric;
pub mod verify;
pub mod wl;

pub use error::{Error, Result};
