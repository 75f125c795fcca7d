pub mod catalog;
pub mod census;
pub mod error;
pub mod fine;
pub mod hidden;
pub mod instance_file;
pub mod locality;
pub mod lp;
pub mod model;
pub mod qm;
pub mod scalar;
pub mod sim;
pub mod slice;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
