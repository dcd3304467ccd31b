pub mod classical;
pub mod cq;
pub mod error;
pub mod field;
pub mod hermitian;
pub mod hull;
pub mod ncc;
pub mod optimizer;
pub mod regions;
pub mod simplex;

pub use error::{Error, Result};
