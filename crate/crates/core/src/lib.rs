pub mod error;
pub mod geom;
pub mod linalg;
pub mod prob;
pub mod report;
pub mod solver;
pub mod tensor;
pub mod windmill;

pub use error::{Error, Result};
