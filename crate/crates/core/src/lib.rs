pub mod algebra;
pub mod asymptotics;
pub mod catalog;
pub mod checks;
pub mod curvature;
pub mod document;
pub mod error;
pub mod flow;
pub mod isotropy;
pub mod linalg;
pub mod run;
pub mod sampling;

pub use error::{Error, Result};
