pub mod conformal;
pub mod dec;
pub mod error;
pub mod graph;
pub mod io;
pub mod moves;
pub mod operators;
pub mod shapes;
pub mod solver;
pub mod surface;

pub use error::{Error, Result};
