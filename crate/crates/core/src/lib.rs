pub mod certificate;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod io;
pub mod so3;
pub mod solvers;
pub mod synth;
pub mod tol;

pub use error::{Error, Result};
