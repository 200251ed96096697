//! Solvers for quasi variational-hemivariational inequalities arising from
//! Bingham-type Stokes flow with nonmonotone slip and a solution-dependent
//! obstacle.

pub mod checks;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod potentials;
pub mod qvhi_solver;
pub mod vi_solver;

pub use error::{Error, Result};
