//! Two-phase Gelfand problem on the slab (-1, 1): minimal stationary
//! solutions, critical values λ*(ν) and parabolic blow-up.

pub mod cli;
pub mod continuation;
pub mod error;
pub mod grid;
pub mod io;
pub mod linsolve;
pub mod parabolic;
pub mod reaction;
pub mod stationary;
pub mod svg;

pub use error::{Error, Result};
