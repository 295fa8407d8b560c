//! Lattice tools for su(N) gauge fields on truncated boxes in ℝ^d:
//! instanton construction, topological invariants, gauge fixing, divergence
//! solvers, field surgery, hyperbolic evolution, and gauge patching.

pub mod error;
pub mod lie;
pub mod grid;
pub mod field;
pub mod calculus;
pub mod div_solver;
pub mod evolution;
pub mod gauge_fix;
pub mod instanton;
pub mod io;
pub mod surgery;
pub mod topology;

pub use error::{Error, Result};
