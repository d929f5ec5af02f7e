//! Mean curvature flow of graphs with transport terms under Neumann
//! boundary conditions.
//!
//! The library simulates the quasilinear evolution
//! `∂_t u = Σ a_ij(du) ∂_ij u + f(x,u,t)·(-du,1)` on an interval or a disk,
//! where `a_ij(r) = δ_ij - r_i r_j / (1+|r|²)`, together with the geometric
//! apparatus used to monitor it: graph quantities (`v`, `h`, `|A|²`),
//! backward heat kernels and their boundary reflections, Huisken-type
//! monotonicity integrals, iterated space-time transport norms, and the
//! self-similar family used both as a manufactured exact solution and as a
//! gradient blow-up demonstration.
//!
//! The `graphflow` binary drives batch experiments from TOML run
//! configurations and emits CSV artifacts; see the crate README.

pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod geom;
pub mod graph;
pub mod grid;
pub mod kernels;
pub mod manufactured;
pub mod run_config;
pub mod solver;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
