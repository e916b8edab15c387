//! Numerical toolkit for functional inequalities on finite reversible Markov
//! chains: Dirichlet forms, estimators for Poincaré / log-Sobolev / Beckner
//! constants, moment and tail bounds built from the carré du champ, Gaussian
//! chaos partition norms and Poisson point process functionals.
//!
//! Every randomized routine takes an explicit seed. Data-parallel loops
//! (optimizer multi-starts, Monte Carlo replicas, alternating-maximization
//! restarts) go through [`exec`], which runs on rayon when the `parallel`
//! feature is enabled and falls back to a plain loop otherwise. Results do
//! not depend on the execution mode.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chaos;
pub mod constants;
pub mod dirichlet;
pub mod error;
pub mod exec;
pub mod moments;
pub mod numeric;
pub mod poisson;
pub mod space;
pub mod zoo;

pub use dirichlet::Kernel;
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use space::FiniteSpace;
