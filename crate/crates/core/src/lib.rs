//! svikit: solvers for stochastic variational inequalities VI(T, X), where
//! T(x) = E[F(x, xi)] is only reachable through a sampling oracle.
//!
//! The crate provides a variance-reduced stochastic forward-backward-forward
//! method and a stochastic extragradient baseline, mini-batch oracle
//! machinery with call accounting, step-size and batch-size schedules with
//! their admissibility checks, generators for random quadratic fractional
//! programs and bimatrix games in complementarity form, and a seeded
//! benchmark harness that aggregates replicated runs into CSV tables.

pub mod bench;
pub mod error;
pub mod numkit;
pub mod oracle;
pub mod problems;
pub mod schedules;
pub mod sets;
pub mod solvers;

pub use error::{Error, Result};
