//! Partially adaptive momentum estimation (Padam) and its reference baselines.
//!
//! The crate is organised bottom-up:
//!
//! - [`optim`]: per-step update rules (Padam, Amsgrad, Adam, AdamW, SGD with
//!   momentum, Adagrad) as pure state transitions.
//! - [`problems`]: stochastic objectives with exact and sampled gradient
//!   oracles, plus the finite-difference gradient oracle.
//! - [`harness`]: the deterministic run loop, learning-rate schedules,
//!   randomized output selection and CSV/JSON trace persistence.
//! - [`theory`]: constants and right-hand sides of the nonconvex convergence
//!   bound, the growth-rate estimator and pathwise lemma checks.
//! - [`cli`]: the `padam` command-line front end (`run`, `sweep-p`,
//!   `compare`, `verify`).

pub mod cli;
pub mod error;
pub mod harness;
pub mod optim;
pub mod problems;
pub mod sum;
pub mod theory;
pub mod vector;

pub use error::{Error, Result};
pub use vector::ParamVector;
