//! Estimation of spatially varying PDE coefficients from noisy solution data.
//!
//! The forward model is the P1 finite-element discretization of
//! `-div(q grad u) = f` with Dirichlet data on 1D interval meshes and
//! structured triangulations of the unit square. Gradients of the data misfit
//! with respect to the coefficient come from the discrete adjoint; when the
//! coefficient is represented by a small feedforward network, they are pulled
//! back to the network parameters by backpropagation. A dense BFGS driver
//! minimizes the resulting objective, and the Morozov discrepancy principle
//! calibrates generalized Tikhonov regularization.
//!
//! ```no_run
//! use coeffinv::experiment::{run_experiment, ExperimentConfig, RunOptions};
//!
//! let cfg = ExperimentConfig::from_json(r#"{
//!     "id": "demo", "dim": 1, "coefficient": "linear",
//!     "noise": { "delta": 0.05 },
//!     "prior": { "kind": "network", "layers": [1, 3, 1] }
//! }"#).unwrap();
//! let outcome = run_experiment(&cfg, RunOptions::default()).unwrap();
//! println!("{}", outcome.row.to_csv());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adjoint;
pub mod analytic;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod mesh;
pub mod net;
pub mod optim;
pub mod par;
pub mod problem;
pub mod quadrature;
pub mod regcal;
pub mod sparse;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
