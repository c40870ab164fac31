//! Convergence and cycling landscape of the heavy-ball method.
//!
//! The heavy-ball recursion is `x_{t+1} = x_t - gamma * grad f(x_t) + beta * (x_t - x_{t-1})`.
//! This crate computes its exact rates on quadratics, the region where it cycles on
//! smooth strongly convex functions, explicit counterexample functions, a linear
//! feasibility test for general cycles, and a simulation engine that checks cycling
//! and its robustness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cycle_lp;
pub mod error;
pub mod hb_engine;
pub mod quad_rates;
pub mod report;
pub mod rou_region;
pub mod simplex;
pub mod smooth;

pub use error::{Error, Result};
pub use quad_rates::{FunctionClass, HbParams, RateReport, Region};
