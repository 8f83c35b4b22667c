//! Integrated power and thermal management of an electric vehicle through a
//! driving phase and a fast-charging phase, controlled by a shrinking-horizon
//! MPC with non-uniform sampling.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod models;
pub mod mpc;
pub mod plant;
pub mod scenario;
pub mod solver;
pub mod transcription;
