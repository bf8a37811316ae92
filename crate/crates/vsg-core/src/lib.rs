//! Simulation and analysis of the active-power loop of a grid-connected
//! virtual synchronous generator.
//!
//! The crate models the converter as a swing equation with adjustable
//! virtual inertia, frequency droop and output-speed feedback, driving a
//! nonlinear power-angle connection to a stiff grid. It provides:
//!
//! - [`grid`]: impedance aggregation and the static power-angle relations;
//! - [`smallsignal`]: damping ratio, speed-feedback design, characteristic
//!   roots, stability margins and the closed-form second-order step
//!   response;
//! - [`controllers`]: the adaptive inertia + speed-feedback strategy and
//!   the constant / J-adaptive / Dp-adaptive / joint baselines;
//! - [`simulator`]: deterministic fixed-step Runge–Kutta integration of
//!   the nonlinear loop under scenario-driven input-power steps;
//! - [`metrics`]: overshoot, settling time, frequency-deviation and
//!   parameter-excursion indices plus strategy comparisons;
//! - [`scenario`]: TOML scenario configs;
//! - [`trace`]: the per-step time-series record and its CSV form.

// validation uses `!(x > 0.0)` so that NaN fails the checks too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controllers;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod scenario;
pub mod simulator;
pub mod smallsignal;
pub mod trace;

pub use error::{Error, Result};
