//! Coverage simulation and divergence control for a ceiling-mounted VCSEL
//! array downlink.
//!
//! The crate is split along the pipeline:
//!
//! * [`scene`] and [`config`]: room, emitter array, receiver grid, state and
//!   action spaces, and the flat key-value config file.
//! * [`optics`]: far-field Gaussian irradiance and the receiver front end.
//! * [`radio_map`]: per-beam received power, SINR and coverage maps.
//! * [`env`]: the episodic height-traversal environment with a memoized
//!   reward table.
//! * [`agent`]: tabular Q-learning with decaying epsilon-greedy exploration.
//! * [`baseline`]: exhaustive search over the action set.
//! * [`calibrate`]: noise-floor fitting against a target coverage table.
//!
//! With the default `parallel` feature the heavy loops run on rayon; without
//! it everything falls back to plain iterators with identical results.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod baseline;
pub mod calibrate;
pub mod cli;
pub mod config;
pub mod env;
mod error;
pub mod optics;
pub mod par;
pub mod radio_map;
pub mod scene;

pub use error::{Error, Result};
