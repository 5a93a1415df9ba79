//! Simulation and learning toolkit for multi-UAV secure data collection
//! under an adaptive eavesdropping UAV.
//!
//! The crate is layered bottom-up:
//!
//! * [`channel`] computes path loss, Rician small-scale fading, per-link
//!   rates, jamming power and eavesdropping leakage.
//! * [`env`] is the time-slotted world: action validation, mobility, GU
//!   queues, UAV buffers and secure throughput accounting.
//! * [`game`] wraps the world as a leader (legitimate team) and follower
//!   (eavesdropper) decision process and runs the alternating training.
//! * [`dt`] is the digital twin: fused observation memory, Gaussian
//!   process estimators for channels and eavesdropper motion, and a
//!   virtual environment backed by them.
//! * [`rl`] is a from-scratch PPO with manual backpropagation.
//! * [`harness`] orchestrates full experiments and writes CSV output.

// `!(x > 0.0)` is used on purpose so NaN is rejected; index loops mirror
// the matrix notation of the model.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity, clippy::too_many_arguments)]

pub mod channel;
pub mod config;
pub mod dt;
pub mod env;
pub mod error;
pub mod game;
pub mod geometry;
pub mod harness;
pub mod rl;

pub use config::{Config, WorldConfig};
pub use error::{Error, Result};
