//! Design and policy co-optimization for planar multi-finger hands.
//!
//! The crate is organised bottom-up:
//!
//! * [`design`]: the 14-parameter hand genome, its bounds and the genetic /
//!   interpolation operators acting on it.
//! * [`env`]: a deterministic top-view quasi-static manipulation simulator.
//! * [`learning`]: the MLP policy, episode rollouts and an evolution-strategy
//!   trainer with warm start.
//! * [`evaluation`]: success rate under a fixed-direction disturbance force and
//!   its area under the force curve.
//! * [`evolution`]: the elite pool and the propose / transfer / admit loop.
//! * [`config`] and [`runner`]: run configuration, persistence and the command
//!   implementations used by the `handopt` binary.

pub mod config;
pub mod design;
pub mod env;
pub mod error;
pub mod evaluation;
pub mod evolution;
pub mod learning;
pub mod runner;
pub mod seed;

pub use error::{Error, Result};
