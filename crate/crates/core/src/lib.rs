//! Sit-to-stand biomechanics with an active robotic cane.
//!
//! A four-segment sagittal model (HAT, thigh, shank, foot) is scaled to a
//! subject, driven by joint-angle trajectories, and solved segment by segment
//! for joint torques and the ground reaction force with an external cane
//! force at the trunk. Around that core sit ground-reaction-force event and
//! parameter analysis, skeleton-to-angle conversion and a closed-loop
//! pneumatic cane simulation.

// `!(x > 0.0)` style checks also catch NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anthro;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod grf;
pub mod kinematics;
pub mod perception;
pub mod table;

pub use error::{Error, Result};
