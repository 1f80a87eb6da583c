//! Efficient seated human body model for whole-body vibration studies.
//!
//! A 12-segment, 31-DoF articulated rigid-body model of a seated occupant with
//! Cardan spring-damper joint restraints, penetration-based seat contact and
//! per-DoF PID posture control, together with the surrounding pipeline:
//! excitation synthesis, fixed-step simulation with restart snapshots,
//! transmissibility estimation and derivative-free calibration.

pub mod analysis;
pub mod body;
pub mod calibration;
pub mod cli;
pub mod config;
pub mod control;
pub mod error;
pub mod forces;
pub mod geometry;
pub mod model;
pub mod rigidbody;
pub mod sim;
pub mod spatial;

pub use error::{Error, Result};
