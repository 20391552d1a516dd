//! Quadrotor visual-servo control: dynamics, virtual cameras, the
//! window-crossing and landing force laws, the mission supervisor, a
//! fixed-step simulator and trajectory analysis.
//!
//! Conventions: inertial frame with `e3` pointing down, `R` maps body to
//! inertial axes, forces in newtons. The crate is `no_std` and needs `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod mission;
pub mod perception;
pub mod sim;
