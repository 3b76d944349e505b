//! Instruction-driven navigation on occupancy grids.
//!
//! Instructions are parsed into a small action algebra that edits a grid's
//! cost layer and goal; a weighted best-first search plans over the result
//! and a lockstep simulator drives the closed replanning loop.

pub mod action;
pub mod grid;
pub mod landmarks;
pub mod planner;
pub mod profile;
pub mod instruct;
pub mod world;
pub mod dcip;
pub mod harness;
pub mod bundled;
