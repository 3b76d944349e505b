//! Command line and HTTP front end for the gridpilot planner.

pub mod api;
pub mod cli;
pub mod error;
pub mod rle;
pub mod session;
pub mod sources;
