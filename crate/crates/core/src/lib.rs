//! Distributed tracking of the convex polytope spanned by moving leaders.
//!
//! Followers run a neighbor-based consensus rule over a switching directed
//! topology while leaders move under unknown inputs. This crate provides
//!
//! * exact nearest-point projection onto the leader polytope ([`geometry`]),
//! * switching schedules and their connectivity classes ([`topology`]),
//! * a fixed-step integrator for the closed-loop system ([`dynamics`]),
//! * the explicit contraction factors and gains that certify set
//!   input-to-state stability and its integral variant ([`certificates`]),
//! * numerical verification of those bounds along trajectories ([`analysis`]),
//! * reproducible scenario generators for each connectivity class ([`scenarios`]).

pub mod analysis;
pub mod certificates;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod scenarios;
pub mod topology;

pub use error::{Error, Result};
