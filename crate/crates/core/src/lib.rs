//! Exact time-dependent one-to-all travel time profiles.
//!
//! The engine builds a time-dependent contraction hierarchy over a road
//! network with periodic piecewise-linear edge weights, then answers
//! one-to-all profile queries with an upward search followed by a pruned
//! sweep over the downward edges in descending importance.

pub mod ttf;

pub use ttf::{ApproxMode, Epsilon, Point, Strictness, Ttf, TtfError, DEFAULT_PERIOD};
pub mod graph;

pub use graph::{NodeId, TdEdge, TdGraph};
pub mod profile;
pub mod tch;

pub use tch::{build_tch, OrderParams, Tch};
pub mod sweep;

pub use sweep::{
    run, ApproxBundle, Profile, SweepError, SweepOptions, SweepResult, SweepStats, Sweeper,
};
pub mod verify;
