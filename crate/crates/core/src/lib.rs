//! Deterministic agent-based crowd management simulation.
//!
//! Two simulators share one seeded random stream and a spatial index:
//!
//! * [`evac`] evacuates a mixed population of normal and vulnerable agents
//!   through four corner gates under random, closest-gate and
//!   vulnerable-exclusive gate assignment, and reports a fairness index.
//! * [`stage`] runs a two-stage event on a 51×51 patch grid where a
//!   controller switches the performing stage once crowded, surging
//!   subareas persist.
//!
//! [`harness`] drives parameter sweeps over seeds and writes CSV reports.

pub mod error;
pub mod evac;
pub mod geom;
pub mod harness;
pub mod rng;
pub mod spatial;
pub mod stage;

pub use error::{Error, Result};
pub use geom::{Rect, Vec2};
pub use rng::RngStream;
pub use spatial::OccupancyIndex;
