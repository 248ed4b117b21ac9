//! Simulation core for drone-based bridge inspection training.
//!
//! A session flies a scripted or live pilot through a [`scenario`] with the
//! fixed-step [`dynamics`] model, derives per-frame events in
//! [`telemetry`], and scores the flight in [`assessment`]. The [`session`]
//! module ties these together and owns the on-disk log format.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod scenario;
pub mod testing;
pub mod telemetry;
pub mod assessment;
pub mod session;
