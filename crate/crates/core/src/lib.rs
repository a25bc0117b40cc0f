//! Indoor visible-light communication channels with hologram-shaped beams.
//!
//! The crate models an office-sized room lit by ceiling luminaires, traces
//! line-of-sight and diffuse (first and second order) Lambertian paths to a
//! receiver, designs phase-only holograms that steer part of one luminaire's
//! power onto a floor cell, and reports delay spread, 3 dB bandwidth, received
//! power and illuminance figures.
//!
//! Module map:
//!
//! * [`scene`]: rooms, surfaces, luminaires, receivers, partitioning, occlusion
//! * [`channel`]: impulse-response ray tracer
//! * [`photometry`]: illuminance maps and the 300 lx check
//! * [`cgh`]: far-field transform and simulated-annealing hologram design
//! * [`sbls`]: best-light-source selection controller
//! * [`metrics`]: delay, bandwidth, power and data-rate figures
//! * [`sweep`]: batch runners behind the command line tool

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgh;
pub mod channel;
mod error;
pub mod geometry;
pub mod metrics;
pub mod photometry;
pub mod sbls;
pub mod scene;
pub mod sweep;

pub use error::{Error, Result};
pub use geometry::Vec3;

/// Speed of light used for all path delays, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;
