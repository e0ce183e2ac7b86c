//! Uplink coverage of a cellular user that shares its resource block with
//! device-to-device (D2D) pairs.
//!
//! Candidate D2D nodes form a homogeneous Poisson point process around the
//! small-cell base station. Only nodes that find a partner within a target
//! distance `mu` become active, which the closed-form model captures by
//! thinning the process with a retention probability `1 - exp(-k pi lambda mu^2)`.
//!
//! The crate is split into:
//!
//! * [`pointprocess`]: PPP, cellular-user and fading samplers on an annulus.
//! * [`pairing`]: shortest-distance greedy pairing and empirical retention.
//! * [`analytic`]: closed forms and quadrature cross-checks.
//! * [`montecarlo`]: end-to-end SIR coverage simulation and `k` calibration.
//! * [`harness`]: experiment definitions, CSV/manifest/plot output, unit handling.

pub mod analytic;
pub mod error;
pub mod harness;
pub mod montecarlo;
pub mod optimize;
pub mod pairing;
pub mod pointprocess;
pub mod quadrature;
pub mod rng;

pub use analytic::ModelParams;
pub use error::{Error, Result};
pub use montecarlo::{CoverageEstimate, EdgeMode, InterfererMode, SimConfig};
pub use pairing::{PairingResult, RetentionCurve, RetentionEstimate};
pub use pointprocess::{Annulus, Point, PointPattern, PolarPosition};
pub use rng::{Purpose, RngStream};
