//! Cramér–Rao bounds for joint location, velocity and reflectivity estimation
//! of moving targets observed by narrow-band near-field antenna arrays.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: centered uniform linear arrays and their region boundaries.
//! - [`scene`]: waveform constants, arrays, targets and the real parameter vector.
//! - [`steering`]: spherical-wavefront steering vectors and their analytic derivatives.
//! - [`fim`]: Fisher information assembly from rank-1 channel derivatives.
//! - [`crb`]: exact bounds (full inverse, Schur complement, reciprocal diagonal).
//! - [`approx`]: far-field and near-field closed-form approximations.
//! - [`oracle`]: independent numeric ground truth (finite differences, brute-force
//!   sums, Monte Carlo).
//!
//! Data-parallel loops (snapshots, batteries) go through [`exec`], which uses
//! rayon when the `parallel` feature is enabled and a plain sequential loop
//! otherwise. Reductions always happen in a fixed order, so results do not
//! depend on the worker count.

pub mod approx;
pub mod crb;
mod error;
pub mod exec;
pub mod fim;
pub mod geometry;
pub mod oracle;
pub mod scene;
pub mod steering;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{ArrayGeometry, Point};
pub use scene::{ParamKind, ParamVector, PhaseMode, Scene, SceneConfig, Target};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
