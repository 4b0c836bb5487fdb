//! Kernel two-sample testing for trajectories of dynamical systems.
//!
//! Samples taken along a single trajectory are autocorrelated, so a plain
//! MMD test on them is miscalibrated. This crate estimates how many steps
//! apart two states must be before they are practically independent (the
//! decorrelation shift `a*`, found with an HSIC test across an ensemble of
//! trajectories), thins trajectories at that stride and then runs a
//! permutation-calibrated MMD two-sample test on the thinned points.
//!
//! ```
//! use dynmmd::{systems, mmd, trajectory, Calibration, Point};
//!
//! let sys = systems::LtiPreset::Fig1.system();
//! let x0 = Point::new(vec![0.0, 0.0]).unwrap();
//! let a = systems::simulate_lti(&sys, &x0, 2_000, 1).unwrap();
//! let b = systems::simulate_lti(&sys, &x0, 2_000, 2).unwrap();
//! let xa = trajectory::thin(&a, 80, 200, 20).unwrap();
//! let xb = trajectory::thin(&b, 80, 200, 20).unwrap();
//! let r = mmd::two_sample_test(&xa, &xb, &Calibration::new(0.05, 200, 7).unwrap()).unwrap();
//! assert!(r.statistic >= 0.0);
//! ```

pub mod bench;
pub mod classify;
pub mod error;
pub mod hsic;
pub mod io;
pub mod kernel;
pub mod mixing;
pub mod mmd;
pub mod permutation;
pub mod rng;
pub mod systems;
pub mod trajectory;

pub use error::{Error, Result};
pub use hsic::PairedSample;
pub use kernel::{GaussianKernel, GramMatrix, Point};
pub use mixing::{MixingEstimate, MixingOptions, MixingProfile};
pub use mmd::TestResult;
pub use permutation::Calibration;
pub use systems::{LorenzParams, LtiPreset, LtiSystem};
pub use trajectory::Trajectory;
