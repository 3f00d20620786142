//! Information-driven trajectory optimization for active mapping.
//!
//! The crate plans open-loop control sequences for a robot moving with
//! SE(2)/SE(3) pose kinematics so that the log-determinant of the map's
//! information matrix is maximized after a finite horizon. A smooth,
//! signed-distance based field of view makes the reward differentiable in
//! the controls, and the gradient is accumulated with a forward pose pass
//! followed by a backward recursion over pose derivatives.
//!
//! Modules:
//! - [`liegroup`]: poses, twists, exponential map and its derivatives.
//! - [`fov`]: projected-cone signed distance, probit smoothing, noise field.
//! - [`mapcore`]: occupancy grids, Gaussian map beliefs, EKF/EIF updates.
//! - [`icr`]: reward, gradient and gradient-ascent planner.
//! - [`tracking`]: Riccati-map target tracking with gradient descent.
//! - [`explore`]: exploration episodes and baseline strategies.
//! - [`config`] and [`cli`]: run configuration and command entry points.

pub mod cli;
pub mod config;
pub mod error;
pub mod explore;
pub mod fov;
pub mod icr;
pub mod liegroup;
pub mod mapcore;
pub mod pgm;
pub mod tracking;

pub use error::{Error, Result};
pub use fov::ConeFov;
pub use liegroup::{Pose, Twist};
pub use mapcore::{GridMap, MapBelief};
