//! Joint rigid registration of multiple point clouds against one shared
//! Gaussian mixture, with a uniform outlier class and a local-consistency
//! penalty that pulls the posteriors of neighboring points together.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: points, clouds, rigid transforms, bounding volumes, pose RMSE
//! * [`neighbors`]: per-cloud directed k-NN graphs
//! * [`mixture`]: the mixture model, its initialization and the E-step
//! * [`solver`]: the penalized objective, closed-form M-step, EM driver
//! * [`synth`]: data degradation and the synthetic experiment harness
//! * [`io`]: cloud files, pose JSON, sweep CSV and run manifests

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod mixture;
pub mod neighbors;
pub mod parallel;
pub mod solver;
pub mod synth;

pub use error::{Block, Error, Result};
pub use geometry::{rmse, Point3, PointCloud, PointCloudSet, RigidTransform};
pub use mixture::{e_step, init_mixture, MixtureModel, PosteriorMatrix};
pub use neighbors::{build_knn, NeighborGraph};
pub use solver::{run_registration, RegistrationConfig, RegistrationResult};

pub use nalgebra::{Matrix3, Vector3};
