//! EM driver for joint registration with the local-consistency penalty.

mod mstep;
mod objective;

pub use mstep::{
    cross_covariance, rotation_maximizing_trace, translation_stats, update_centroids, update_rotation,
    update_translation, update_variances, update_weights, variance_stationary_points, RotationStatus, TranslationStats,
    ZERO_MASS,
};
pub use objective::{kl_similarity, objective, ObjectiveValue};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Block, Error, Result};
use crate::geometry::{PointCloudSet, RigidTransform};
use crate::mixture::{e_step, init_mixture, MixtureModel};
use crate::neighbors::NeighborGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationConfig {
    /// Weight of the local-consistency term; 0 gives the plain joint GMM.
    pub lambda: f64,
    pub iterations: usize,
    pub k_neighbors: usize,
    /// Number of Gaussian components.
    pub m_count: usize,
    pub outlier_weight: f64,
    /// Starting variance of every component, mm².
    pub initial_variance: f64,
    /// Lower bound on component variances, mm². `None` derives
    /// `(1e-4 × bounding-box diagonal)²` from the input.
    pub variance_floor: Option<f64>,
    /// Stop once `|ΔQ| / |Q|` drops below this. Off by default.
    pub early_stop: Option<f64>,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            iterations: 100,
            k_neighbors: 5,
            m_count: 1000,
            outlier_weight: 0.1,
            initial_variance: 1000.0,
            variance_floor: None,
            early_stop: None,
        }
    }
}

impl RegistrationConfig {
    /// Defaults with 100 components, sized for quick synthetic experiments.
    pub fn desk_scale() -> Self {
        Self {
            m_count: 100,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.k_neighbors == 0 {
            return Err(Error::config("k_neighbors must be at least 1"));
        }
        if self.m_count == 0 {
            return Err(Error::config("at least one mixture component is required"));
        }
        if !(0.0..1.0).contains(&self.outlier_weight) {
            return Err(Error::config(format!(
                "outlier weight must lie in [0, 1), got {}",
                self.outlier_weight
            )));
        }
        if !(self.initial_variance > 0.0) || !self.initial_variance.is_finite() {
            return Err(Error::config("initial variance must be positive"));
        }
        if let Some(floor) = self.variance_floor {
            if !(floor > 0.0) || !floor.is_finite() {
                return Err(Error::config("variance floor must be positive"));
            }
        }
        if let Some(tol) = self.early_stop {
            if !(tol >= 0.0) {
                return Err(Error::config("early-stop tolerance must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Objective before and after the M-step of one iteration, both evaluated
/// with that iteration's posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub before: ObjectiveValue,
    pub after: ObjectiveValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    /// Estimated pose of every cloud in the frame of the shared mixture.
    pub transforms: Vec<RigidTransform>,
    pub model: MixtureModel,
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    /// Rotation solves that hit a rank-deficient cross-covariance.
    pub degenerate_rotations: usize,
    pub variance_floor: f64,
}

impl RegistrationResult {
    /// Post-M-step objective of every iteration.
    pub fn objective_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.after.total).collect()
    }

    /// Poses relative to the first cloud, `φ_0⁻¹ ∘ φ_j`.
    pub fn relative_transforms(&self) -> Vec<RigidTransform> {
        let reference = self.transforms[0].inverse();
        self.transforms.iter().map(|t| reference.compose(t)).collect()
    }
}

/// Starting poses: identity rotation, translation moving each cloud's
/// centroid onto the centroid of the pooled data.
pub fn initial_transforms(set: &PointCloudSet) -> Vec<RigidTransform> {
    let center = set.bounding_sphere().0;
    set.clouds()
        .iter()
        .map(|c| RigidTransform::from_translation(center - c.centroid()))
        .collect()
}

/// Runs the full EM loop. Each iteration computes posteriors, then updates
/// every pose (rotation, and the translation optimal for it), the centroids,
/// the variances and the weights, in that order.
pub fn run_registration(set: &PointCloudSet, config: &RegistrationConfig) -> Result<RegistrationResult> {
    config.validate()?;
    let init = |e: Error| e.in_block(0, Block::Initialization);

    let graph = if config.lambda > 0.0 {
        NeighborGraph::build(set, config.k_neighbors).map_err(init)?
    } else {
        NeighborGraph::empty(set)
    };
    let floor = match config.variance_floor {
        Some(f) => f,
        None => {
            let diag = set.bounding_box_diagonal();
            if !(diag > 0.0) {
                return Err(init(Error::config(
                    "all points coincide; set an explicit variance floor",
                )));
            }
            (1e-4 * diag).powi(2)
        }
    };
    let mut model = init_mixture(set, config.m_count, config.outlier_weight, config.initial_variance).map_err(init)?;
    let mut transforms = initial_transforms(set);
    let mut trace = Vec::with_capacity(config.iterations);
    let mut degenerate_rotations = 0;
    let lambda = config.lambda;

    for q in 1..=config.iterations {
        let posteriors = e_step(set, &transforms, &model).map_err(|e| e.in_block(q, Block::EStep))?;
        let before = objective(set, &transforms, &model, &posteriors, &graph, lambda)
            .map_err(|e| e.in_block(q, Block::Objective))?;

        let poses = (0..set.len())
            .into_par_iter()
            .map(|j| mstep::update_pose(set, &posteriors, &graph, &model, lambda, j))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_block(q, Block::Translation))?;
        transforms = poses
            .into_iter()
            .map(|(t, status)| {
                if status == RotationStatus::RankDeficient {
                    degenerate_rotations += 1;
                    log::warn!("iteration {q}: rank-deficient rotation solve");
                }
                t
            })
            .collect();

        let centroids = update_centroids(set, &posteriors, &graph, &transforms, &model, lambda);
        let variances = update_variances(
            set,
            &posteriors,
            &graph,
            &transforms,
            &centroids,
            &model.variances,
            lambda,
            floor,
        );
        let weights = update_weights(&posteriors, model.outlier_weight).map_err(|e| e.in_block(q, Block::Weights))?;
        model.centroids = centroids;
        model.variances = variances;
        model.weights = weights;

        let after = objective(set, &transforms, &model, &posteriors, &graph, lambda)
            .map_err(|e| e.in_block(q, Block::Objective))?;
        log::debug!(
            "iteration {q}: Q = {:.6} (gmm {:.6}, lc {:.6})",
            after.total,
            after.gmm,
            after.local_consistency
        );
        let prev = trace.last().map(|r: &IterationRecord| r.after.total);
        trace.push(IterationRecord { before, after });

        if let (Some(tol), Some(prev)) = (config.early_stop, prev) {
            if (after.total - prev).abs() <= tol * after.total.abs() {
                break;
            }
        }
    }

    Ok(RegistrationResult {
        transforms,
        model,
        iterations: trace.len(),
        trace,
        degenerate_rotations,
        variance_floor: floor,
    })
}
