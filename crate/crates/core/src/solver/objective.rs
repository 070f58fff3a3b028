//! The penalized EM objective with posteriors held fixed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloudSet, RigidTransform};
use crate::mixture::{MixtureModel, PosteriorMatrix};
use crate::neighbors::NeighborGraph;

/// Objective value split into its likelihood and local-consistency parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    /// Expected negative complete-data log-likelihood, constants dropped.
    pub gmm: f64,
    /// Unweighted sum of neighbor divergences.
    pub local_consistency: f64,
    /// `gmm + lambda * local_consistency`.
    pub total: f64,
}

/// Squared distances from every transformed point of cloud `j` to every
/// centroid, row-major `n × M`.
pub(crate) fn distance_table(
    set: &PointCloudSet,
    transform: &RigidTransform,
    centroids: &[nalgebra::Vector3<f64>],
    j: usize,
) -> Vec<f64> {
    let m = centroids.len();
    let mut table = Vec::with_capacity(set.cloud(j).len() * m);
    for x in set.cloud(j).points() {
        let z = transform.apply(x).coords;
        table.extend(centroids.iter().map(|y| (z - y).norm_squared()));
    }
    table
}

/// Divergence between the posteriors of points `i` and `b` of cloud `j`,
/// in the closed form obtained by substituting the Gaussian posteriors into
/// the symmetrized KL divergence:
///
/// `Σ_m (p_im − p_bm) / (4σ_m²) · (|φ(x_b) − y_m|² − |φ(x_i) − y_m|²)`.
///
/// This equals the symmetrized KL exactly when there is no outlier class.
pub fn kl_similarity(
    set: &PointCloudSet,
    posteriors: &PosteriorMatrix,
    transforms: &[RigidTransform],
    model: &MixtureModel,
    j: usize,
    i: usize,
    b: usize,
) -> f64 {
    let t = &transforms[j];
    let zi = t.apply(&set.cloud(j).points()[i]).coords;
    let zb = t.apply(&set.cloud(j).points()[b]).coords;
    let pi = posteriors.cloud(j).row(i);
    let pb = posteriors.cloud(j).row(b);
    model
        .centroids
        .iter()
        .zip(&model.variances)
        .enumerate()
        .map(|(m, (y, v))| (pi[m] - pb[m]) / (4.0 * v) * ((zb - y).norm_squared() - (zi - y).norm_squared()))
        .sum()
}

pub fn objective(
    set: &PointCloudSet,
    transforms: &[RigidTransform],
    model: &MixtureModel,
    posteriors: &PosteriorMatrix,
    graph: &NeighborGraph,
    lambda: f64,
) -> Result<ObjectiveValue> {
    let m = model.components();
    let log_var: Vec<f64> = model.variances.iter().map(|v| v.ln()).collect();
    let log_weight: Vec<f64> = model.weights.iter().map(|w| w.ln()).collect();

    let mut residual = 0.0;
    let mut variance_term = 0.0;
    let mut weight_term = 0.0;
    let mut lc = 0.0;
    for j in 0..set.len() {
        let dist = distance_table(set, &transforms[j], &model.centroids, j);
        let post = posteriors.cloud(j);
        for (i, row) in post.rows().enumerate() {
            let d = &dist[i * m..(i + 1) * m];
            for k in 0..m {
                let p = row[k];
                if p == 0.0 {
                    continue;
                }
                residual += p * d[k] / (2.0 * model.variances[k]);
                variance_term += p * log_var[k];
                weight_term -= p * log_weight[k];
            }
        }
        if graph.len() > j {
            for (i, b) in graph.cloud(j).edges() {
                let (pi, pb) = (post.row(i), post.row(b));
                let (di, db) = (&dist[i * m..(i + 1) * m], &dist[b * m..(b + 1) * m]);
                for k in 0..m {
                    lc += (pi[k] - pb[k]) / (4.0 * model.variances[k]) * (db[k] - di[k]);
                }
            }
        }
    }
    for (term, value) in [
        ("residual", residual),
        ("log_variance", variance_term),
        ("log_weight", weight_term),
        ("local_consistency", lc),
    ] {
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective { term });
        }
    }
    let gmm = residual + 1.5 * variance_term + weight_term;
    Ok(ObjectiveValue {
        gmm,
        local_consistency: lc,
        total: gmm + lambda * lc,
    })
}
