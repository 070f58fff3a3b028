//! Closed-form M-step updates with the local-consistency penalty.
//!
//! Every update minimizes the penalized objective in one block of
//! parameters with the posteriors fixed. With `lambda = 0` all neighbor
//! terms drop out and the updates reduce to the plain joint-GMM ones.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{PointCloudSet, RigidTransform};
use crate::mixture::{MixtureModel, PosteriorMatrix};
use crate::neighbors::NeighborGraph;
use crate::solver::objective::distance_table;

/// Components whose total posterior mass falls below this keep their
/// centroid and variance.
pub const ZERO_MASS: f64 = 1e-12;

/// Precision-weighted posterior sums of one cloud.
///
/// For point `i`: `w_i = Σ_m p_im / σ_m²` and `v_i = Σ_m p_im / σ_m² · y_m`.
/// The neighbor sums over `(i, b, m)` only ever need the differences
/// `w_i − w_b` and `v_i − v_b`.
#[derive(Debug, Clone)]
pub(crate) struct CloudStats {
    w: Vec<f64>,
    v: Vec<Vector3<f64>>,
    mass: f64,
}

impl CloudStats {
    pub(crate) fn new(posteriors: &PosteriorMatrix, model: &MixtureModel, j: usize) -> Self {
        let precision: Vec<f64> = model.variances.iter().map(|s| 1.0 / s).collect();
        let post = posteriors.cloud(j);
        let mut w = Vec::with_capacity(post.len());
        let mut v = Vec::with_capacity(post.len());
        let mut mass = 0.0;
        for row in post.rows() {
            let mut wi = 0.0;
            let mut vi = Vector3::zeros();
            for ((p, prec), y) in row.iter().zip(&precision).zip(&model.centroids) {
                let a = p * prec;
                wi += a;
                vi += y * a;
                mass += p;
            }
            w.push(wi);
            v.push(vi);
        }
        Self { w, v, mass }
    }
}

/// Sufficient statistics of the translation update for one cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationStats {
    /// Weighted point sum, including the neighbor-difference term.
    pub mu_x: Vector3<f64>,
    /// Weighted centroid sum.
    pub mu_y: Vector3<f64>,
    /// Total precision weight `Σ_{i,m} p_im / σ_m²`.
    pub n_p: f64,
}

impl TranslationStats {
    pub fn point_mean(&self) -> Vector3<f64> {
        self.mu_x / self.n_p
    }

    pub fn centroid_mean(&self) -> Vector3<f64> {
        self.mu_y / self.n_p
    }
}

fn translation_stats_from(
    set: &PointCloudSet,
    graph: &NeighborGraph,
    stats: &CloudStats,
    lambda: f64,
    j: usize,
) -> Result<TranslationStats> {
    if !(stats.mass >= ZERO_MASS) {
        return Err(Error::DegenerateCloud { cloud: j });
    }
    let pts = set.cloud(j).points();
    let mut mu_x = Vector3::zeros();
    let mut mu_y = Vector3::zeros();
    let mut n_p = 0.0;
    for ((x, &w), v) in pts.iter().zip(&stats.w).zip(&stats.v) {
        mu_x += x.coords * w;
        mu_y += v;
        n_p += w;
    }
    if lambda != 0.0 && graph.len() > j {
        let mut nb = Vector3::zeros();
        for (i, b) in graph.cloud(j).edges() {
            nb += (pts[b] - pts[i]) * (stats.w[i] - stats.w[b]);
        }
        mu_x += nb * (0.5 * lambda);
    }
    if !(n_p > 0.0) || !n_p.is_finite() {
        return Err(Error::DegenerateCloud { cloud: j });
    }
    Ok(TranslationStats { mu_x, mu_y, n_p })
}

pub fn translation_stats(
    set: &PointCloudSet,
    posteriors: &PosteriorMatrix,
    graph: &NeighborGraph,
    model: &MixtureModel,
    lambda: f64,
    j: usize,
) -> Result<TranslationStats> {
    let stats = CloudStats::new(posteriors, model, j);
    translation_stats_from(set, graph, &stats, lambda, j)
}

/// Optimal translation of cloud `j` for a given rotation:
/// `t* = μ_y / N_p − R μ_x / N_p`.
pub fn update_translation(
    set: &PointCloudSet,
    posteriors: &PosteriorMatrix,
    graph: &NeighborGraph,
    rotation: &Matrix3<f64>,
    model: &MixtureModel,
    lambda: f64,
    j: usize,
) -> Result<Vector3<f64>> {
    let s = translation_stats(set, posteriors, graph, model, lambda, j)?;
    Ok(s.centroid_mean() - rotation * s.point_mean())
}

/// Whether the rotation solve was well posed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationStatus {
    Ok,
    /// The cross-covariance had rank below 2, so the maximizer is not
    /// unique (e.g. collinear points). The returned matrix is still a
    /// proper rotation.
    RankDeficient,
}

/// Proper rotation maximizing `Tr(R H)`: with `H = U S Vᵀ`,
/// `R = V diag(1, 1, det(V Uᵀ)) Uᵀ`, the sign flip landing on the smallest
/// singular direction.
pub fn rotation_maximizing_trace(h: &Matrix3<f64>) -> (Matrix3<f64>, RotationStatus) {
    let svd = h.svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v = svd.v_t.expect("svd computed with v_t").transpose();
    let s = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let det = (v * u.transpose()).determinant();
    let mut diag = Vector3::repeat(1.0);
    diag[order[2]] = det.signum();
    let rotation = v * Matrix3::from_diagonal(&diag) * u.transpose();
    let status = if !(s[order[1]] > 1e-12 * s[order[0]]) {
        RotationStatus::RankDeficient
    } else {
        RotationStatus::Ok
    };
    (rotation, status)
}

fn cross_covariance_from(
    set: &PointCloudSet,
    graph: &NeighborGraph,
    stats: &CloudStats,
    trans: &TranslationStats,
    lambda: f64,
    j: usize,
) -> Matrix3<f64> {
    let pts = set.cloud(j).points();
    let x_bar = trans.point_mean();
    let y_bar = trans.centroid_mean();
    // H1 = Σ_i (x_i − x̄) v_iᵀ, accumulated with v_i centered on ȳ and the
    // offset added back once
    let mut h = Matrix3::zeros();
    let mut offset = Vector3::zeros();
    for ((x, v), &w) in pts.iter().zip(&stats.v).zip(&stats.w) {
        let dx = x.coords - x_bar;
        h += dx * (v - y_bar * w).transpose();
        offset += dx * w;
    }
    h += offset * y_bar.transpose();
    // H2 = λ/2 Σ_(i,b) (x_i − x_b)(v_b − v_i)ᵀ
    if lambda != 0.0 && graph.len() > j {
        let mut h2 = Matrix3::zeros();
        for (i, b) in graph.cloud(j).edges() {
            h2 += (pts[i] - pts[b]) * (stats.v[b] - stats.v[i]).transpose();
        }
        h += h2 * (0.5 * lambda);
    }
    h
}

/// The matrix `H = H₁ + H₂` whose trace against `R` the rotation update
/// maximizes, built from coordinates centered on the weighted point mean.
pub fn cross_covariance(
    set: &PointCloudSet,
    posteriors: &PosteriorMatrix,
    graph: &NeighborGraph,
    model: &MixtureModel,
    lambda: f64,
    j: usize,
) -> Result<Matrix3<f64>> {
    let stats = CloudStats::new(posteriors, model, j);
    let trans = translation_stats_from(set, graph, &stats, lambda, j)?;
    Ok(cross_covariance_from(set, graph, &stats, &trans, lambda, j))
}

/// Optimal rotation of cloud `j` with the translation eliminated at its
/// optimum.
pub fn update_rotation(
    set: &PointCloudSet,
    posteriors: &PosteriorMatrix,
    graph: &NeighborGraph,
    model: &MixtureModel,
    lambda: f64,
    j: usize,
) -> Result<(Matrix3<f64>, RotationStatus)> {
    let h = cross_covariance(set, posteriors, graph, model, lambda, j)?;
    Ok(rotation_maximizing_trace(&h))
}

/// Joint pose update of cloud `j`: rotation first, then the translation
/// that is optimal for it.
pub(crate) fn update_pose(
    set: &PointCloudSet,
    posteriors: &PosteriorMatrix,
    graph: &NeighborGraph,
    model: &MixtureModel,
    lambda: f64,
    j: usize,
) -> Result<(RigidTransform, RotationStatus)> {
    let stats = CloudStats::new(posteriors, model, j);
    let trans = translation_stats_from(set, graph, &stats, lambda, j)?;
    let h = cross_covariance_from(set, graph, &stats, &trans, lambda, j);
    let (rotation, status) = rotation_maximizing_trace(&h);
    let translation = trans.centroid_mean() - rotation * trans.point_mean();
    Ok((RigidTransform::from_parts_unchecked(rotation, translation), status))
}

/// Per-cloud partial sums for the centroid update.
struct CentroidSums {
    mass: Vec<f64>,
    weighted: Vec<Vector3<f64>>,
    neighbor: Vec<Vector3<f64>>,
}

/// New centroids from the just-updated poses:
/// `y_m = [Σ p_im φ(x_i) − λ/2 Σ_(i,b) (p_im − p_bm) R (x_i − x_b)] / Σ p_im`.
/// The component variance divides numerator and denominator alike and is
/// cancelled.
pub fn update_centroids(
    set: &PointCloudSet,
    posteriors: &PosteriorMatrix,
    graph: &NeighborGraph,
    transforms: &[RigidTransform],
    model: &MixtureModel,
    lambda: f64,
) -> Vec<Vector3<f64>> {
    let m = model.components();
    let partial: Vec<CentroidSums> = (0..set.len())
        .into_par_iter()
        .map(|j| {
            let t = &transforms[j];
            let pts = set.cloud(j).points();
            let post = posteriors.cloud(j);
            let mut sums = CentroidSums {
                mass: vec![0.0; m],
                weighted: vec![Vector3::zeros(); m],
                neighbor: vec![Vector3::zeros(); m],
            };
            for (x, row) in pts.iter().zip(post.rows()) {
                let z = t.apply(x).coords;
                for k in 0..m {
                    sums.mass[k] += row[k];
                    sums.weighted[k] += z * row[k];
                }
            }
            if lambda != 0.0 && graph.len() > j {
                for (i, b) in graph.cloud(j).edges() {
                    let d = t.rotation() * (pts[i] - pts[b]);
                    let (pi, pb) = (post.row(i), post.row(b));
                    for k in 0..m {
                        sums.neighbor[k] += d * (pi[k] - pb[k]);
                    }
                }
            }
            sums
        })
        .collect();

    (0..m)
        .map(|k| {
            let mut mass = 0.0;
            let mut weighted = Vector3::zeros();
            let mut neighbor = Vector3::zeros();
            for s in &partial {
                mass += s.mass[k];
                weighted += s.weighted[k];
                neighbor += s.neighbor[k];
            }
            if mass < ZERO_MASS {
                model.centroids[k]
            } else {
                (weighted - neighbor * (0.5 * lambda)) / mass
            }
        })
        .collect()
}

/// Unclamped variance stationary points, `None` for zero-mass components:
/// `σ_m² = [Σ p_im d_im + λ/2 Σ_(i,b) (p_im − p_bm)(d_bm − d_im)] / (3 Σ p_im)`
/// where `d_im = |φ(x_i) − y_m|²`.
pub fn variance_stationary_points(
    set: &PointCloudSet,
    posteriors: &PosteriorMatrix,
    graph: &NeighborGraph,
    transforms: &[RigidTransform],
    centroids: &[Vector3<f64>],
    lambda: f64,
) -> Vec<Option<f64>> {
    let m = centroids.len();
    let partial: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..set.len())
        .into_par_iter()
        .map(|j| {
            let dist = distance_table(set, &transforms[j], centroids, j);
            let post = posteriors.cloud(j);
            let mut mass = vec![0.0; m];
            let mut resid = vec![0.0; m];
            let mut nb = vec![0.0; m];
            for (i, row) in post.rows().enumerate() {
                let d = &dist[i * m..(i + 1) * m];
                for k in 0..m {
                    mass[k] += row[k];
                    resid[k] += row[k] * d[k];
                }
            }
            if lambda != 0.0 && graph.len() > j {
                for (i, b) in graph.cloud(j).edges() {
                    let (pi, pb) = (post.row(i), post.row(b));
                    let (di, db) = (&dist[i * m..(i + 1) * m], &dist[b * m..(b + 1) * m]);
                    for k in 0..m {
                        nb[k] += (pi[k] - pb[k]) * (db[k] - di[k]);
                    }
                }
            }
            (mass, resid, nb)
        })
        .collect();

    (0..m)
        .map(|k| {
            let (mut mass, mut resid, mut nb) = (0.0, 0.0, 0.0);
            for (a, r, n) in &partial {
                mass += a[k];
                resid += r[k];
                nb += n[k];
            }
            if mass < ZERO_MASS {
                None
            } else {
                Some(resid / (3.0 * mass) + lambda * nb / (6.0 * mass))
            }
        })
        .collect()
}

/// Variance update clamped to `floor`. Zero-mass components keep their
/// previous variance.
#[allow(clippy::too_many_arguments)]
pub fn update_variances(
    set: &PointCloudSet,
    posteriors: &PosteriorMatrix,
    graph: &NeighborGraph,
    transforms: &[RigidTransform],
    centroids: &[Vector3<f64>],
    previous: &[f64],
    lambda: f64,
    floor: f64,
) -> Vec<f64> {
    variance_stationary_points(set, posteriors, graph, transforms, centroids, lambda)
        .into_iter()
        .zip(previous)
        .map(|(raw, &prev)| match raw {
            Some(v) => v.max(floor),
            None => prev,
        })
        .collect()
}

/// Component weights proportional to posterior mass, rescaled to share
/// `1 − outlier_weight`.
pub fn update_weights(posteriors: &PosteriorMatrix, outlier_weight: f64) -> Result<Vec<f64>> {
    let mass = posteriors.component_mass();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateModel);
    }
    let scale = (1.0 - outlier_weight) / total;
    Ok(mass.into_iter().map(|a| a * scale).collect())
}
