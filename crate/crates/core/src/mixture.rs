//! The shared Gaussian mixture, its initialization and the E-step.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloudSet, RigidTransform};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Isotropic Gaussian mixture plus a uniform outlier class of density `1/V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub centroids: Vec<Vector3<f64>>,
    /// Per-component variances, mm².
    pub variances: Vec<f64>,
    pub weights: Vec<f64>,
    /// Fixed weight of the uniform class.
    pub outlier_weight: f64,
    /// Support volume of the uniform class, mm³.
    pub volume: f64,
}

impl MixtureModel {
    pub fn components(&self) -> usize {
        self.centroids.len()
    }

    /// `ln(π_out / V)`, or `-inf` when there is no outlier class.
    pub fn log_outlier_density(&self) -> f64 {
        if self.outlier_weight > 0.0 {
            (self.outlier_weight / self.volume).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.centroids.len();
        if m == 0 || self.variances.len() != m || self.weights.len() != m {
            return Err(Error::config("mixture parameter lengths disagree"));
        }
        if !(0.0..1.0).contains(&self.outlier_weight) {
            return Err(Error::config("outlier weight must lie in [0, 1)"));
        }
        if !(self.volume > 0.0) {
            return Err(Error::config("uniform support volume must be positive"));
        }
        if self.variances.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::NumericDomain("component variance must be positive".into()));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::config("component weights must be non-negative"));
        }
        Ok(())
    }
}

/// Deterministic, near-uniform points on the unit sphere (Fibonacci lattice).
pub fn fibonacci_sphere(count: usize) -> Vec<Vector3<f64>> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden_angle * k as f64).sin_cos();
            Vector3::new(r * c, r * s, z)
        })
        .collect()
}

/// Places `m_count` centroids on a sphere around the pooled centroid of all
/// clouds, with radius half the bounding-sphere radius. Every component gets
/// `initial_variance` and an equal share of `1 - outlier_weight`.
pub fn init_mixture(
    set: &PointCloudSet,
    m_count: usize,
    outlier_weight: f64,
    initial_variance: f64,
) -> Result<MixtureModel> {
    if set.total_points() == 0 {
        return Err(Error::config("cannot initialize a mixture from an empty set"));
    }
    if m_count == 0 {
        return Err(Error::config("mixture needs at least one component"));
    }
    if !(0.0..1.0).contains(&outlier_weight) {
        return Err(Error::config(format!("outlier weight {outlier_weight} outside [0, 1)")));
    }
    if !(initial_variance > 0.0) || !initial_variance.is_finite() {
        return Err(Error::NumericDomain(format!(
            "initial variance {initial_variance} must be positive"
        )));
    }
    let (center, radius) = set.bounding_sphere();
    let centroids = fibonacci_sphere(m_count)
        .into_iter()
        .map(|u| center.coords + u * (0.5 * radius))
        .collect();
    Ok(MixtureModel {
        centroids,
        variances: vec![initial_variance; m_count],
        weights: vec![(1.0 - outlier_weight) / m_count as f64; m_count],
        outlier_weight,
        volume: set.bounding_box_volume(),
    })
}

/// Isotropic trivariate normal density `(2πσ²)^{-3/2} exp(-|x-y|²/(2σ²))`.
pub fn gaussian_density(x: &Point3, y: &Point3, variance: f64) -> Result<f64> {
    Ok(log_gaussian_density(x, y, variance)?.exp())
}

pub fn log_gaussian_density(x: &Point3, y: &Point3, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::NumericDomain(format!(
            "variance must be positive, got {variance}"
        )));
    }
    Ok(log_normal((x - y).norm_squared(), variance))
}

#[inline]
fn log_normal(dist_sq: f64, variance: f64) -> f64 {
    -1.5 * (LN_2PI + variance.ln()) - dist_sq / (2.0 * variance)
}

/// Responsibilities of one cloud: an `n × M` row-major table plus the
/// outlier column.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudPosteriors {
    components: usize,
    table: Vec<f64>,
    outlier: Vec<f64>,
}

impl CloudPosteriors {
    pub fn from_rows(components: usize, table: Vec<f64>, outlier: Vec<f64>) -> Self {
        assert_eq!(table.len(), components * outlier.len());
        Self {
            components,
            table,
            outlier,
        }
    }

    pub fn len(&self) -> usize {
        self.outlier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outlier.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.table[i * self.components..(i + 1) * self.components]
    }

    pub fn outlier(&self, i: usize) -> f64 {
        self.outlier[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.table.chunks_exact(self.components)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    components: usize,
    clouds: Vec<CloudPosteriors>,
}

impl PosteriorMatrix {
    pub fn new(components: usize, clouds: Vec<CloudPosteriors>) -> Self {
        assert!(clouds.iter().all(|c| c.components == components));
        Self { components, clouds }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn cloud(&self, j: usize) -> &CloudPosteriors {
        &self.clouds[j]
    }

    pub fn clouds(&self) -> &[CloudPosteriors] {
        &self.clouds
    }

    pub fn get(&self, j: usize, i: usize, m: usize) -> f64 {
        self.clouds[j].row(i)[m]
    }

    /// `Σ_{j,i} p_jim` for every component.
    pub fn component_mass(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.components];
        for c in &self.clouds {
            for row in c.rows() {
                for (acc, p) in mass.iter_mut().zip(row) {
                    *acc += p;
                }
            }
        }
        mass
    }
}

/// Posterior responsibilities of every transformed point, evaluated with a
/// log-sum-exp over the Gaussian terms and the constant uniform term.
pub fn e_step(set: &PointCloudSet, transforms: &[RigidTransform], model: &MixtureModel) -> Result<PosteriorMatrix> {
    if transforms.len() != set.len() {
        return Err(Error::PoseCountMismatch {
            expected: set.len(),
            actual: transforms.len(),
        });
    }
    model.validate()?;
    let m = model.components();
    // per-component constant: ln π_m - 1.5 ln(2πσ²)
    let log_prefactor: Vec<f64> = model
        .weights
        .iter()
        .zip(&model.variances)
        .map(|(&w, &v)| w.ln() - 1.5 * (LN_2PI + v.ln()))
        .collect();
    let inv_two_var: Vec<f64> = model.variances.iter().map(|v| 0.5 / v).collect();
    let log_out = model.log_outlier_density();

    let clouds = set
        .clouds()
        .iter()
        .zip(transforms)
        .enumerate()
        .map(|(j, (cloud, t))| {
            let n = cloud.len();
            let mut table = vec![0.0; n * m];
            let mut outlier = vec![0.0; n];
            table
                .par_chunks_mut(m)
                .zip(outlier.par_iter_mut())
                .zip(cloud.points().par_iter())
                .enumerate()
                .try_for_each(|(i, ((row, out), x))| {
                    let z = t.apply(x).coords;
                    let mut max = log_out;
                    for (k, slot) in row.iter_mut().enumerate() {
                        let l = log_prefactor[k] - (z - model.centroids[k]).norm_squared() * inv_two_var[k];
                        *slot = l;
                        max = max.max(l);
                    }
                    if !max.is_finite() {
                        return Err(Error::ZeroNormalizer { cloud: j, point: i });
                    }
                    let mut sum = 0.0;
                    for slot in row.iter_mut() {
                        *slot = (*slot - max).exp();
                        sum += *slot;
                    }
                    let e_out = (log_out - max).exp();
                    sum += e_out;
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::ZeroNormalizer { cloud: j, point: i });
                    }
                    let inv = 1.0 / sum;
                    row.iter_mut().for_each(|p| *p *= inv);
                    *out = e_out * inv;
                    Ok(())
                })?;
            Ok(CloudPosteriors {
                components: m,
                table,
                outlier,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorMatrix { components: m, clouds })
}
