//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the solver's update or objective code; the
//! oracles are written directly from the scalar formulas with explicit
//! loops, so they can catch algebra or indexing slips in the optimized
//! paths.

#![allow(dead_code, clippy::needless_range_loop)]

use jprlc_core::mixture::{e_step, MixtureModel, PosteriorMatrix};
use jprlc_core::neighbors::NeighborGraph;
use jprlc_core::{Matrix3, Point3, PointCloud, PointCloudSet, RigidTransform, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    // normalized Gaussian quaternion is uniform on SO(3)
    let normal = rand_distr::StandardNormal;
    let q: [f64; 4] = [
        rng.sample(normal),
        rng.sample(normal),
        rng.sample(normal),
        rng.sample(normal),
    ];
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

pub fn random_transform(rng: &mut impl Rng, trans: f64) -> RigidTransform {
    let t = Vector3::new(
        rng.random_range(-trans..=trans),
        rng.random_range(-trans..=trans),
        rng.random_range(-trans..=trans),
    );
    RigidTransform::new(random_rotation(rng), t).unwrap()
}

pub fn random_point(rng: &mut impl Rng, half: f64) -> Point3 {
    Point3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

/// A small registration problem with posteriors fixed at the E-step of a
/// random model.
#[derive(Debug, Clone)]
pub struct Instance {
    pub set: PointCloudSet,
    pub transforms: Vec<RigidTransform>,
    pub model: MixtureModel,
    pub posteriors: PosteriorMatrix,
    pub graph: NeighborGraph,
    pub lambda: f64,
}

pub struct InstanceShape {
    pub clouds: (usize, usize),
    pub points: (usize, usize),
    pub components: usize,
    pub k: usize,
    pub lambda: f64,
    pub outlier_weight: f64,
    /// Half-width of the coordinate box.
    pub half: f64,
    pub variance: (f64, f64),
}

impl Default for InstanceShape {
    fn default() -> Self {
        Self {
            clouds: (2, 4),
            points: (4, 10),
            components: 2,
            k: 1,
            lambda: 0.1,
            outlier_weight: 0.1,
            half: 10.0,
            variance: (5.0, 50.0),
        }
    }
}

pub fn random_instance(rng: &mut impl Rng, shape: &InstanceShape) -> Instance {
    let n_clouds = rng.random_range(shape.clouds.0..=shape.clouds.1);
    let clouds = (0..n_clouds)
        .map(|j| {
            let n = rng.random_range(shape.points.0..=shape.points.1);
            PointCloud::new(j, (0..n).map(|_| random_point(rng, shape.half)).collect()).unwrap()
        })
        .collect();
    let set = PointCloudSet::new(clouds).unwrap();
    let transforms: Vec<RigidTransform> = (0..n_clouds).map(|_| random_transform(rng, 2.0)).collect();
    let m = shape.components;
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let model = MixtureModel {
        centroids: (0..m).map(|_| random_point(rng, shape.half).coords).collect(),
        variances: (0..m)
            .map(|_| rng.random_range(shape.variance.0..shape.variance.1))
            .collect(),
        weights: raw.iter().map(|w| w / sum * (1.0 - shape.outlier_weight)).collect(),
        outlier_weight: shape.outlier_weight,
        volume: set.bounding_box_volume(),
    };
    let posteriors = e_step(&set, &transforms, &model).unwrap();
    let graph = NeighborGraph::build(&set, shape.k).unwrap();
    Instance {
        set,
        transforms,
        model,
        posteriors,
        graph,
        lambda: shape.lambda,
    }
}

/// Parameters the objective oracle is evaluated at.
#[derive(Debug, Clone)]
pub struct Params {
    pub rotations: Vec<Matrix3<f64>>,
    pub translations: Vec<Vector3<f64>>,
    pub centroids: Vec<Vector3<f64>>,
    pub variances: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Params {
    pub fn of(transforms: &[RigidTransform], model: &MixtureModel) -> Self {
        Self {
            rotations: transforms.iter().map(|t| *t.rotation()).collect(),
            translations: transforms.iter().map(|t| *t.translation()).collect(),
            centroids: model.centroids.clone(),
            variances: model.variances.clone(),
            weights: model.weights.clone(),
        }
    }
}

fn phi(p: &Params, j: usize, x: &Point3) -> Vector3<f64> {
    let r = &p.rotations[j];
    let mut out = p.translations[j];
    for row in 0..3 {
        for col in 0..3 {
            out[row] += r[(row, col)] * x[col];
        }
    }
    out
}

fn sq(v: Vector3<f64>) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

/// Term-by-term evaluation of the penalized objective: the three GMM sums
/// plus `lambda` times the sum of closed-form neighbor divergences over
/// every directed edge. Rotations need not be orthonormal here, which the
/// finite-difference checks rely on.
pub fn objective_oracle(inst: &Instance, p: &Params, lambda: f64) -> f64 {
    let m = p.centroids.len();
    let mut gmm = 0.0;
    let mut lc = 0.0;
    for j in 0..inst.set.len() {
        let pts = inst.set.cloud(j).points();
        for i in 0..pts.len() {
            for k in 0..m {
                let pr = inst.posteriors.get(j, i, k);
                if pr == 0.0 {
                    continue;
                }
                let d2 = sq(phi(p, j, &pts[i]) - p.centroids[k]);
                gmm += pr * d2 / (2.0 * p.variances[k]);
                gmm += 1.5 * pr * p.variances[k].ln();
                gmm -= pr * p.weights[k].ln();
            }
            for &b in inst.graph.cloud(j).neighbors(i) {
                for k in 0..m {
                    let di = sq(phi(p, j, &pts[i]) - p.centroids[k]);
                    let db = sq(phi(p, j, &pts[b]) - p.centroids[k]);
                    let coeff = (inst.posteriors.get(j, i, k) - inst.posteriors.get(j, b, k)) / (4.0 * p.variances[k]);
                    lc += coeff * (db - di);
                }
            }
        }
    }
    gmm + lambda * lc
}

/// Central difference of `f` at `x` with step `h`.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Gradient of the oracle objective with respect to a 3-vector parameter.
pub fn vector_gradient(
    inst: &Instance,
    base: &Params,
    lambda: f64,
    set_param: impl Fn(&mut Params, Vector3<f64>),
    at: Vector3<f64>,
    h: f64,
) -> Vector3<f64> {
    let mut g = Vector3::zeros();
    for a in 0..3 {
        g[a] = central(
            |v| {
                let mut p = base.clone();
                let mut x = at;
                x[a] = v;
                set_param(&mut p, x);
                objective_oracle(inst, &p, lambda)
            },
            at[a],
            h,
        );
    }
    g
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while (hi - lo).abs() > tol * (lo.abs() + hi.abs()).max(1e-300) {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// `½[KL(p‖q) + KL(q‖p)]` over the Gaussian components only.
pub fn symmetrized_kl(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| if x == 0.0 { 0.0 } else { x * (x / y).ln() })
            .sum()
    };
    0.5 * (kl(p, q) + kl(q, p))
}

/// Plain joint-GMM M-step (no neighbor terms), coded from the textbook
/// weighted-Procrustes form: centered point and centroid sets, weighted
/// cross-covariance, reflection-corrected SVD.
pub mod native {
    use super::*;

    /// Weighted cross-covariance of centered points and centered centroids,
    /// with the weighted means.
    pub fn cross_covariance(inst: &Instance, j: usize) -> (Matrix3<f64>, Vector3<f64>, Vector3<f64>) {
        let pts = inst.set.cloud(j).points();
        let m = inst.model.centroids.len();
        let mut wsum = 0.0;
        let mut xbar = Vector3::zeros();
        let mut ybar = Vector3::zeros();
        for (i, x) in pts.iter().enumerate() {
            for k in 0..m {
                let w = inst.posteriors.get(j, i, k) / inst.model.variances[k];
                wsum += w;
                xbar += x.coords * w;
                ybar += inst.model.centroids[k] * w;
            }
        }
        xbar /= wsum;
        ybar /= wsum;
        let mut h = Matrix3::zeros();
        for (i, x) in pts.iter().enumerate() {
            for k in 0..m {
                let w = inst.posteriors.get(j, i, k) / inst.model.variances[k];
                h += (x.coords - xbar) * (inst.model.centroids[k] - ybar).transpose() * w;
            }
        }
        (h, xbar, ybar)
    }

    pub fn pose(inst: &Instance, j: usize) -> (Matrix3<f64>, Vector3<f64>) {
        let (h, xbar, ybar) = cross_covariance(inst, j);
        let svd = h.svd(true, true);
        let u = svd.u.unwrap();
        let v = svd.v_t.unwrap().transpose();
        let s = svd.singular_values;
        let smallest = (0..3).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        let mut d = Vector3::repeat(1.0);
        d[smallest] = (v * u.transpose()).determinant().signum();
        let r = v * Matrix3::from_diagonal(&d) * u.transpose();
        (r, ybar - r * xbar)
    }

    /// Sensitivity of the reflection-corrected polar factor of `h` to
    /// perturbations of `h`: `s₁ / (s₂ ± s₃)`, the sign following `det h`.
    pub fn rotation_condition(h: &Matrix3<f64>) -> f64 {
        let sv = h.singular_values();
        let mut s = [sv[0], sv[1], sv[2]];
        s.sort_by(|a, b| b.total_cmp(a));
        if h.determinant() < 0.0 {
            s[2] = -s[2];
        }
        s[0] / (s[1] + s[2])
    }

    pub fn centroids(inst: &Instance, transforms: &[RigidTransform]) -> Vec<Vector3<f64>> {
        let m = inst.model.centroids.len();
        (0..m)
            .map(|k| {
                let mut num = Vector3::zeros();
                let mut den = 0.0;
                for j in 0..inst.set.len() {
                    for (i, x) in inst.set.cloud(j).points().iter().enumerate() {
                        let p = inst.posteriors.get(j, i, k);
                        num += transforms[j].apply(x).coords * p;
                        den += p;
                    }
                }
                num / den
            })
            .collect()
    }

    pub fn variances(
        inst: &Instance,
        transforms: &[RigidTransform],
        centroids: &[Vector3<f64>],
        floor: f64,
    ) -> Vec<f64> {
        centroids
            .iter()
            .enumerate()
            .map(|(k, y)| {
                let mut num = 0.0;
                let mut den = 0.0;
                for j in 0..inst.set.len() {
                    for (i, x) in inst.set.cloud(j).points().iter().enumerate() {
                        let p = inst.posteriors.get(j, i, k);
                        num += p * (transforms[j].apply(x).coords - y).norm_squared();
                        den += p;
                    }
                }
                (num / (3.0 * den)).max(floor)
            })
            .collect()
    }

    pub fn weights(inst: &Instance) -> Vec<f64> {
        let m = inst.model.centroids.len();
        let mut mass = vec![0.0; m];
        for j in 0..inst.set.len() {
            for i in 0..inst.set.cloud(j).len() {
                for (k, acc) in mass.iter_mut().enumerate() {
                    *acc += inst.posteriors.get(j, i, k);
                }
            }
        }
        let total: f64 = mass.iter().sum();
        mass.iter()
            .map(|a| (1.0 - inst.model.outlier_weight) * a / total)
            .collect()
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
