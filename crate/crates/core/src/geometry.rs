//! Points, clouds, rigid transforms and the pose-error metric.
//!
//! All lengths are millimeters.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;

/// Tolerance used when checking that a matrix is a proper rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// An ordered, non-empty list of finite points. Indices are point identities
/// for the lifetime of a registration run.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    id: usize,
    points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(id: usize, points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud { cloud: id });
        }
        if let Some(point) = points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinitePoint { cloud: id, point });
        }
        Ok(Self { id, points })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    /// Arithmetic mean of the points.
    pub fn centroid(&self) -> Point3 {
        centroid(self.points.iter())
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            id: self.id,
            points: self.points.iter().map(|p| t.apply(p)).collect(),
        }
    }
}

/// The clouds being registered jointly. Cloud 0 is the reference frame for
/// error evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudSet {
    clouds: Vec<PointCloud>,
}

impl PointCloudSet {
    pub fn new(clouds: Vec<PointCloud>) -> Result<Self> {
        if clouds.len() < 2 {
            return Err(Error::config(format!(
                "joint registration needs at least 2 clouds, got {}",
                clouds.len()
            )));
        }
        let clouds = clouds.into_iter().enumerate().map(|(j, c)| c.with_id(j)).collect();
        Ok(Self { clouds })
    }

    pub fn clouds(&self) -> &[PointCloud] {
        &self.clouds
    }

    pub fn cloud(&self, j: usize) -> &PointCloud {
        &self.clouds[j]
    }

    /// Number of clouds.
    pub fn len(&self) -> usize {
        self.clouds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clouds.is_empty()
    }

    pub fn total_points(&self) -> usize {
        self.clouds.iter().map(PointCloud::len).sum()
    }

    pub fn all_points(&self) -> impl Iterator<Item = &Point3> + Clone {
        self.clouds.iter().flat_map(|c| c.points.iter())
    }

    pub fn bounding_sphere(&self) -> (Point3, f64) {
        bounding_sphere(self.all_points())
    }

    pub fn bounding_box_volume(&self) -> f64 {
        bounding_box_volume(self.all_points())
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = aabb(self.all_points());
        (hi - lo).norm()
    }
}

/// Rotation followed by translation: `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRecord", into = "PoseRecord")]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

/// Wire form of a pose: row-major rotation plus translation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseRecord {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<RigidTransform> for PoseRecord {
    fn from(t: RigidTransform) -> Self {
        let r = &t.rotation;
        PoseRecord {
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl TryFrom<PoseRecord> for RigidTransform {
    type Error = Error;

    fn try_from(rec: PoseRecord) -> Result<Self> {
        let rows = rec.rotation;
        let rotation = Matrix3::from_row_slice(&[
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0], rows[2][1], rows[2][2],
        ]);
        RigidTransform::new(rotation, Vector3::from(rec.translation))
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    /// Builds a transform, rejecting matrices that are not proper rotations
    /// within [`ROTATION_TOLERANCE`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite entry".into()));
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if ortho > ROTATION_TOLERANCE {
            return Err(Error::InvalidTransform(format!(
                "rotation is not orthonormal (max deviation {ortho:e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::InvalidTransform(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(Self { rotation, translation })
    }

    /// Skips validation. Callers guarantee `rotation` came out of an SVD
    /// projection or a product of proper rotations.
    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Intrinsic X-Y-Z Euler angles in radians: `R = Rx(a) * Ry(b) * Rz(c)`.
    pub fn from_euler_xyz(a: f64, b: f64, c: f64, translation: Vector3<f64>) -> Self {
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        let (sc, cc) = c.sin_cos();
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, ca, -sa, 0.0, sa, ca);
        let ry = Matrix3::new(cb, 0.0, sb, 0.0, 1.0, 0.0, -sb, 0.0, cb);
        let rz = Matrix3::new(cc, -sc, 0.0, sc, cc, 0.0, 0.0, 0.0, 1.0);
        Self {
            rotation: rx * ry * rz,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

pub fn apply_transform(t: &RigidTransform, p: &Point3) -> Point3 {
    t.apply(p)
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn inverse(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

/// Mean of the points; the origin for an empty iterator.
pub fn centroid<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Point3 {
    let (sum, n) = points
        .into_iter()
        .fold((Vector3::zeros(), 0usize), |(s, n), p| (s + p.coords, n + 1));
    if n == 0 {
        Point3::origin()
    } else {
        Point3::from(sum / n as f64)
    }
}

/// Centroid of all points and the largest distance from it to any point.
pub fn bounding_sphere<'a, I>(points: I) -> (Point3, f64)
where
    I: IntoIterator<Item = &'a Point3>,
    I::IntoIter: Clone,
{
    let iter = points.into_iter();
    let center = centroid(iter.clone());
    let radius = iter.map(|p| (p - center).norm()).fold(0.0, f64::max);
    (center, radius)
}

fn aabb<'a>(points: impl IntoIterator<Item = &'a Point3>) -> (Vector3<f64>, Vector3<f64>) {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
    }
    (lo, hi)
}

/// Volume of the axis-aligned bounding box. A zero-length side is replaced
/// by `1e-6` times the longest side so the uniform density `1/V` stays
/// finite for planar or linear data; if every side is zero the volume is
/// 1 mm³.
pub fn bounding_box_volume<'a>(points: impl IntoIterator<Item = &'a Point3>) -> f64 {
    let (lo, hi) = aabb(points);
    let extent = hi - lo;
    let longest = extent.max();
    if !(longest > 0.0) {
        return 1.0;
    }
    let floor = 1e-6 * longest;
    extent.iter().map(|&e| if e > 0.0 { e } else { floor }).product()
}

/// Pose error over clouds `1..N` in the frame of cloud 0.
///
/// Both pose sets are first re-expressed relative to their own first pose
/// (`φ_0⁻¹ ∘ φ_j`), which removes the arbitrary frame of the shared model.
/// Squared point displacements are then averaged over every point of every
/// non-reference cloud.
pub fn rmse(calculated: &[RigidTransform], ground_truth: &[RigidTransform], clouds: &PointCloudSet) -> Result<f64> {
    let n = clouds.len();
    for poses in [calculated, ground_truth] {
        if poses.len() != n {
            return Err(Error::PoseCountMismatch {
                expected: n,
                actual: poses.len(),
            });
        }
    }
    let cal_ref = calculated[0].inverse();
    let gt_ref = ground_truth[0].inverse();
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 1..n {
        let cal = cal_ref.compose(&calculated[j]);
        let gt = gt_ref.compose(&ground_truth[j]);
        for p in clouds.cloud(j).points() {
            sum += (cal.apply(p) - gt.apply(p)).norm_squared();
        }
        count += clouds.cloud(j).len();
    }
    Ok((sum / count as f64).sqrt())
}
