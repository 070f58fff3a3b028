//! Synthetic data degradation and the robustness-experiment harness.
//!
//! A trial subsamples a base shape into several clouds, moves each by the
//! inverse of a random ground-truth pose, adds Gaussian noise and then
//! uniform outliers, registers the result and scores it with the pose RMSE.
//! All randomness flows from the trial seed through independent ChaCha
//! streams, one per purpose and cloud, so identical specs give identical
//! reports.

use std::time::Instant;

use nalgebra::Vector3;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rmse, Point3, PointCloud, PointCloudSet, RigidTransform};
use crate::solver::{run_registration, RegistrationConfig};

/// Success threshold on the pose RMSE, mm.
pub const SUCCESS_THRESHOLD_MM: f64 = 10.0;

const STREAM_SUBSAMPLE: u64 = 1;
const STREAM_POSE: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_OUTLIERS: u64 = 4;

fn rng_for(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 32) | index);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `repeat`-th trial of a sweep. It does not depend on the
/// sweep level, so every level sees the same shapes and poses.
pub fn trial_seed(sweep_seed: u64, repeat: usize) -> u64 {
    splitmix64(sweep_seed ^ splitmix64(repeat as u64))
}

/// Uniform sample of `n` points without replacement, in draw order.
pub fn subsample(cloud: &PointCloud, n: usize, seed: u64) -> Result<PointCloud> {
    subsample_with(cloud, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn subsample_with(cloud: &PointCloud, n: usize, rng: &mut impl Rng) -> Result<PointCloud> {
    if n == 0 || n > cloud.len() {
        return Err(Error::config(format!(
            "cannot draw {n} points from a cloud of {}",
            cloud.len()
        )));
    }
    let pts = cloud.points();
    let picked = index::sample(rng, pts.len(), n).into_iter().map(|i| pts[i]).collect();
    PointCloud::new(cloud.id(), picked)
}

/// Adds independent zero-mean normal noise with standard deviation `sigma`
/// to every coordinate.
pub fn add_gaussian_noise(cloud: &PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    add_gaussian_noise_with(cloud, sigma, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn add_gaussian_noise_with(cloud: &PointCloud, sigma: f64, rng: &mut impl Rng) -> Result<PointCloud> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::config(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
    let pts = cloud
        .points()
        .iter()
        .map(|p| {
            let d = Vector3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng));
            p + d
        })
        .collect();
    PointCloud::new(cloud.id(), pts)
}

/// Axis-aligned box of the cloud, grown by 5% of each extent on both sides
/// (10% per axis in total).
pub fn outlier_box(cloud: &PointCloud) -> (Vector3<f64>, Vector3<f64>) {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in cloud.points() {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// Appends `ceil(ratio * n)` points drawn uniformly from [`outlier_box`].
/// The original points keep their positions and indices.
pub fn add_outliers(cloud: &PointCloud, ratio: f64, seed: u64) -> Result<PointCloud> {
    add_outliers_with(cloud, ratio, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Number of outliers [`add_outliers`] appends to a cloud of `n` points.
pub fn outlier_count(n: usize, ratio: f64) -> usize {
    // the epsilon keeps e.g. 0.1 * 1000 from rounding up to 101
    (ratio * n as f64 - 1e-9).ceil().max(0.0) as usize
}

fn add_outliers_with(cloud: &PointCloud, ratio: f64, rng: &mut impl Rng) -> Result<PointCloud> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::config(format!("outlier ratio must lie in [0, 1), got {ratio}")));
    }
    let count = outlier_count(cloud.len(), ratio);
    if count == 0 {
        return Ok(cloud.clone());
    }
    let (lo, hi) = outlier_box(cloud);
    let mut pts = cloud.points().to_vec();
    pts.extend((0..count).map(|_| {
        let mut p = Point3::origin();
        for a in 0..3 {
            p[a] = if hi[a] > lo[a] {
                rng.random_range(lo[a]..=hi[a])
            } else {
                lo[a]
            };
        }
        p
    }));
    PointCloud::new(cloud.id(), pts)
}

/// Random pose with intrinsic X-Y-Z Euler angles uniform in
/// `±rot_range_deg` and translation components uniform in `±trans_range_mm`.
pub fn random_rigid(rot_range_deg: f64, trans_range_mm: f64, seed: u64) -> Result<RigidTransform> {
    random_rigid_with(rot_range_deg, trans_range_mm, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn symmetric(rng: &mut impl Rng, range: f64) -> f64 {
    if range == 0.0 {
        0.0
    } else {
        rng.random_range(-range..=range)
    }
}

fn random_rigid_with(rot_range_deg: f64, trans_range_mm: f64, rng: &mut impl Rng) -> Result<RigidTransform> {
    if !(rot_range_deg >= 0.0) || !(trans_range_mm >= 0.0) {
        return Err(Error::config("pose ranges must be non-negative"));
    }
    let r = rot_range_deg.to_radians();
    let (a, b, c) = (symmetric(rng, r), symmetric(rng, r), symmetric(rng, r));
    let t = Vector3::new(
        symmetric(rng, trans_range_mm),
        symmetric(rng, trans_range_mm),
        symmetric(rng, trans_range_mm),
    );
    Ok(RigidTransform::from_euler_xyz(a, b, c, t))
}

/// Euler angles recovered from a rotation built by
/// [`RigidTransform::from_euler_xyz`], radians.
pub fn euler_xyz(t: &RigidTransform) -> (f64, f64, f64) {
    let r = t.rotation();
    let b = r[(0, 2)].clamp(-1.0, 1.0).asin();
    let a = (-r[(1, 2)]).atan2(r[(2, 2)]);
    let c = (-r[(0, 1)]).atan2(r[(0, 0)]);
    (a, b, c)
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Deterministic blade-like sheet: a cambered, tapered, twisted and leaning
/// surface about 300 mm tall and up to 110 mm wide, sampled with a Halton
/// sequence. It has no rotational or mirror symmetry.
pub fn synthetic_surface(n: usize) -> PointCloud {
    let pts = (1..=n)
        .map(|k| {
            let u = halton(k, 2);
            let v = halton(k, 3);
            let chord = 110.0 - 40.0 * v;
            let s = (u - 0.35) * chord;
            let camber = 0.15 * chord * (std::f64::consts::PI * u.powf(0.7)).sin();
            let (st, ct) = (0.8 * (v - 0.5)).sin_cos();
            Point3::new(
                s * ct - camber * st + 15.0 * v * v,
                s * st + camber * ct,
                300.0 * v - 150.0,
            )
        })
        .collect();
    PointCloud::new(0, pts).expect("surface sample is finite and non-empty")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialSpec {
    pub seed: u64,
    /// Standard deviation of the added noise, mm.
    pub noise_sigma: f64,
    /// Outliers appended per inlier point.
    pub outlier_ratio: f64,
    /// Per-axis Euler-angle range, degrees.
    pub rotation_range_deg: f64,
    /// Per-axis translation range, mm.
    pub translation_range_mm: f64,
    /// Size of each cloud; the first is drawn from the base shape and the
    /// rest from the first.
    pub cloud_sizes: Vec<usize>,
    pub registration: RegistrationConfig,
    pub success_threshold_mm: f64,
}

impl Default for TrialSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            noise_sigma: 0.0,
            outlier_ratio: 0.0,
            rotation_range_deg: 60.0,
            translation_range_mm: 40.0,
            cloud_sizes: vec![1000, 700, 500, 300],
            registration: RegistrationConfig::desk_scale(),
            success_threshold_mm: SUCCESS_THRESHOLD_MM,
        }
    }
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cloud_sizes.len() < 2 {
            return Err(Error::config("a trial needs at least 2 clouds"));
        }
        if self.cloud_sizes.contains(&0) {
            return Err(Error::config("cloud sizes must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::config("noise sigma must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.outlier_ratio) {
            return Err(Error::config("outlier ratio must lie in [0, 1)"));
        }
        if !(self.rotation_range_deg >= 0.0) || !(self.translation_range_mm >= 0.0) {
            return Err(Error::config("pose ranges must be non-negative"));
        }
        if !(self.success_threshold_mm > 0.0) {
            return Err(Error::config("success threshold must be positive"));
        }
        self.registration.validate()
    }
}

/// Degraded inputs of one trial together with what is needed to score it.
#[derive(Debug, Clone)]
pub struct TrialData {
    /// Misaligned, noisy clouds with outliers appended.
    pub inputs: PointCloudSet,
    /// The same clouds without the appended outliers.
    pub inliers: PointCloudSet,
    /// Pose that maps each input cloud back into the base frame.
    pub ground_truth: Vec<RigidTransform>,
}

pub fn build_trial_data(spec: &TrialSpec, base: &PointCloud) -> Result<TrialData> {
    spec.validate()?;
    let seed = spec.seed;
    let first = subsample_with(base, spec.cloud_sizes[0], &mut rng_for(seed, STREAM_SUBSAMPLE, 0))?;
    let mut inputs = Vec::with_capacity(spec.cloud_sizes.len());
    let mut inliers = Vec::with_capacity(spec.cloud_sizes.len());
    let mut ground_truth = Vec::with_capacity(spec.cloud_sizes.len());
    for (j, &n) in spec.cloud_sizes.iter().enumerate() {
        let k = j as u64;
        let clean = if j == 0 {
            first.clone()
        } else {
            subsample_with(&first, n, &mut rng_for(seed, STREAM_SUBSAMPLE, k))?
        };
        let pose = if j == 0 {
            RigidTransform::identity()
        } else {
            random_rigid_with(
                spec.rotation_range_deg,
                spec.translation_range_mm,
                &mut rng_for(seed, STREAM_POSE, k),
            )?
        };
        let moved = clean.transformed(&pose.inverse());
        let noisy = add_gaussian_noise_with(&moved, spec.noise_sigma, &mut rng_for(seed, STREAM_NOISE, k))?;
        let degraded = add_outliers_with(&noisy, spec.outlier_ratio, &mut rng_for(seed, STREAM_OUTLIERS, k))?;
        inliers.push(noisy);
        inputs.push(degraded);
        ground_truth.push(pose);
    }
    Ok(TrialData {
        inputs: PointCloudSet::new(inputs)?,
        inliers: PointCloudSet::new(inliers)?,
        ground_truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    /// Pose RMSE over the inlier points, mm; absent when the solver failed.
    pub rmse_mm: Option<f64>,
    pub success: bool,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub failure: Option<String>,
    pub ground_truth: Vec<RigidTransform>,
    pub estimated: Vec<RigidTransform>,
}

impl TrialReport {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &TrialReport) -> bool {
        TrialReport {
            wall_time_s: 0.0,
            ..self.clone()
        } == TrialReport {
            wall_time_s: 0.0,
            ..other.clone()
        }
    }
}

/// Builds the degraded inputs, registers them and scores the result. Solver
/// failures produce an unsuccessful report; only an invalid spec is an
/// error.
pub fn run_trial(spec: &TrialSpec, base: &PointCloud) -> Result<TrialReport> {
    let data = build_trial_data(spec, base)?;
    let start = Instant::now();
    let outcome = run_registration(&data.inputs, &spec.registration);
    let wall_time_s = start.elapsed().as_secs_f64();
    Ok(match outcome {
        Ok(result) => {
            let err = rmse(&result.transforms, &data.ground_truth, &data.inliers)?;
            TrialReport {
                seed: spec.seed,
                rmse_mm: Some(err),
                success: err < spec.success_threshold_mm,
                objective_trace: result.objective_trace(),
                iterations: result.iterations,
                wall_time_s,
                failure: None,
                ground_truth: data.ground_truth,
                estimated: result.transforms,
            }
        }
        Err(e) => TrialReport {
            seed: spec.seed,
            rmse_mm: None,
            success: false,
            objective_trace: Vec::new(),
            iterations: 0,
            wall_time_s,
            failure: Some(e.to_string()),
            ground_truth: data.ground_truth,
            estimated: Vec::new(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Noise,
    Outliers,
    Lambda,
}

impl SweepAxis {
    /// Copy of `spec` with the swept parameter set to `level`.
    pub fn apply(self, spec: &TrialSpec, level: f64) -> TrialSpec {
        let mut s = spec.clone();
        match self {
            SweepAxis::Noise => s.noise_sigma = level,
            SweepAxis::Outliers => s.outlier_ratio = level,
            SweepAxis::Lambda => s.registration.lambda = level,
        }
        s
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(SweepAxis::Noise),
            "outliers" => Ok(SweepAxis::Outliers),
            "lambda" => Ok(SweepAxis::Lambda),
            other => Err(Error::config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub levels: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    /// Settings shared by every trial; the swept field and the seed are
    /// overwritten per trial.
    pub trial: TrialSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean RMSE over successful trials, mm.
    pub mean_rmse_mm: Option<f64>,
    /// Population standard deviation of the RMSE over successful trials, mm.
    pub std_rmse_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrial {
    pub level: f64,
    pub repeat: usize,
    pub report: TrialReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub trials: Vec<SweepTrial>,
}

/// Summary row of one level. Success rate counts every trial; the RMSE
/// statistics only the successful ones.
pub fn aggregate(level: f64, reports: &[&TrialReport]) -> SweepRow {
    let ok: Vec<f64> = reports.iter().filter(|r| r.success).filter_map(|r| r.rmse_mm).collect();
    let (mean, std) = if ok.is_empty() {
        (None, None)
    } else {
        let n = ok.len() as f64;
        let mean = ok.iter().sum::<f64>() / n;
        let var = ok.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt()))
    };
    SweepRow {
        level,
        trials: reports.len(),
        successes: ok.len(),
        success_rate: if reports.is_empty() {
            0.0
        } else {
            ok.len() as f64 / reports.len() as f64
        },
        mean_rmse_mm: mean,
        std_rmse_mm: std,
    }
}

/// Runs `repeats` trials at every level. Trials run concurrently; results
/// come back in (level, repeat) order.
pub fn run_sweep(base: &PointCloud, spec: &SweepSpec) -> Result<SweepOutcome> {
    if spec.levels.is_empty() {
        return Err(Error::config("sweep has no levels"));
    }
    if spec.repeats == 0 {
        return Err(Error::config("sweep needs at least one repeat per level"));
    }
    let jobs: Vec<(f64, usize, TrialSpec)> = spec
        .levels
        .iter()
        .flat_map(|&level| {
            (0..spec.repeats).map(move |r| {
                let mut t = spec.axis.apply(&spec.trial, level);
                t.seed = trial_seed(spec.seed, r);
                (level, r, t)
            })
        })
        .collect();
    for (_, _, t) in &jobs {
        t.validate()?;
    }
    let trials = jobs
        .into_par_iter()
        .map(|(level, repeat, t)| run_trial(&t, base).map(|report| SweepTrial { level, repeat, report }))
        .collect::<Result<Vec<_>>>()?;
    let rows = spec
        .levels
        .iter()
        .enumerate()
        .map(|(li, &level)| {
            let reports: Vec<&TrialReport> = trials[li * spec.repeats..(li + 1) * spec.repeats]
                .iter()
                .map(|t| &t.report)
                .collect();
            aggregate(level, &reports)
        })
        .collect();
    Ok(SweepOutcome { rows, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn grid_cloud(n: usize) -> PointCloud {
        PointCloud::new(
            0,
            (0..n)
                .map(|i| Point3::new(i as f64, (i * 7 % 13) as f64, (i * 3 % 5) as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn full_subsample_is_a_permutation() {
        let c = grid_cloud(50);
        let s = subsample(&c, 50, 9).unwrap();
        let mut a: Vec<_> = c.points().iter().map(|p| p.x as i64).collect();
        let mut b: Vec<_> = s.points().iter().map(|p| p.x as i64).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_subsample_draws_from_cloud() {
        let c = grid_cloud(20);
        let s = subsample(&c, 1, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert!(c.points().contains(&s.points()[0]));
    }

    #[test]
    fn subsample_is_seeded() {
        let c = grid_cloud(1000);
        let a = subsample(&c, 700, 1).unwrap();
        assert_eq!(a, subsample(&c, 700, 1).unwrap());
        let b = subsample(&c, 700, 2).unwrap();
        let sa: HashSet<i64> = a.points().iter().map(|p| p.x as i64).collect();
        let sb: HashSet<i64> = b.points().iter().map(|p| p.x as i64).collect();
        assert_ne!(sa, sb);
        assert!(matches!(subsample(&c, 1001, 1), Err(Error::Config(_))));
    }

    #[test]
    fn zero_noise_is_identity() {
        let c = grid_cloud(10);
        assert_eq!(add_gaussian_noise(&c, 0.0, 5).unwrap(), c);
    }

    #[test]
    fn noise_statistics() {
        let c = PointCloud::new(0, vec![Point3::origin(); 20_000]).unwrap();
        let noisy = add_gaussian_noise(&c, 3.0, 77).unwrap();
        let n = noisy.len() as f64;
        let mean = noisy.centroid().coords;
        assert!(mean.norm() < 0.1, "{mean}");
        for a in 0..3 {
            let var = noisy.points().iter().map(|p| (p[a] - mean[a]).powi(2)).sum::<f64>() / (n - 1.0);
            let sd = var.sqrt();
            assert!((sd - 3.0).abs() < 0.15, "axis {a}: {sd}");
        }
    }

    #[test]
    fn outliers_appended_inside_box() {
        let c = grid_cloud(1000);
        assert_eq!(add_outliers(&c, 0.0, 1).unwrap(), c);
        let o = add_outliers(&c, 0.10, 1).unwrap();
        assert_eq!(o.len(), 1100);
        assert_eq!(&o.points()[..1000], c.points());
        for seed in 0..50 {
            let o = add_outliers(&c, 0.3, seed).unwrap();
            let (lo, hi) = outlier_box(&c);
            for p in &o.points()[1000..] {
                for a in 0..3 {
                    assert!(p[a] >= lo[a] && p[a] <= hi[a]);
                }
            }
        }
        assert_eq!(outlier_count(7, 0.5), 4);
    }

    #[test]
    fn random_rigid_ranges() {
        let t = random_rigid(0.0, 0.0, 4).unwrap();
        assert_eq!(t, RigidTransform::identity());

        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            let t = random_rigid_with(60.0, 40.0, &mut rng).unwrap();
            RigidTransform::new(*t.rotation(), *t.translation()).unwrap();
            let err = (t.rotation().transpose() * t.rotation() - nalgebra::Matrix3::identity())
                .abs()
                .max();
            assert!(err < 1e-12);
            assert!((t.rotation().determinant() - 1.0).abs() < 1e-12);
            assert!(t.translation().iter().all(|v| v.abs() <= 40.0));
            let (a, b, c) = euler_xyz(&t);
            for (k, ang) in [a, b, c].into_iter().enumerate() {
                let d = ang.to_degrees();
                lo[k] = lo[k].min(d);
                hi[k] = hi[k].max(d);
            }
        }
        for k in 0..3 {
            assert!((-60.0 - 1e-9..=-54.0).contains(&lo[k]), "{lo:?}");
            assert!((54.0..=60.0 + 1e-9).contains(&hi[k]), "{hi:?}");
        }
    }

    #[test]
    fn surface_is_deterministic_and_desk_sized() {
        let a = synthetic_surface(1000);
        assert_eq!(a, synthetic_surface(1000));
        let set = PointCloudSet::new(vec![a.clone(), a]).unwrap();
        let diag = set.bounding_box_diagonal();
        assert!((300.0..400.0).contains(&diag), "{diag}");
    }

    #[test]
    fn trial_data_shapes() {
        let base = synthetic_surface(1000);
        let spec = TrialSpec {
            seed: 5,
            noise_sigma: 1.0,
            outlier_ratio: 0.1,
            ..TrialSpec::default()
        };
        let data = build_trial_data(&spec, &base).unwrap();
        let sizes: Vec<_> = data.inputs.clouds().iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![1100, 770, 550, 330]);
        let inl: Vec<_> = data.inliers.clouds().iter().map(|c| c.len()).collect();
        assert_eq!(inl, vec![1000, 700, 500, 300]);
        assert_eq!(data.ground_truth[0], RigidTransform::identity());
        for j in 0..4 {
            assert_eq!(&data.inputs.cloud(j).points()[..inl[j]], data.inliers.cloud(j).points());
        }
    }

    #[test]
    fn aggregate_counts_only_successes() {
        let mk = |rmse: Option<f64>, success| TrialReport {
            seed: 0,
            rmse_mm: rmse,
            success,
            objective_trace: vec![],
            iterations: 0,
            wall_time_s: 0.0,
            failure: None,
            ground_truth: vec![],
            estimated: vec![],
        };
        let r = [
            mk(Some(1.0), true),
            mk(Some(3.0), true),
            mk(Some(50.0), false),
            mk(None, false),
        ];
        let refs: Vec<_> = r.iter().collect();
        let row = aggregate(2.0, &refs);
        assert_eq!(row.trials, 4);
        assert_eq!(row.successes, 2);
        assert_eq!(row.success_rate, 0.5);
        assert_eq!(row.mean_rmse_mm, Some(2.0));
        assert_eq!(row.std_rmse_mm, Some(1.0));
        let none = aggregate(0.0, &[&r[2]]);
        assert_eq!(none.mean_rmse_mm, None);
    }

    #[test]
    fn sweep_axis_parsing() {
        assert_eq!("noise".parse::<SweepAxis>().unwrap(), SweepAxis::Noise);
        assert!("volume".parse::<SweepAxis>().is_err());
    }
}
