use std::path::PathBuf;

use anyhow::Result;
use jprlc_core::io::{format_sweep_csv, read_cloud, write_json, write_text, CloudFormat};
use jprlc_core::synth::{run_sweep, synthetic_surface, SweepAxis, SweepSpec, TrialSpec, SUCCESS_THRESHOLD_MM};
use jprlc_core::RegistrationConfig;

use crate::output::{manifest, OutDir};

fn defaults() -> RegistrationConfig {
    RegistrationConfig::desk_scale()
}

#[derive(Debug, clap::Args)]
#[command(group(clap::ArgGroup::new("shape").required(true).args(["base", "synthetic"])))]
pub struct Args {
    /// Base cloud the trial clouds are drawn from.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Use the built-in synthetic surface as the base cloud.
    #[arg(long)]
    synthetic: bool,
    /// Parameter to sweep: noise, outliers or lambda.
    #[arg(long)]
    sweep: SweepAxis,
    /// Comma-separated values, or an inclusive range `start..end:step`
    /// (also `start..end step step`).
    #[arg(long, value_parser = parse_levels)]
    levels: Levels,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "jprlc-bench")]
    out: PathBuf,
    /// Noise standard deviation in mm, unless swept.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Outliers per inlier point, unless swept.
    #[arg(long, default_value_t = 0.0)]
    outliers: f64,
    #[arg(long, default_value_t = defaults().lambda)]
    lambda: f64,
    #[arg(long, default_value_t = defaults().m_count)]
    components: usize,
    #[arg(long, default_value_t = defaults().iterations)]
    iterations: usize,
    #[arg(long, default_value_t = defaults().outlier_weight)]
    outlier_weight: f64,
    #[arg(long, default_value_t = defaults().k_neighbors)]
    k_neighbors: usize,
    #[arg(long, default_value_t = defaults().initial_variance)]
    initial_variance: f64,
    /// Per-axis rotation range, degrees.
    #[arg(long, default_value_t = 60.0)]
    rotation_range: f64,
    /// Per-axis translation range, mm.
    #[arg(long, default_value_t = 40.0)]
    translation_range: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1000, 700, 500, 300])]
    cloud_sizes: Vec<usize>,
    /// RMSE below which a trial counts as a success, mm.
    #[arg(long, default_value_t = SUCCESS_THRESHOLD_MM)]
    threshold: f64,
}

#[derive(Debug, Clone)]
struct Levels(Vec<f64>);

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

fn parse_levels(s: &str) -> Result<Levels, String> {
    let Some((start, rest)) = s.split_once("..") else {
        let levels = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        return Ok(Levels(levels));
    };
    let (end, step) = rest
        .split_once(':')
        .or_else(|| rest.split_once("step"))
        .ok_or_else(|| "a range needs a step, as in `1.0..5.0:0.5`".to_string())?;
    let (start, end, step) = (number(start)?, number(end)?, number(step)?);
    if step <= 0.0 || end < start {
        return Err("a range needs start <= end and a positive step".into());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    // rounding keeps 0.1-style steps from printing as 0.30000000000000004
    let levels = (0..count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect();
    Ok(Levels(levels))
}

impl Args {
    fn trial(&self) -> TrialSpec {
        TrialSpec {
            seed: self.seed,
            noise_sigma: self.noise,
            outlier_ratio: self.outliers,
            rotation_range_deg: self.rotation_range,
            translation_range_mm: self.translation_range,
            cloud_sizes: self.cloud_sizes.clone(),
            registration: RegistrationConfig {
                lambda: self.lambda,
                iterations: self.iterations,
                k_neighbors: self.k_neighbors,
                m_count: self.components,
                outlier_weight: self.outlier_weight,
                initial_variance: self.initial_variance,
                ..RegistrationConfig::default()
            },
            success_threshold_mm: self.threshold,
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    let spec = SweepSpec {
        axis: args.sweep,
        levels: args.levels.0.clone(),
        repeats: args.repeats,
        seed: args.seed,
        trial: args.trial(),
    };
    for &level in &spec.levels {
        spec.axis.apply(&spec.trial, level).validate()?;
    }
    let base = match &args.base {
        Some(path) => read_cloud(path, CloudFormat::from_path(path))?,
        None => synthetic_surface(1000),
    };
    if spec.trial.cloud_sizes[0] > base.len() {
        return Err(crate::usage(format!(
            "first cloud size {} exceeds the {} points of the base cloud",
            spec.trial.cloud_sizes[0],
            base.len()
        )));
    }
    let mut run = manifest("bench", args.seed, &spec)?;
    if let Some(path) = &args.base {
        run.add_input(path)?;
    }
    let mut out = OutDir::create(&args.out)?;
    out.subdir("trials")?;

    let outcome = run_sweep(&base, &spec)?;
    for (n, trial) in outcome.trials.iter().enumerate() {
        let level = n / spec.repeats;
        write_json(
            trial,
            &out.file(&format!("trials/level{level:02}_repeat{:02}.json", trial.repeat)),
        )?;
    }
    write_text(&format_sweep_csv(&outcome.rows), &out.file("sweep.csv"))?;
    out.finish(run)?;

    for row in &outcome.rows {
        log::info!(
            "level {}: {}/{} successful, mean rmse {:?} mm",
            row.level,
            row.successes,
            row.trials,
            row.mean_rmse_mm
        );
    }
    Ok(())
}
