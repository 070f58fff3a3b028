use std::path::PathBuf;

use anyhow::Result;
use jprlc_core::io::{format_trace_csv, read_cloud, write_cloud, write_poses, write_text, CloudFormat};
use jprlc_core::{run_registration, PointCloudSet, RegistrationConfig};

use crate::output::{manifest, OutDir};

fn defaults() -> RegistrationConfig {
    RegistrationConfig::default()
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Input cloud files, `.xyz` or `.ply`; at least two.
    #[arg(long = "input", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Weight of the local-consistency term.
    #[arg(long, default_value_t = defaults().lambda)]
    lambda: f64,
    /// Number of Gaussian components.
    #[arg(long, default_value_t = defaults().m_count)]
    components: usize,
    #[arg(long, default_value_t = defaults().iterations)]
    iterations: usize,
    /// Weight of the uniform outlier class.
    #[arg(long, default_value_t = defaults().outlier_weight)]
    outlier_weight: f64,
    /// Neighbors per point in the local-consistency graph.
    #[arg(long, default_value_t = defaults().k_neighbors)]
    k_neighbors: usize,
    /// Starting component variance, mm².
    #[arg(long, default_value_t = defaults().initial_variance)]
    initial_variance: f64,
    /// Lower bound on component variances, mm². Derived from the data when
    /// omitted.
    #[arg(long)]
    variance_floor: Option<f64>,
    /// Stop once the relative objective change falls below this.
    #[arg(long)]
    early_stop: Option<f64>,
    #[arg(long, default_value = "jprlc-out")]
    out: PathBuf,
    /// Recorded in the manifest; registration itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Args {
    fn config(&self) -> RegistrationConfig {
        RegistrationConfig {
            lambda: self.lambda,
            iterations: self.iterations,
            k_neighbors: self.k_neighbors,
            m_count: self.components,
            outlier_weight: self.outlier_weight,
            initial_variance: self.initial_variance,
            variance_floor: self.variance_floor,
            early_stop: self.early_stop,
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    if args.inputs.len() < 2 {
        return Err(crate::usage("register needs at least two --input files"));
    }
    let config = args.config();
    config.validate()?;

    let mut clouds = Vec::with_capacity(args.inputs.len());
    let mut formats = Vec::with_capacity(args.inputs.len());
    for (j, path) in args.inputs.iter().enumerate() {
        let format = CloudFormat::from_path(path);
        clouds.push(read_cloud(path, format)?.with_id(j));
        formats.push(format);
    }
    let set = PointCloudSet::new(clouds)?;
    let mut run = manifest("register", args.seed, &config)?;
    for path in &args.inputs {
        run.add_input(path)?;
    }
    let mut out = OutDir::create(&args.out)?;

    let result = run_registration(&set, &config)?;
    if result.degenerate_rotations > 0 {
        log::warn!("{} rotation solves were rank-deficient", result.degenerate_rotations);
    }

    write_poses(&result.transforms, &out.file("transforms.json"))?;
    write_poses(&result.relative_transforms(), &out.file("relative_transforms.json"))?;
    for ((cloud, t), format) in set.clouds().iter().zip(&result.transforms).zip(&formats) {
        let name = format!("aligned_{}.{}", cloud.id(), format.extension());
        write_cloud(&cloud.transformed(t), &out.file(&name), *format)?;
    }
    write_text(&format_trace_csv(&result), &out.file("objective.csv"))?;
    out.finish(run)?;

    if let Some(last) = result.trace.last() {
        log::info!(
            "final objective {} after {} iterations",
            last.after.total,
            result.iterations
        );
    }
    Ok(())
}
