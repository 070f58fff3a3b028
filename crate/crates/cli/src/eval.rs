use std::path::PathBuf;

use anyhow::Result;
use jprlc_core::io::{read_cloud, read_poses, CloudFormat};
use jprlc_core::{rmse, PointCloudSet};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Estimated poses, JSON list of `{rotation, translation}`.
    #[arg(long)]
    calculated: PathBuf,
    /// Ground-truth poses in the same layout.
    #[arg(long)]
    ground_truth: PathBuf,
    /// The clouds the poses apply to, in the same order.
    #[arg(long, required = true, num_args = 1..)]
    clouds: Vec<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let calculated = read_poses(&args.calculated)?;
    let truth = read_poses(&args.ground_truth)?;
    let clouds = args
        .clouds
        .iter()
        .enumerate()
        .map(|(j, p)| read_cloud(p, CloudFormat::from_path(p)).map(|c| c.with_id(j)))
        .collect::<Result<Vec<_>, _>>()?;
    let set = PointCloudSet::new(clouds)?;
    println!("{}", rmse(&calculated, &truth, &set)?);
    Ok(())
}
