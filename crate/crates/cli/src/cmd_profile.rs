//! `cf profile`: score every feature of a dataset on its own, producing
//! the per-feature strength data behind histogram-style plots.

use crate::dataset::InputArgs;
use crate::output::Artifact;
use anyhow::{Context, Result};
use clap::Args;
use cluster_forests::data::feature_profile;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Clusters used to score each feature (default: the number of label
    /// classes).
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,

    /// Master seed for the per-feature clustering runs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run(args: &ProfileArgs) -> Result<()> {
    let (data, labels) = args.input.load()?;
    let k = args
        .k
        .or_else(|| labels.as_ref().map(|l| l.num_classes()))
        .context("need --k when the input has no label column")?;
    let strengths = feature_profile(&data, k, args.seed)?;

    let mut header = args.input.header();
    header.push(("k", k.to_string()));
    let mut profile =
        Artifact::create(&args.out, "profile.csv", "profile", args.seed, &header)?;
    profile.line("feature,kappa")?;
    for (feature, kappa) in strengths.iter().enumerate() {
        profile.line(&format!("{feature},{kappa:.6}"))?;
    }
    profile.finish()?;
    Ok(())
}
