//! `cf run`: repeated pipeline runs on one labeled dataset, scored against
//! the provided labels.

use crate::dataset::InputArgs;
use crate::output::{mean_std, pct, Artifact};
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use cluster_forests::ensemble::{
    run_cluster_forests, CfConfig, CfOutcome, RegularizeMode, SpectralMethod,
};
use cluster_forests::growth::{DuplicatePolicy, GrowthConfig, StoppingRule};
use cluster_forests::metrics::{rho_c, rho_r};
use cluster_forests::rng::derive_seed;
use rayon::prelude::*;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RegularizeArg {
    /// Exponential lift on entries that survive the threshold; zeroed
    /// entries stay zero.
    ZeroPreserving,
    /// Exponential applied to every entry, thresholded ones included.
    LiteralExp,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SpectralArg {
    /// Recursive two-way normalized cuts.
    Ncut,
    /// Spectral embedding of the leading eigenvectors, then K-means.
    Njw,
}

fn enum_name<T: ValueEnum>(value: T) -> String {
    value
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

/// Pipeline parameters shared by the dataset-driven commands.
#[derive(Args, Clone, Debug)]
pub struct PipelineArgs {
    /// Final number of clusters (default: the number of label classes).
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,

    /// Ensemble size: how many clustering vectors to grow.
    #[arg(long = "T", default_value_t = 100, value_name = "T")]
    pub ensemble_size: usize,

    /// Features added per expansion step.
    #[arg(long, default_value_t = 2)]
    pub b: usize,

    /// Candidate seed sets per vector; the lowest-kappa draw wins.
    #[arg(long, default_value_t = 1)]
    pub q: usize,

    /// Consecutive rejected expansions before a vector stops growing.
    #[arg(long, default_value_t = 3)]
    pub tau_max: usize,

    /// Exponent scale of the co-association regularization.
    #[arg(long, default_value_t = 10.0)]
    pub beta1: f64,

    /// Affinities below this threshold are zeroed first.
    #[arg(long, default_value_t = 0.4)]
    pub beta2: f64,

    /// Clusters per base clustering (default: k).
    #[arg(long, value_name = "N")]
    pub nb: Option<usize>,

    /// Grow by trying every feature exactly once instead of stopping after
    /// tau-max consecutive failures.
    #[arg(long)]
    pub attempt_all: bool,

    /// Never add the same feature to a vector twice.
    #[arg(long)]
    pub distinct: bool,

    #[arg(long, value_enum, default_value_t = RegularizeArg::ZeroPreserving)]
    pub regularize: RegularizeArg,

    #[arg(long, value_enum, default_value_t = SpectralArg::Ncut)]
    pub spectral: SpectralArg,
}

impl PipelineArgs {
    pub fn to_config(&self, num_final: usize, seed: u64) -> CfConfig {
        CfConfig {
            ensemble_size: self.ensemble_size,
            num_final,
            beta1: self.beta1,
            beta2: self.beta2,
            regularize: match self.regularize {
                RegularizeArg::ZeroPreserving => RegularizeMode::ZeroPreserving,
                RegularizeArg::LiteralExp => RegularizeMode::LiteralExp,
            },
            spectral: match self.spectral {
                SpectralArg::Ncut => SpectralMethod::RecursiveNcut,
                SpectralArg::Njw => SpectralMethod::Njw,
            },
            growth: GrowthConfig {
                b: self.b,
                q: self.q,
                tau_max: self.tau_max,
                k: self.nb.unwrap_or(num_final),
                duplicates: if self.distinct || self.attempt_all {
                    DuplicatePolicy::Distinct
                } else {
                    DuplicatePolicy::Allow
                },
                stopping: if self.attempt_all {
                    StoppingRule::AttemptAll
                } else {
                    StoppingRule::ConsecutiveFailures
                },
                ..GrowthConfig::default()
            },
            seed,
            ..CfConfig::default()
        }
    }

    pub fn header(&self, num_final: usize) -> Vec<(&'static str, String)> {
        vec![
            ("k", num_final.to_string()),
            ("T", self.ensemble_size.to_string()),
            ("b", self.b.to_string()),
            ("q", self.q.to_string()),
            ("tau-max", self.tau_max.to_string()),
            ("beta1", self.beta1.to_string()),
            ("beta2", self.beta2.to_string()),
            ("nb", self.nb.unwrap_or(num_final).to_string()),
            ("attempt-all", self.attempt_all.to_string()),
            ("distinct", self.distinct.to_string()),
            ("regularize", enum_name(self.regularize)),
            ("spectral", enum_name(self.spectral)),
        ]
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Repetitions, each on its own seed derived from the master seed.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,

    /// Master seed, recorded in every artifact.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run(args: &RunArgs) -> Result<()> {
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    let (data, labels) = args.input.load()?;
    let truth =
        labels.context("scoring needs labels; point --labels-col at the label column")?;
    let num_final = args.pipeline.k.unwrap_or_else(|| truth.num_classes());
    let base = args.pipeline.to_config(num_final, args.seed);

    let outcomes: Vec<CfOutcome> = (0..args.reps)
        .into_par_iter()
        .map(|rep| {
            let cfg = CfConfig {
                seed: derive_seed(args.seed, &[rep as u64]),
                ..base.clone()
            };
            run_cluster_forests(&data, &cfg)
        })
        .collect::<cluster_forests::Result<_>>()?;

    let mut rho_rs = Vec::with_capacity(args.reps);
    let mut rho_cs = Vec::with_capacity(args.reps);
    for outcome in &outcomes {
        rho_rs.push(rho_r(&truth, &outcome.labels)?);
        rho_cs.push(rho_c(&outcome.labels, &truth)?);
    }

    let mut header = args.input.header();
    header.extend(args.pipeline.header(num_final));
    header.push(("reps", args.reps.to_string()));

    let mut summary = Artifact::create(&args.out, "summary.csv", "run", args.seed, &header)?;
    summary.line("metric,mean,std,reps")?;
    for (name, values) in [("rho_r", &rho_rs), ("rho_c", &rho_cs)] {
        let (mean, std) = mean_std(values);
        summary.line(&format!("{name},{},{},{}", pct(mean), pct(std), args.reps))?;
    }
    summary.finish()?;

    let mut reps_csv = Artifact::create(&args.out, "reps.csv", "run", args.seed, &header)?;
    reps_csv.line("rep,rho_r,rho_c")?;
    for rep in 0..args.reps {
        reps_csv.line(&format!("{rep},{},{}", pct(rho_rs[rep]), pct(rho_cs[rep])))?;
    }
    reps_csv.finish()?;

    let mut labels_csv =
        Artifact::create(&args.out, "labels.csv", "run", args.seed, &header)?;
    labels_csv.line("rep,point,label")?;
    for (rep, outcome) in outcomes.iter().enumerate() {
        for (point, label) in outcome.labels.labels().iter().enumerate() {
            labels_csv.line(&format!("{rep},{point},{label}"))?;
        }
    }
    labels_csv.finish()?;

    // Final-rep co-association matrix, before regularization: the text form
    // carries the metadata header, the binary form is a raw companion.
    let last = outcomes.last().expect("reps >= 1");
    let mut affinity =
        Artifact::create(&args.out, "affinity.csv", "run", args.seed, &header)?;
    last.co_association.write_csv(affinity.writer())?;
    affinity.finish()?;
    let bin_path = args.out.join("affinity.bin");
    let mut bin = BufWriter::new(
        File::create(&bin_path).with_context(|| format!("creating {}", bin_path.display()))?,
    );
    last.co_association.write_binary(&mut bin)?;

    Ok(())
}
