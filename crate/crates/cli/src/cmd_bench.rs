//! `cf bench`: method comparison on one labeled dataset. Emits a grid of
//! every (method, parameter) cell tried plus a best-row-per-method table.

use crate::dataset::InputArgs;
use crate::output::{mean_std, pct, Artifact};
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use cluster_forests::baselines::{
    bagged_clustering, evidence_accumulation, random_projection_ensemble, BaselineConfig,
};
use cluster_forests::data::LabelVector;
use cluster_forests::ensemble::{run_cluster_forests, CfConfig};
use cluster_forests::metrics::{rho_c, rho_r};
use cluster_forests::rng::derive_seed;
use rayon::prelude::*;
use std::path::PathBuf;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodArg {
    /// The cluster-forests pipeline.
    Cf,
    /// Evidence accumulation: full-space K-means runs, single linkage.
    Ea,
    /// Random-projection ensemble of K-means runs.
    Rp,
    /// Bagged K-means with centroid matching.
    Bc2,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Final number of clusters (default: the number of label classes).
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,

    /// Methods to run.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cf,ea,rp,bc2")]
    pub methods: Vec<MethodArg>,

    /// Ensemble size for every method.
    #[arg(long = "T", default_value_t = 100, value_name = "T")]
    pub ensemble_size: usize,

    /// Competition sizes to try for the forest rows.
    #[arg(long, value_delimiter = ',', value_name = "Q,..")]
    pub q_grid: Option<Vec<usize>>,

    /// Also search the evidence-accumulation linkage threshold and the
    /// random-projection dimension instead of using their defaults.
    #[arg(long)]
    pub search: bool,

    /// Repetitions per cell, each on its own derived seed.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,

    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

struct Row {
    method: &'static str,
    param: String,
    rho_r_mean: f64,
    rho_r_std: f64,
    rho_c_mean: f64,
    rho_c_std: f64,
}

impl Row {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.method,
            self.param,
            pct(self.rho_r_mean),
            pct(self.rho_r_std),
            pct(self.rho_c_mean),
            pct(self.rho_c_std)
        )
    }
}

/// Runs one (method, parameter) cell over every repetition. The same
/// per-rep derived seeds are used for every cell, so comparisons across
/// methods are paired.
fn score_cell<F>(
    reps: usize,
    master: u64,
    truth: &LabelVector,
    method: &'static str,
    param: String,
    fit: F,
) -> Result<Row>
where
    F: Fn(u64) -> cluster_forests::Result<LabelVector> + Sync,
{
    let labels: Vec<LabelVector> = (0..reps)
        .into_par_iter()
        .map(|rep| fit(derive_seed(master, &[rep as u64])))
        .collect::<cluster_forests::Result<_>>()?;
    let mut rho_rs = Vec::with_capacity(reps);
    let mut rho_cs = Vec::with_capacity(reps);
    for pred in &labels {
        rho_rs.push(rho_r(truth, pred)?);
        rho_cs.push(rho_c(pred, truth)?);
    }
    let (rho_r_mean, rho_r_std) = mean_std(&rho_rs);
    let (rho_c_mean, rho_c_std) = mean_std(&rho_cs);
    Ok(Row {
        method,
        param,
        rho_r_mean,
        rho_r_std,
        rho_c_mean,
        rho_c_std,
    })
}

pub fn run(args: &BenchArgs) -> Result<()> {
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    let (data, labels) = args.input.load()?;
    let truth =
        labels.context("scoring needs labels; point --labels-col at the label column")?;
    let k = args.k.unwrap_or_else(|| truth.num_classes());

    let mut rows: Vec<Row> = Vec::new();
    let mut best: Vec<usize> = Vec::new();
    for &method in &args.methods {
        let start = rows.len();
        match method {
            MethodArg::Cf => {
                for &q in args.q_grid.as_deref().unwrap_or(&[1]) {
                    let cfg = CfConfig {
                        ensemble_size: args.ensemble_size,
                        num_final: k,
                        growth: cluster_forests::growth::GrowthConfig {
                            q,
                            k,
                            ..Default::default()
                        },
                        ..CfConfig::default()
                    };
                    rows.push(score_cell(
                        args.reps,
                        args.seed,
                        &truth,
                        "cf",
                        format!("q={q}"),
                        |seed| {
                            let cfg = CfConfig { seed, ..cfg.clone() };
                            Ok(run_cluster_forests(&data, &cfg)?.labels)
                        },
                    )?);
                }
            }
            MethodArg::Ea => {
                let thresholds: &[f64] = if args.search {
                    &[0.3, 0.4, 0.5, 0.6, 0.7]
                } else {
                    &[0.5]
                };
                for &t in thresholds {
                    rows.push(score_cell(
                        args.reps,
                        args.seed,
                        &truth,
                        "ea",
                        format!("t={t}"),
                        |seed| {
                            let cfg = baseline_config(args, k, t, 0, seed);
                            evidence_accumulation(&data, &cfg)
                        },
                    )?);
                }
            }
            MethodArg::Rp => {
                for dim in rp_dims(args.search, data.p()) {
                    rows.push(score_cell(
                        args.reps,
                        args.seed,
                        &truth,
                        "rp",
                        format!("dim={dim}"),
                        |seed| {
                            let cfg = baseline_config(args, k, 0.5, dim, seed);
                            random_projection_ensemble(&data, &cfg)
                        },
                    )?);
                }
            }
            MethodArg::Bc2 => {
                rows.push(score_cell(
                    args.reps,
                    args.seed,
                    &truth,
                    "bc2",
                    "-".to_string(),
                    |seed| {
                        let cfg = baseline_config(args, k, 0.5, 0, seed);
                        bagged_clustering(&data, &cfg)
                    },
                )?);
            }
        }
        // Best cell of this method by mean rho_r; earliest wins ties.
        if let Some(best_idx) = (start..rows.len())
            .max_by(|&a, &b| rows[a].rho_r_mean.total_cmp(&rows[b].rho_r_mean))
        {
            best.push(best_idx);
        }
    }

    let mut header = args.input.header();
    header.extend([
        ("k", k.to_string()),
        ("T", args.ensemble_size.to_string()),
        ("methods", method_list(&args.methods)),
        ("search", args.search.to_string()),
        ("reps", args.reps.to_string()),
    ]);
    if let Some(grid) = &args.q_grid {
        header.push(("q-grid", join(grid)));
    }

    const COLUMNS: &str = "method,param,rho_r_mean,rho_r_std,rho_c_mean,rho_c_std";
    let mut grid = Artifact::create(&args.out, "grid.csv", "bench", args.seed, &header)?;
    grid.line(COLUMNS)?;
    for row in &rows {
        grid.line(&row.csv())?;
    }
    grid.finish()?;

    let mut table = Artifact::create(&args.out, "bench.csv", "bench", args.seed, &header)?;
    table.line(COLUMNS)?;
    for &idx in &best {
        table.line(&rows[idx].csv())?;
    }
    table.finish()?;
    Ok(())
}

fn baseline_config(args: &BenchArgs, k: usize, threshold: f64, dim: usize, seed: u64) -> BaselineConfig {
    BaselineConfig {
        ensemble_size: args.ensemble_size,
        num_base: k,
        num_final: k,
        threshold,
        dim: if dim == 0 { BaselineConfig::default().dim } else { dim },
        seed,
        ..BaselineConfig::default()
    }
}

fn rp_dims(search: bool, p: usize) -> Vec<usize> {
    let candidates: &[usize] = if search { &[2, 3, 5, 7, 10] } else { &[5] };
    let mut dims: Vec<usize> = candidates.iter().map(|&d| d.min(p)).collect();
    dims.dedup();
    dims
}

fn method_list(methods: &[MethodArg]) -> String {
    let names: Vec<String> = methods
        .iter()
        .map(|m| {
            m.to_possible_value()
                .expect("no skipped variants")
                .get_name()
                .to_string()
        })
        .collect();
    names.join(",")
}

fn join(values: &[usize]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    parts.join(",")
}
