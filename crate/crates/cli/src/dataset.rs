//! Shared input plumbing: CSV loading and the label-column convention.

use anyhow::{Context, Result};
use clap::Args;
use cluster_forests::data::{
    load_csv, standardize, CsvOptions, DataMatrix, LabelColumn, LabelVector,
};
use std::path::PathBuf;

#[derive(Args, Clone, Debug)]
pub struct InputArgs {
    /// Input CSV; numeric columns load as-is, other columns level-code.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Label column: `last`, `none`, a zero-based column index, or a
    /// header name.
    #[arg(long, default_value = "last", value_name = "COL")]
    pub labels_col: String,

    /// Center each numeric feature and scale it to unit variance before
    /// clustering.
    #[arg(long)]
    pub standardize: bool,
}

impl InputArgs {
    pub fn load(&self) -> Result<(DataMatrix, Option<LabelVector>)> {
        let label = match self.labels_col.as_str() {
            "none" => None,
            "last" => Some(LabelColumn::Last),
            other => Some(match other.parse::<usize>() {
                Ok(idx) => LabelColumn::Index(idx),
                Err(_) => LabelColumn::Name(other.to_string()),
            }),
        };
        let opts = CsvOptions {
            label,
            ..CsvOptions::default()
        };
        let (data, labels) = load_csv(&self.input, &opts)
            .with_context(|| format!("loading {}", self.input.display()))?;
        let data = if self.standardize {
            standardize(&data)
        } else {
            data
        };
        Ok((data, labels))
    }

    /// Header entries describing the input, for artifact metadata.
    pub fn header(&self) -> Vec<(&'static str, String)> {
        vec![
            ("input", self.input.display().to_string()),
            ("labels-col", self.labels_col.clone()),
            ("standardize", self.standardize.to_string()),
        ]
    }
}
