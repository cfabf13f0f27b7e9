//! Deterministic CSV artifacts with `#` metadata headers.

use anyhow::{Context, Result};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// A CSV file whose header block records the tool version, the command,
/// the master seed, and every configuration field in declaration order.
/// No timestamps, hostnames, or thread counts: rerunning the same
/// invocation must reproduce the file byte for byte.
pub struct Artifact {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Artifact {
    pub fn create(
        dir: &Path,
        name: &str,
        command: &str,
        seed: u64,
        config: &[(&str, String)],
    ) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let path = dir.join(name);
        let file =
            File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# command: {command}")?;
        writeln!(out, "# seed: {seed}")?;
        for (key, value) in config {
            writeln!(out, "# {key}: {value}")?;
        }
        Ok(Self { path, out })
    }

    /// An extra `#` metadata line, for results-dependent notes that belong
    /// above the column row.
    pub fn comment(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "# {text}")?;
        Ok(())
    }

    pub fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{text}")?;
        Ok(())
    }

    /// Direct access for writers that stream their own rows.
    pub fn writer(&mut self) -> &mut impl Write {
        &mut self.out
    }

    pub fn finish(mut self) -> Result<()> {
        self.out
            .flush()
            .with_context(|| format!("writing {}", self.path.display()))?;
        Ok(())
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Formats a fraction in [0, 1] as a percentage with four decimals, the
/// convention for every agreement score the tool emits.
pub fn pct(fraction: f64) -> String {
    format!("{:.4}", 100.0 * fraction)
}
