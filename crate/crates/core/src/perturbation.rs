//! Perturbation lab: planted two-block affinity matrices under additive
//! Gaussian noise, the spectral misclustering rate, and its closed-form
//! large-n exponent.
//!
//! The planted matrix has within-block entries `1 - nu` and cross-block
//! entries `nu` for blocks of size `n1` and `n2 = round(gamma * n1)`. Noise
//! is a symmetric matrix of iid N(0, sigma^2) entries. For each noisy draw
//! the lab bipartitions by the sign of the second eigenvector of
//! `D^{-1/2} P D^{-1/2}` and records the fraction of misplaced points M
//! (minimized over the two label matchings). The mean of M decays
//! exponentially in n; `theory_rate` gives the predicted exponent
//! `-gamma^2 / (2 sigma^2 (1 + gamma)(1 + gamma^3))`.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::LabelVector;
use crate::eigen::top_eigenpairs;
use crate::error::{CfError, Result};
use crate::rng::substream;

/// Substream tag for perturbation trials.
const SALT_TRIAL: u64 = 0x5452_4941;

#[derive(Clone, Debug)]
pub struct PerturbationSpec {
    /// First block size.
    pub n1: usize,
    /// Block-size ratio; the second block has `round(gamma * n1)` points.
    pub gamma: f64,
    /// Cross-block affinity (within-block is `1 - nu`).
    pub nu: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 {
            return Err(CfError::InvalidSpec("n1 must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(CfError::InvalidSpec(format!(
                "gamma = {} must lie in (0, 1]",
                self.gamma
            )));
        }
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(CfError::InvalidSpec(format!(
                "nu = {} must lie in (0, 0.5)",
                self.nu
            )));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(CfError::InvalidSpec(format!(
                "sigma = {} must be finite and nonnegative",
                self.sigma
            )));
        }
        if self.trials == 0 {
            return Err(CfError::InvalidSpec("trials must be positive".into()));
        }
        Ok(())
    }

    pub fn n2(&self) -> usize {
        ((self.gamma * self.n1 as f64).round() as usize).max(1)
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2()
    }

    /// Realized block ratio n2 / n1 (differs from `gamma` by rounding).
    pub fn gamma_realized(&self) -> f64 {
        self.n2() as f64 / self.n1 as f64
    }
}

/// The noiseless planted affinity matrix.
pub fn planted_affinity(n1: usize, n2: usize, nu: f64) -> Array2<f64> {
    let n = n1 + n2;
    Array2::from_shape_fn((n, n), |(i, j)| {
        if (i < n1) == (j < n1) {
            1.0 - nu
        } else {
            nu
        }
    })
}

/// Adds a symmetric iid N(0, sigma^2) perturbation: one Gaussian per
/// unordered entry (diagonal included), mirrored below.
pub fn sample_perturbed(pbar: &Array2<f64>, sigma: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = pbar.nrows();
    let mut out = pbar.clone();
    for i in 0..n {
        for j in i..n {
            let e: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            out[[i, j]] += e;
            if j > i {
                out[[j, i]] += e;
            }
        }
    }
    out
}

/// Sign-of-second-eigenvector bipartition of a raw (possibly negative)
/// affinity matrix. Returns `None` when some degree is nonpositive, which
/// makes the normalized operator undefined; callers count these as aborted
/// trials.
pub fn bipartition_raw(p: &Array2<f64>) -> Result<Option<Vec<usize>>> {
    let n = p.nrows();
    let degrees: Vec<f64> = p.rows().into_iter().map(|r| r.sum()).collect();
    if degrees.iter().any(|&d| d <= 0.0) {
        return Ok(None);
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let s = Array2::from_shape_fn((n, n), |(i, j)| p[[i, j]] * inv_sqrt[i] * inv_sqrt[j]);
    let pairs = top_eigenpairs(s.view(), 2)?;
    let v = pairs.vector(1);
    Ok(Some(v.iter().map(|&x| usize::from(x < 0.0)).collect()))
}

/// Fraction of points on the wrong side of the planted split, minimized
/// over the two ways of matching sides to blocks. Always in [0, 1/2].
pub fn misclustering_rate(sides: &[usize], n1: usize, n2: usize) -> Result<f64> {
    if sides.len() != n1 + n2 {
        return Err(CfError::LengthMismatch {
            left: sides.len(),
            right: n1 + n2,
        });
    }
    let n = (n1 + n2) as f64;
    let wrong: usize = sides[..n1].iter().filter(|&&s| s != 0).count()
        + sides[n1..].iter().filter(|&&s| s != 1).count();
    let rate = wrong as f64 / n;
    Ok(rate.min(1.0 - rate))
}

/// Closed-form large-n exponent of the mean misclustering rate.
pub fn theory_rate(gamma: f64, sigma: f64) -> f64 {
    -gamma * gamma / (2.0 * sigma * sigma * (1.0 + gamma) * (1.0 + gamma.powi(3)))
}

#[derive(Clone, Debug)]
pub struct RateEstimate {
    /// Mean misclustering rate over completed trials.
    pub mean_m: f64,
    /// `(1/n) ln(mean_m)`; negative infinity when no trial misclustered
    /// anything.
    pub empirical: f64,
    /// Closed-form exponent at the realized gamma.
    pub theory: f64,
    /// Trials dropped because a degree went nonpositive.
    pub aborted: usize,
    pub completed: usize,
}

/// Monte-Carlo estimate of the misclustering exponent. Trials run in
/// parallel, each on its own substream; the mean is accumulated in trial
/// order so the result does not depend on the thread count.
pub fn estimate_rate(spec: &PerturbationSpec) -> Result<RateEstimate> {
    spec.validate()?;
    let n1 = spec.n1;
    let n2 = spec.n2();
    let pbar = planted_affinity(n1, n2, spec.nu);

    let outcomes: Vec<Option<f64>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(spec.seed, &[SALT_TRIAL, t as u64]);
            let noisy = sample_perturbed(&pbar, spec.sigma, &mut rng);
            match bipartition_raw(&noisy)? {
                None => Ok(None),
                Some(sides) => Ok(Some(misclustering_rate(&sides, n1, n2)?)),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let aborted = outcomes.iter().filter(|o| o.is_none()).count();
    let completed = outcomes.len() - aborted;
    if completed == 0 {
        return Err(CfError::Numerical(
            "every perturbation trial aborted on a nonpositive degree".into(),
        ));
    }
    let mean_m = outcomes.iter().flatten().sum::<f64>() / completed as f64;
    let n = (n1 + n2) as f64;
    let empirical = if mean_m > 0.0 {
        mean_m.ln() / n
    } else {
        f64::NEG_INFINITY
    };
    Ok(RateEstimate {
        mean_m,
        empirical,
        theory: theory_rate(spec.gamma_realized(), spec.sigma),
        aborted,
        completed,
    })
}

#[derive(Clone, Debug)]
pub struct EigenAsymptoticsReport {
    pub lambda2: f64,
    /// First-order prediction `1 - (1 + gamma^2) nu / gamma`.
    pub lambda2_predicted: f64,
    pub lambda2_error: f64,
    /// Largest within-block deviation of the second eigenvector.
    pub x2_block_spread: f64,
    /// Deviation of the scaled block values from `(-gamma^{3/2}, 1)`.
    pub x2_value_deviation: f64,
}

/// Checks the noiseless operator's second eigenpair against its first-order
/// asymptotics: lambda2 and the block-constant shape of x2.
pub fn eigen_asymptotics_check(n1: usize, gamma: f64, nu: f64) -> Result<EigenAsymptoticsReport> {
    if n1 == 0 {
        return Err(CfError::InvalidSpec("n1 must be positive".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) || !(nu > 0.0 && nu < 0.5) {
        return Err(CfError::InvalidSpec(
            "need gamma in (0, 1] and nu in (0, 0.5)".into(),
        ));
    }
    let n2 = ((gamma * n1 as f64).round() as usize).max(1);
    let g = n2 as f64 / n1 as f64;
    let pbar = planted_affinity(n1, n2, nu);
    let degrees: Vec<f64> = pbar.rows().into_iter().map(|r| r.sum()).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let n = n1 + n2;
    let s = Array2::from_shape_fn((n, n), |(i, j)| pbar[[i, j]] * inv_sqrt[i] * inv_sqrt[j]);
    let pairs = top_eigenpairs(s.view(), 2)?;
    let lambda2 = pairs.values[1];
    let predicted = 1.0 - (1.0 + g * g) * nu / g;

    let x2 = pairs.vector(1);
    let mean1 = x2.iter().take(n1).sum::<f64>() / n1 as f64;
    let mean2 = x2.iter().skip(n1).sum::<f64>() / n2 as f64;
    let spread1 = x2
        .iter()
        .take(n1)
        .fold(0.0f64, |a, &v| a.max((v - mean1).abs()));
    let spread2 = x2
        .iter()
        .skip(n1)
        .fold(0.0f64, |a, &v| a.max((v - mean2).abs()));
    // Orient so the second block is positive, then scale to unit block-2
    // value: the predicted shape is -gamma^{3/2} on block 1 and +1 on
    // block 2.
    let flip = if mean2 < 0.0 { -1.0 } else { 1.0 };
    let scale = (n1 as f64 * g.powi(3) + n2 as f64).sqrt();
    let v1 = flip * mean1 * scale;
    let v2 = flip * mean2 * scale;
    let dev = (v1 - (-g.powf(1.5))).abs().max((v2 - 1.0).abs());

    Ok(EigenAsymptoticsReport {
        lambda2,
        lambda2_predicted: predicted,
        lambda2_error: (lambda2 - predicted).abs(),
        x2_block_spread: spread1.max(spread2),
        x2_value_deviation: dev,
    })
}

/// Convenience wrapper: the bipartition as a [`LabelVector`].
pub fn bipartition_labels(p: &Array2<f64>) -> Result<Option<LabelVector>> {
    match bipartition_raw(p)? {
        None => Ok(None),
        Some(sides) => Ok(Some(LabelVector::new(sides, 2)?)),
    }
}
