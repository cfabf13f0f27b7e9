//! Co-association aggregation and the full ensemble pipeline.
//!
//! Each ensemble member contributes a 0/1 co-cluster indicator; averaging
//! over members yields the co-association matrix P with entries in [0, 1]
//! and unit diagonal. Regularization thresholds P at `beta2` and expands
//! the survivors through `exp(beta1 * p)`, sharpening the contrast before
//! spectral clustering.

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;

use crate::base_cluster::{kmeans, FeatureView, KmeansParams};
use crate::data::{DataMatrix, LabelVector};
use crate::error::{CfError, Result};
use crate::growth::{grow_clustering_vector, ClusteringVector, GrowthConfig};
use crate::rng::{derive_seed, substream};
use crate::spectral::{njw_cluster, spectral_cluster, AffinityGraph};

/// Substream tag for ensemble members.
const SALT_MEMBER: u64 = 0x4d45_4d42;
/// Substream tag for the NJW K-means stage.
const SALT_SPECTRAL: u64 = 0x534a_5057;
/// Substream tag for member partition refits.
const SALT_REFIT: u64 = 0x5246_4954;

/// Symmetric matrix with unit-ish diagonal stored as a packed upper
/// triangle; entry (i, j) is the fraction of ensemble members that put i
/// and j in the same cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct CoAssociationMatrix {
    n: usize,
    /// Row-wise packed upper triangle including the diagonal.
    upper: Vec<f64>,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    // Row r of the packed upper triangle holds n - r entries.
    i * (2 * n - i + 1) / 2 + (j - i)
}

impl CoAssociationMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.upper[packed_index(self.n, a, b)]
    }

    pub fn to_dense(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| self.get(i, j))
    }

    /// Validates and packs a dense symmetric matrix with entries in [0, 1].
    pub fn from_dense(dense: &Array2<f64>) -> Result<Self> {
        let (r, c) = dense.dim();
        if r != c {
            return Err(CfError::InvalidInput(format!(
                "co-association matrix is {r}x{c}, expected square"
            )));
        }
        if r == 0 {
            return Err(CfError::EmptyInput("co-association matrix is empty".into()));
        }
        for ((i, j), &v) in dense.indexed_iter() {
            if !v.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(CfError::InvalidInput(format!(
                    "co-association entry {v} at ({i}, {j}) outside [0, 1]"
                )));
            }
            if j > i && (v - dense[[j, i]]).abs() > 1e-9 {
                return Err(CfError::InvalidInput(format!(
                    "co-association matrix not symmetric at ({i}, {j})"
                )));
            }
        }
        let mut upper = Vec::with_capacity(r * (r + 1) / 2);
        for i in 0..r {
            for j in i..r {
                upper.push(dense[[i, j]].clamp(0.0, 1.0));
            }
        }
        Ok(Self { n: r, upper })
    }

    /// Writes the dense matrix as CSV rows (full precision, no header).
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        for i in 0..self.n {
            let mut row = String::new();
            for j in 0..self.n {
                if j > 0 {
                    row.push(',');
                }
                row.push_str(&format!("{}", self.get(i, j)));
            }
            row.push('\n');
            out.write_all(row.as_bytes())?;
        }
        Ok(())
    }

    /// Binary dump: `n` as little-endian u64, then the dense row-major
    /// matrix as little-endian f64.
    pub fn write_binary(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(&(self.n as u64).to_le_bytes())?;
        for i in 0..self.n {
            for j in 0..self.n {
                out.write_all(&self.get(i, j).to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Mean co-association over same-class pairs and over cross-class pairs
    /// (unordered, diagonal excluded). Useful as a block-structure
    /// diagnostic against reference labels.
    pub fn mean_within_between(&self, labels: &LabelVector) -> Result<(f64, f64)> {
        if labels.len() != self.n {
            return Err(CfError::LengthMismatch {
                left: labels.len(),
                right: self.n,
            });
        }
        let l = labels.labels();
        let (mut ws, mut wc, mut bs, mut bc) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = self.get(i, j);
                if l[i] == l[j] {
                    ws += v;
                    wc += 1;
                } else {
                    bs += v;
                    bc += 1;
                }
            }
        }
        let within = if wc > 0 { ws / wc as f64 } else { f64::NAN };
        let between = if bc > 0 { bs / bc as f64 } else { f64::NAN };
        Ok((within, between))
    }
}

/// Accumulates same-cluster counts across ensemble members.
#[derive(Clone, Debug)]
pub struct CoAssociationAccumulator {
    n: usize,
    counts: Vec<u32>,
    members: u32,
}

impl CoAssociationAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            counts: vec![0u32; n * (n + 1) / 2],
            members: 0,
        }
    }

    /// Adds one member partition given as per-point cluster assignments.
    pub fn add(&mut self, assignments: &[usize]) -> Result<()> {
        if assignments.len() != self.n {
            return Err(CfError::LengthMismatch {
                left: assignments.len(),
                right: self.n,
            });
        }
        let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &c) in assignments.iter().enumerate() {
            buckets[c].push(i);
        }
        for bucket in &buckets {
            for (a, &i) in bucket.iter().enumerate() {
                for &j in &bucket[a..] {
                    self.counts[packed_index(self.n, i, j)] += 1;
                }
            }
        }
        self.members += 1;
        Ok(())
    }

    pub fn members(&self) -> u32 {
        self.members
    }

    /// Divides the counts by the number of members.
    pub fn finish(self) -> Result<CoAssociationMatrix> {
        if self.members == 0 {
            return Err(CfError::EmptyInput(
                "co-association accumulator has no members".into(),
            ));
        }
        let t = self.members as f64;
        let upper = self.counts.iter().map(|&c| c as f64 / t).collect();
        Ok(CoAssociationMatrix {
            n: self.n,
            upper,
        })
    }
}

/// Dense 0/1 same-cluster indicator of a single partition.
pub fn co_cluster_indicator(assignments: &[usize]) -> Array2<f64> {
    let n = assignments.len();
    Array2::from_shape_fn((n, n), |(i, j)| {
        if assignments[i] == assignments[j] {
            1.0
        } else {
            0.0
        }
    })
}

/// Averages a non-empty slice of member assignments into a co-association
/// matrix.
pub fn aggregate(members: &[Vec<usize>]) -> Result<CoAssociationMatrix> {
    let first = members
        .first()
        .ok_or_else(|| CfError::EmptyInput("no ensemble members to aggregate".into()))?;
    let mut acc = CoAssociationAccumulator::new(first.len());
    for m in members {
        acc.add(m)?;
    }
    acc.finish()
}

/// How thresholded-out entries behave under the exponential expansion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RegularizeMode {
    /// Entries below `beta2` stay exactly zero; survivors map to
    /// `exp(beta1 * p)`. Keeps the graph sparse where the ensemble saw no
    /// evidence.
    #[default]
    ZeroPreserving,
    /// Entries below `beta2` are first zeroed, then everything passes
    /// through `exp(beta1 * p)`, so erased entries become 1.
    LiteralExp,
}

/// Threshold-then-exponentiate regularization of a co-association matrix.
/// Requires `0 < beta2 < 1` and a finite nonnegative `beta1`.
pub fn regularize(
    p: &CoAssociationMatrix,
    beta1: f64,
    beta2: f64,
    mode: RegularizeMode,
) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&beta2) || beta2 == 0.0 {
        return Err(CfError::InvalidSpec(format!(
            "beta2 = {beta2} must lie strictly between 0 and 1"
        )));
    }
    if !beta1.is_finite() || beta1 < 0.0 {
        return Err(CfError::InvalidSpec(format!(
            "beta1 = {beta1} must be finite and nonnegative"
        )));
    }
    let n = p.n();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = p.get(i, j);
            let kept = if v < beta2 { 0.0 } else { v };
            let w = match mode {
                RegularizeMode::ZeroPreserving => {
                    if kept == 0.0 {
                        0.0
                    } else {
                        (beta1 * kept).exp()
                    }
                }
                RegularizeMode::LiteralExp => (beta1 * kept).exp(),
            };
            out[[i, j]] = w;
            out[[j, i]] = w;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpectralMethod {
    #[default]
    RecursiveNcut,
    Njw,
}

/// Where each member's base partition comes from.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum MemberFit {
    /// Reuse the K-means run that evaluated the last accepted expansion
    /// during growth. Cheapest; the member partition is exactly the one the
    /// quality ratio scored.
    #[default]
    FromGrowth,
    /// Refit the grown feature view with an independent K-means run using
    /// these parameters. Decouples member randomness from the growth
    /// trajectory; with a single weak restart this trades per-member quality
    /// for ensemble diversity.
    Refit(KmeansParams),
}

/// Configuration for the full pipeline. The number of base clusters per
/// member is `growth.k`; `num_final` is the cluster count of the output
/// partition.
#[derive(Clone, Debug)]
pub struct CfConfig {
    /// Ensemble size T.
    pub ensemble_size: usize,
    /// Final number of clusters.
    pub num_final: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub regularize: RegularizeMode,
    pub spectral: SpectralMethod,
    pub member_fit: MemberFit,
    pub growth: GrowthConfig,
    pub seed: u64,
}

impl Default for CfConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 100,
            num_final: 2,
            beta1: 10.0,
            beta2: 0.4,
            regularize: RegularizeMode::default(),
            spectral: SpectralMethod::default(),
            member_fit: MemberFit::default(),
            growth: GrowthConfig::default(),
            seed: 0,
        }
    }
}

impl CfConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(CfError::InvalidSpec("ensemble size must be positive".into()));
        }
        if self.num_final == 0 {
            return Err(CfError::InvalidSpec("num_final must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta2) || self.beta2 == 0.0 {
            return Err(CfError::InvalidSpec(format!(
                "beta2 = {} must lie strictly between 0 and 1",
                self.beta2
            )));
        }
        if !self.beta1.is_finite() || self.beta1 < 0.0 {
            return Err(CfError::InvalidSpec(format!(
                "beta1 = {} must be finite and nonnegative",
                self.beta1
            )));
        }
        self.growth.validate(p)
    }
}

/// Per-run diagnostics: the grown vectors in member order.
#[derive(Clone, Debug, Default)]
pub struct CfDiagnostics {
    pub vectors: Vec<ClusteringVector>,
}

/// Pipeline output.
#[derive(Clone, Debug)]
pub struct CfOutcome {
    pub labels: LabelVector,
    pub co_association: CoAssociationMatrix,
    pub diagnostics: CfDiagnostics,
}

/// Runs the whole pipeline: grow `ensemble_size` clustering vectors (each
/// from its own RNG substream, so the ensemble parallelizes without
/// affecting results), average their base partitions into a co-association
/// matrix, regularize it, and spectrally cluster the result into
/// `num_final` clusters.
pub fn run_cluster_forests(data: &DataMatrix, cfg: &CfConfig) -> Result<CfOutcome> {
    cfg.validate(data.p())?;

    let members: Vec<(ClusteringVector, Vec<usize>)> = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|l| {
            let mut rng = substream(cfg.seed, &[SALT_MEMBER, l as u64]);
            let grown = grow_clustering_vector(data, &cfg.growth, &mut rng)?;
            let assignments = match &cfg.member_fit {
                MemberFit::FromGrowth => grown.partition.assignments,
                MemberFit::Refit(params) => {
                    let view = FeatureView::new(data, grown.vector.features.clone())?;
                    let refit_seed = derive_seed(cfg.seed, &[SALT_MEMBER, l as u64, SALT_REFIT]);
                    kmeans(&view, cfg.growth.k, refit_seed, params)?.assignments
                }
            };
            Ok((grown.vector, assignments))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut acc = CoAssociationAccumulator::new(data.n());
    for (_, assignments) in &members {
        acc.add(assignments)?;
    }
    let co_association = acc.finish()?;

    let weights = regularize(&co_association, cfg.beta1, cfg.beta2, cfg.regularize)?;
    let graph = AffinityGraph::new(weights)?;
    let labels = match cfg.spectral {
        SpectralMethod::RecursiveNcut => spectral_cluster(&graph, cfg.num_final)?,
        SpectralMethod::Njw => njw_cluster(
            &graph,
            cfg.num_final,
            crate::rng::derive_seed(cfg.seed, &[SALT_SPECTRAL]),
        )?,
    };

    let diagnostics = CfDiagnostics {
        vectors: members.into_iter().map(|(v, _)| v).collect(),
    };
    Ok(CfOutcome {
        labels,
        co_association,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_gaussian_mixture, GaussianMixtureSpec};
    use crate::metrics::rho_c;
    use approx::assert_relative_eq;
    use ndarray::{array, Array1};

    fn co_assoc(members: &[Vec<usize>]) -> CoAssociationMatrix {
        aggregate(members).unwrap()
    }

    #[test]
    fn aggregation_counts_fractions() {
        let p = co_assoc(&[vec![0, 0, 1], vec![0, 1, 1], vec![0, 0, 0], vec![1, 0, 1]]);
        assert_relative_eq!(p.get(0, 0), 1.0);
        assert_relative_eq!(p.get(0, 1), 0.5); // together in members 0 and 2
        assert_relative_eq!(p.get(0, 2), 0.5); // together in members 2 and 3
        assert_relative_eq!(p.get(1, 2), 0.5);
        assert_relative_eq!(p.get(2, 1), 0.5); // symmetric access
    }

    #[test]
    fn indicator_matches_aggregate_of_one() {
        let a = vec![0usize, 1, 0, 2, 1];
        let ind = co_cluster_indicator(&a);
        let p = co_assoc(&[a.clone()]);
        for i in 0..5 {
            for j in 0..5 {
                assert_relative_eq!(ind[[i, j]], p.get(i, j));
            }
        }
    }

    #[test]
    fn aggregate_respects_block_structure() {
        // Members that always keep 0,1 together and 2,3 apart from them.
        let members = vec![vec![0, 0, 1, 1], vec![1, 1, 0, 0], vec![0, 0, 1, 0]];
        let p = co_assoc(&members);
        assert_relative_eq!(p.get(0, 1), 1.0);
        assert!(p.get(0, 2) < 0.5);
        let labels = LabelVector::new(vec![0, 0, 1, 1], 2).unwrap();
        let (within, between) = p.mean_within_between(&labels).unwrap();
        assert!(within > between);
    }

    #[test]
    fn dense_round_trip() {
        let p = co_assoc(&[vec![0, 0, 1, 2], vec![0, 1, 1, 2]]);
        let dense = p.to_dense();
        let back = CoAssociationMatrix::from_dense(&dense).unwrap();
        assert_eq!(p, back);
        assert!(CoAssociationMatrix::from_dense(&array![[0.5, 1.5], [1.5, 0.5]]).is_err());
        assert!(CoAssociationMatrix::from_dense(&array![[1.0, 0.2], [0.4, 1.0]]).is_err());
    }

    #[test]
    fn regularize_thresholds_and_expands() {
        let members = vec![vec![0, 0, 1], vec![0, 1, 1]];
        let p = co_assoc(&members); // off-diagonals 0.5, 0.5, 0.0
        let w = regularize(&p, 10.0, 0.4, RegularizeMode::ZeroPreserving).unwrap();
        assert_relative_eq!(w[[0, 0]], (10.0f64).exp());
        assert_relative_eq!(w[[0, 1]], (5.0f64).exp());
        assert_relative_eq!(w[[0, 2]], 0.0);

        let w2 = regularize(&p, 10.0, 0.6, RegularizeMode::ZeroPreserving).unwrap();
        assert_relative_eq!(w2[[0, 1]], 0.0); // 0.5 < 0.6 now erased

        let w3 = regularize(&p, 10.0, 0.6, RegularizeMode::LiteralExp).unwrap();
        assert_relative_eq!(w3[[0, 1]], 1.0); // exp(0) for erased entries
    }

    #[test]
    fn regularize_is_monotone_above_threshold() {
        let members = vec![
            vec![0, 0, 0, 1],
            vec![0, 0, 1, 1],
            vec![0, 1, 1, 1],
            vec![0, 0, 0, 0],
        ];
        let p = co_assoc(&members);
        let w = regularize(&p, 10.0, 0.4, RegularizeMode::ZeroPreserving).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        let (pi, pj) = (p.get(i, j), p.get(a, b));
                        if pi >= 0.4 && pj >= 0.4 && pi < pj {
                            assert!(w[[i, j]] < w[[a, b]]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn regularize_validates_parameters() {
        let p = co_assoc(&[vec![0, 1]]);
        assert!(regularize(&p, 10.0, 0.0, RegularizeMode::ZeroPreserving).is_err());
        assert!(regularize(&p, 10.0, 1.0, RegularizeMode::ZeroPreserving).is_err());
        assert!(regularize(&p, -1.0, 0.4, RegularizeMode::ZeroPreserving).is_err());
    }

    #[test]
    fn binary_dump_layout() {
        let p = co_assoc(&[vec![0, 0, 1]]);
        let mut buf = Vec::new();
        p.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 9 * 8);
        assert_eq!(u64::from_le_bytes(buf[..8].try_into().unwrap()), 3);
        let entry01 = f64::from_le_bytes(buf[8 + 8..8 + 16].try_into().unwrap());
        assert_relative_eq!(entry01, 1.0);
    }

    #[test]
    fn csv_dump_is_square() {
        let p = co_assoc(&[vec![0, 1, 1]]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split(',').count() == 3));
        assert_eq!(lines[0], "1,0,0");
    }

    #[test]
    fn pipeline_recovers_planted_mixture() {
        // Two informative coordinates among eight noise ones.
        let mut mu = Array1::zeros(10);
        mu[0] = 4.0;
        mu[1] = 4.0;
        let spec = GaussianMixtureSpec {
            mu,
            sigma: ndarray::Array2::eye(10),
            pi: 0.5,
        };
        let (data, truth) = sample_gaussian_mixture(&spec, 200, 31).unwrap();
        let cfg = CfConfig {
            ensemble_size: 30,
            seed: 5,
            ..CfConfig::default()
        };
        let out = run_cluster_forests(&data, &cfg).unwrap();
        let acc = rho_c(&out.labels, &truth).unwrap();
        assert!(acc > 0.9, "pipeline accuracy {acc} too low");
        assert_eq!(out.diagnostics.vectors.len(), 30);
        // Co-association block structure should line up with the truth.
        let (within, between) = out.co_association.mean_within_between(&truth).unwrap();
        assert!(within > between);
    }

    #[test]
    fn pipeline_is_deterministic() {
        let mut mu = Array1::zeros(6);
        mu[0] = 3.0;
        let spec = GaussianMixtureSpec {
            mu,
            sigma: ndarray::Array2::eye(6),
            pi: 0.5,
        };
        let (data, _) = sample_gaussian_mixture(&spec, 80, 17).unwrap();
        let cfg = CfConfig {
            ensemble_size: 12,
            seed: 99,
            ..CfConfig::default()
        };
        let a = run_cluster_forests(&data, &cfg).unwrap();
        let b = run_cluster_forests(&data, &cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.co_association, b.co_association);
    }

    #[test]
    fn refit_members_recover_mixture_deterministically() {
        use crate::base_cluster::InitMethod;
        let mut mu = Array1::zeros(6);
        mu[0] = 4.0;
        mu[1] = 4.0;
        let spec = GaussianMixtureSpec {
            mu,
            sigma: ndarray::Array2::eye(6),
            pi: 0.5,
        };
        let (data, truth) = sample_gaussian_mixture(&spec, 150, 23).unwrap();
        let cfg = CfConfig {
            ensemble_size: 20,
            member_fit: MemberFit::Refit(KmeansParams {
                restarts: 1,
                init: InitMethod::RandomPoints,
                ..KmeansParams::default()
            }),
            seed: 41,
            ..CfConfig::default()
        };
        let a = run_cluster_forests(&data, &cfg).unwrap();
        let acc = rho_c(&a.labels, &truth).unwrap();
        assert!(acc > 0.9, "refit pipeline accuracy {acc} too low");
        let b = run_cluster_forests(&data, &cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.co_association, b.co_association);
    }
}
