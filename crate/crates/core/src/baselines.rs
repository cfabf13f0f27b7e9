//! Reference ensemble baselines: evidence accumulation with single-linkage
//! extraction, random-projection ensembles, and bagged K-means with label
//! matching and majority voting.

use ndarray::Array2;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::base_cluster::{kmeans_matrix, KmeansParams};
use crate::data::{DataMatrix, LabelVector};
use crate::ensemble::{CoAssociationAccumulator, CoAssociationMatrix};
use crate::error::{CfError, Result};
use crate::metrics::{contingency, max_assignment};
use crate::rng::substream;

const SALT_EA: u64 = 0x4556_4143;
const SALT_RP: u64 = 0x5250_524f;
const SALT_BAG: u64 = 0x4241_4747;

/// When to stop merging during single linkage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinkageStop {
    /// Merge while the best similarity is at least this threshold.
    Threshold(f64),
    /// Merge until exactly this many clusters remain.
    TargetK(usize),
}

#[derive(Clone, Debug)]
pub struct SingleLinkageOutcome {
    pub labels: LabelVector,
    /// Set when a threshold stop produced all-singletons or one cluster.
    pub degenerate: bool,
}

/// Single-linkage agglomeration on a similarity matrix.
///
/// Implemented through a maximum spanning tree: cutting the MST below a
/// similarity threshold yields exactly the single-linkage clusters at that
/// threshold, and keeping the top `n - k` edges yields the k-cluster
/// partition. Ties break deterministically by edge endpoints. Labels are
/// assigned by first appearance in point order.
pub fn single_linkage(
    similarity: &CoAssociationMatrix,
    stop: LinkageStop,
) -> Result<SingleLinkageOutcome> {
    let n = similarity.n();
    if let LinkageStop::TargetK(k) = stop {
        if k == 0 || k > n {
            return Err(CfError::InvalidInput(format!(
                "target cluster count {k} outside 1..={n}"
            )));
        }
    }

    // Prim's algorithm on the complete similarity graph.
    let mut in_tree = vec![false; n];
    let mut best_sim = vec![f64::NEG_INFINITY; n];
    let mut best_from = vec![0usize; n];
    in_tree[0] = true;
    for j in 1..n {
        best_sim[j] = similarity.get(0, j);
    }
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut pick = None;
        for j in 0..n {
            if !in_tree[j] && pick.is_none_or(|p: usize| best_sim[j] > best_sim[p]) {
                pick = Some(j);
            }
        }
        let j = pick.expect("an out-of-tree vertex remains");
        let (a, b) = (best_from[j].min(j), best_from[j].max(j));
        edges.push((best_sim[j], a, b));
        in_tree[j] = true;
        for u in 0..n {
            if !in_tree[u] && similarity.get(j, u) > best_sim[u] {
                best_sim[u] = similarity.get(j, u);
                best_from[u] = j;
            }
        }
    }
    edges.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .expect("finite similarities")
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut clusters = n;
    for &(sim, a, b) in &edges {
        match stop {
            LinkageStop::Threshold(t) => {
                if sim < t {
                    break;
                }
            }
            LinkageStop::TargetK(k) => {
                if clusters <= k {
                    break;
                }
            }
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            clusters -= 1;
        }
    }

    let mut relabel: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let root = find(&mut parent, i);
        let next = relabel.len();
        labels.push(*relabel.entry(root).or_insert(next));
    }
    let num_classes = relabel.len();
    let degenerate = matches!(stop, LinkageStop::Threshold(_))
        && (num_classes == 1 || num_classes == n);
    Ok(SingleLinkageOutcome {
        labels: LabelVector::new(labels, num_classes)?,
        degenerate,
    })
}

/// Shared configuration for the baselines.
#[derive(Clone, Debug)]
pub struct BaselineConfig {
    /// Ensemble size T.
    pub ensemble_size: usize,
    /// Clusters per base clustering.
    pub num_base: usize,
    /// Final number of clusters.
    pub num_final: usize,
    /// Similarity threshold for evidence accumulation.
    pub threshold: f64,
    /// Projection dimension for the random-projection ensemble.
    pub dim: usize,
    pub seed: u64,
    /// Base K-means settings. One restart by default: member diversity is
    /// the whole point of these ensembles.
    pub kmeans: KmeansParams,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 100,
            num_base: 2,
            num_final: 2,
            threshold: 0.5,
            dim: 5,
            seed: 0,
            kmeans: KmeansParams {
                restarts: 1,
                ..KmeansParams::default()
            },
        }
    }
}

impl BaselineConfig {
    fn validate_common(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(CfError::InvalidSpec("ensemble size must be positive".into()));
        }
        if self.num_base < 2 {
            return Err(CfError::InvalidSpec("num_base must be at least 2".into()));
        }
        if self.num_final == 0 {
            return Err(CfError::InvalidSpec("num_final must be positive".into()));
        }
        Ok(())
    }
}

fn accumulate_members(members: Vec<Vec<usize>>, n: usize) -> Result<CoAssociationMatrix> {
    let mut acc = CoAssociationAccumulator::new(n);
    for m in &members {
        acc.add(m)?;
    }
    acc.finish()
}

/// Evidence accumulation: T runs of K-means from random starts on the full
/// feature space, averaged into a co-association matrix, clustered by
/// single linkage at `threshold`. A degenerate cut (one cluster, or at
/// least half the points as singleton-ish clusters) falls back to the
/// `num_final`-cluster linkage partition.
pub fn evidence_accumulation(data: &DataMatrix, cfg: &BaselineConfig) -> Result<LabelVector> {
    cfg.validate_common()?;
    if !(cfg.threshold > 0.0 && cfg.threshold < 1.0) {
        return Err(CfError::InvalidSpec(format!(
            "threshold = {} must lie strictly between 0 and 1",
            cfg.threshold
        )));
    }
    let members: Vec<Vec<usize>> = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|l| {
            let mut rng = substream(cfg.seed, &[SALT_EA, l as u64]);
            let part = kmeans_matrix(
                data.values().view(),
                cfg.num_base,
                rng.next_u64(),
                &cfg.kmeans,
            )?;
            Ok(part.assignments)
        })
        .collect::<Result<Vec<_>>>()?;
    let co = accumulate_members(members, data.n())?;
    let cut = single_linkage(&co, LinkageStop::Threshold(cfg.threshold))?;
    let k = cut.labels.num_classes();
    if cut.degenerate || k >= data.n() / 2 {
        let fallback = single_linkage(&co, LinkageStop::TargetK(cfg.num_final))?;
        return Ok(fallback.labels);
    }
    Ok(cut.labels)
}

/// Random-projection ensemble: each member projects the data through an
/// independent Gaussian matrix (entries N(0, 1/dim)) down to `dim`
/// coordinates and K-means the result; the co-association matrix is cut to
/// `num_final` clusters by single linkage.
pub fn random_projection_ensemble(data: &DataMatrix, cfg: &BaselineConfig) -> Result<LabelVector> {
    cfg.validate_common()?;
    if cfg.dim == 0 {
        return Err(CfError::InvalidSpec("projection dimension must be positive".into()));
    }
    let p = data.p();
    let scale = 1.0 / (cfg.dim as f64).sqrt();
    let members: Vec<Vec<usize>> = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|l| {
            let mut rng = substream(cfg.seed, &[SALT_RP, l as u64]);
            let mut projection = Array2::<f64>::zeros((p, cfg.dim));
            for r in 0..p {
                for c in 0..cfg.dim {
                    projection[[r, c]] = rng.sample::<f64, _>(StandardNormal) * scale;
                }
            }
            let projected = data.values().dot(&projection);
            let part = kmeans_matrix(
                projected.view(),
                cfg.num_base,
                rng.next_u64(),
                &cfg.kmeans,
            )?;
            Ok(part.assignments)
        })
        .collect::<Result<Vec<_>>>()?;
    let co = accumulate_members(members, data.n())?;
    Ok(single_linkage(&co, LinkageStop::TargetK(cfg.num_final))?.labels)
}

/// Bagged K-means: each member clusters a bootstrap resample, labels are
/// extended to every point by nearest center, matched to the first member
/// by the best label permutation, and combined by majority vote (ties go to
/// the lowest label).
pub fn bagged_clustering(data: &DataMatrix, cfg: &BaselineConfig) -> Result<LabelVector> {
    cfg.validate_common()?;
    let n = data.n();
    let p = data.p();
    let k = cfg.num_base;

    let extended: Vec<Vec<usize>> = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|l| {
            let mut rng = substream(cfg.seed, &[SALT_BAG, l as u64]);
            let mut resample = Array2::<f64>::zeros((n, p));
            for i in 0..n {
                let src = rng.random_range(0..n);
                resample.row_mut(i).assign(&data.values().row(src));
            }
            let part = kmeans_matrix(resample.view(), k, rng.next_u64(), &cfg.kmeans)?;
            // Assign every original point to its nearest bootstrap center.
            let mut labels = vec![0usize; n];
            for i in 0..n {
                let row = data.values().row(i);
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for c in 0..k {
                    let d: f64 = row
                        .iter()
                        .zip(part.centers.row(c).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                labels[i] = best;
            }
            Ok(labels)
        })
        .collect::<Result<Vec<_>>>()?;

    // Match every member's labels to the first member's.
    let reference = LabelVector::new(extended[0].clone(), k)?;
    let mut votes = vec![vec![0u32; k]; n];
    for member in &extended {
        let lv = LabelVector::new(member.clone(), k)?;
        let table = contingency(&reference, &lv)?;
        // Rows are reference labels, columns this member's; invert the
        // matching to rename member labels.
        let (row_match, _) = max_assignment(table.view());
        let mut rename = vec![0usize; k];
        for (r, m) in row_match.iter().enumerate() {
            if let Some(c) = m {
                rename[*c] = r;
            }
        }
        for (i, &l) in member.iter().enumerate() {
            votes[i][rename[l]] += 1;
        }
    }
    let labels: Vec<usize> = votes
        .iter()
        .map(|v| {
            let mut best = 0usize;
            for (c, &count) in v.iter().enumerate() {
                if count > v[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    LabelVector::new(labels, k)
}
