//! Normalized-cut spectral clustering on affinity graphs.
//!
//! The bipartition step thresholds the second eigenvector of the
//! degree-normalized operator `S = D^{-1/2} W D^{-1/2}` at zero; k-way
//! clustering splits recursively, always dividing the cluster whose best
//! bipartition has the smallest normalized-cut value. An NJW-style variant
//! (embed into the top-k eigenvectors, row-normalize, K-means) is available
//! for comparison.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2};

use crate::base_cluster::{kmeans_matrix, KmeansParams};
use crate::data::LabelVector;
use crate::eigen::top_eigenpairs;
use crate::error::{CfError, Result};

/// A weighted undirected graph with nonnegative weights and strictly
/// positive degrees (self-loops count toward the degree).
#[derive(Clone, Debug)]
pub struct AffinityGraph {
    weights: Array2<f64>,
    degrees: Vec<f64>,
}

impl AffinityGraph {
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        let (r, c) = weights.dim();
        if r != c {
            return Err(CfError::InvalidInput(format!(
                "affinity matrix is {r}x{c}, expected square"
            )));
        }
        if r == 0 {
            return Err(CfError::EmptyInput("affinity matrix is empty".into()));
        }
        let scale = weights.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for ((i, j), &w) in weights.indexed_iter() {
            if !w.is_finite() || w < 0.0 {
                return Err(CfError::InvalidInput(format!(
                    "affinity weight {w} at ({i}, {j}) is not a finite nonnegative number"
                )));
            }
            if j > i && (w - weights[[j, i]]).abs() > 1e-9 * (1.0 + scale) {
                return Err(CfError::InvalidInput(format!(
                    "affinity matrix not symmetric at ({i}, {j})"
                )));
            }
        }
        let degrees: Vec<f64> = weights.rows().into_iter().map(|r| r.sum()).collect();
        if let Some(idx) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(CfError::IsolatedVertex { index: idx });
        }
        Ok(Self { weights, degrees })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }
}

/// The symmetric normalized operator `D^{-1/2} W D^{-1/2}`.
pub fn normalized_operator(graph: &AffinityGraph) -> Array2<f64> {
    let n = graph.n();
    let inv_sqrt: Vec<f64> = graph.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| {
        graph.weights[[i, j]] * inv_sqrt[i] * inv_sqrt[j]
    })
}

/// Connected components of a weight matrix; an edge exists between distinct
/// vertices with positive weight (self-loops do not connect anything).
/// Components are listed by their smallest member, members sorted.
pub fn components(weights: ArrayView2<'_, f64>) -> Vec<Vec<usize>> {
    let n = weights.nrows();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut comp = Vec::new();
        seen[start] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for u in 0..n {
                if u != v && !seen[u] && weights[[v, u]] > 0.0 {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Normalized-cut value of a labeled partition: sum over clusters of
/// (weight leaving the cluster) / (cluster volume).
pub fn ncut_value(graph: &AffinityGraph, labels: &LabelVector) -> Result<f64> {
    if labels.len() != graph.n() {
        return Err(CfError::LengthMismatch {
            left: labels.len(),
            right: graph.n(),
        });
    }
    let k = labels.num_classes();
    let mut cut = vec![0.0f64; k];
    let mut vol = vec![0.0f64; k];
    for (i, &li) in labels.labels().iter().enumerate() {
        vol[li] += graph.degrees[i];
        for (j, &lj) in labels.labels().iter().enumerate() {
            if li != lj {
                cut[li] += graph.weights[[i, j]];
            }
        }
    }
    let mut total = 0.0;
    for c in 0..k {
        if vol[c] > 0.0 {
            total += cut[c] / vol[c];
        }
    }
    Ok(total)
}

/// Splits the vertex set in two by the sign of the second eigenvector of the
/// normalized operator. A disconnected graph splits into its first component
/// versus the rest without any eigenvector work. Degenerate one-sided sign
/// patterns fall back to a median split, then to an index split.
pub fn ncut_bipartition(graph: &AffinityGraph) -> Result<LabelVector> {
    let n = graph.n();
    if n < 2 {
        return Err(CfError::InvalidInput(
            "bipartition needs at least 2 vertices".into(),
        ));
    }
    let comps = components(graph.weights.view());
    if comps.len() > 1 {
        let mut labels = vec![1usize; n];
        for &i in &comps[0] {
            labels[i] = 0;
        }
        return LabelVector::new(labels, 2);
    }
    let s = normalized_operator(graph);
    let pairs = top_eigenpairs(s.view(), 2)?;
    let v = pairs.vector(1);
    let sides = split_by_value(v.as_slice().expect("contiguous"));
    LabelVector::new(sides, 2)
}

/// Sign split with fallbacks; guarantees both sides non-empty for n >= 2.
fn split_by_value(v: &[f64]) -> Vec<usize> {
    let n = v.len();
    let sign: Vec<usize> = v.iter().map(|&x| usize::from(x >= 0.0)).collect();
    if sign.iter().any(|&s| s == 0) && sign.iter().any(|&s| s == 1) {
        return sign;
    }
    // All of v on one side of zero: split at the median instead.
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvector entries"));
    let median = sorted[(n - 1) / 2];
    let med_split: Vec<usize> = v.iter().map(|&x| usize::from(x > median)).collect();
    if med_split.iter().any(|&s| s == 0) && med_split.iter().any(|&s| s == 1) {
        return med_split;
    }
    // Constant eigenvector: split by index.
    (0..n).map(|i| usize::from(i >= n.div_ceil(2))).collect()
}

#[derive(Clone, Debug)]
struct Split {
    left: Vec<usize>,
    right: Vec<usize>,
    ncut: f64,
}

/// Best bipartition of an induced subgraph (indices sorted, len >= 2).
fn compute_split(weights: &Array2<f64>, indices: &[usize]) -> Result<Split> {
    let m = indices.len();
    let induced = Array2::from_shape_fn((m, m), |(a, b)| weights[[indices[a], indices[b]]]);
    let comps = components(induced.view());
    if comps.len() > 1 {
        let left: Vec<usize> = comps[0].iter().map(|&a| indices[a]).collect();
        let right: Vec<usize> = comps[1..]
            .iter()
            .flatten()
            .map(|&a| indices[a])
            .collect();
        let mut right = right;
        right.sort_unstable();
        return Ok(Split {
            left,
            right,
            ncut: 0.0,
        });
    }
    let degrees: Vec<f64> = induced.rows().into_iter().map(|r| r.sum()).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let s = Array2::from_shape_fn((m, m), |(a, b)| induced[[a, b]] * inv_sqrt[a] * inv_sqrt[b]);
    let pairs = top_eigenpairs(s.view(), 2)?;
    let v = pairs.vector(1);
    let sides = split_by_value(v.as_slice().expect("contiguous"));

    let mut cut = 0.0;
    let mut vol = [0.0f64; 2];
    for a in 0..m {
        vol[sides[a]] += degrees[a];
        for b in 0..m {
            if sides[a] == 0 && sides[b] == 1 {
                cut += induced[[a, b]];
            }
        }
    }
    let ncut = cut / vol[0] + cut / vol[1];
    let left: Vec<usize> = (0..m).filter(|&a| sides[a] == 0).map(|a| indices[a]).collect();
    let right: Vec<usize> = (0..m).filter(|&a| sides[a] == 1).map(|a| indices[a]).collect();
    Ok(Split { left, right, ncut })
}

/// Recursive k-way normalized-cut clustering.
///
/// Starts from the connected components (merging the two smallest-volume
/// components while there are more than k), then repeatedly bipartitions the
/// cluster with the smallest achievable normalized-cut value until k
/// clusters exist. Output labels are ordered by each cluster's smallest
/// member index, so the result is deterministic.
pub fn spectral_cluster(graph: &AffinityGraph, k: usize) -> Result<LabelVector> {
    let n = graph.n();
    if k == 0 {
        return Err(CfError::InvalidInput("k must be positive".into()));
    }
    if k > n {
        return Err(CfError::InfeasibleK { k, distinct: n });
    }
    if k == 1 {
        return LabelVector::new(vec![0; n], 1);
    }

    let mut clusters = components(graph.weights.view());
    while clusters.len() > k {
        // Merge the two smallest-volume components; ties break toward the
        // earlier cluster in min-index order.
        let volumes: Vec<f64> = clusters
            .iter()
            .map(|cl| cl.iter().map(|&i| graph.degrees[i]).sum())
            .collect();
        let mut order: Vec<usize> = (0..clusters.len()).collect();
        order.sort_by(|&a, &b| {
            volumes[a]
                .partial_cmp(&volumes[b])
                .expect("finite volumes")
                .then(clusters[a][0].cmp(&clusters[b][0]))
        });
        let (a, b) = (order[0].min(order[1]), order[0].max(order[1]));
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
        clusters[a].sort_unstable();
        clusters.sort_by_key(|cl| cl[0]);
    }

    let mut cache: HashMap<Vec<usize>, Split> = HashMap::new();
    while clusters.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for (ci, cl) in clusters.iter().enumerate() {
            if cl.len() < 2 {
                continue;
            }
            if !cache.contains_key(cl) {
                let split = compute_split(&graph.weights, cl)?;
                cache.insert(cl.clone(), split);
            }
            let ncut = cache[cl].ncut;
            if best.map_or(true, |(bn, _)| ncut < bn) {
                best = Some((ncut, ci));
            }
        }
        let Some((_, ci)) = best else {
            // Unreachable for k <= n: some cluster always has >= 2 members.
            return Err(CfError::Numerical(
                "no cluster can be split further".into(),
            ));
        };
        let cl = clusters.remove(ci);
        let split = cache[&cl].clone();
        clusters.push(split.left);
        clusters.push(split.right);
        clusters.sort_by_key(|cl| cl[0]);
    }

    let mut labels = vec![0usize; n];
    for (c, cl) in clusters.iter().enumerate() {
        for &i in cl {
            labels[i] = c;
        }
    }
    LabelVector::new(labels, k)
}

/// NJW-style spectral clustering: embed each vertex into the top-k
/// eigenvectors of the normalized operator, normalize rows to unit length
/// (zero rows stay zero), and K-means the embedding.
pub fn njw_cluster(graph: &AffinityGraph, k: usize, seed: u64) -> Result<LabelVector> {
    let n = graph.n();
    if k == 0 {
        return Err(CfError::InvalidInput("k must be positive".into()));
    }
    if k > n {
        return Err(CfError::InfeasibleK { k, distinct: n });
    }
    let s = normalized_operator(graph);
    let pairs = top_eigenpairs(s.view(), k)?;
    let mut embed = pairs.vectors;
    for mut row in embed.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    let part = kmeans_matrix(embed.view(), k, seed, &KmeansParams::default())?;
    LabelVector::new(part.assignments, k)
}
