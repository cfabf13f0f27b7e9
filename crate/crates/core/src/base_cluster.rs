//! K-means base clustering over feature views, plus the kappa quality ratio
//! (within-cluster over between-cluster pairwise dispersion).

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::data::DataMatrix;
use crate::error::{CfError, Result};
use crate::rng::substream;

/// A multiset of column indices into a [`DataMatrix`].
///
/// Views are multisets on purpose: sampling with replacement during growth
/// can pick a column twice, and a duplicated column then counts twice in
/// every distance computation.
#[derive(Clone, Debug)]
pub struct FeatureView<'a> {
    source: &'a DataMatrix,
    columns: Vec<usize>,
}

impl<'a> FeatureView<'a> {
    pub fn new(source: &'a DataMatrix, columns: Vec<usize>) -> Result<Self> {
        if columns.is_empty() {
            return Err(CfError::InvalidInput("feature view has no columns".into()));
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= source.p()) {
            return Err(CfError::InvalidInput(format!(
                "feature index {bad} out of range for {} columns",
                source.p()
            )));
        }
        Ok(Self { source, columns })
    }

    /// View over every column, each exactly once.
    pub fn full(source: &'a DataMatrix) -> Self {
        Self {
            source,
            columns: (0..source.p()).collect(),
        }
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    /// Copies the selected columns into an n-by-d matrix, repeating
    /// duplicated columns.
    pub fn materialize(&self) -> Array2<f64> {
        let n = self.n();
        let d = self.dim();
        let mut out = Array2::<f64>::zeros((n, d));
        for (slot, &c) in self.columns.iter().enumerate() {
            out.column_mut(slot).assign(&self.source.values().column(c));
        }
        out
    }
}

/// A hard partition of n points into k clusters with cluster centers and the
/// total within-cluster squared distance (inertia).
#[derive(Clone, Debug)]
pub struct Partition {
    pub assignments: Vec<usize>,
    pub k: usize,
    pub centers: Array2<f64>,
    pub inertia: f64,
}

/// How initial centers are chosen before Lloyd iterations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitMethod {
    /// K-means++: first center uniform, later centers proportional to
    /// squared distance from the nearest chosen center.
    #[default]
    PlusPlus,
    /// Forgy seeding: k distinct data points drawn uniformly.
    RandomPoints,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KmeansParams {
    pub max_iter: usize,
    /// Independent initializations; the lowest-inertia run wins.
    pub restarts: usize,
    pub init: InitMethod,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            max_iter: 100,
            restarts: 5,
            init: InitMethod::PlusPlus,
        }
    }
}

/// Row-major flat matrix used by the inner loops.
struct Flat {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Flat {
    fn from_view(view: ArrayView2<'_, f64>) -> Self {
        let (n, d) = view.dim();
        let mut data = Vec::with_capacity(n * d);
        for row in view.rows() {
            data.extend(row.iter());
        }
        Self { data, n, d }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn count_distinct_rows(flat: &Flat) -> usize {
    let mut seen = std::collections::HashSet::new();
    for i in 0..flat.n {
        let key: Vec<u64> = flat.row(i)
            .iter()
            .map(|&v| if v == 0.0 { 0u64 } else { v.to_bits() })
            .collect();
        seen.insert(key);
    }
    seen.len()
}

fn seed_centers(flat: &Flat, k: usize, rng: &mut impl Rng, init: InitMethod) -> Vec<usize> {
    match init {
        InitMethod::PlusPlus => seed_centers_plus_plus(flat, k, rng),
        InitMethod::RandomPoints => rand::seq::index::sample(rng, flat.n, k).into_vec(),
    }
}

/// K-means++ seeding: first center uniform, later centers proportional to
/// squared distance from the nearest chosen center.
fn seed_centers_plus_plus(flat: &Flat, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = flat.n;
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(flat.row(i), flat.row(first))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut cum = 0.0;
            let mut picked = None;
            let mut last_positive = first;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    last_positive = i;
                    cum += w;
                    if u < cum {
                        picked = Some(i);
                        break;
                    }
                }
            }
            picked.unwrap_or(last_positive)
        } else {
            // Every point coincides with a chosen center; grab the first
            // index not yet chosen so the caller still gets k seeds.
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(first)
        };
        chosen.push(next);
        for i in 0..n {
            let d = dist2(flat.row(i), flat.row(next));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    chosen
}

fn assign_points(flat: &Flat, centers: &[f64], k: usize, out: &mut [usize]) {
    let d = flat.d;
    for i in 0..flat.n {
        let row = flat.row(i);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let dd = dist2(row, &centers[c * d..(c + 1) * d]);
            if dd < best_d {
                best_d = dd;
                best = c;
            }
        }
        out[i] = best;
    }
}

fn recompute_means(flat: &Flat, assignments: &[usize], k: usize, centers: &mut [f64]) {
    let d = flat.d;
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0f64; k * d];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        let row = flat.row(i);
        for (s, &v) in sums[c * d..(c + 1) * d].iter_mut().zip(row) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for j in 0..d {
                centers[c * d + j] = sums[c * d + j] / counts[c] as f64;
            }
        }
        // Empty clusters keep their previous center; the repair step below
        // reseeds them before the next assignment round.
    }
}

/// Reseeds every empty cluster at the point farthest from its own center,
/// never stealing the sole member of another cluster.
fn repair_empty(flat: &Flat, centers: &mut [f64], assignments: &mut [usize], k: usize) {
    let d = flat.d;
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignments.iter() {
            counts[c] += 1;
        }
        let Some(empty) = (0..k).find(|&c| counts[c] == 0) else {
            return;
        };
        let mut best: Option<(f64, usize)> = None;
        for i in 0..flat.n {
            if counts[assignments[i]] < 2 {
                continue;
            }
            let dd = dist2(flat.row(i), &centers[assignments[i] * d..(assignments[i] + 1) * d]);
            if best.map_or(true, |(bd, _)| dd > bd) {
                best = Some((dd, i));
            }
        }
        let (_, idx) = best.expect("a donor cluster with >= 2 members exists when n >= k");
        centers[empty * d..(empty + 1) * d].copy_from_slice(flat.row(idx));
        assignments[idx] = empty;
    }
}

fn inertia_of(flat: &Flat, centers: &[f64], assignments: &[usize]) -> f64 {
    let d = flat.d;
    assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| dist2(flat.row(i), &centers[c * d..(c + 1) * d]))
        .sum()
}

struct LloydOutcome {
    assignments: Vec<usize>,
    centers: Vec<f64>,
    inertia: f64,
    /// Inertia after each update/assign round; nonincreasing.
    #[cfg_attr(not(test), allow(dead_code))]
    trace: Vec<f64>,
}

fn lloyd(
    flat: &Flat,
    k: usize,
    rng: &mut impl Rng,
    max_iter: usize,
    init: InitMethod,
) -> LloydOutcome {
    let d = flat.d;
    let seeds = seed_centers(flat, k, rng, init);
    let mut centers = vec![0.0f64; k * d];
    for (c, &i) in seeds.iter().enumerate() {
        centers[c * d..(c + 1) * d].copy_from_slice(flat.row(i));
    }
    let mut assignments = vec![0usize; flat.n];
    assign_points(flat, &centers, k, &mut assignments);
    repair_empty(flat, &mut centers, &mut assignments, k);

    let mut trace = Vec::new();
    let mut next = vec![0usize; flat.n];
    for _ in 0..max_iter {
        recompute_means(flat, &assignments, k, &mut centers);
        assign_points(flat, &centers, k, &mut next);
        repair_empty(flat, &mut centers, &mut next, k);
        trace.push(inertia_of(flat, &centers, &next));
        if next == assignments {
            break;
        }
        std::mem::swap(&mut assignments, &mut next);
    }
    recompute_means(flat, &assignments, k, &mut centers);
    let inertia = inertia_of(flat, &centers, &assignments);
    LloydOutcome {
        assignments,
        centers,
        inertia,
        trace,
    }
}

fn kmeans_flat(flat: &Flat, k: usize, seed: u64, params: &KmeansParams) -> Result<Partition> {
    if k == 0 {
        return Err(CfError::InvalidInput("k must be positive".into()));
    }
    let distinct = count_distinct_rows(flat);
    if distinct < k {
        return Err(CfError::InfeasibleK { k, distinct });
    }
    let restarts = params.restarts.max(1);
    let mut best: Option<LloydOutcome> = None;
    for r in 0..restarts {
        let mut rng = substream(seed, &[r as u64]);
        let run = lloyd(flat, k, &mut rng, params.max_iter.max(1), params.init);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");
    let centers =
        Array2::from_shape_vec((k, flat.d), best.centers).expect("center buffer is k*d");
    Ok(Partition {
        assignments: best.assignments,
        k,
        centers,
        inertia: best.inertia,
    })
}

/// Runs K-means with the configured seeding and empty-cluster repair on a
/// feature view. Fails with [`CfError::InfeasibleK`] when the view has fewer
/// than `k` distinct rows. Deterministic in `(seed, params)`.
pub fn kmeans(view: &FeatureView<'_>, k: usize, seed: u64, params: &KmeansParams) -> Result<Partition> {
    let materialized = view.materialize();
    kmeans_matrix(materialized.view(), k, seed, params)
}

/// [`kmeans`] over an already-materialized matrix.
pub fn kmeans_matrix(
    data: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    params: &KmeansParams,
) -> Result<Partition> {
    let flat = Flat::from_view(data);
    kmeans_flat(&flat, k, seed, params)
}

#[cfg(test)]
pub(crate) fn lloyd_trace(data: ArrayView2<'_, f64>, k: usize, seed: u64) -> Vec<f64> {
    let flat = Flat::from_view(data);
    let mut rng = substream(seed, &[0]);
    lloyd(&flat, k, &mut rng, 100, InitMethod::PlusPlus).trace
}

/// Kappa: total within-cluster pairwise squared distance over total
/// between-cluster pairwise squared distance (unordered pairs). Lower means
/// tighter, better-separated clusters. Returns positive infinity when the
/// between-cluster dispersion vanishes.
pub fn kappa(view: &FeatureView<'_>, partition: &Partition) -> f64 {
    kappa_matrix(view.materialize().view(), partition)
}

/// [`kappa`] over an already-materialized matrix, using the centroid
/// identity: the pairwise sums reduce to cluster-size-weighted moments, so
/// the whole computation is O(n d) instead of O(n^2 d).
pub fn kappa_matrix(data: ArrayView2<'_, f64>, partition: &Partition) -> f64 {
    let (n, d) = data.dim();
    let k = partition.k;
    assert_eq!(partition.assignments.len(), n, "partition covers all rows");

    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0f64; k * d];
    for (i, &c) in partition.assignments.iter().enumerate() {
        counts[c] += 1;
        for (s, &v) in sums[c * d..(c + 1) * d].iter_mut().zip(data.row(i)) {
            *s += v;
        }
    }
    let mut grand = vec![0.0f64; d];
    for c in 0..k {
        for j in 0..d {
            grand[j] += sums[c * d + j];
        }
    }
    for g in grand.iter_mut() {
        *g /= n as f64;
    }

    let mut within = 0.0;
    let mut total = 0.0;
    for (i, &c) in partition.assignments.iter().enumerate() {
        let row = data.row(i);
        if counts[c] > 0 {
            let mut dd = 0.0;
            for (j, &v) in row.iter().enumerate() {
                let m = sums[c * d + j] / counts[c] as f64;
                dd += (v - m) * (v - m);
            }
            within += counts[c] as f64 * dd;
        }
        let mut dg = 0.0;
        for (j, &v) in row.iter().enumerate() {
            dg += (v - grand[j]) * (v - grand[j]);
        }
        total += dg;
    }
    let total = total * n as f64;
    let between = total - within;
    if between <= 1e-14 * total.max(f64::MIN_POSITIVE) {
        return f64::INFINITY;
    }
    within / between
}

/// Reference kappa: explicit O(n^2) loop over unordered point pairs.
/// Kept as the independent check for [`kappa_matrix`].
pub fn kappa_pairwise(data: ArrayView2<'_, f64>, partition: &Partition) -> f64 {
    let n = data.nrows();
    let mut within = 0.0;
    let mut between = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dd: f64 = data
                .row(i)
                .iter()
                .zip(data.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if partition.assignments[i] == partition.assignments[j] {
                within += dd;
            } else {
                between += dd;
            }
        }
    }
    if between == 0.0 {
        return f64::INFINITY;
    }
    within / between
}
