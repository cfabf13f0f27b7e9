//! Data matrices, label vectors, CSV loading, synthetic Gaussian mixtures,
//! and per-feature quality profiling.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::base_cluster::{self, FeatureView, KmeansParams};
use crate::error::{CfError, Result};
use crate::rng::{derive_seed, substream};

/// Substream tag for donor-strength sampling in [`feature_profile`].
const SALT_PROFILE_DONOR: u64 = 0x5052_4f46;

/// How a column should be interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    /// Level-coded categorical feature; values are integers in
    /// `0..num_levels`.
    Categorical { num_levels: usize },
}

/// An n-by-p numeric matrix with per-column type information.
///
/// Categorical columns are stored as level codes (0, 1, 2, ...); the codes
/// are assigned by first appearance during CSV loading. All values are
/// finite, and the matrix always has at least two rows and one column.
#[derive(Clone, Debug)]
pub struct DataMatrix {
    values: Array2<f64>,
    kinds: Vec<FeatureKind>,
    names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(
        values: Array2<f64>,
        kinds: Vec<FeatureKind>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, p) = values.dim();
        if n < 2 {
            return Err(CfError::InvalidInput(format!(
                "data matrix needs at least 2 rows, got {n}"
            )));
        }
        if p == 0 {
            return Err(CfError::InvalidInput("data matrix has no columns".into()));
        }
        if kinds.len() != p {
            return Err(CfError::LengthMismatch {
                left: kinds.len(),
                right: p,
            });
        }
        if let Some(names) = &names {
            if names.len() != p {
                return Err(CfError::LengthMismatch {
                    left: names.len(),
                    right: p,
                });
            }
        }
        for ((i, j), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(CfError::InvalidInput(format!(
                    "non-finite value {v} at row {i}, column {j}"
                )));
            }
        }
        for (j, kind) in kinds.iter().enumerate() {
            if let FeatureKind::Categorical { num_levels } = kind {
                if *num_levels == 0 {
                    return Err(CfError::InvalidInput(format!(
                        "categorical column {j} declares zero levels"
                    )));
                }
                for (i, &v) in values.column(j).iter().enumerate() {
                    if v.fract() != 0.0 || v < 0.0 || v >= *num_levels as f64 {
                        return Err(CfError::InvalidInput(format!(
                            "categorical column {j} has non-code value {v} at row {i}"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            values,
            kinds,
            names,
        })
    }

    /// Builds an all-numeric matrix.
    pub fn from_numeric(values: Array2<f64>) -> Result<Self> {
        let p = values.ncols();
        Self::new(values, vec![FeatureKind::Numeric; p], None)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }
}

/// Cluster or class labels for n points, with labels in `0..num_classes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(CfError::EmptyInput("label vector has no entries".into()));
        }
        if num_classes == 0 {
            return Err(CfError::InvalidInput("num_classes must be positive".into()));
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= num_classes)
        {
            return Err(CfError::InvalidInput(format!(
                "label {l} at position {i} exceeds num_classes {num_classes}"
            )));
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    /// Infers `num_classes` as `max(labels) + 1`.
    pub fn from_assignments(labels: Vec<usize>) -> Result<Self> {
        let max = labels.iter().copied().max().unwrap_or(0);
        Self::new(labels, max + 1)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Points per class, indexed by label.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Header handling for CSV loading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HeaderMode {
    /// Treat the first row as a header iff some column's first cell does not
    /// parse as a number while every later cell in that column does.
    #[default]
    Auto,
    Present,
    Absent,
}

/// Selects the label column, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    /// Requires a header row.
    Name(String),
    Last,
}

/// Forces the interpretation of a column (by post-label-extraction feature
/// index is *not* used; indices refer to raw CSV columns).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindOverride {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    pub header: HeaderMode,
    pub label: Option<LabelColumn>,
    /// Map from raw CSV column index to a forced kind.
    pub overrides: Vec<(usize, KindOverride)>,
}

fn parses_f64(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

fn detect_header(rows: &[Vec<String>]) -> bool {
    if rows.len() < 2 {
        return false;
    }
    let width = rows[0].len();
    (0..width).any(|c| {
        !parses_f64(&rows[0][c]) && rows[1..].iter().all(|r| parses_f64(&r[c]))
    })
}

/// Loads a CSV file into a data matrix plus an optional label vector.
///
/// Columns auto-detect as numeric when every cell parses as a float and as
/// level-coded categorical otherwise; `opts.overrides` forces either
/// interpretation per raw column. Missing-value markers (`?` or an empty
/// cell) are rejected with their coordinates. Label values are coded by
/// first appearance.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<(DataMatrix, Option<LabelVector>)> {
    let file = File::open(path.as_ref())?;
    load_csv_reader(file, opts)
}

pub fn load_csv_reader<R: std::io::Read>(
    reader: R,
    opts: &CsvOptions,
) -> Result<(DataMatrix, Option<LabelVector>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CfError::MalformedInput {
            row: idx,
            col: 0,
            reason: e.to_string(),
        })?;
        rows.push(record.iter().map(str::to_owned).collect());
    }
    if rows.is_empty() {
        return Err(CfError::EmptyInput("CSV contains no rows".into()));
    }

    let has_header = match opts.header {
        HeaderMode::Auto => detect_header(&rows),
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
    };
    let header: Option<Vec<String>> = if has_header {
        Some(rows.remove(0))
    } else {
        None
    };
    if rows.is_empty() {
        return Err(CfError::EmptyInput("CSV contains only a header row".into()));
    }
    let width = rows[0].len();

    let label_idx: Option<usize> = match &opts.label {
        None => None,
        Some(LabelColumn::Index(i)) => {
            if *i >= width {
                return Err(CfError::InvalidInput(format!(
                    "label column index {i} out of range for {width} columns"
                )));
            }
            Some(*i)
        }
        Some(LabelColumn::Name(name)) => {
            let header = header.as_ref().ok_or_else(|| {
                CfError::InvalidInput("label column by name requires a header row".into())
            })?;
            Some(header.iter().position(|h| h == name).ok_or_else(|| {
                CfError::InvalidInput(format!("no column named {name:?} in header"))
            })?)
        }
        Some(LabelColumn::Last) => Some(width - 1),
    };
    if label_idx.is_some() && width == 1 {
        return Err(CfError::InvalidInput(
            "no feature columns remain after extracting the label".into(),
        ));
    }

    // Reject missing-value markers up front so every later step can assume
    // complete cells. Coordinates are data-row based (header excluded).
    for (r, row) in rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if cell.is_empty() || cell == "?" {
                return Err(CfError::MalformedInput {
                    row: r,
                    col: c,
                    reason: "missing value".into(),
                });
            }
        }
    }

    let labels = match label_idx {
        None => None,
        Some(li) => {
            let mut codes: HashMap<String, usize> = HashMap::new();
            let mut coded = Vec::with_capacity(rows.len());
            for row in &rows {
                let next = codes.len();
                let code = *codes.entry(row[li].clone()).or_insert(next);
                coded.push(code);
            }
            let num_classes = codes.len();
            Some(LabelVector::new(coded, num_classes)?)
        }
    };

    let feature_cols: Vec<usize> = (0..width).filter(|c| Some(*c) != label_idx).collect();
    let overrides: HashMap<usize, KindOverride> = opts.overrides.iter().copied().collect();

    let n = rows.len();
    let p = feature_cols.len();
    let mut values = Array2::<f64>::zeros((n, p));
    let mut kinds = Vec::with_capacity(p);
    for (out_j, &c) in feature_cols.iter().enumerate() {
        let forced = overrides.get(&c).copied();
        let all_numeric = rows.iter().all(|row| parses_f64(&row[c]));
        let as_numeric = match forced {
            Some(KindOverride::Numeric) => {
                if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| !parses_f64(&row[c]))
                {
                    return Err(CfError::MalformedInput {
                        row: r,
                        col: c,
                        reason: format!("cannot parse {:?} as a number", row[c]),
                    });
                }
                true
            }
            Some(KindOverride::Categorical) => false,
            None => all_numeric,
        };
        if as_numeric {
            for (r, row) in rows.iter().enumerate() {
                let v: f64 = row[c].parse().expect("checked numeric");
                if !v.is_finite() {
                    return Err(CfError::MalformedInput {
                        row: r,
                        col: c,
                        reason: format!("non-finite numeric value {:?}", row[c]),
                    });
                }
                values[[r, out_j]] = v;
            }
            kinds.push(FeatureKind::Numeric);
        } else {
            let mut codes: HashMap<String, usize> = HashMap::new();
            for (r, row) in rows.iter().enumerate() {
                let next = codes.len();
                let code = *codes.entry(row[c].clone()).or_insert(next);
                values[[r, out_j]] = code as f64;
            }
            kinds.push(FeatureKind::Categorical {
                num_levels: codes.len(),
            });
        }
    }

    let names = header.map(|h| {
        feature_cols
            .iter()
            .map(|&c| h[c].clone())
            .collect::<Vec<_>>()
    });
    let matrix = DataMatrix::new(values, kinds, names)?;
    Ok((matrix, labels))
}

/// Z-scores every numeric column (population standard deviation); constant
/// numeric columns become all zeros. Categorical columns pass through
/// unchanged. Applying the transform twice is a fixed point up to roundoff.
pub fn standardize(data: &DataMatrix) -> DataMatrix {
    let mut values = data.values.clone();
    let n = data.n() as f64;
    for (j, kind) in data.kinds.iter().enumerate() {
        if *kind != FeatureKind::Numeric {
            continue;
        }
        let mut col = values.column_mut(j);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd > 0.0 {
            col.mapv_inplace(|v| (v - mean) / sd);
        } else {
            col.fill(0.0);
        }
    }
    DataMatrix {
        values,
        kinds: data.kinds.clone(),
        names: data.names.clone(),
    }
}

/// Two-component symmetric Gaussian mixture: with probability `pi` a point
/// is drawn from N(mu, sigma), otherwise from N(-mu, sigma).
#[derive(Clone, Debug)]
pub struct GaussianMixtureSpec {
    pub mu: Array1<f64>,
    pub sigma: Array2<f64>,
    pub pi: f64,
}

impl GaussianMixtureSpec {
    pub fn validate(&self) -> Result<()> {
        let p = self.mu.len();
        if p == 0 {
            return Err(CfError::InvalidSpec("mean vector is empty".into()));
        }
        if self.sigma.dim() != (p, p) {
            return Err(CfError::InvalidSpec(format!(
                "covariance shape {:?} does not match mean length {p}",
                self.sigma.dim()
            )));
        }
        if !(0.0..=1.0).contains(&self.pi) {
            return Err(CfError::InvalidSpec(format!(
                "mixture weight {} outside [0, 1]",
                self.pi
            )));
        }
        let scale = self
            .sigma
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        for ((i, j), &v) in self.sigma.indexed_iter() {
            if !v.is_finite() {
                return Err(CfError::InvalidSpec(format!(
                    "non-finite covariance entry at ({i}, {j})"
                )));
            }
            if (v - self.sigma[[j, i]]).abs() > 1e-9 * (1.0 + scale) {
                return Err(CfError::InvalidSpec(format!(
                    "covariance not symmetric at ({i}, {j})"
                )));
            }
        }
        Ok(())
    }

    fn is_identity(&self) -> bool {
        self.sigma
            .indexed_iter()
            .all(|((i, j), &v)| v == if i == j { 1.0 } else { 0.0 })
    }
}

/// Draws `n` points from the mixture. Labels record the component: 1 for the
/// `+mu` component, 0 for `-mu`. Requires a positive-definite covariance.
pub fn sample_gaussian_mixture(
    spec: &GaussianMixtureSpec,
    n: usize,
    seed: u64,
) -> Result<(DataMatrix, LabelVector)> {
    spec.validate()?;
    let p = spec.mu.len();
    let identity = spec.is_identity();
    let chol: Option<nalgebra::DMatrix<f64>> = if identity {
        None
    } else {
        let dm = nalgebra::DMatrix::from_fn(p, p, |r, c| spec.sigma[[r, c]]);
        let chol = nalgebra::Cholesky::new(dm).ok_or_else(|| {
            CfError::InvalidSpec("covariance is not positive definite".into())
        })?;
        Some(chol.unpack())
    };

    let mut rng = substream(seed, &[]);
    let mut values = Array2::<f64>::zeros((n, p));
    let mut labels = Vec::with_capacity(n);
    let mut z = vec![0.0f64; p];
    for i in 0..n {
        let plus = rng.random_bool(spec.pi);
        let sign = if plus { 1.0 } else { -1.0 };
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        match &chol {
            None => {
                for j in 0..p {
                    values[[i, j]] = sign * spec.mu[j] + z[j];
                }
            }
            Some(l) => {
                // x = sign * mu + L z with L lower-triangular.
                for j in 0..p {
                    let mut acc = 0.0;
                    for (m, zm) in z.iter().enumerate().take(j + 1) {
                        acc += l[(j, m)] * zm;
                    }
                    values[[i, j]] = sign * spec.mu[j] + acc;
                }
            }
        }
        labels.push(plus as usize);
    }
    let matrix = DataMatrix::from_numeric(values)?;
    let labels = LabelVector::new(labels, 2)?;
    Ok((matrix, labels))
}

/// Mixture with 3 zero-mean coordinates followed by means 1..=100, and a
/// dense random covariance: unit diagonal, off-diagonal entries uniform on
/// [0, 0.5] symmetrized, then shifted by the smallest multiple of the
/// identity that makes the minimum eigenvalue at least 0.01.
pub fn preset_g1(seed: u64) -> Result<GaussianMixtureSpec> {
    let p = 103;
    let mut mu = Array1::<f64>::zeros(p);
    for j in 3..p {
        mu[j] = (j - 2) as f64;
    }
    let mut rng = substream(seed, &[]);
    let mut sigma = Array2::<f64>::eye(p);
    for i in 0..p {
        for j in (i + 1)..p {
            let v = rng.random::<f64>() * 0.5;
            sigma[[i, j]] = v;
            sigma[[j, i]] = v;
        }
    }
    let eigen = crate::eigen::symmetric_eigen(sigma.view())?;
    let min_eig = eigen.values.last().copied().unwrap_or(0.0);
    let shift = (0.01 - min_eig).max(0.0);
    for i in 0..p {
        sigma[[i, i]] += shift;
    }
    Ok(GaussianMixtureSpec {
        mu,
        sigma,
        pi: 0.5,
    })
}

/// Mixture with 100 zero-mean coordinates followed by 20 means drawn
/// uniformly from [0, 1); identity covariance.
pub fn preset_g2(seed: u64) -> GaussianMixtureSpec {
    let p = 120;
    let mut mu = Array1::<f64>::zeros(p);
    let mut rng = substream(seed, &[]);
    for j in 100..p {
        mu[j] = rng.random::<f64>();
    }
    GaussianMixtureSpec {
        mu,
        sigma: Array2::eye(p),
        pi: 0.5,
    }
}

/// Mixture with 1000 zero-mean coordinates followed by means 1..=20;
/// identity covariance.
pub fn preset_g3() -> GaussianMixtureSpec {
    let p = 1020;
    let mut mu = Array1::<f64>::zeros(p);
    for j in 1000..p {
        mu[j] = (j - 999) as f64;
    }
    GaussianMixtureSpec {
        mu,
        sigma: Array2::eye(p),
        pi: 0.5,
    }
}

fn distinct_column_values(data: &DataMatrix, j: usize) -> usize {
    let mut seen = std::collections::HashSet::new();
    for &v in data.values.column(j) {
        let key = if v == 0.0 { 0u64 } else { v.to_bits() };
        seen.insert(key);
    }
    seen.len()
}

/// Scores every feature by the cluster-quality ratio of a K-means run on
/// that single column: lower is stronger. Categorical features with fewer
/// than `k` levels (and any column with fewer than `k` distinct categorical
/// values) borrow a strength sampled uniformly from the finite strengths of
/// the other features; numeric columns with fewer than `k` distinct values
/// score positive infinity. Errors if borrowing is needed but no feature has
/// a finite strength.
pub fn feature_profile(data: &DataMatrix, k: usize, seed: u64) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(CfError::InvalidInput(format!(
            "feature profile needs k >= 2, got {k}"
        )));
    }
    let params = KmeansParams::default();
    let p = data.p();
    let mut strengths = vec![f64::INFINITY; p];
    let mut pending: Vec<usize> = Vec::new();
    for j in 0..p {
        let categorical = matches!(data.kinds[j], FeatureKind::Categorical { .. });
        let too_few_levels =
            matches!(data.kinds[j], FeatureKind::Categorical { num_levels } if num_levels < k);
        if too_few_levels || distinct_column_values(data, j) < k {
            if categorical {
                pending.push(j);
            }
            // Numeric columns that cannot support k clusters keep the
            // infinite (worst possible) score.
            continue;
        }
        let view = FeatureView::new(data, vec![j])?;
        let part = base_cluster::kmeans(&view, k, derive_seed(seed, &[j as u64]), &params)?;
        strengths[j] = base_cluster::kappa(&view, &part);
    }
    let donors: Vec<f64> = strengths.iter().copied().filter(|s| s.is_finite()).collect();
    if !pending.is_empty() {
        if donors.is_empty() {
            return Err(CfError::DegenerateProfile);
        }
        let mut rng = substream(seed, &[SALT_PROFILE_DONOR]);
        for j in pending {
            strengths[j] = donors[rng.random_range(0..donors.len())];
        }
    }
    Ok(strengths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn load_str(s: &str, opts: &CsvOptions) -> Result<(DataMatrix, Option<LabelVector>)> {
        load_csv_reader(s.as_bytes(), opts)
    }

    #[test]
    fn loads_numeric_csv_with_header() {
        let (m, labels) = load_str("a,b\n1,2\n3,4\n5,6\n", &CsvOptions::default()).unwrap();
        assert!(labels.is_none());
        assert_eq!((m.n(), m.p()), (3, 2));
        assert_eq!(m.names().unwrap(), ["a", "b"]);
        assert_eq!(m.values()[[2, 1]], 6.0);
        assert!(m.kinds().iter().all(|k| *k == FeatureKind::Numeric));
    }

    #[test]
    fn auto_header_leaves_headerless_numeric_data_alone() {
        let (m, _) = load_str("1,2\n3,4\n", &CsvOptions::default()).unwrap();
        assert_eq!(m.n(), 2);
        assert!(m.names().is_none());
    }

    #[test]
    fn auto_header_leaves_categorical_data_alone() {
        // No column is "string first row over numeric rest", so row 0 is data.
        let (m, _) = load_str("x,1\ny,2\nx,3\n", &CsvOptions::default()).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(
            m.kinds()[0],
            FeatureKind::Categorical { num_levels: 2 }
        );
    }

    #[test]
    fn label_column_modes() {
        let opts = CsvOptions {
            label: Some(LabelColumn::Last),
            ..CsvOptions::default()
        };
        let (m, labels) = load_str("f1,f2,class\n1,2,yes\n3,4,no\n5,6,yes\n", &opts).unwrap();
        let labels = labels.unwrap();
        assert_eq!(m.p(), 2);
        assert_eq!(labels.labels(), &[0, 1, 0]);
        assert_eq!(labels.num_classes(), 2);

        let opts = CsvOptions {
            label: Some(LabelColumn::Name("class".into())),
            ..CsvOptions::default()
        };
        let (_, labels2) = load_str("class,f1\nyes,1\nno,2\n", &opts).unwrap();
        assert_eq!(labels2.unwrap().labels(), &[0, 1]);

        let opts = CsvOptions {
            label: Some(LabelColumn::Index(0)),
            ..CsvOptions::default()
        };
        let (m3, labels3) = load_str("2,1.5\n2,2.5\n7,3.5\n", &opts).unwrap();
        assert_eq!(labels3.unwrap().labels(), &[0, 0, 1]);
        assert_eq!(m3.p(), 1);
    }

    #[test]
    fn missing_values_are_rejected_with_coordinates() {
        let err = load_str("1,2\n3,?\n", &CsvOptions::default()).unwrap_err();
        match err {
            CfError::MalformedInput { row, col, .. } => {
                assert_eq!((row, col), (1, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = load_str("1,2\n3\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, CfError::MalformedInput { .. }));
    }

    #[test]
    fn numeric_override_reports_offending_cell() {
        let opts = CsvOptions {
            overrides: vec![(0, KindOverride::Numeric)],
            ..CsvOptions::default()
        };
        let err = load_str("1,2\nx,4\n", &opts).unwrap_err();
        match err {
            CfError::MalformedInput { row, col, .. } => assert_eq!((row, col), (1, 0)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn categorical_override_codes_by_first_appearance() {
        let opts = CsvOptions {
            overrides: vec![(0, KindOverride::Categorical)],
            ..CsvOptions::default()
        };
        let (m, _) = load_str("3,1\n1,2\n3,3\n", &opts).unwrap();
        assert_eq!(m.values().column(0).to_vec(), vec![0.0, 1.0, 0.0]);
        assert_eq!(m.kinds()[0], FeatureKind::Categorical { num_levels: 2 });
    }

    #[test]
    fn empty_inputs_error() {
        assert!(matches!(
            load_str("", &CsvOptions::default()).unwrap_err(),
            CfError::EmptyInput(_)
        ));
        let opts = CsvOptions {
            header: HeaderMode::Present,
            ..CsvOptions::default()
        };
        assert!(matches!(
            load_str("a,b\n", &opts).unwrap_err(),
            CfError::EmptyInput(_)
        ));
    }

    #[test]
    fn standardize_centers_and_scales() {
        let m = DataMatrix::from_numeric(
            Array2::from_shape_vec((4, 2), vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0]).unwrap(),
        )
        .unwrap();
        let s = standardize(&m);
        let col0: Vec<f64> = s.values().column(0).to_vec();
        let mean: f64 = col0.iter().sum::<f64>() / 4.0;
        let var: f64 = col0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
        // Constant column collapses to zeros.
        assert!(s.values().column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_is_idempotent() {
        let m = DataMatrix::from_numeric(
            Array2::from_shape_vec((5, 1), vec![1.0, 4.0, -2.0, 0.5, 9.0]).unwrap(),
        )
        .unwrap();
        let once = standardize(&m);
        let twice = standardize(&once);
        for (a, b) in once.values().iter().zip(twice.values().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardize_skips_categorical_columns() {
        let values = Array2::from_shape_vec((3, 2), vec![0.0, 10.0, 1.0, 20.0, 2.0, 30.0]).unwrap();
        let m = DataMatrix::new(
            values,
            vec![FeatureKind::Categorical { num_levels: 3 }, FeatureKind::Numeric],
            None,
        )
        .unwrap();
        let s = standardize(&m);
        assert_eq!(s.values().column(0).to_vec(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn sampling_is_deterministic_and_labeled() {
        let spec = GaussianMixtureSpec {
            mu: Array1::from_vec(vec![5.0, 0.0]),
            sigma: Array2::eye(2),
            pi: 0.5,
        };
        let (a, la) = sample_gaussian_mixture(&spec, 200, 9).unwrap();
        let (b, lb) = sample_gaussian_mixture(&spec, 200, 9).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(la, lb);
        // Component means are far apart on coordinate 0, so the sampled sign
        // should match the label for essentially every point.
        for (i, &l) in la.labels().iter().enumerate() {
            let x = a.values()[[i, 0]];
            assert_eq!(l == 1, x > 0.0, "point {i} has x={x} but label {l}");
        }
    }

    #[test]
    fn sampling_respects_general_covariance() {
        // Strongly correlated 2-d Gaussian: empirical correlation should be
        // clearly positive.
        let mut sigma = Array2::eye(2);
        sigma[[0, 1]] = 0.9;
        sigma[[1, 0]] = 0.9;
        let spec = GaussianMixtureSpec {
            mu: Array1::zeros(2),
            sigma,
            pi: 0.5,
        };
        let (m, _) = sample_gaussian_mixture(&spec, 4000, 11).unwrap();
        let x = m.values().column(0);
        let y = m.values().column(1);
        let n = 4000.0;
        let mx = x.sum() / n;
        let my = y.sum() / n;
        let cov = x
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / n;
        assert!(cov > 0.7, "sample covariance {cov} too small");
    }

    #[test]
    fn non_psd_covariance_is_rejected() {
        let mut sigma = Array2::eye(2);
        sigma[[0, 1]] = 2.0;
        sigma[[1, 0]] = 2.0;
        let spec = GaussianMixtureSpec {
            mu: Array1::zeros(2),
            sigma,
            pi: 0.5,
        };
        assert!(matches!(
            sample_gaussian_mixture(&spec, 10, 0).unwrap_err(),
            CfError::InvalidSpec(_)
        ));
    }

    #[test]
    fn preset_shapes_and_conditioning() {
        let g1 = preset_g1(3).unwrap();
        assert_eq!(g1.mu.len(), 103);
        assert_eq!(g1.mu[2], 0.0);
        assert_eq!(g1.mu[3], 1.0);
        assert_eq!(g1.mu[102], 100.0);
        let eig = crate::eigen::symmetric_eigen(g1.sigma.view()).unwrap();
        assert!(*eig.values.last().unwrap() >= 0.01 - 1e-9);

        let g2 = preset_g2(3);
        assert_eq!(g2.mu.len(), 120);
        assert!(g2.mu.iter().take(100).all(|&v| v == 0.0));
        assert!(g2.mu.iter().skip(100).all(|&v| (0.0..1.0).contains(&v)));

        let g3 = preset_g3();
        assert_eq!(g3.mu.len(), 1020);
        assert_eq!(g3.mu[1000], 1.0);
        assert_eq!(g3.mu[1019], 20.0);
    }

    #[test]
    fn profile_ranks_informative_feature_first() {
        // Column 0 separates the two components cleanly; column 1 is noise.
        let spec = GaussianMixtureSpec {
            mu: Array1::from_vec(vec![4.0, 0.0]),
            sigma: Array2::eye(2),
            pi: 0.5,
        };
        let (m, _) = sample_gaussian_mixture(&spec, 400, 21).unwrap();
        let profile = feature_profile(&m, 2, 7).unwrap();
        assert!(profile[0] < profile[1]);
        assert!(profile.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn profile_borrows_strengths_for_small_categoricals() {
        let values = Array2::from_shape_vec(
            (6, 2),
            vec![0.0, 1.0, 1.0, 2.0, 0.0, 9.0, 1.0, 10.0, 0.0, 1.5, 1.0, 9.5],
        )
        .unwrap();
        let m = DataMatrix::new(
            values,
            vec![FeatureKind::Categorical { num_levels: 2 }, FeatureKind::Numeric],
            None,
        )
        .unwrap();
        // k = 3 exceeds the categorical's 2 levels, so it borrows column 1's
        // strength.
        let profile = feature_profile(&m, 3, 5).unwrap();
        assert_eq!(profile[0], profile[1]);
    }

    #[test]
    fn profile_with_no_donors_errors() {
        let values = Array2::from_shape_vec((4, 1), vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let m = DataMatrix::new(
            values,
            vec![FeatureKind::Categorical { num_levels: 2 }],
            None,
        )
        .unwrap();
        assert!(matches!(
            feature_profile(&m, 3, 0).unwrap_err(),
            CfError::DegenerateProfile
        ));
    }
}
