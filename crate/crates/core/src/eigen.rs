//! Dense symmetric eigendecomposition with a deterministic ordering and
//! sign convention.
//!
//! This wraps nalgebra's symmetric eigensolver and post-processes the
//! output: eigenpairs are sorted by descending eigenvalue (ties keep the
//! solver's order) and each eigenvector is flipped so its
//! largest-magnitude component is positive. The fixed convention is what
//! makes downstream spectral decisions byte-reproducible.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{CfError, Result};

#[derive(Clone, Debug)]
pub struct EigenPairs {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Matching eigenvectors as columns.
    pub vectors: Array2<f64>,
}

impl EigenPairs {
    pub fn vector(&self, idx: usize) -> Array1<f64> {
        self.vectors.column(idx).to_owned()
    }
}

fn check_symmetric(m: ArrayView2<'_, f64>) -> Result<()> {
    let (r, c) = m.dim();
    if r != c {
        return Err(CfError::InvalidInput(format!(
            "matrix is {r}x{c}, expected square"
        )));
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for ((i, j), &v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(CfError::InvalidInput(format!(
                "non-finite matrix entry at ({i}, {j})"
            )));
        }
        if j > i && (v - m[[j, i]]).abs() > 1e-9 * (1.0 + scale) {
            return Err(CfError::InvalidInput(format!(
                "matrix not symmetric at ({i}, {j}): {v} vs {}",
                m[[j, i]]
            )));
        }
    }
    Ok(())
}

fn canonical_sign(col: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for (i, &v) in col.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    if col[best] < 0.0 {
        for v in col.iter_mut() {
            *v = -*v;
        }
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn symmetric_eigen(m: ArrayView2<'_, f64>) -> Result<EigenPairs> {
    check_symmetric(m)?;
    let n = m.nrows();
    let dm = nalgebra::DMatrix::from_fn(n, n, |r, c| m[[r, c]]);
    let se = nalgebra::SymmetricEigen::new(dm);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .expect("finite eigenvalues")
    });

    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CfError::Numerical("eigensolver returned non-finite values".into()));
    }
    let mut vectors = Array2::<f64>::zeros((n, n));
    let mut buf = vec![0.0f64; n];
    for (out_c, &src_c) in order.iter().enumerate() {
        for r in 0..n {
            buf[r] = se.eigenvectors[(r, src_c)];
        }
        canonical_sign(&mut buf);
        for r in 0..n {
            vectors[[r, out_c]] = buf[r];
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// The `k` largest eigenpairs.
pub fn top_eigenpairs(m: ArrayView2<'_, f64>, k: usize) -> Result<EigenPairs> {
    let n = m.nrows();
    if k > n {
        return Err(CfError::InvalidInput(format!(
            "requested {k} eigenpairs from a {n}x{n} matrix"
        )));
    }
    let full = symmetric_eigen(m)?;
    let values = full.values[..k].to_vec();
    let vectors = full.vectors.slice(ndarray::s![.., ..k]).to_owned();
    Ok(EigenPairs { values, vectors })
}

/// Largest residual `max_i ||M v_i - lambda_i v_i||_2` over the returned
/// pairs; used to validate solver output in tests.
pub fn max_residual(m: ArrayView2<'_, f64>, pairs: &EigenPairs) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for (idx, &lambda) in pairs.values.iter().enumerate() {
        let v = pairs.vectors.column(idx);
        let mut norm2 = 0.0;
        for r in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                acc += m[[r, c]] * v[c];
            }
            let diff = acc - lambda * v[r];
            norm2 += diff * diff;
        }
        worst = worst.max(norm2.sqrt());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn diagonal_matrix_eigenvalues() {
        let m = array![[3.0, 0.0], [0.0, -1.0]];
        let e = symmetric_eigen(m.view()).unwrap();
        assert_relative_eq!(e.values[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(e.values[1], -1.0, max_relative = 1e-12);
        // Canonical sign: dominant component positive.
        assert!(e.vectors[[0, 0]] > 0.0);
        assert!(e.vectors[[1, 1]] > 0.0);
    }

    #[test]
    fn known_two_by_two() {
        // Eigenvalues of [[2,1],[1,2]] are 3 and 1.
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let e = symmetric_eigen(m.view()).unwrap();
        assert_relative_eq!(e.values[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(e.values[1], 1.0, max_relative = 1e-12);
        let v0 = e.vector(0);
        assert_relative_eq!(v0[0], v0[1], max_relative = 1e-9);
    }

    #[test]
    fn residuals_are_tiny_on_random_matrices() {
        let mut rng = crate::rng::substream(17, &[]);
        for _ in 0..10 {
            let n = rng.random_range(3..30);
            let mut m = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.random::<f64>() * 2.0 - 1.0;
                    m[[i, j]] = v;
                    m[[j, i]] = v;
                }
            }
            let e = symmetric_eigen(m.view()).unwrap();
            let spectral = e.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(
                max_residual(m.view(), &e) <= 1e-8 * spectral.max(1e-300),
                "residual too large for n={n}"
            );
            for w in e.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let m = array![
            [4.0, 1.0, 0.5],
            [1.0, 3.0, -0.2],
            [0.5, -0.2, 1.0]
        ];
        let e = symmetric_eigen(m.view()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = e.vectors.column(i).dot(&e.vectors.column(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(symmetric_eigen(m.view()).is_err());
    }

    #[test]
    fn top_pairs_truncate() {
        let m = array![[5.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        let t = top_eigenpairs(m.view(), 2).unwrap();
        assert_eq!(t.values.len(), 2);
        assert_eq!(t.vectors.dim(), (3, 2));
        assert_relative_eq!(t.values[0], 5.0, max_relative = 1e-12);
    }
}
