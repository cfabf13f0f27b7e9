//! Partition agreement metrics and the assignment solver behind them.
//!
//! `rho_r` is the fraction of point pairs on which two partitions agree
//! (both together or both apart). `rho_c` is the fraction of points whose
//! predicted label matches the reference after the best one-to-one
//! relabeling, found with a Hungarian assignment solver. Both return values
//! in [0, 1]; multiply by 100 for percentages.

use ndarray::{Array2, ArrayView2};

use crate::data::LabelVector;
use crate::error::{CfError, Result};

fn check_pair(a: &LabelVector, b: &LabelVector) -> Result<usize> {
    if a.len() != b.len() {
        return Err(CfError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(CfError::InvalidInput(
            "agreement metrics need at least 2 points".into(),
        ));
    }
    Ok(a.len())
}

/// Joint label counts: rows indexed by `truth` classes, columns by `pred`
/// classes.
pub fn contingency(truth: &LabelVector, pred: &LabelVector) -> Result<Array2<f64>> {
    if truth.len() != pred.len() {
        return Err(CfError::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    let mut counts = Array2::<f64>::zeros((truth.num_classes(), pred.num_classes()));
    for (&t, &p) in truth.labels().iter().zip(pred.labels()) {
        counts[[t, p]] += 1.0;
    }
    Ok(counts)
}

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Pair-agreement rate between two partitions (the Rand index), computed
/// from the contingency table in O(n + J*K).
pub fn rho_r(a: &LabelVector, b: &LabelVector) -> Result<f64> {
    let n = check_pair(a, b)? as f64;
    let counts = contingency(a, b)?;
    let total = choose2(n);
    let joint: f64 = counts.iter().map(|&c| choose2(c)).sum();
    let rows: f64 = counts
        .rows()
        .into_iter()
        .map(|r| choose2(r.sum()))
        .sum();
    let cols: f64 = counts
        .columns()
        .into_iter()
        .map(|c| choose2(c.sum()))
        .sum();
    let agree = total - rows - cols + 2.0 * joint;
    Ok(agree / total)
}

/// Reference pair-agreement rate: explicit O(n^2) loop over pairs. Kept as
/// the independent check for [`rho_r`].
pub fn rho_r_pairwise(a: &LabelVector, b: &LabelVector) -> Result<f64> {
    let n = check_pair(a, b)?;
    let (la, lb) = (a.labels(), b.labels());
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            total += 1;
            if (la[i] == la[j]) == (lb[i] == lb[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / total as f64)
}

/// Classification-style accuracy of `pred` against `truth` after the best
/// one-to-one matching of predicted labels to reference classes.
pub fn rho_c(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let n = check_pair(pred, truth)? as f64;
    let counts = contingency(truth, pred)?;
    let (_, matched) = max_assignment(counts.view());
    Ok(matched / n)
}

/// Maximum-weight one-to-one assignment of rows to columns of a
/// (possibly rectangular) nonnegative score matrix. Returns, per row, the
/// matched column (None when the row stays unmatched because columns ran
/// out) and the total matched score.
pub fn max_assignment(scores: ArrayView2<'_, f64>) -> (Vec<Option<usize>>, f64) {
    let (rows, cols) = scores.dim();
    if rows == 0 || cols == 0 {
        return (vec![None; rows], 0.0);
    }
    let side = rows.max(cols);
    let top = scores.iter().fold(0.0f64, |a, &v| a.max(v));
    // Pad to square and convert max-score to min-cost.
    let cost = Array2::from_shape_fn((side, side), |(r, c)| {
        if r < rows && c < cols {
            top - scores[[r, c]]
        } else {
            top
        }
    });
    let row_to_col = hungarian_min_square(&cost);
    let mut out = vec![None; rows];
    let mut total = 0.0;
    for (r, item) in out.iter_mut().enumerate() {
        let c = row_to_col[r];
        if c < cols {
            *item = Some(c);
            total += scores[[r, c]];
        }
    }
    (out, total)
}

/// Reference assignment: enumerates all permutations; use only for small
/// matrices. Returns the optimal total score.
pub fn max_assignment_brute(scores: ArrayView2<'_, f64>) -> f64 {
    let (rows, cols) = scores.dim();
    let side = rows.max(cols);
    assert!(side <= 9, "brute-force assignment is factorial; keep side <= 9");
    let mut perm: Vec<usize> = (0..side).collect();
    let mut best = f64::NEG_INFINITY;
    heap_permutations(&mut perm, side, &mut |p| {
        let mut total = 0.0;
        for (r, &c) in p.iter().enumerate().take(rows) {
            if c < cols {
                total += scores[[r, c]];
            }
        }
        if total > best {
            best = total;
        }
    });
    best
}

fn heap_permutations(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        visit(perm);
        return;
    }
    for i in 0..k {
        heap_permutations(perm, k - 1, visit);
        if k % 2 == 0 {
            perm.swap(i, k - 1);
        } else {
            perm.swap(0, k - 1);
        }
    }
}

/// Classic O(n^3) Hungarian algorithm with potentials on a square cost
/// matrix; returns the matched column for each row.
fn hungarian_min_square(cost: &Array2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    // p[j] = row matched to column j; index 0 is the virtual root.
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}
