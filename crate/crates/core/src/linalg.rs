//! Rank-revealing decompositions shared by the reduction pipeline.

use nalgebra::{DMatrix, DVector};

use crate::tolerances;

/// Outcome of a rank-revealing SVD of a column frame.
#[derive(Debug, Clone)]
pub struct RankedSpan {
    /// Orthonormal basis of the retained column span, one column per rank.
    pub basis: DMatrix<f64>,
    pub rank: usize,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    /// Smallest retained singular value (0 when rank is 0).
    pub sigma_retained_min: f64,
    /// Largest discarded singular value (0 when nothing was discarded).
    pub sigma_discarded_max: f64,
    /// Set when the retained/discarded gap is below the required ratio;
    /// the numerical rank is then not trustworthy.
    pub ill_conditioned: bool,
}

/// Rank by relative cutoff `sigma > rel_tol * sigma_max`, with the spectral
/// gap between retained and discarded values reported rather than resolved.
pub fn ranked_span(columns: &DMatrix<f64>, rel_tol: f64) -> RankedSpan {
    let m = columns.nrows();
    let svd = columns.clone().svd(true, false);
    let mut sigmas: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..sigmas.len()).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]));
    sigmas.sort_by(|a, b| b.total_cmp(a));

    let sigma_max = sigmas.first().copied().unwrap_or(0.0);
    let cutoff = rel_tol * sigma_max;
    let rank = sigmas.iter().filter(|&&s| s > cutoff).count();
    let sigma_retained_min = if rank > 0 { sigmas[rank - 1] } else { 0.0 };
    let sigma_discarded_max = sigmas.get(rank).copied().unwrap_or(0.0);
    let ill_conditioned = sigma_discarded_max > 0.0
        && sigma_retained_min / sigma_discarded_max <= tolerances::RANK_GAP;

    let u = svd.u.expect("left singular vectors requested");
    let mut basis = DMatrix::zeros(m, rank);
    for (out_col, &src) in order.iter().take(rank).enumerate() {
        basis.set_column(out_col, &u.column(src));
    }
    RankedSpan {
        basis,
        rank,
        singular_values: sigmas,
        sigma_retained_min,
        sigma_discarded_max,
        ill_conditioned,
    }
}

/// Orthonormal basis of the right null space of `matrix`, by SVD with the
/// relative threshold `sigma <= rel_tol * sigma_max`.
pub fn null_space(matrix: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let k = matrix.ncols();
    // Pad to at least k rows so the thin SVD carries the full right basis.
    let padded = if matrix.nrows() < k {
        let mut p = DMatrix::zeros(k, k);
        p.view_mut((0, 0), (matrix.nrows(), k)).copy_from(matrix);
        p
    } else {
        matrix.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd
        .singular_values
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    let cutoff = rel_tol * sigma_max;
    let mut basis = Vec::new();
    for i in 0..v_t.nrows() {
        let sigma = svd.singular_values.get(i).copied().unwrap_or(0.0);
        if sigma_max == 0.0 || sigma <= cutoff {
            basis.push(v_t.row(i).transpose());
        }
    }
    basis
}

/// Component of `v` orthogonal to the span of the orthonormal columns `q`.
pub fn reject_from_span(q: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    if q.ncols() == 0 {
        return v.clone();
    }
    v - q * (q.transpose() * v)
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-13 * svd.singular_values.max().max(1.0))
        .expect("svd solve")
}

/// Greedy pivoted selection of `count` columns of `candidates` that stay
/// maximally independent after rejecting the span of `excluded` (orthonormal)
/// and previously chosen columns. Returns the chosen column indices and the
/// pivot norm of each choice.
pub fn pivoted_selection(
    candidates: &DMatrix<f64>,
    excluded: &DMatrix<f64>,
    count: usize,
) -> (Vec<usize>, Vec<f64>) {
    let mut working: Vec<DVector<f64>> = (0..candidates.ncols())
        .map(|j| reject_from_span(excluded, &candidates.column(j).into_owned()))
        .collect();
    let mut chosen = Vec::new();
    let mut pivots = Vec::new();
    for _ in 0..count {
        let (best, best_norm) = working
            .iter()
            .enumerate()
            .filter(|(j, _)| !chosen.contains(j))
            .map(|(j, v)| (j, v.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((usize::MAX, 0.0));
        if best == usize::MAX || best_norm == 0.0 {
            break;
        }
        let direction = working[best].normalize();
        for (j, v) in working.iter_mut().enumerate() {
            if j != best && !chosen.contains(&j) {
                let overlap = direction.dot(v);
                *v -= direction.scale(overlap);
            }
        }
        chosen.push(best);
        pivots.push(best_norm);
    }
    (chosen, pivots)
}

/// sigma_min / sigma_max of a square matrix; (0, 0) ratio counts as 1 so a
/// zero-dimensional form is vacuously nondegenerate.
pub fn condition_ratio(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let min = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_r3_frame() {
        // Columns (1,0,-1) and (0,1,0): rank 2, clean gap.
        let m = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let span = ranked_span(&m, tolerances::RANK_REL);
        assert_eq!(span.rank, 2);
        assert!(!span.ill_conditioned);
        // Basis columns orthonormal.
        let gram = span.basis.transpose() * &span.basis;
        assert!((gram - DMatrix::identity(2, 2)).abs().max() < 1e-12);
        // Span contains each generator column.
        for j in 0..2 {
            let col = m.column(j).into_owned();
            let out = reject_from_span(&span.basis, &col);
            assert!(out.norm() < 1e-9);
        }
    }

    #[test]
    fn rank_zero_for_zero_matrix() {
        let m = DMatrix::zeros(3, 2);
        let span = ranked_span(&m, tolerances::RANK_REL);
        assert_eq!(span.rank, 0);
        assert!(!span.ill_conditioned);
    }

    #[test]
    fn gap_failure_is_flagged() {
        // Singular values 1, 4e-8, 5e-9: the cutoff retains the first two,
        // but the retained/discarded ratio 4e-8/5e-9 = 8 is far below the
        // required gap.
        let m = DMatrix::from_column_slice(
            3,
            3,
            &[1.0, 0.0, 0.0, 0.0, 4e-8, 0.0, 0.0, 0.0, 5e-9],
        );
        let span = ranked_span(&m, tolerances::RANK_REL);
        assert_eq!(span.rank, 2);
        assert!(span.ill_conditioned);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        // 1x3 matrix [1 1 0]: null space is 2-dimensional.
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let basis = null_space(&m, tolerances::NULLSPACE_REL);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!((v[0] + v[1]).abs() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn null_space_of_zero_matrix_is_everything() {
        let m = DMatrix::zeros(4, 2);
        assert_eq!(null_space(&m, tolerances::NULLSPACE_REL).len(), 2);
    }

    #[test]
    fn pivoted_selection_prefers_independent_columns() {
        // Candidates: e1, e1+1e-12*e2, e3. Excluding nothing and asking for
        // two, selection must avoid the near-duplicate.
        let m = DMatrix::from_column_slice(
            3,
            3,
            &[1.0, 0.0, 0.0, 1.0, 1e-12, 0.0, 0.0, 0.0, 1.0],
        );
        let none = DMatrix::zeros(3, 0);
        let (chosen, pivots) = pivoted_selection(&m, &none, 2);
        assert_eq!(chosen.len(), 2);
        assert!(chosen.contains(&2));
        assert!(pivots[0] >= pivots[1]);
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, -3.0, -2.0]);
        let x = least_squares(&a, &b);
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] + 3.0).abs() < 1e-12);
    }
}
