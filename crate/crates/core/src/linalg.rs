//! Dense least-squares helpers.

use nalgebra::{DMatrix, DVector};

/// Pivots on the triangular factor below this fraction of the largest are
/// treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Minimum-norm solution of `min ‖A x − b‖₂`.
///
/// Tall systems are first reduced by Householder QR to a square factor with
/// `A`'s column count. That factor is solved by a complete orthogonal
/// decomposition: column-pivoted QR fixes the numerical rank, and a second
/// QR of the leading rows' transpose gives the minimum-norm solution when
/// the rank is deficient.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let (rows, cols) = a.shape();
    assert_eq!(rows, b.len(), "right-hand side length must match row count");
    if rows == 0 || cols == 0 {
        return DVector::zeros(cols);
    }
    if rows > cols {
        let qr = a.clone().qr();
        let mut qtb = b.clone();
        qr.q_tr_mul(&mut qtb);
        complete_orthogonal_solve(qr.r(), qtb.rows(0, cols).into_owned(), rel_tol)
    } else {
        complete_orthogonal_solve(a.clone(), b.clone(), rel_tol)
    }
}

/// Householder QR with column pivoting on the largest remaining column
/// norm, applied to `w` and `rhs` in place. Returns the column order.
fn pivoted_qr(w: &mut DMatrix<f64>, rhs: &mut DVector<f64>) -> Vec<usize> {
    let (rows, cols) = w.shape();
    let mut perm: Vec<usize> = (0..cols).collect();
    for k in 0..rows.min(cols) {
        let norm_below = |w: &DMatrix<f64>, j: usize| w.column(j).rows(k, rows - k).norm_squared();
        let pivot = (k..cols)
            .max_by(|&i, &j| norm_below(w, i).total_cmp(&norm_below(w, j)).then(j.cmp(&i)))
            .expect("nonempty pivot range");
        if pivot != k {
            w.swap_columns(k, pivot);
            perm.swap(k, pivot);
        }
        let mut v: DVector<f64> = w.column(k).rows(k, rows - k).into_owned();
        let alpha = v.norm();
        if alpha == 0.0 {
            continue;
        }
        let beta = if v[0] > 0.0 { -alpha } else { alpha };
        v[0] -= beta;
        let vv = v.norm_squared();
        for j in k..cols {
            let mut col = w.column_mut(j);
            let mut col = col.rows_mut(k, rows - k);
            let s = 2.0 * v.dot(&col) / vv;
            col.axpy(-s, &v, 1.0);
        }
        let mut tail = rhs.rows_mut(k, rows - k);
        let s = 2.0 * v.dot(&tail) / vv;
        tail.axpy(-s, &v, 1.0);
        w[(k, k)] = beta;
        w.column_mut(k).rows_mut(k + 1, rows - k - 1).fill(0.0);
    }
    perm
}

fn complete_orthogonal_solve(mut w: DMatrix<f64>, mut rhs: DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let (rows, cols) = w.shape();
    let perm = pivoted_qr(&mut w, &mut rhs);
    let lead = w[(0, 0)].abs();
    if lead == 0.0 || !lead.is_finite() {
        return DVector::zeros(cols);
    }
    let rank = (0..rows.min(cols))
        .take_while(|&k| w[(k, k)].abs() > rel_tol * lead)
        .count();
    let r1 = w.rows(0, rank).into_owned();
    let c = rhs.rows(0, rank).into_owned();
    let permuted = if rank == cols {
        r1.solve_upper_triangular(&c)
            .expect("nonzero pivots on the retained diagonal")
    } else {
        // R₁ = Tᵀ Zᵀ with R₁ᵀ = Z T; the solution Z y lies in R₁'s row space.
        let qr = r1.transpose().qr();
        let y = qr
            .r()
            .tr_solve_upper_triangular(&c)
            .expect("nonzero pivots on the retained diagonal");
        qr.q() * y
    };
    let mut x = DVector::zeros(cols);
    for (j, &p) in perm.iter().enumerate() {
        x[p] = permuted[j];
    }
    x
}
