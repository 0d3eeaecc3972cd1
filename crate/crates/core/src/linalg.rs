//! Least-squares kernels shared by the estimators.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots at or below this fraction of the largest pivot count as zero.
pub(crate) const RANK_TOL: f64 = 1e-10;

pub(crate) struct LsSolution {
    pub beta: DVector<f64>,
    /// Squared row norms of the thin Q factor restricted to the first
    /// `nrows` rows (the hat-matrix diagonal).
    pub leverage: Option<DVector<f64>>,
}

/// Least squares through a column-pivoted Householder QR.
///
/// Rows past `nrows` (if any) are treated as augmentation rows: they enter
/// the factorisation but not the returned leverage.
fn pivoted_qr_solve(
    x: DMatrix<f64>,
    y: &DVector<f64>,
    nrows: usize,
    want_leverage: bool,
) -> Result<LsSolution> {
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::RankDeficient { rank: n, cols: p });
    }
    let qr = x.col_piv_qr();
    let r = qr.r();
    let largest = (0..p).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    let rank = (0..p).filter(|&k| r[(k, k)].abs() > RANK_TOL * largest).count();
    if largest == 0.0 || rank < p {
        return Err(Error::RankDeficient { rank: if largest == 0.0 { 0 } else { rank }, cols: p });
    }

    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let head = qty.rows(0, p).into_owned();
    let r_sq = r.columns(0, p).into_owned();
    let mut beta = r_sq
        .solve_upper_triangular(&head)
        .ok_or(Error::RankDeficient { rank, cols: p })?;
    qr.p().inv_permute_rows(&mut beta);

    let leverage = want_leverage.then(|| {
        let q = qr.q();
        DVector::from_fn(nrows, |i, _| q.row(i).norm_squared())
    });
    Ok(LsSolution { beta, leverage })
}

/// Ordinary least squares of `y` on the columns of `x`.
pub(crate) fn ols(x: DMatrix<f64>, y: &DVector<f64>, want_leverage: bool) -> Result<LsSolution> {
    let n = x.nrows();
    pivoted_qr_solve(x, y, n, want_leverage)
}

/// Ridge regression, solved as least squares on `[X; sqrt(lambda) I]`.
pub(crate) fn ridge(
    x: DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    want_leverage: bool,
) -> Result<LsSolution> {
    if lambda == 0.0 {
        return ols(x, y, want_leverage);
    }
    let (n, p) = x.shape();
    let root = lambda.sqrt();
    let mut aug = DMatrix::zeros(n + p, p);
    aug.rows_mut(0, n).copy_from(&x);
    for k in 0..p {
        aug[(n + k, k)] = root;
    }
    let mut yaug = DVector::zeros(n + p);
    yaug.rows_mut(0, n).copy_from(y);
    pivoted_qr_solve(aug, &yaug, n, want_leverage)
}

/// Cholesky factor of a symmetric positive (semi)definite `gram`, with rank
/// deficiency judged by the same relative pivot rule as the QR path
/// (Cholesky pivots play the role of |R_kk|).
pub(crate) fn factor_gram(gram: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let p = gram.nrows();
    let chol = Cholesky::new(gram).ok_or(Error::RankDeficient { rank: p.saturating_sub(1), cols: p })?;
    let l = chol.l_dirty();
    let largest = (0..p).map(|k| l[(k, k)].abs()).fold(0.0, f64::max);
    let rank = (0..p).filter(|&k| l[(k, k)].abs() > RANK_TOL * largest).count();
    if rank < p {
        return Err(Error::RankDeficient { rank, cols: p });
    }
    Ok(chol)
}

/// Solves `gram * b = rhs`.
pub(crate) fn solve_gram(gram: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(factor_gram(gram)?.solve(rhs))
}

pub(crate) fn inverse_gram(gram: DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(factor_gram(gram)?.inverse())
}

/// Adds `weight * x_i x_i'` to `gram` and `weight * x_i y_i` to `rhs`.
#[inline]
pub(crate) fn accumulate(
    gram: &mut DMatrix<f64>,
    rhs: &mut DVector<f64>,
    x: &DMatrix<f64>,
    row: usize,
    yi: f64,
    weight: f64,
) {
    let p = x.ncols();
    for a in 0..p {
        let xa = weight * x[(row, a)];
        rhs[a] += xa * yi;
        for b in 0..=a {
            gram[(a, b)] += xa * x[(row, b)];
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
}

/// `x_i · beta` for row `row` of `x`.
#[inline]
pub(crate) fn row_dot(x: &DMatrix<f64>, row: usize, beta: &DVector<f64>) -> f64 {
    (0..x.ncols()).map(|k| x[(row, k)] * beta[k]).sum()
}

/// Gram matrix and cross-product of the full design, plus `lambda * I`.
pub(crate) fn normal_equations(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let mut gram = x.tr_mul(x);
    for k in 0..x.ncols() {
        gram[(k, k)] += lambda;
    }
    (gram, x.tr_mul(y))
}
