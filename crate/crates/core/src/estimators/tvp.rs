//! Time-varying-parameter regression by kernel-weighted least squares in
//! time: the coefficients at observation `i` solve a least-squares problem
//! with weights `K((j - i) / (bT))`.

use nalgebra::{DMatrix, DVector};

use crate::data::{Coefficients, Dataset, Estimator, FitResult, Kernel, ModelSpec, Side};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy)]
pub(crate) struct TvpParams {
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub side: Side,
}

pub(crate) fn tvp_params(spec: &ModelSpec) -> Result<TvpParams> {
    match spec.estimator {
        Estimator::TvpKernel { bandwidth, kernel, side } => {
            if !(bandwidth > 0.0 && bandwidth.is_finite()) {
                return Err(Error::BadBandwidth(bandwidth));
            }
            Ok(TvpParams { bandwidth, kernel, side })
        }
        _ => Err(Error::InvalidModel(format!("{} is not a time-varying kernel model", spec.id))),
    }
}

/// Weighted normal equations for the local fit at `i`. Rows for which
/// `skip(j)` holds get zero weight. Returns the system and the weight the
/// estimate places on observation `i` itself.
fn local_system(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    i: usize,
    params: TvpParams,
    side: Side,
    skip: &dyn Fn(usize) -> bool,
) -> (DMatrix<f64>, DVector<f64>, f64) {
    let t = x.nrows();
    let p = x.ncols();
    let scale = params.bandwidth * t as f64;
    let (lo, hi) = if params.kernel.is_compact() {
        let reach = scale.floor().min(t as f64) as usize;
        (i.saturating_sub(reach), (i + reach).min(t - 1))
    } else {
        (0, t - 1)
    };
    let hi = match side {
        Side::TwoSided => Some(hi),
        Side::OneSidedPast => i.checked_sub(1).map(|h| h.min(hi)),
    };
    let mut gram = DMatrix::zeros(p, p);
    let mut rhs = DVector::zeros(p);
    let mut own = 0.0;
    if let Some(hi) = hi {
        for j in lo..=hi {
            if skip(j) {
                continue;
            }
            let w = params.kernel.weight((j as f64 - i as f64) / scale);
            if w == 0.0 {
                continue;
            }
            if j == i {
                own = w;
            }
            linalg::accumulate(&mut gram, &mut rhs, x, j, y[j], w);
        }
    }
    (gram, rhs, own)
}

/// Kernel-weighted time-varying coefficients. The fitted mean at `i` uses
/// the coefficients estimated at `i`. Two-sided fits also report the local
/// leverage `w_ii x_i' G_i^{-1} x_i`, which makes the leave-one-out shortcut
/// exact; one-sided fits never weight observation `i`, so their leverage is
/// zero.
pub fn fit_tvp_kernel(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    let params = tvp_params(spec)?;
    spec.validate(data.ncols(), data.len())?;
    let x = data.design(&spec.columns);
    let y = data.y();
    let (t, p) = x.shape();
    let mut coef = DMatrix::zeros(t, p);
    let mut mu_hat = DVector::zeros(t);
    let mut leverage = DVector::zeros(t);
    for i in 0..t {
        let (gram, rhs, own) = local_system(&x, y, i, params, params.side, &|_| false);
        let chol = linalg::factor_gram(gram)?;
        let beta = chol.solve(&rhs);
        let xi = x.row(i).transpose();
        mu_hat[i] = xi.dot(&beta);
        if own > 0.0 {
            leverage[i] = own * xi.dot(&chol.solve(&xi));
        }
        coef.set_row(i, &beta.transpose());
    }
    let residuals = y - &mu_hat;
    Ok(FitResult {
        beta: Coefficients::PerObservation(coef),
        mu_hat,
        residuals,
        leverage: Some(leverage),
        rank: p,
    })
}

/// Prediction at each target row from a local fit that ignores the rows
/// `excluded(i)` returns for that target.
pub(crate) fn tvp_predict_excluding(
    data: &Dataset,
    spec: &ModelSpec,
    targets: impl Iterator<Item = usize>,
    excluded: impl Fn(usize, usize) -> bool,
) -> Result<Vec<(usize, f64)>> {
    let params = tvp_params(spec)?;
    spec.validate(data.ncols(), data.len())?;
    let x = data.design(&spec.columns);
    let y = data.y();
    targets
        .map(|i| {
            let (gram, rhs, _) = local_system(&x, y, i, params, params.side, &|j| excluded(i, j));
            let beta = linalg::solve_gram(gram, &rhs)?;
            Ok((i, linalg::row_dot(&x, i, &beta)))
        })
        .collect()
}

/// One-sided (past-only) kernel forecasts for rows `start..T`, whatever side
/// the spec was declared with.
pub(crate) fn tvp_past_predictions(data: &Dataset, spec: &ModelSpec, start: usize) -> Result<Vec<f64>> {
    let params = tvp_params(spec)?;
    spec.validate(data.ncols(), data.len())?;
    let x = data.design(&spec.columns);
    let y = data.y();
    (start..data.len())
        .map(|i| {
            let (gram, rhs, _) = local_system(&x, y, i, params, Side::OneSidedPast, &|_| false);
            let beta = linalg::solve_gram(gram, &rhs)?;
            Ok(linalg::row_dot(&x, i, &beta))
        })
        .collect()
}

/// Largest Euclidean distance between two coefficient vectors that fall in
/// the same block, with contiguous blocks of `block_len` observations (the
/// last block may be short).
pub fn tvp_block_spread(fit: &FitResult, block_len: usize) -> Result<f64> {
    let Coefficients::PerObservation(coef) = &fit.beta else {
        return Err(Error::InvalidModel("block spread needs per-observation coefficients".into()));
    };
    let t = coef.nrows();
    if block_len == 0 || block_len > t {
        return Err(Error::BadArgs(format!("block length {block_len} outside 1..={t}")));
    }
    let mut spread: f64 = 0.0;
    for start in (0..t).step_by(block_len) {
        let end = (start + block_len).min(t);
        for a in start..end {
            for b in a + 1..end {
                let d = (coef.row(a) - coef.row(b)).norm();
                spread = spread.max(d);
            }
        }
    }
    Ok(spread)
}
