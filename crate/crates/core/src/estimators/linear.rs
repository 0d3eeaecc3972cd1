use nalgebra::{DMatrix, DVector};

use crate::data::{Coefficients, Dataset, Estimator, FitResult, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg;

/// Least squares on the selected columns via column-pivoted QR.
pub fn fit_ols(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    if spec.estimator != Estimator::OlsSubset {
        return Err(Error::InvalidModel(format!("{} is not an OLS subset model", spec.id)));
    }
    spec.validate(data.ncols(), data.len())?;
    let x = data.design(&spec.columns);
    let sol = linalg::ols(x.clone(), data.y(), true)?;
    Ok(assemble(&x, data.y(), sol))
}

/// Ridge regression with every selected coefficient (intercept included)
/// penalised by `lambda * ||beta||^2`.
pub fn fit_ridge(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    let Estimator::Ridge { lambda } = spec.estimator else {
        return Err(Error::InvalidModel(format!("{} is not a ridge model", spec.id)));
    };
    spec.validate(data.ncols(), data.len())?;
    let x = data.design(&spec.columns);
    let sol = linalg::ridge(x.clone(), data.y(), lambda, true)?;
    Ok(assemble(&x, data.y(), sol))
}

fn assemble(x: &DMatrix<f64>, y: &DVector<f64>, sol: linalg::LsSolution) -> FitResult {
    let mu_hat = x * &sol.beta;
    let residuals = y - &mu_hat;
    FitResult {
        rank: sol.beta.len(),
        beta: Coefficients::Constant(sol.beta),
        mu_hat,
        residuals,
        leverage: sol.leverage,
    }
}

/// Ridge penalty of a constant-coefficient model (zero for OLS); `None` for
/// the time-varying estimator.
pub(crate) fn linear_penalty(spec: &ModelSpec) -> Option<f64> {
    match spec.estimator {
        Estimator::OlsSubset => Some(0.0),
        Estimator::Ridge { lambda } => Some(lambda),
        Estimator::TvpKernel { .. } => None,
    }
}

/// Coefficients estimated from the rows of `x` listed in `rows`.
pub(crate) fn coefficients_on_rows(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    rows: &[usize],
    lambda: f64,
) -> Result<DVector<f64>> {
    let xs = x.select_rows(rows);
    let ys = DVector::from_iterator(rows.len(), rows.iter().map(|&r| y[r]));
    Ok(linalg::ridge(xs, &ys, lambda, false)?.beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_only(y: &[f64]) -> Dataset {
        Dataset::new(y.to_vec(), DMatrix::from_element(y.len(), 1, 1.0)).unwrap()
    }

    #[test]
    fn intercept_only_fit_is_the_sample_mean() {
        let data = intercept_only(&[1.0, 2.0, 3.0]);
        let fit = fit_ols(&data, &ModelSpec::ols(vec![0])).unwrap();
        assert_eq!(fit.rank, 1);
        assert!((fit.beta.at(0)[0] - 2.0).abs() < 1e-14);
        let r: Vec<f64> = fit.residuals.iter().copied().collect();
        for (a, b) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        for h in fit.leverage.unwrap().iter() {
            assert!((h - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicate_column_is_rank_deficient() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.3, 1.0, -0.2, 1.0, 0.9, 1.0, 0.1]);
        let data = Dataset::new(vec![1.0, 0.0, 2.0, 1.5], x).unwrap();
        let err = fit_ols(&data, &ModelSpec::ols(vec![1, 1])).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn out_of_range_column_is_a_dimension_error() {
        let data = intercept_only(&[1.0, 2.0, 3.0]);
        let err = fit_ols(&data, &ModelSpec::ols(vec![0, 3])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn scalar_ridge_matches_closed_form() {
        let data = intercept_only(&[1.0, 2.0, 3.0]);
        let fit = fit_ridge(&data, &ModelSpec::ridge(vec![0], 3.0)).unwrap();
        // sum(y) / (T + lambda) = 6 / 6
        assert!((fit.beta.at(0)[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn huge_ridge_penalty_shrinks_to_zero() {
        let x = DMatrix::from_row_slice(4, 1, &[-1.5, -0.5, 0.5, 1.5]);
        let data = Dataset::new(vec![-3.0, -1.0, 1.0, 3.0], x).unwrap();
        let fit = fit_ridge(&data, &ModelSpec::ridge(vec![0], 1e12)).unwrap();
        assert!(fit.beta.at(0).amax() < 1e-6);
    }

    #[test]
    fn zero_penalty_ridge_is_ols() {
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 0.2, 1.0, -1.1, 1.0, 0.4, 1.0, 2.0, 1.0, -0.3]);
        let data = Dataset::new(vec![0.5, -1.0, 0.7, 2.2, 0.1], x).unwrap();
        let a = fit_ols(&data, &ModelSpec::ols(vec![0, 1])).unwrap();
        let b = fit_ridge(&data, &ModelSpec::ridge(vec![0, 1], 0.0)).unwrap();
        assert!((a.beta.at(0) - b.beta.at(0)).amax() < 1e-10);
    }
}
