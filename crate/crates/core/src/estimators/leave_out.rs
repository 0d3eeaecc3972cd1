//! Leave-one-out, h-block and k-fold residuals.
//!
//! The `*_refit` style functions literally re-estimate the model with the
//! deleted rows removed. `loo_residuals_fast` and `hblock_residuals_fast`
//! are shortcuts (hat-matrix scaling and Gram-matrix downdating) that the
//! refit paths serve as oracles for.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::linear::{coefficients_on_rows, linear_penalty};
use super::tvp::tvp_predict_excluding;
use crate::data::{Dataset, FitResult, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg;

/// Leave-one-out residuals `y_i - x_i β̃_{-i}` by refitting without row `i`.
pub fn loo_residuals_refit(data: &Dataset, spec: &ModelSpec) -> Result<Vec<f64>> {
    hblock_residuals(data, spec, 0)
}

/// Leave-one-out residuals from a full fit: `ε̂_i / (1 - h_ii)`.
pub fn loo_residuals_fast(fit: &FitResult) -> Result<Vec<f64>> {
    let leverage = fit
        .leverage
        .as_ref()
        .ok_or_else(|| Error::BadArgs("fit carries no leverage values".into()))?;
    fit.residuals
        .iter()
        .zip(leverage.iter())
        .enumerate()
        .map(|(index, (&e, &h))| {
            if h >= 1.0 - 1e-12 {
                Err(Error::LeverageOne { index })
            } else {
                Ok(e / (1.0 - h))
            }
        })
        .collect()
}

fn check_block(data: &Dataset, spec: &ModelSpec, h: usize) -> Result<()> {
    let t = data.len();
    let width = 2 * h + 1;
    if t <= width || t - width <= spec.pdim() {
        return Err(Error::BlockTooLarge { width, pdim: spec.pdim(), t });
    }
    Ok(())
}

fn block_bounds(i: usize, h: usize, t: usize) -> (usize, usize) {
    (i.saturating_sub(h), (i + h).min(t - 1))
}

/// h-block residuals: observation `i` is predicted from a fit that drops rows
/// `i-h..=i+h`, truncated at the sample edges. `h = 0` is leave-one-out.
pub fn hblock_residuals(data: &Dataset, spec: &ModelSpec, h: usize) -> Result<Vec<f64>> {
    spec.validate(data.ncols(), data.len())?;
    check_block(data, spec, h)?;
    let t = data.len();
    let y = data.y();
    match linear_penalty(spec) {
        Some(lambda) => {
            let x = data.design(&spec.columns);
            let mut keep = Vec::with_capacity(t);
            (0..t)
                .map(|i| {
                    let (lo, hi) = block_bounds(i, h, t);
                    keep.clear();
                    keep.extend((0..lo).chain(hi + 1..t));
                    let beta = coefficients_on_rows(&x, y, &keep, lambda)?;
                    Ok(y[i] - linalg::row_dot(&x, i, &beta))
                })
                .collect()
        }
        None => {
            let preds = tvp_predict_excluding(data, spec, 0..t, |i, j| {
                let (lo, hi) = block_bounds(i, h, t);
                (lo..=hi).contains(&j)
            })?;
            Ok(preds.into_iter().map(|(i, p)| y[i] - p).collect())
        }
    }
}

/// h-block residuals by downdating the full-sample normal equations with
/// each deleted block. Agrees with [`hblock_residuals`] to rounding error;
/// time-varying models fall back to the refit path.
pub fn hblock_residuals_fast(data: &Dataset, spec: &ModelSpec, h: usize) -> Result<Vec<f64>> {
    let Some(lambda) = linear_penalty(spec) else {
        return hblock_residuals(data, spec, h);
    };
    spec.validate(data.ncols(), data.len())?;
    check_block(data, spec, h)?;
    let t = data.len();
    let y = data.y();
    let x = data.design(&spec.columns);
    let (gram, rhs) = linalg::normal_equations(&x, y, lambda);
    (0..t)
        .map(|i| {
            let (lo, hi) = block_bounds(i, h, t);
            let mut g = gram.clone();
            let mut c = rhs.clone();
            for j in lo..=hi {
                linalg::accumulate(&mut g, &mut c, &x, j, y[j], -1.0);
            }
            let beta = linalg::solve_gram(g, &c)?;
            Ok(y[i] - linalg::row_dot(&x, i, &beta))
        })
        .collect()
}

/// k-fold layout. Folds are contiguous, in order, with sizes differing by at
/// most one. `shuffle_seed` permutes observations first; only meaningful for
/// independent data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KFold {
    pub k: usize,
    pub shuffle_seed: Option<u64>,
}

impl KFold {
    pub fn contiguous(k: usize) -> Self {
        Self { k, shuffle_seed: None }
    }
}

/// Observation indices in each fold.
pub fn fold_assignment(t: usize, folds: KFold) -> Result<Vec<Vec<usize>>> {
    if folds.k < 2 || folds.k > t {
        return Err(Error::BadK { k: folds.k, t });
    }
    let mut order: Vec<usize> = (0..t).collect();
    if let Some(seed) = folds.shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok((0..folds.k)
        .map(|f| {
            let mut fold = order[f * t / folds.k..(f + 1) * t / folds.k].to_vec();
            fold.sort_unstable();
            fold
        })
        .collect())
}

/// k-fold residuals: each observation is predicted from the fit that
/// excludes its whole fold.
pub fn kfold_residuals(data: &Dataset, spec: &ModelSpec, folds: KFold) -> Result<Vec<f64>> {
    spec.validate(data.ncols(), data.len())?;
    let t = data.len();
    let assignment = fold_assignment(t, folds)?;
    let y = data.y();
    let mut out = vec![0.0; t];
    match linear_penalty(spec) {
        Some(lambda) => {
            let x = data.design(&spec.columns);
            let mut in_fold = vec![false; t];
            for fold in &assignment {
                fold.iter().for_each(|&i| in_fold[i] = true);
                let keep: Vec<usize> = (0..t).filter(|&j| !in_fold[j]).collect();
                let beta = coefficients_on_rows(&x, y, &keep, lambda)?;
                for &i in fold {
                    out[i] = y[i] - linalg::row_dot(&x, i, &beta);
                    in_fold[i] = false;
                }
            }
        }
        None => {
            let mut fold_of = vec![0; t];
            for (f, fold) in assignment.iter().enumerate() {
                fold.iter().for_each(|&i| fold_of[i] = f);
            }
            for (i, p) in tvp_predict_excluding(data, spec, 0..t, |i, j| fold_of[i] == fold_of[j])? {
                out[i] = y[i] - p;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_ols;
    use nalgebra::DMatrix;

    fn intercept_only(y: &[f64]) -> Dataset {
        Dataset::new(y.to_vec(), DMatrix::from_element(y.len(), 1, 1.0)).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn leave_out_mean_residuals() {
        let data = intercept_only(&[1.0, 2.0, 3.0]);
        let spec = ModelSpec::ols(vec![0]);
        assert_close(&loo_residuals_refit(&data, &spec).unwrap(), &[-1.5, 0.0, 1.5], 1e-14);
        let fit = fit_ols(&data, &spec).unwrap();
        assert_close(&loo_residuals_fast(&fit).unwrap(), &[-1.5, 0.0, 1.5], 1e-14);
    }

    #[test]
    fn saturating_indicator_has_leverage_one() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, 1.0, 0.0]);
        let data = Dataset::new(vec![4.0, 1.0, 2.0], x).unwrap();
        let fit = fit_ols(&data, &ModelSpec::ols(vec![0, 1])).unwrap();
        assert_eq!(loo_residuals_fast(&fit).unwrap_err(), Error::LeverageOne { index: 0 });
    }

    #[test]
    fn hblock_hand_refits() {
        let data = intercept_only(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let spec = ModelSpec::ols(vec![0]);
        let r = hblock_residuals(&data, &spec, 1).unwrap();
        // i = 3 (1-based) drops {2,3,4}: mean(1,5) = 3.
        assert!(r[2].abs() < 1e-14);
        // i = 1 drops {1,2}: mean(3,4,5) = 4.
        assert!((r[0] + 3.0).abs() < 1e-14);
        assert_close(&hblock_residuals_fast(&data, &spec, 1).unwrap(), &r, 1e-12);
    }

    #[test]
    fn hblock_zero_is_leave_one_out_bitwise() {
        let data = intercept_only(&[0.3, -1.2, 2.5, 0.7, 1.1, -0.4]);
        let spec = ModelSpec::ols(vec![0]);
        assert_eq!(hblock_residuals(&data, &spec, 0).unwrap(), loo_residuals_refit(&data, &spec).unwrap());
    }

    #[test]
    fn oversized_block_is_rejected() {
        let data = intercept_only(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let err = hblock_residuals(&data, &ModelSpec::ols(vec![0]), 2).unwrap_err();
        assert_eq!(err, Error::BlockTooLarge { width: 5, pdim: 1, t: 5 });
    }

    #[test]
    fn two_fold_hand_refit() {
        let data = intercept_only(&[1.0, 2.0, 3.0, 4.0]);
        let r = kfold_residuals(&data, &ModelSpec::ols(vec![0]), KFold::contiguous(2)).unwrap();
        assert_close(&r, &[-2.5, -1.5, 1.5, 2.5], 1e-14);
    }

    #[test]
    fn folds_are_contiguous_and_balanced() {
        let folds = fold_assignment(10, KFold::contiguous(3)).unwrap();
        assert_eq!(folds, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8, 9]]);
        assert_eq!(fold_assignment(5, KFold::contiguous(1)).unwrap_err(), Error::BadK { k: 1, t: 5 });
        assert_eq!(fold_assignment(5, KFold::contiguous(6)).unwrap_err(), Error::BadK { k: 6, t: 5 });
        let shuffled = fold_assignment(10, KFold { k: 3, shuffle_seed: Some(9) }).unwrap();
        let mut all: Vec<usize> = shuffled.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn singleton_folds_equal_leave_one_out() {
        let data = intercept_only(&[0.3, -1.2, 2.5, 0.7, 1.1, -0.4]);
        let spec = ModelSpec::ols(vec![0]);
        let kf = kfold_residuals(&data, &spec, KFold::contiguous(6)).unwrap();
        assert_close(&kf, &loo_residuals_refit(&data, &spec).unwrap(), 1e-12);
    }
}
