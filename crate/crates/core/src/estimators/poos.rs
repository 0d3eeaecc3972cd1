//! Pseudo-out-of-sample forecast tracks.
//!
//! The fast tracks update normal equations incrementally (a sliding Gram
//! matrix for rolling windows, Sherman-Morrison updates of the inverse Gram
//! matrix for recursive estimation). The `*_batch` variants refit every
//! window from scratch with QR and exist to check the fast paths.
//!
//! Time-varying kernel models forecast with their one-sided (past-only)
//! kernel estimate; the scheme then only fixes where evaluation starts.

use nalgebra::{DMatrix, DVector};

use super::linear::{coefficients_on_rows, linear_penalty};
use super::tvp::tvp_past_predictions;
use crate::data::{Dataset, ModelSpec, PredictionTrack, Scheme};
use crate::error::{Error, Result};
use crate::linalg;

fn check_start(data: &Dataset, spec: &ModelSpec, start: usize) -> Result<()> {
    spec.validate(data.ncols(), data.len())?;
    let t = data.len();
    if start <= spec.pdim() || start >= t {
        return Err(Error::WindowTooSmall { window: start, pdim: spec.pdim(), t });
    }
    Ok(())
}

/// Forecasts for rows `R..T`, each from a fit on the previous `R` rows.
pub fn rolling_track(data: &Dataset, spec: &ModelSpec, window: usize) -> Result<PredictionTrack> {
    check_start(data, spec, window)?;
    let scheme = Scheme::Rolling { window };
    let Some(lambda) = linear_penalty(spec) else {
        let preds = tvp_past_predictions(data, spec, window)?;
        return Ok(PredictionTrack { start: window, preds, scheme });
    };
    let x = data.design(&spec.columns);
    let y = data.y();
    let (t, p) = x.shape();
    let mut gram = DMatrix::from_diagonal_element(p, p, lambda);
    let mut rhs = DVector::zeros(p);
    for j in 0..window {
        linalg::accumulate(&mut gram, &mut rhs, &x, j, y[j], 1.0);
    }
    let mut preds = Vec::with_capacity(t - window);
    for i in window..t {
        let beta = linalg::solve_gram(gram.clone(), &rhs)?;
        preds.push(linalg::row_dot(&x, i, &beta));
        linalg::accumulate(&mut gram, &mut rhs, &x, i, y[i], 1.0);
        linalg::accumulate(&mut gram, &mut rhs, &x, i - window, y[i - window], -1.0);
    }
    Ok(PredictionTrack { start: window, preds, scheme })
}

/// Forecasts for rows `t0..T`, each from a fit on every earlier row.
pub fn recursive_track(data: &Dataset, spec: &ModelSpec, t0: usize) -> Result<PredictionTrack> {
    check_start(data, spec, t0)?;
    let scheme = Scheme::Recursive { t0 };
    let Some(lambda) = linear_penalty(spec) else {
        let preds = tvp_past_predictions(data, spec, t0)?;
        return Ok(PredictionTrack { start: t0, preds, scheme });
    };
    let x = data.design(&spec.columns);
    let y = data.y();
    let (t, p) = x.shape();
    let mut gram = DMatrix::from_diagonal_element(p, p, lambda);
    let mut rhs = DVector::zeros(p);
    for j in 0..t0 {
        linalg::accumulate(&mut gram, &mut rhs, &x, j, y[j], 1.0);
    }
    let mut beta = linalg::solve_gram(gram.clone(), &rhs)?;
    let mut inv = linalg::inverse_gram(gram)?;
    let mut preds = Vec::with_capacity(t - t0);
    for i in t0..t {
        let xi = x.row(i).transpose();
        let pred = xi.dot(&beta);
        preds.push(pred);
        let px = &inv * &xi;
        let denom = 1.0 + xi.dot(&px);
        beta.axpy((y[i] - pred) / denom, &px, 1.0);
        inv.ger(-1.0 / denom, &px, &px, 1.0);
    }
    Ok(PredictionTrack { start: t0, preds, scheme })
}

fn batch_track(
    data: &Dataset,
    spec: &ModelSpec,
    start: usize,
    scheme: Scheme,
    rows_for: impl Fn(usize) -> std::ops::Range<usize>,
) -> Result<PredictionTrack> {
    check_start(data, spec, start)?;
    let Some(lambda) = linear_penalty(spec) else {
        let preds = tvp_past_predictions(data, spec, start)?;
        return Ok(PredictionTrack { start, preds, scheme });
    };
    let x = data.design(&spec.columns);
    let y = data.y();
    let preds = (start..data.len())
        .map(|i| {
            let rows: Vec<usize> = rows_for(i).collect();
            let beta = coefficients_on_rows(&x, y, &rows, lambda)?;
            Ok(linalg::row_dot(&x, i, &beta))
        })
        .collect::<Result<_>>()?;
    Ok(PredictionTrack { start, preds, scheme })
}

/// Reference rolling track: an independent QR refit on every window.
pub fn rolling_track_batch(data: &Dataset, spec: &ModelSpec, window: usize) -> Result<PredictionTrack> {
    batch_track(data, spec, window, Scheme::Rolling { window }, |i| i - window..i)
}

/// Reference recursive track: an independent QR refit on every prefix.
pub fn recursive_track_batch(data: &Dataset, spec: &ModelSpec, t0: usize) -> Result<PredictionTrack> {
    batch_track(data, spec, t0, Scheme::Recursive { t0 }, |i| 0..i)
}
