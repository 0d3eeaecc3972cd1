//! Datasets, candidate model descriptions and fit outputs.
//!
//! Observation indices are zero-based throughout the crate: observation `i`
//! is row `i` of the design. A rolling window of `R` observations therefore
//! produces its first forecast for row `R`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response, regressors and (for synthetic data) the true conditional mean
/// and true residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    truth: Option<Truth>,
    meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
struct Truth {
    mu: DVector<f64>,
    eps: DVector<f64>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::DimensionMismatch("dataset has no observations".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "response has {} rows but design has {}",
                y.len(),
                x.nrows()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::DimensionMismatch("design has no columns".into()));
        }
        if let Some(index) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: pos % x.nrows() });
        }
        Ok(Self { y: DVector::from_vec(y), x, truth: None, meta: BTreeMap::new() })
    }

    /// Builds a dataset from row-major regressor rows.
    pub fn from_rows(y: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} regressors, expected {ncols}",
                rows[bad].len()
            )));
        }
        let x = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Self::new(y, x)
    }

    /// Attaches the true conditional mean and residuals. `y` must equal
    /// `mu + eps` elementwise.
    pub fn with_truth(mut self, mu: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        let t = self.len();
        if mu.len() != t || eps.len() != t {
            return Err(Error::DimensionMismatch(format!(
                "truth vectors have lengths {} and {}, expected {t}",
                mu.len(),
                eps.len()
            )));
        }
        for i in 0..t {
            let gap = self.y[i] - mu[i] - eps[i];
            if !gap.is_finite() || gap.abs() > 1e-9 * (1.0 + self.y[i].abs()) {
                return Err(Error::DimensionMismatch(format!(
                    "y != mu_true + eps_true at observation {i}"
                )));
            }
        }
        self.truth = Some(Truth { mu: DVector::from_vec(mu), eps: DVector::from_vec(eps) });
        Ok(self)
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    /// Number of observations `T`.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn mu_true(&self) -> Option<&DVector<f64>> {
        self.truth.as_ref().map(|t| &t.mu)
    }

    pub fn eps_true(&self) -> Option<&DVector<f64>> {
        self.truth.as_ref().map(|t| &t.eps)
    }

    pub fn has_truth(&self) -> bool {
        self.truth.is_some()
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    /// Design restricted to `columns`, in the given order.
    pub fn design(&self, columns: &[usize]) -> DMatrix<f64> {
        self.x.select_columns(columns)
    }

    /// Multiplies the response (and the truth, when present) by `c`.
    pub fn scaled(&self, c: f64) -> Dataset {
        Dataset {
            y: &self.y * c,
            x: self.x.clone(),
            truth: self.truth.as_ref().map(|t| Truth { mu: &t.mu * c, eps: &t.eps * c }),
            meta: self.meta.clone(),
        }
    }

    pub(crate) fn truth_pair(&self) -> Result<(&DVector<f64>, &DVector<f64>)> {
        self.truth.as_ref().map(|t| (&t.mu, &t.eps)).ok_or(Error::MissingTruth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Epanechnikov,
    Uniform,
    Gaussian,
}

impl Kernel {
    pub fn weight(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov if u.abs() <= 1.0 => 0.75 * (1.0 - u * u),
            Kernel::Uniform if u.abs() <= 1.0 => 0.5,
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            _ => 0.0,
        }
    }

    /// Whether the kernel vanishes outside `[-1, 1]`.
    pub fn is_compact(self) -> bool {
        !matches!(self, Kernel::Gaussian)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Uniform => "uniform",
            Kernel::Gaussian => "gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    #[default]
    TwoSided,
    /// Only observations strictly before `i` enter the estimate at `i`.
    OneSidedPast,
}

/// How a candidate turns its columns into fitted means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    OlsSubset,
    Ridge { lambda: f64 },
    /// Locally weighted least squares in time; `bandwidth` is a fraction of
    /// the sample size.
    TvpKernel { bandwidth: f64, kernel: Kernel, side: Side },
}

/// One candidate model α.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub id: String,
    pub estimator: Estimator,
    pub columns: Vec<usize>,
}

impl ModelSpec {
    pub fn ols(columns: Vec<usize>) -> Self {
        let id = format!("ols:{}", join_columns(&columns));
        Self { id, estimator: Estimator::OlsSubset, columns }
    }

    pub fn ridge(columns: Vec<usize>, lambda: f64) -> Self {
        let id = format!("ridge({lambda}):{}", join_columns(&columns));
        Self { id, estimator: Estimator::Ridge { lambda }, columns }
    }

    pub fn tvp(columns: Vec<usize>, bandwidth: f64, kernel: Kernel, side: Side) -> Self {
        let side_tag = match side {
            Side::TwoSided => "",
            Side::OneSidedPast => ",past",
        };
        let id = format!("tvp({},b={bandwidth}{side_tag}):{}", kernel.name(), join_columns(&columns));
        Self { id, estimator: Estimator::TvpKernel { bandwidth, kernel, side }, columns }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Number of predictors p(α).
    pub fn pdim(&self) -> usize {
        self.columns.len()
    }

    /// Checks the spec against a design with `ncols` columns and `t` rows.
    pub fn validate(&self, ncols: usize, t: usize) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::InvalidModel(format!("{}: no columns selected", self.id)));
        }
        if let Some(&c) = self.columns.iter().find(|&&c| c >= ncols) {
            return Err(Error::DimensionMismatch(format!(
                "{}: column {c} out of range for {ncols} regressors",
                self.id
            )));
        }
        if self.pdim() >= t {
            return Err(Error::DimensionMismatch(format!(
                "{}: p = {} is not below T = {t}",
                self.id,
                self.pdim()
            )));
        }
        match self.estimator {
            Estimator::OlsSubset => {}
            Estimator::Ridge { lambda } => {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "{}: ridge penalty {lambda} must be nonnegative",
                        self.id
                    )));
                }
            }
            Estimator::TvpKernel { bandwidth, .. } => {
                if !(bandwidth > 0.0 && bandwidth.is_finite()) {
                    return Err(Error::BadBandwidth(bandwidth));
                }
            }
        }
        Ok(())
    }
}

fn join_columns(columns: &[usize]) -> String {
    columns.iter().map(usize::to_string).collect::<Vec<_>>().join("+")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Constant(DVector<f64>),
    /// One row of coefficients per observation (T × p).
    PerObservation(DMatrix<f64>),
}

impl Coefficients {
    /// Coefficients in force at observation `i`.
    pub fn at(&self, i: usize) -> DVector<f64> {
        match self {
            Coefficients::Constant(b) => b.clone(),
            Coefficients::PerObservation(m) => m.row(i).transpose(),
        }
    }
}

/// Output of a full-sample fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Coefficients,
    pub mu_hat: DVector<f64>,
    pub residuals: DVector<f64>,
    /// Diagonal of the hat matrix, when the estimator has one.
    pub leverage: Option<DVector<f64>>,
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rolling { window: usize },
    Recursive { t0: usize },
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Rolling { window } => write!(f, "rolling(R={window})"),
            Scheme::Recursive { t0 } => write!(f, "recursive(t0={t0})"),
        }
    }
}

/// One-step-ahead predictions for rows `start..T`, each built only from
/// rows before it.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrack {
    pub start: usize,
    pub preds: Vec<f64>,
    pub scheme: Scheme,
}

impl PredictionTrack {
    /// Observation indices the track predicts.
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.preds.len()
    }

    /// Forecast errors `y_i - pred_i` over the evaluation range.
    pub fn errors(&self, y: &DVector<f64>) -> Result<Vec<f64>> {
        if self.start + self.preds.len() > y.len() {
            return Err(Error::DimensionMismatch(format!(
                "track covers rows {}..{} but y has {} rows",
                self.start,
                self.start + self.preds.len(),
                y.len()
            )));
        }
        Ok(self.indices().zip(&self.preds).map(|(i, p)| y[i] - p).collect())
    }
}
