//! Synthetic data with a known conditional mean, and candidate model sets.
//!
//! Every dataset is drawn from a ChaCha8 stream. Streams are addressed by
//! mixing a base seed with replication coordinates through SplitMix64
//! ([`stream_seed`]), so a replication's data never depends on which thread
//! produced it or in what order.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Kernel, ModelSpec, Side};
use crate::error::{Error, Result};
use crate::estimators::{default_block_size, fit_tvp_kernel};

const AR_BURN_IN: usize = 200;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream at `coords` under `base`.
pub fn stream_seed(base: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(base), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Time path of the intercept in the time-varying family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TvpPath {
    /// `amplitude · sin(2π t / T)` for `t = 1..T`.
    Sine { amplitude: f64 },
    Constant { level: f64 },
}

impl Default for TvpPath {
    fn default() -> Self {
        TvpPath::Sine { amplitude: 1.0 }
    }
}

impl TvpPath {
    pub fn value(&self, t: usize, len: usize) -> f64 {
        match self {
            TvpPath::Sine { amplitude } => {
                amplitude * (2.0 * std::f64::consts::PI * t as f64 / len as f64).sin()
            }
            TvpPath::Constant { level } => *level,
        }
    }
}

fn default_degree() -> usize {
    5
}

fn default_scale() -> f64 {
    1.0
}

/// Data-generating regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// `y = c + xβ + σe`; design `[1, x_1..x_k]`.
    IidLinear,
    /// As `IidLinear` with `sd(ε_i) = σ (0.5 + |x_i1|)`.
    HeteroLinear,
    /// `y = c + xβ + u`, `u_t = ρ u_{t−1} + σe_t`. The conditional mean is
    /// taken given the past, `μ_t = c + x_tβ + ρ u_{t−1}`, so `ε_t = σe_t`.
    /// Design `[1, x_t, y_{t−1}, x_{t−1}]`.
    Ar1ErrorLinear { rho: f64 },
    /// `y_t = c + Σ φ_k y_{t−k} + σe_t`; design `[1, y_{t−1}, .., y_{t−L}]`.
    ArLags {
        phi: Vec<f64>,
        #[serde(default)]
        max_lag: Option<usize>,
    },
    /// Time-varying intercept along `path` plus constant slopes `β`.
    TvpSmooth {
        #[serde(default)]
        path: TvpPath,
    },
    /// `μ = c + scale · exp(x)`; design `[1, x, x², .., x^degree]`, so every
    /// polynomial candidate is misspecified.
    NonlinearTruth {
        #[serde(default = "default_degree")]
        degree: usize,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::IidLinear => "iid-linear",
            Family::HeteroLinear => "hetero-linear",
            Family::Ar1ErrorLinear { .. } => "ar1-error-linear",
            Family::ArLags { .. } => "ar-lags",
            Family::TvpSmooth { .. } => "tvp-smooth",
            Family::NonlinearTruth { .. } => "nonlinear-truth",
        }
    }

    fn default_beta(&self) -> Option<Vec<f64>> {
        match self {
            Family::IidLinear | Family::HeteroLinear | Family::Ar1ErrorLinear { .. } => {
                Some(vec![1.0, 0.5, 0.0])
            }
            Family::TvpSmooth { .. } => Some(vec![1.0]),
            Family::ArLags { .. } | Family::NonlinearTruth { .. } => None,
        }
    }
}

fn default_t() -> usize {
    200
}

fn default_noise() -> f64 {
    1.0
}

/// A fully specified data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub family: Family,
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_noise")]
    pub noise_sd: f64,
    /// Slopes on the generated regressors; family default when absent.
    #[serde(default)]
    pub beta_true: Option<Vec<f64>>,
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub seed: u64,
    /// Appends ⌊T^{1/3}⌋ irrelevant standard normal regressors to linear
    /// designs, so nested candidate sets grow with the sample.
    #[serde(default)]
    pub growing_regressors: bool,
}

impl DgpSpec {
    pub fn new(family: Family, t: usize, seed: u64) -> Self {
        Self { family, t, noise_sd: 1.0, beta_true: None, intercept: 0.0, seed, growing_regressors: false }
    }

    /// The default experiment: three standard normal regressors with slopes
    /// (1, 0.5, 0) and unit noise.
    pub fn baseline(t: usize, seed: u64) -> Self {
        Self::new(Family::IidLinear, t, seed)
    }

    pub fn with_t(&self, t: usize) -> Self {
        Self { t, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn beta(&self) -> Vec<f64> {
        self.beta_true.clone().or_else(|| self.family.default_beta()).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 20 {
            return Err(Error::BadSpec(format!("T = {} is below the minimum of 20", self.t)));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::BadSpec(format!("noise_sd = {} must be positive", self.noise_sd)));
        }
        if !self.intercept.is_finite() || self.beta().iter().any(|b| !b.is_finite()) {
            return Err(Error::BadSpec("coefficients must be finite".into()));
        }
        match &self.family {
            Family::IidLinear | Family::Ar1ErrorLinear { .. } => {}
            Family::HeteroLinear if self.beta().is_empty() => {
                return Err(Error::BadSpec("hetero-linear needs at least one regressor".into()));
            }
            Family::HeteroLinear | Family::TvpSmooth { .. } => {}
            Family::ArLags { .. } | Family::NonlinearTruth { .. } if self.beta_true.is_some() => {
                return Err(Error::BadSpec(format!("{} takes no beta_true", self.family.name())));
            }
            Family::ArLags { .. } | Family::NonlinearTruth { .. } => {}
        }
        match &self.family {
            Family::Ar1ErrorLinear { rho } if rho.is_nan() || rho.abs() >= 1.0 => {
                Err(Error::BadSpec(format!("|rho| = {} must be below 1", rho.abs())))
            }
            Family::ArLags { phi, max_lag } => {
                if phi.is_empty() || phi.iter().map(|p| p.abs()).sum::<f64>() >= 1.0 {
                    return Err(Error::BadSpec("ar-lags needs nonempty phi with sum |phi| < 1".into()));
                }
                if max_lag.is_some_and(|l| l < phi.len()) {
                    return Err(Error::BadSpec("max_lag is shorter than phi".into()));
                }
                Ok(())
            }
            Family::NonlinearTruth { degree, scale } if *degree == 0 || !scale.is_finite() => {
                Err(Error::BadSpec("nonlinear-truth needs degree >= 1 and a finite scale".into()))
            }
            _ => Ok(()),
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = normal(rng);
        }
    }
    m
}

/// Draws a dataset. The result depends only on `spec`.
pub fn generate(spec: &DgpSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let t = spec.t;
    let sd = spec.noise_sd;
    let c = spec.intercept;
    let beta = spec.beta();
    let k = beta.len();
    let slope = |x: &DMatrix<f64>, i: usize| (0..k).map(|j| x[(i, j)] * beta[j]).sum::<f64>();

    let (x, mu, eps) = match &spec.family {
        Family::IidLinear | Family::HeteroLinear | Family::TvpSmooth { .. } => {
            let raw = normal_matrix(&mut rng, t, k);
            let hetero = matches!(spec.family, Family::HeteroLinear);
            let mut mu = Vec::with_capacity(t);
            let mut eps = Vec::with_capacity(t);
            for i in 0..t {
                let level = match &spec.family {
                    Family::TvpSmooth { path } => path.value(i + 1, t),
                    _ => c,
                };
                mu.push(level + slope(&raw, i));
                let scale = if hetero { sd * (0.5 + raw[(i, 0)].abs()) } else { sd };
                eps.push(scale * normal(&mut rng));
            }
            let x = DMatrix::from_fn(t, k + 1, |i, j| if j == 0 { 1.0 } else { raw[(i, j - 1)] });
            (x, mu, eps)
        }
        Family::Ar1ErrorLinear { rho } => {
            let raw = normal_matrix(&mut rng, t + 1, k);
            let shocks: Vec<f64> = (0..=t).map(|_| sd * normal(&mut rng)).collect();
            let mut ys = vec![0.0; t + 1];
            let mut u_prev = shocks[0] / (1.0 - rho * rho).sqrt();
            ys[0] = c + slope(&raw, 0) + u_prev;
            let mut mu = Vec::with_capacity(t);
            for s in 1..=t {
                let m = c + slope(&raw, s) + rho * u_prev;
                ys[s] = m + shocks[s];
                u_prev = ys[s] - c - slope(&raw, s);
                mu.push(m);
            }
            let x = DMatrix::from_fn(t, 2 * k + 2, |i, j| {
                let s = i + 1;
                match j {
                    0 => 1.0,
                    j if j <= k => raw[(s, j - 1)],
                    j if j == k + 1 => ys[s - 1],
                    j => raw[(s - 1, j - k - 2)],
                }
            });
            (x, mu, shocks[1..].to_vec())
        }
        Family::ArLags { phi, max_lag } => {
            let lags = max_lag.unwrap_or(phi.len());
            let total = AR_BURN_IN + t;
            let mut ys = vec![0.0; total + lags];
            let mut mu = Vec::with_capacity(t);
            let mut eps = Vec::with_capacity(t);
            for s in lags..total + lags {
                let m = c + phi.iter().enumerate().map(|(l, p)| p * ys[s - l - 1]).sum::<f64>();
                let e = sd * normal(&mut rng);
                ys[s] = m + e;
                if s >= lags + AR_BURN_IN {
                    mu.push(m);
                    eps.push(e);
                }
            }
            let first = lags + AR_BURN_IN;
            let x = DMatrix::from_fn(t, lags + 1, |i, j| if j == 0 { 1.0 } else { ys[first + i - j] });
            (x, mu, eps)
        }
        Family::NonlinearTruth { degree, scale } => {
            let z: Vec<f64> = (0..t).map(|_| normal(&mut rng)).collect();
            let mu: Vec<f64> = z.iter().map(|v| c + scale * v.exp()).collect();
            let eps: Vec<f64> = (0..t).map(|_| sd * normal(&mut rng)).collect();
            let x = DMatrix::from_fn(t, degree + 1, |i, j| z[i].powi(j as i32));
            (x, mu, eps)
        }
    };

    let x = if spec.growing_regressors && !matches!(spec.family, Family::NonlinearTruth { .. }) {
        let extra = normal_matrix(&mut rng, t, default_block_size(t));
        let base = x.ncols();
        DMatrix::from_fn(t, base + extra.ncols(), |i, j| if j < base { x[(i, j)] } else { extra[(i, j - base)] })
    } else {
        x
    };

    let y: Vec<f64> = mu.iter().zip(&eps).map(|(m, e)| m + e).collect();
    Ok(Dataset::new(y, x)?
        .with_truth(mu, eps)?
        .with_meta("family", spec.family.name())
        .with_meta("seed", spec.seed.to_string())
        .with_meta("t", t.to_string()))
}

fn default_kernel() -> Kernel {
    Kernel::Epanechnikov
}

/// Recipe for a candidate model set 𝒜.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CandidateKind {
    /// Model `d` uses columns `0..=d` (powers `0..=d` when the design is a
    /// polynomial basis), for `d = 0..=max_deg`.
    NestedPolynomial { max_deg: usize },
    /// Column 0 plus every subset of columns `1..=pmax`, ordered by bitmask.
    SubsetLattice { pmax: usize },
    /// Column 0 plus every union of the listed column groups.
    GroupLattice { groups: Vec<Vec<usize>> },
    /// Ridge fits on shared columns (all columns when absent).
    RidgeGrid {
        lambdas: Vec<f64>,
        #[serde(default)]
        columns: Option<Vec<usize>>,
    },
    /// Time-varying kernel fits, one per bandwidth.
    BandwidthGrid {
        bandwidths: Vec<f64>,
        #[serde(default = "default_kernel")]
        kernel: Kernel,
        #[serde(default)]
        side: Side,
        #[serde(default)]
        columns: Option<Vec<usize>>,
    },
}

fn lattice(base: usize, groups: &[Vec<usize>]) -> Vec<ModelSpec> {
    (0u64..1 << groups.len())
        .map(|mask| {
            let mut cols = vec![base];
            for (g, group) in groups.iter().enumerate() {
                if mask >> g & 1 == 1 {
                    cols.extend(group);
                }
            }
            ModelSpec::ols(cols)
        })
        .collect()
}

/// Builds the candidate list for `data`. Deterministic and ordered.
pub fn candidate_set(kind: &CandidateKind, data: &Dataset) -> Result<Vec<ModelSpec>> {
    let ncols = data.ncols();
    let t = data.len();
    let all_columns = || (0..ncols).collect::<Vec<_>>();
    let models = match kind {
        CandidateKind::NestedPolynomial { max_deg } => {
            if max_deg + 1 > ncols {
                return Err(Error::BadGrid(format!("degree {max_deg} needs {} columns, have {ncols}", max_deg + 1)));
            }
            (0..=*max_deg).map(|d| ModelSpec::ols((0..=d).collect())).collect()
        }
        CandidateKind::SubsetLattice { pmax } => {
            if *pmax == 0 || pmax + 1 > ncols || *pmax > 20 {
                return Err(Error::BadGrid(format!("subset lattice over {pmax} of {} columns", ncols - 1)));
            }
            let groups: Vec<Vec<usize>> = (1..=*pmax).map(|c| vec![c]).collect();
            lattice(0, &groups)
        }
        CandidateKind::GroupLattice { groups } => {
            if groups.is_empty() || groups.len() > 20 || groups.iter().any(Vec::is_empty) {
                return Err(Error::BadGrid("group lattice needs 1..=20 nonempty groups".into()));
            }
            lattice(0, groups)
        }
        CandidateKind::RidgeGrid { lambdas, columns } => {
            let cols = columns.clone().unwrap_or_else(all_columns);
            if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
                return Err(Error::BadGrid(format!("ridge penalty {l} must be nonnegative")));
            }
            lambdas.iter().map(|&l| ModelSpec::ridge(cols.clone(), l)).collect()
        }
        CandidateKind::BandwidthGrid { bandwidths, kernel, side, columns } => {
            let cols = columns.clone().unwrap_or_else(all_columns);
            let models: Vec<ModelSpec> =
                bandwidths.iter().map(|&b| ModelSpec::tvp(cols.clone(), b, *kernel, *side)).collect();
            for m in &models {
                fit_tvp_kernel(data, m).map_err(|e| Error::BadGrid(format!("{}: {e}", m.id)))?;
            }
            models
        }
    };
    if models.is_empty() {
        return Err(Error::BadGrid("empty candidate grid".into()));
    }
    for m in &models {
        m.validate(ncols, t).map_err(|e| Error::BadGrid(e.to_string()))?;
    }
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_seeds_separate_coordinates() {
        let a = stream_seed(1, &[100, 0]);
        assert_ne!(a, stream_seed(1, &[100, 1]));
        assert_ne!(a, stream_seed(1, &[0, 100]));
        assert_ne!(a, stream_seed(2, &[100, 0]));
        assert_eq!(a, stream_seed(1, &[100, 0]));
    }

    #[test]
    fn lattice_sizes_and_order() {
        let data = generate(&DgpSpec::baseline(50, 3)).unwrap();
        let set = candidate_set(&CandidateKind::SubsetLattice { pmax: 3 }, &data).unwrap();
        assert_eq!(set.len(), 8);
        assert_eq!(set[0].columns, vec![0]);
        assert_eq!(set[3].columns, vec![0, 1, 2]);
        assert_eq!(set[7].columns, vec![0, 1, 2, 3]);
    }

    #[test]
    fn nested_polynomial_dimensions() {
        let spec = DgpSpec::new(Family::NonlinearTruth { degree: 5, scale: 1.0 }, 60, 1);
        let data = generate(&spec).unwrap();
        let set = candidate_set(&CandidateKind::NestedPolynomial { max_deg: 3 }, &data).unwrap();
        assert_eq!(set.iter().map(ModelSpec::pdim).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert!(candidate_set(&CandidateKind::NestedPolynomial { max_deg: 6 }, &data).is_err());
    }

    #[test]
    fn ridge_grid_shares_columns() {
        let data = generate(&DgpSpec::baseline(40, 3)).unwrap();
        let set = candidate_set(&CandidateKind::RidgeGrid { lambdas: vec![0.0, 1.0, 10.0], columns: None }, &data)
            .unwrap();
        assert_eq!(set.len(), 3);
        assert!(set.iter().all(|m| m.columns == vec![0, 1, 2, 3]));
        assert!(candidate_set(&CandidateKind::RidgeGrid { lambdas: vec![-1.0], columns: None }, &data).is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(generate(&DgpSpec::baseline(10, 0)).is_err());
        let mut s = DgpSpec::baseline(50, 0);
        s.noise_sd = 0.0;
        assert!(generate(&s).is_err());
        assert!(generate(&DgpSpec::new(Family::Ar1ErrorLinear { rho: 1.0 }, 50, 0)).is_err());
        assert!(generate(&DgpSpec::new(Family::ArLags { phi: vec![0.7, 0.4], max_lag: None }, 50, 0)).is_err());
    }

    #[test]
    fn ar1_design_layout() {
        let data = generate(&DgpSpec::new(Family::Ar1ErrorLinear { rho: 0.5 }, 40, 5)).unwrap();
        assert_eq!(data.ncols(), 8);
        let y = data.y();
        for i in 1..40 {
            assert_eq!(data.x()[(i, 4)], y[i - 1]);
            for j in 1..=3 {
                assert_eq!(data.x()[(i, j + 4)], data.x()[(i - 1, j)]);
            }
        }
    }

    #[test]
    fn growing_design_adds_cube_root_columns() {
        let mut s = DgpSpec::baseline(125, 2);
        s.growing_regressors = true;
        assert_eq!(generate(&s).unwrap().ncols(), 4 + 5);
    }
}
