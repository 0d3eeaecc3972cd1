//! Candidate-model fits in full-sample, leave-out, blocked, rolling,
//! recursive and time-varying-parameter modes.

mod leave_out;
mod linear;
mod poos;
mod tvp;

pub use leave_out::{
    fold_assignment, hblock_residuals, hblock_residuals_fast, kfold_residuals, loo_residuals_fast,
    loo_residuals_refit, KFold,
};
pub use linear::{fit_ols, fit_ridge};
pub use poos::{recursive_track, recursive_track_batch, rolling_track, rolling_track_batch};
pub use tvp::{fit_tvp_kernel, tvp_block_spread};

use crate::data::{Dataset, Estimator, FitResult, ModelSpec};
use crate::error::Result;

/// Full-sample fit for any estimator kind.
pub fn fit(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    match spec.estimator {
        Estimator::OlsSubset => fit_ols(data, spec),
        Estimator::Ridge { .. } => fit_ridge(data, spec),
        Estimator::TvpKernel { .. } => fit_tvp_kernel(data, spec),
    }
}

/// Default h-block half width, ⌊T^{1/3}⌋.
pub fn default_block_size(t: usize) -> usize {
    integer_root_floor(t as u128, 1, 3) as usize
}

/// Default rolling window, ⌊T^{2/3}⌋.
pub fn default_window(t: usize) -> usize {
    integer_root_floor(t as u128, 2, 3) as usize
}

/// Default recursive start: the largest candidate dimension plus ten.
pub fn default_recursive_start(pmax: usize) -> usize {
    pmax + 10
}

/// ⌊value^{num/den}⌋ computed exactly in integers.
pub(crate) fn integer_root_floor(value: u128, num: u32, den: u32) -> u128 {
    let target = value.pow(num);
    let mut r = (target as f64).powf(1.0 / den as f64).floor() as u128;
    while r > 0 && r.pow(den) > target {
        r -= 1;
    }
    while (r + 1).pow(den) <= target {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_use_exact_integer_roots() {
        assert_eq!(default_block_size(1000), 10);
        assert_eq!(default_block_size(999), 9);
        assert_eq!(default_block_size(1600), 11);
        assert_eq!(default_window(1000), 100);
        assert_eq!(default_window(100), 21);
        assert_eq!(default_window(1600), 136);
        assert_eq!(default_recursive_start(4), 14);
    }
}
