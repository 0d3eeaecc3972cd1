//! Sample quantiles.

/// Median-unbiased sample quantile (Hyndman-Fan type 8).
///
/// With sorted values `x_1 ≤ .. ≤ x_n`, let `h = (n + 1/3) p + 1/3`. The
/// result is `x_1` for `h < 1`, `x_n` for `h ≥ n`, and otherwise
/// `x_⌊h⌋ + (h − ⌊h⌋)(x_⌊h⌋+1 − x_⌊h⌋)`. Infinite values are allowed.
pub fn quantile_type8(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n as f64 + 1.0 / 3.0) * p + 1.0 / 3.0;
    if h < 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let lo = h.floor();
    let frac = h - lo;
    let a = sorted[lo as usize - 1];
    let b = sorted[lo as usize];
    if frac == 0.0 || a == b {
        a
    } else {
        a + frac * (b - a)
    }
}

/// Sorts finite-or-infinite values (NaN last) and returns them.
pub fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    quantile_type8(&sorted(values), 0.5)
}
