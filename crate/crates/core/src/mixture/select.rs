//! Component-count selection by the Bayesian information criterion.

use super::{fit_gmm, GmmModel, MixtureError, Point, Result};

/// Free parameters of a `k`-component full-covariance 2D mixture:
/// `k - 1` weights, `2k` mean coordinates and `3k` covariance entries.
pub fn free_parameters(k: usize) -> usize {
    6 * k - 1
}

/// `-2 ln L + p ln n`; lower is better.
pub fn bic(model: &GmmModel, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(MixtureError::ZeroSampleSize);
    }
    if n != model.n_points {
        return Err(MixtureError::SampleSizeMismatch {
            given: n,
            fitted: model.n_points,
        });
    }
    Ok(-2.0 * model.log_likelihood + free_parameters(model.k()) as f64 * (n as f64).ln())
}

/// Scans `k = 1..=n_max` and returns the lowest-BIC fit.
///
/// The scan only runs when there are more points than `n_max`; otherwise a
/// single-component model is returned. Equal scores keep the smaller `k`.
pub fn select_model(points: &[Point], n_max: usize, seed: u64) -> Result<GmmModel> {
    if points.is_empty() {
        return Err(MixtureError::NoPoints);
    }
    if n_max == 0 {
        return Err(MixtureError::ZeroMaxClusters);
    }
    if points.len() <= n_max {
        return fit_gmm(points, 1, seed);
    }
    let mut best: Option<(f64, GmmModel)> = None;
    for k in 1..=n_max {
        let model = fit_gmm(points, k, seed)?;
        let score = model.bic();
        log::trace!("bic k={k} score={score}");
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, model));
        }
    }
    // Fits are deterministic per (points, k, seed), so the winning candidate
    // is exactly what a refit at its k would produce.
    Ok(best.expect("n_max >= 1 yields a candidate").1)
}
