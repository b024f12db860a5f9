//! Two-dimensional Gaussian mixtures with full covariances.
//!
//! Points are `[row, col]` pixel coordinates. Models are fitted by EM
//! ([`fit_gmm`]), the component count is chosen by BIC ([`select_model`]) and
//! points are assigned to the component with the largest weighted density
//! ([`GmmModel::predict`]).

mod em;
mod linalg;
mod select;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use em::{fit_gmm, fit_gmm_traced, regularization, FitTrace, EM_TOLERANCE, MAX_EM_ITERATIONS};
pub use linalg::SymMat2;
pub use select::{bic, free_parameters, select_model};

pub type Point = [f64; 2];

#[derive(Debug, Error, PartialEq)]
pub enum MixtureError {
    #[error("component count must be at least 1")]
    ZeroComponents,
    #[error("{points} points cannot support {k} components")]
    TooFewPoints { points: usize, k: usize },
    #[error("no points to fit")]
    NoPoints,
    #[error("BIC needs n >= 1")]
    ZeroSampleSize,
    #[error("BIC sample size {given} does not match the {fitted} fitted points")]
    SampleSizeMismatch { given: usize, fitted: usize },
    #[error("covariance is singular after regularisation: {0:?}")]
    SingularCovariance(SymMat2),
    #[error("maximum cluster count must be at least 1")]
    ZeroMaxClusters,
}

pub type Result<T> = std::result::Result<T, MixtureError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Point,
    pub covariance: SymMat2,
}

impl GaussianComponent {
    /// `ln N(p; mean, covariance)`; `-inf` for a non-SPD covariance.
    pub fn log_density(&self, p: Point) -> f64 {
        let d = [p[0] - self.mean[0], p[1] - self.mean[1]];
        match self.covariance.inverse_quadratic(d) {
            Some(q) => -TAU.ln() - 0.5 * self.covariance.det().ln() - 0.5 * q,
            None => f64::NEG_INFINITY,
        }
    }

    pub fn mahalanobis(&self, p: Point) -> Result<f64> {
        mahalanobis(p, self.mean, &self.covariance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub components: Vec<GaussianComponent>,
    /// Training log-likelihood at the final parameters.
    pub log_likelihood: f64,
    pub n_points: usize,
}

impl GmmModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Index of the component maximising `weight * density` at `p`. Ties go to
    /// the lowest index.
    pub fn predict_one(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, c) in self.components.iter().enumerate() {
            let score = c.weight.ln() + c.log_density(p);
            if score > best_score {
                best = k;
                best_score = score;
            }
        }
        best
    }

    pub fn predict(&self, points: &[Point]) -> Vec<usize> {
        points.iter().map(|&p| self.predict_one(p)).collect()
    }

    pub fn bic(&self) -> f64 {
        bic(self, self.n_points).expect("a fitted model has at least one point")
    }
}

/// `sqrt((p - mean)^T cov^{-1} (p - mean))`.
pub fn mahalanobis(point: Point, mean: Point, cov: &SymMat2) -> Result<f64> {
    let d = [point[0] - mean[0], point[1] - mean[1]];
    cov.inverse_quadratic(d)
        .map(f64::sqrt)
        .ok_or(MixtureError::SingularCovariance(*cov))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn component(mean: Point) -> GaussianComponent {
        GaussianComponent {
            weight: 0.5,
            mean,
            covariance: SymMat2::IDENTITY,
        }
    }

    fn model(components: Vec<GaussianComponent>) -> GmmModel {
        GmmModel {
            components,
            log_likelihood: 0.0,
            n_points: 10,
        }
    }

    #[test]
    fn mahalanobis_hand_cases() {
        assert_eq!(
            mahalanobis([4.0, 2.0], [4.0, 2.0], &SymMat2::IDENTITY).unwrap(),
            0.0
        );
        assert_eq!(
            mahalanobis([3.0, 4.0], [0.0, 0.0], &SymMat2::IDENTITY).unwrap(),
            5.0
        );
        assert_eq!(
            mahalanobis([2.0, 0.0], [0.0, 0.0], &SymMat2::diag(4.0, 1.0)).unwrap(),
            1.0
        );
        assert!(matches!(
            mahalanobis([1.0, 0.0], [0.0, 0.0], &SymMat2::new(1.0, 1.0, 1.0)),
            Err(MixtureError::SingularCovariance(_))
        ));
    }

    #[test]
    fn predict_single_component() {
        let mut c = component([0.0, 0.0]);
        c.weight = 1.0;
        let m = model(vec![c]);
        assert_eq!(m.predict(&[[5.0, 5.0], [-100.0, 3.0]]), vec![0, 0]);
    }

    #[test]
    fn predict_nearer_mean_and_tie() {
        let m = model(vec![component([0.0, 0.0]), component([10.0, 0.0])]);
        assert_eq!(m.predict_one([1.0, 0.0]), 0);
        assert_eq!(m.predict_one([9.0, 0.0]), 1);
        assert_eq!(m.predict_one([5.0, 0.0]), 0);
        let twins = model(vec![component([0.0, 0.0]), component([0.0, 0.0])]);
        assert_eq!(twins.predict_one([3.0, 1.0]), 0);
    }

    #[test]
    fn log_density_at_mean_of_standard_normal() {
        let c = component([0.0, 0.0]);
        assert!((c.log_density([0.0, 0.0]) + TAU.ln()).abs() < 1e-15);
    }
}
