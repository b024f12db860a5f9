//! Image quality of unreconstructed sampled images, and the random-sampling
//! baseline the sampler is compared against.
//!
//! SSIM recipe: mean over every 8x8 window (stride 1) of
//! `((2 mx my + C1)(2 sxy + C2)) / ((mx^2 + my^2 + C1)(sx^2 + sy^2 + C2))`
//! with uniform window weights, population (divide-by-64) moments,
//! `C1 = (0.01 * 255)^2` and `C2 = (0.03 * 255)^2`.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{sampled_image, Image, ImagingError, MeasurementSet};
use crate::sampler::{random_sample, SamplerError};
use crate::seed;

pub const MAX_VALUE: f64 = 255.0;
pub const SSIM_WINDOW: usize = 8;
pub const SSIM_C1: f64 = (0.01 * MAX_VALUE) * (0.01 * MAX_VALUE);
pub const SSIM_C2: f64 = (0.03 * MAX_VALUE) * (0.03 * MAX_VALUE);

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("{0}x{1} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")]
    TooSmall(usize, usize),
    #[error("sampling ratio {0} outside (0, 1]")]
    InvalidRatio(f64),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Sampling(#[from] SamplerError),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

fn check_shape(a: &Image, b: &Image) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MetricsError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    Ok(())
}

pub fn mse(reference: &Image, test: &Image) -> Result<f64> {
    check_shape(reference, test)?;
    let sum: f64 = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    let err = mse(reference, test)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (MAX_VALUE * MAX_VALUE / err).log10())
}

/// Mean structural similarity over all 8x8 windows.
pub fn ssim(reference: &Image, test: &Image) -> Result<f64> {
    check_shape(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricsError::TooSmall(w, h));
    }
    let x = reference.data();
    let y = test.data();
    let area = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    for r0 in 0..=h - SSIM_WINDOW {
        for c0 in 0..=w - SSIM_WINDOW {
            let (mut sx, mut sy) = (0.0, 0.0);
            for r in r0..r0 + SSIM_WINDOW {
                for c in c0..c0 + SSIM_WINDOW {
                    sx += f64::from(x[r * w + c]);
                    sy += f64::from(y[r * w + c]);
                }
            }
            let (mx, my) = (sx / area, sy / area);
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for r in r0..r0 + SSIM_WINDOW {
                for c in c0..c0 + SSIM_WINDOW {
                    let dx = f64::from(x[r * w + c]) - mx;
                    let dy = f64::from(y[r * w + c]) - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            }
            let (vx, vy, cxy) = (vx / area, vy / area, cxy / area);
            total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2))
                / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
        }
    }
    let windows = (h - SSIM_WINDOW + 1) * (w - SSIM_WINDOW + 1);
    Ok(total / windows as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// Measured fraction of the image.
    pub ratio: f64,
    /// `f64::INFINITY` when the sampled image equals the truth.
    pub psnr_db: f64,
    pub ssim: f64,
    /// Wall-clock seconds spent producing the measurements.
    pub elapsed: f64,
}

impl QualityReport {
    /// Scores the zero-filled sampled image of `ms` against `truth`.
    pub fn evaluate(truth: &Image, ms: &MeasurementSet, elapsed: f64) -> Result<Self> {
        let sampled = sampled_image(truth, ms)?;
        Ok(Self {
            ratio: ms.ratio(),
            psnr_db: psnr(truth, &sampled)?,
            ssim: ssim(truth, &sampled)?,
            elapsed,
        })
    }
}

/// Formats a value for CSV output: shortest round-trip representation, with
/// infinite PSNR written as `inf`.
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}

/// Uniform random mask of exactly `count` pixels, scored on the unreconstructed
/// sampled image. `seed` is used directly (no sub-stream derivation).
pub fn random_baseline_count(
    image: &Image,
    count: usize,
    seed: u64,
) -> Result<(MeasurementSet, QualityReport)> {
    let start = Instant::now();
    let ms = random_sample(image, count, seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    let report = QualityReport::evaluate(image, &ms, elapsed)?;
    Ok((ms, report))
}

/// Random baseline at `floor(ratio * N)` pixels; the mask is drawn from the
/// baseline sub-stream of `seed`.
pub fn random_baseline(
    image: &Image,
    ratio: f64,
    seed: u64,
) -> Result<(MeasurementSet, QualityReport)> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(MetricsError::InvalidRatio(ratio));
    }
    let count = (ratio * image.len() as f64).floor() as usize;
    random_baseline_count(image, count, seed::derive(seed, seed::BASELINE))
}
