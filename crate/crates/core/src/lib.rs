//! Unsupervised dynamic sparse sampling for skeleton-like objects.
//!
//! The sampler starts from a small random measurement set, thresholds the
//! measured intensities with Otsu's method, clusters the bright measurement
//! locations with a BIC-selected Gaussian mixture and then measures the
//! unmeasured pixels closest (in Mahalanobis distance) to each cluster.
//! Clusters are refined hierarchically until each region is explained by a
//! single Gaussian or the sampling budget is spent.
//!
//! Module map:
//!
//! * [`imaging`]: ground-truth images, the point-wise measurement oracle,
//!   PGM I/O and a synthetic dendrite generator.
//! * [`threshold`]: Otsu's threshold.
//! * [`mixture`]: 2D Gaussian mixtures (EM, BIC model selection, prediction,
//!   Mahalanobis distance).
//! * [`sampler`]: the layer-wise and hierarchical sampling loops.
//! * [`metrics`]: PSNR, SSIM and the random-sampling baseline.

pub mod imaging;
pub mod metrics;
pub mod mixture;
pub mod sampler;
pub mod seed;
pub mod threshold;

pub use imaging::{Image, ImagingError, Location, MeasurementSet};
pub use metrics::{MetricsError, QualityReport};
pub use mixture::{GaussianComponent, GmmModel, MixtureError};
pub use sampler::{run_uslads, SamplerConfig, SamplerError, SamplingTrace};
pub use threshold::{otsu_threshold, Threshold, ThresholdError};
