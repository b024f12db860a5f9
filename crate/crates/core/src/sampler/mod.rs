//! Hierarchical dynamic sampling.
//!
//! [`run_uslads`] seeds the measurement set with a uniform random sample and
//! then processes regions from a FIFO queue, starting with the full image.
//! Each region gets one [`layer_gmm`] pass. A region whose final mixture has
//! a single component is closed; otherwise it is split by predicted label
//! and the children are queued. The run stops as soon as the measured
//! fraction exceeds the stop ratio (checked after every layer iteration).
//! When the queue runs dry with budget left, a new pass starts again from the
//! full image; a pass that measures nothing ends the run.

mod layer;
mod region;
mod trace;

use std::collections::VecDeque;
use std::time::Instant;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{Image, ImagingError, Location, MeasurementSet};
use crate::mixture::MixtureError;
use crate::seed;

pub use layer::{
    layer_gmm, partition, segment, select_candidates, LayerOutcome, LayerStatus, MIN_FOREGROUND,
};
pub use region::{construct_region, Region};
pub use trace::{FinishedRegion, LogEntry, SamplingTrace, Snapshot};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("sampling ratio {0} outside (0, 1)")]
    InvalidRatio(f64),
    #[error("cannot sample {count} of {available} pixels")]
    TooManySamples { count: usize, available: usize },
    #[error("region has no members")]
    EmptyRegion,
    #[error("location {0:?} is not part of the parent region")]
    OutsideParent(Location),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
}

pub type Result<T> = std::result::Result<T, SamplerError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Stop once more than this fraction of the image is measured.
    pub stop_ratio: f64,
    /// Fraction measured uniformly at random before clustering starts.
    pub initial_ratio: f64,
    /// Threshold/cluster/measure iterations per region.
    pub maxiter: usize,
    /// Maximum measurements per cluster per iteration.
    pub epsilon: usize,
    /// Largest component count tried by BIC selection.
    pub n_max: usize,
    pub seed: u64,
    /// Interval between recorded snapshots, as a fraction of the image.
    pub snapshot_every: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            stop_ratio: 0.40,
            initial_ratio: 0.05,
            maxiter: 10,
            epsilon: 10,
            n_max: 10,
            seed: 0,
            snapshot_every: 0.05,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SamplerError::InvalidConfig(msg));
        if !(self.initial_ratio > 0.0 && self.initial_ratio < 1.0) {
            return bad(format!(
                "initial ratio {} must lie in (0, 1)",
                self.initial_ratio
            ));
        }
        if !(self.stop_ratio > self.initial_ratio && self.stop_ratio <= 1.0) {
            return bad(format!(
                "stop ratio {} must exceed the initial ratio {} and be at most 1",
                self.stop_ratio, self.initial_ratio
            ));
        }
        if self.maxiter == 0 || self.epsilon == 0 || self.n_max == 0 {
            return bad("maxiter, epsilon and max clusters must all be at least 1".into());
        }
        if !(self.snapshot_every > 0.0 && self.snapshot_every <= 1.0) {
            return bad(format!(
                "snapshot interval {} must lie in (0, 1]",
                self.snapshot_every
            ));
        }
        Ok(())
    }

    pub fn init_sample_seed(&self) -> u64 {
        seed::derive(self.seed, seed::INIT_SAMPLE)
    }

    pub fn gmm_seed(&self) -> u64 {
        seed::derive(self.seed, seed::GMM_INIT)
    }

    pub fn baseline_seed(&self) -> u64 {
        seed::derive(self.seed, seed::BASELINE)
    }
}

/// Smallest measurement count whose ratio reaches `ratio` of `total`.
pub fn count_for_ratio(ratio: f64, total: usize) -> usize {
    ((ratio * total as f64) - 1e-9).ceil().max(0.0) as usize
}

/// `count` distinct uniformly random pixels, measured in draw order.
pub fn random_sample(image: &Image, count: usize, seed: u64) -> Result<MeasurementSet> {
    let mut ms = MeasurementSet::for_image(image);
    for loc in random_locations(image, count, seed)? {
        ms.measure_from(image, loc)?;
    }
    Ok(ms)
}

fn random_locations(image: &Image, count: usize, seed: u64) -> Result<Vec<Location>> {
    let available = image.len();
    if count > available {
        return Err(SamplerError::TooManySamples { count, available });
    }
    let mut rng = seed::rng(seed);
    Ok(index::sample(&mut rng, available, count)
        .into_iter()
        .map(|i| Location::from_index(i, image.width()))
        .collect())
}

/// `floor(ratio * N)` uniformly random pixels without replacement.
pub fn initial_random_sample(image: &Image, ratio: f64, seed: u64) -> Result<MeasurementSet> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SamplerError::InvalidRatio(ratio));
    }
    let count = (ratio * image.len() as f64).floor() as usize;
    random_sample(image, count, seed)
}

/// The measurement oracle together with the global measurement set, the log
/// and the snapshot schedule. Every measurement goes through
/// [`Acquisition::measure`].
#[derive(Debug)]
pub struct Acquisition<'a> {
    image: &'a Image,
    measurements: MeasurementSet,
    trace: SamplingTrace,
    start: Instant,
    stop_ratio: f64,
    snapshot_every: f64,
    next_snapshot: usize,
}

impl<'a> Acquisition<'a> {
    pub fn new(image: &'a Image, cfg: &SamplerConfig) -> Self {
        Self {
            image,
            measurements: MeasurementSet::for_image(image),
            trace: SamplingTrace::default(),
            start: Instant::now(),
            stop_ratio: cfg.stop_ratio,
            snapshot_every: cfg.snapshot_every,
            next_snapshot: 1,
        }
    }

    pub fn image(&self) -> &'a Image {
        self.image
    }

    pub fn measurements(&self) -> &MeasurementSet {
        &self.measurements
    }

    pub fn trace(&self) -> &SamplingTrace {
        &self.trace
    }

    pub fn ratio(&self) -> f64 {
        self.measurements.ratio()
    }

    /// True once the measured fraction exceeds the stop ratio.
    pub fn budget_reached(&self) -> bool {
        self.ratio() > self.stop_ratio
    }

    /// Measures `loc` once. Measuring a location twice is an invariant breach.
    pub fn measure(&mut self, loc: Location, depth: usize) -> Result<u8> {
        assert!(
            !self.measurements.contains(loc),
            "location {loc:?} selected for a second measurement"
        );
        let value = self.measurements.measure_from(self.image, loc)?;
        self.trace.log.push(LogEntry {
            step: self.trace.log.len(),
            location: loc,
            intensity: value,
            depth,
        });
        self.take_snapshots();
        Ok(value)
    }

    fn nominal_ratio(&self, m: usize) -> f64 {
        (m as f64 * self.snapshot_every * 1e9).round() / 1e9
    }

    fn take_snapshots(&mut self) {
        let total = self.image.len();
        loop {
            let ratio = self.nominal_ratio(self.next_snapshot);
            if ratio > 1.0 || self.measurements.len() < count_for_ratio(ratio, total) {
                break;
            }
            self.trace.snapshots.push(Snapshot {
                ratio,
                count: self.measurements.len(),
                mask: self.measurements.mask().to_vec(),
                elapsed: self.start.elapsed().as_secs_f64(),
            });
            self.next_snapshot += 1;
        }
    }

    pub(crate) fn count_iteration(&mut self) {
        self.trace.layer_iterations += 1;
    }

    pub fn finish(mut self) -> (MeasurementSet, SamplingTrace) {
        self.trace.total_elapsed = self.start.elapsed().as_secs_f64();
        (self.measurements, self.trace)
    }
}

/// One breadth-first sweep of the region hierarchy, starting from the full
/// image. Returns when the queue is empty or the budget is spent.
fn hierarchy_pass(
    acq: &mut Acquisition<'_>,
    cfg: &SamplerConfig,
    next_id: &mut usize,
) -> Result<()> {
    let image = acq.image;
    let mut queue = VecDeque::from([Region::full(image.width(), image.height())]);
    while let Some(region) = queue.pop_front() {
        if acq.budget_reached() {
            break;
        }
        let outcome = layer_gmm(&region, cfg, acq)?;
        acq.trace.regions_processed += 1;
        if acq.budget_reached() {
            break;
        }
        match (&outcome.model, outcome.threshold) {
            (Some(model), Some(threshold)) if model.k() > 1 => {
                for members in partition(&region, model, threshold, acq) {
                    queue.push_back(construct_region(&region, *next_id, &members)?);
                    *next_id += 1;
                }
            }
            _ => {
                let measured = region
                    .measured(acq.measurements())
                    .into_iter()
                    .map(|(loc, _)| loc)
                    .collect();
                acq.trace.finished.push(FinishedRegion {
                    region_id: region.id,
                    depth: region.depth,
                    measured,
                });
            }
        }
    }
    Ok(())
}

/// Full hierarchical sampling run over `image`.
pub fn run_uslads(image: &Image, cfg: &SamplerConfig) -> Result<(MeasurementSet, SamplingTrace)> {
    cfg.validate()?;
    let mut acq = Acquisition::new(image, cfg);

    let initial = (cfg.initial_ratio * image.len() as f64).floor() as usize;
    for loc in random_locations(image, initial, cfg.init_sample_seed())? {
        acq.measure(loc, 0)?;
    }

    let mut next_id = 1;
    while !acq.budget_reached() {
        let before = acq.measurements.len();
        hierarchy_pass(&mut acq, cfg, &mut next_id)?;
        acq.trace.passes += 1;
        if acq.measurements.len() == before {
            log::info!("pass {} made no progress; stopping", acq.trace.passes);
            break;
        }
    }
    log::info!(
        "sampling finished: {} measurements ({:.4}), {} passes, {} regions, {} layer iterations",
        acq.measurements.len(),
        acq.ratio(),
        acq.trace.passes,
        acq.trace.regions_processed,
        acq.trace.layer_iterations
    );
    Ok(acq.finish())
}
