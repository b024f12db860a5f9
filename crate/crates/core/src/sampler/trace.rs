use serde::{Deserialize, Serialize};

use crate::imaging::Location;

/// One oracle call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: usize,
    pub location: Location,
    pub intensity: u8,
    /// 0 for the initial random sample, otherwise the depth of the region
    /// whose layer selected the location (the full image is depth 1).
    pub depth: usize,
}

/// State of the measurement mask the first time the measured count reached
/// `ratio` of the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Nominal ratio (a multiple of the snapshot interval).
    pub ratio: f64,
    /// Measurements taken at the moment of the snapshot.
    pub count: usize,
    pub mask: Vec<bool>,
    /// Seconds since the run started. Not part of the deterministic record.
    pub elapsed: f64,
}

/// A region that ended as a single cluster (or could not be clustered).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinishedRegion {
    pub region_id: usize,
    pub depth: usize,
    /// Measured locations of the region when it was closed.
    pub measured: Vec<Location>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplingTrace {
    pub log: Vec<LogEntry>,
    pub snapshots: Vec<Snapshot>,
    /// Write-only record of finished regions, in completion order.
    pub finished: Vec<FinishedRegion>,
    /// Sweeps of the region hierarchy from the full image.
    pub passes: usize,
    /// Regions processed by a layer, including finished ones.
    pub regions_processed: usize,
    pub layer_iterations: usize,
    pub total_elapsed: f64,
}

impl SamplingTrace {
    /// Equality on everything except wall-clock timings.
    pub fn same_decisions(&self, other: &SamplingTrace) -> bool {
        self.log == other.log
            && self.finished == other.finished
            && self.passes == other.passes
            && self.regions_processed == other.regions_processed
            && self.layer_iterations == other.layer_iterations
            && self.snapshots.len() == other.snapshots.len()
            && self
                .snapshots
                .iter()
                .zip(&other.snapshots)
                .all(|(a, b)| a.ratio == b.ratio && a.count == b.count && a.mask == b.mask)
    }
}
