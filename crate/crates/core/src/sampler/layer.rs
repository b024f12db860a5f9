//! One sampling layer: threshold, cluster, rank and measure, repeated
//! `maxiter` times over a region.

use crate::imaging::Location;
use crate::mixture::{select_model, GmmModel};
use crate::threshold::{otsu_threshold, Threshold};

use super::{Acquisition, Region, Result, SamplerConfig};

/// Regions with fewer bright measurements than this are not clustered.
pub const MIN_FOREGROUND: usize = 3;

/// Measured locations whose intensity is at least `threshold`, in input order.
pub fn segment(entries: &[(Location, u8)], threshold: Threshold) -> Vec<Location> {
    entries
        .iter()
        .filter(|(_, v)| threshold.is_foreground(*v))
        .map(|(loc, _)| *loc)
        .collect()
}

/// For every component, the (at most) `epsilon` unmeasured candidates
/// predicted into it with the smallest Mahalanobis distance to its mean.
/// Equal distances are ordered by linear index.
pub fn select_candidates(
    model: &GmmModel,
    candidates: &[Location],
    epsilon: usize,
    width: usize,
) -> Result<Vec<Vec<Location>>> {
    let mut per_cluster: Vec<Vec<(f64, usize, Location)>> = vec![Vec::new(); model.k()];
    for &loc in candidates {
        let p = loc.point();
        let k = model.predict_one(p);
        let d = model.components[k].mahalanobis(p)?;
        per_cluster[k].push((d, loc.index(width), loc));
    }
    Ok(per_cluster
        .into_iter()
        .map(|mut ranked| {
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            ranked
                .into_iter()
                .take(epsilon)
                .map(|(_, _, l)| l)
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerStatus {
    /// Ran all `maxiter` iterations.
    Completed,
    /// Every region member is measured.
    FullyMeasured,
    /// Fewer than [`MIN_FOREGROUND`] measured pixels at or above the threshold.
    TooFewForeground,
    /// The global sampling budget was exhausted.
    BudgetReached,
}

#[derive(Debug, Clone)]
pub struct LayerOutcome {
    /// Mixture of the last iteration that clustered, or `None` when the last
    /// attempt could not cluster.
    pub model: Option<GmmModel>,
    /// Threshold used by the last clustering iteration.
    pub threshold: Option<Threshold>,
    pub iterations: usize,
    pub new_measurements: usize,
    pub status: LayerStatus,
}

/// Runs up to `cfg.maxiter` threshold/cluster/measure iterations on `region`.
pub fn layer_gmm(
    region: &Region,
    cfg: &SamplerConfig,
    acq: &mut Acquisition<'_>,
) -> Result<LayerOutcome> {
    let mut outcome = LayerOutcome {
        model: None,
        threshold: None,
        iterations: 0,
        new_measurements: 0,
        status: LayerStatus::Completed,
    };
    let gmm_seed = cfg.gmm_seed();
    for _ in 0..cfg.maxiter {
        if acq.budget_reached() {
            outcome.status = LayerStatus::BudgetReached;
            break;
        }
        let unmeasured = region.unmeasured(acq.measurements());
        if unmeasured.is_empty() {
            outcome.status = LayerStatus::FullyMeasured;
            break;
        }
        let measured = region.measured(acq.measurements());
        let intensities: Vec<u8> = measured.iter().map(|&(_, v)| v).collect();
        let Ok(threshold) = otsu_threshold(&intensities) else {
            // Nothing measured in this region yet: nothing to threshold.
            outcome.model = None;
            outcome.status = LayerStatus::TooFewForeground;
            break;
        };
        let foreground = segment(&measured, threshold);
        if foreground.len() < MIN_FOREGROUND {
            outcome.model = None;
            outcome.threshold = Some(threshold);
            outcome.status = LayerStatus::TooFewForeground;
            break;
        }
        let points: Vec<[f64; 2]> = foreground.iter().map(|l| l.point()).collect();
        let model = select_model(&points, cfg.n_max, gmm_seed)?;
        let picks = select_candidates(&model, &unmeasured, cfg.epsilon, region.width())?;
        log::debug!(
            "region {} depth {}: tau={} fg={} k={} unmeasured={}",
            region.id,
            region.depth,
            threshold.value(),
            foreground.len(),
            model.k(),
            unmeasured.len()
        );
        for loc in picks.into_iter().flatten() {
            acq.measure(loc, region.depth)?;
            outcome.new_measurements += 1;
        }
        acq.count_iteration();
        outcome.iterations += 1;
        outcome.model = Some(model);
        outcome.threshold = Some(threshold);
    }
    Ok(outcome)
}

/// Splits `region` by the labels of `model`: child `k` holds the measured
/// members at or above `threshold` and the unmeasured members predicted into
/// component `k`. Empty children are dropped. Returned lists are in
/// linear-index order.
pub fn partition(
    region: &Region,
    model: &GmmModel,
    threshold: Threshold,
    acq: &Acquisition<'_>,
) -> Vec<Vec<Location>> {
    let global = acq.measurements();
    let image = acq.image();
    let mut groups = vec![Vec::new(); model.k()];
    for &loc in region.members() {
        let keep = match global.contains(loc) {
            true => threshold.is_foreground(image.get(loc).expect("member inside image")),
            false => true,
        };
        if keep {
            groups[model.predict_one(loc.point())].push(loc);
        }
    }
    groups.retain(|g: &Vec<Location>| !g.is_empty());
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{Image, MeasurementSet};
    use crate::mixture::{GaussianComponent, SymMat2};

    #[test]
    fn segment_filters_and_keeps_order() {
        let entries = [(Location::new(0, 0), 10), (Location::new(0, 1), 200)];
        assert_eq!(segment(&entries, Threshold(100)), vec![Location::new(0, 1)]);
        assert_eq!(
            segment(&entries, Threshold(0)),
            vec![Location::new(0, 0), Location::new(0, 1)]
        );
        assert!(segment(&entries, Threshold(201)).is_empty());
    }

    #[test]
    fn ties_are_broken_by_linear_index() {
        let model = GmmModel {
            components: vec![GaussianComponent {
                weight: 1.0,
                mean: [2.0, 2.0],
                covariance: SymMat2::IDENTITY,
            }],
            log_likelihood: 0.0,
            n_points: 5,
        };
        // Four candidates at distance 1 and one at distance 0.
        let cands = [
            Location::new(3, 2),
            Location::new(2, 3),
            Location::new(2, 1),
            Location::new(1, 2),
            Location::new(2, 2),
        ];
        let picks = select_candidates(&model, &cands, 3, 5).unwrap();
        assert_eq!(
            picks,
            vec![vec![
                Location::new(2, 2),
                Location::new(1, 2),
                Location::new(2, 1)
            ]]
        );
    }

    #[test]
    fn fully_measured_region_is_left_alone() {
        let truth = Image::new(4, 4, (0..16).map(|v| v as u8 * 10).collect()).unwrap();
        let cfg = SamplerConfig {
            stop_ratio: 1.0,
            ..Default::default()
        };
        let mut acq = Acquisition::new(&truth, &cfg);
        for i in 0..16 {
            acq.measure(Location::from_index(i, 4), 0).unwrap();
        }
        let before: MeasurementSet = acq.measurements().clone();
        let out = layer_gmm(&Region::full(4, 4), &cfg, &mut acq).unwrap();
        assert_eq!(out.new_measurements, 0);
        assert_eq!(out.status, LayerStatus::FullyMeasured);
        assert_eq!(acq.measurements(), &before);
    }
}
