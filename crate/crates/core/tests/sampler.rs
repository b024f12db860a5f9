use std::collections::HashSet;

use proptest::prelude::*;
use uslads::imaging::{generate_dendrite, DendriteParams, Image, Location};
use uslads::mixture::GmmModel;
use uslads::sampler::{
    construct_region, count_for_ratio, layer_gmm, partition, run_uslads, Acquisition, LayerStatus,
    Region, SamplerConfig, SamplerError,
};

/// 20x20 image with a bright vertical bar in columns 8..12.
fn bar_image(width: usize, height: usize) -> Image {
    let data = (0..width * height)
        .map(|i| {
            if (8..12).contains(&(i % width)) {
                220
            } else {
                10
            }
        })
        .collect();
    Image::new(width, height, data).unwrap()
}

fn layer_cfg(n_max: usize) -> SamplerConfig {
    SamplerConfig {
        stop_ratio: 1.0,
        maxiter: 1,
        epsilon: 10,
        n_max,
        ..Default::default()
    }
}

/// Measures everything except `skip`.
fn measure_all_but<'a>(
    img: &'a Image,
    cfg: &SamplerConfig,
    skip: &HashSet<usize>,
) -> Acquisition<'a> {
    let mut acq = Acquisition::new(img, cfg);
    for i in 0..img.len() {
        if !skip.contains(&i) {
            acq.measure(Location::from_index(i, img.width()), 0)
                .unwrap();
        }
    }
    acq
}

/// Distance via an explicitly formed inverse, independent of the library's
/// quadratic-form helper.
fn explicit_mahalanobis(p: [f64; 2], mean: [f64; 2], cov: [[f64; 2]; 2]) -> f64 {
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let inv = [
        [cov[1][1] / det, -cov[0][1] / det],
        [-cov[1][0] / det, cov[0][0] / det],
    ];
    let d = [p[0] - mean[0], p[1] - mean[1]];
    let y = [
        inv[0][0] * d[0] + inv[0][1] * d[1],
        inv[1][0] * d[0] + inv[1][1] * d[1],
    ];
    (d[0] * y[0] + d[1] * y[1]).sqrt()
}

/// `must_reach`: require the stop ratio be exceeded. Without it a run may
/// legitimately stall when a pass finds nothing to measure.
fn check_run(img: &Image, cfg: &SamplerConfig, must_reach: bool) {
    let (ms, trace) = run_uslads(img, cfg).unwrap();
    let n = img.len();

    let mut seen = HashSet::new();
    for entry in &trace.log {
        assert!(
            seen.insert(entry.location),
            "duplicate {:?}",
            entry.location
        );
        assert_eq!(Some(entry.intensity), img.get(entry.location));
    }
    assert_eq!(ms.len(), trace.log.len());
    for ((loc, v), entry) in ms.entries().iter().zip(&trace.log) {
        assert_eq!((*loc, *v), (entry.location, entry.intensity));
    }

    let initial = (cfg.initial_ratio * n as f64).floor() as usize;
    assert!(trace.log[..initial].iter().all(|e| e.depth == 0));
    assert!(trace.log[initial..].iter().all(|e| e.depth >= 1));

    let ratio = ms.ratio();
    if must_reach {
        assert!(
            ratio > cfg.stop_ratio,
            "ratio {ratio} <= {}",
            cfg.stop_ratio
        );
    }
    let slack = (cfg.n_max * cfg.epsilon) as f64 / n as f64;
    assert!(
        ratio <= cfg.stop_ratio + slack + 1e-12,
        "ratio {ratio} overshoots"
    );

    for snap in &trace.snapshots {
        assert_eq!(snap.count, count_for_ratio(snap.ratio, n));
        assert_eq!(snap.mask.iter().filter(|&&m| m).count(), snap.count);
    }
}

#[test]
fn four_unmeasured_candidates_are_all_measured() {
    let img = bar_image(10, 10);
    let cfg = layer_cfg(1);
    let skip: HashSet<usize> = [0, 9, 45, 99].into();
    let mut acq = measure_all_but(&img, &cfg, &skip);
    let out = layer_gmm(&Region::full(10, 10), &cfg, &mut acq).unwrap();
    assert_eq!(out.new_measurements, 4);
    assert_eq!(out.iterations, 1);
    assert_eq!(out.status, LayerStatus::Completed);
    assert_eq!(acq.measurements().len(), 100);
}

#[test]
fn layer_picks_the_epsilon_closest_candidates() {
    let img = bar_image(20, 20);
    let cfg = layer_cfg(1);
    // A 5x5 block of unmeasured pixels straddling the bar.
    let skip: HashSet<usize> = (0..5)
        .flat_map(|r| (0..5).map(move |c| (r + 3) * 20 + c + 7))
        .collect();
    let mut acq = measure_all_but(&img, &cfg, &skip);
    let out = layer_gmm(&Region::full(20, 20), &cfg, &mut acq).unwrap();
    assert_eq!(out.new_measurements, 10);

    let model: GmmModel = out.model.unwrap();
    assert_eq!(model.k(), 1);
    let c = &model.components[0];
    let cov = [
        [c.covariance.xx, c.covariance.xy],
        [c.covariance.xy, c.covariance.yy],
    ];
    let mut ranked: Vec<(f64, usize)> = skip
        .iter()
        .map(|&i| {
            (
                explicit_mahalanobis(Location::from_index(i, 20).point(), c.mean, cov),
                i,
            )
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let expected: HashSet<usize> = ranked[..10].iter().map(|&(_, i)| i).collect();
    let got: HashSet<usize> = acq.trace().log[img.len() - 25..]
        .iter()
        .map(|e| e.location.index(20))
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn too_few_foreground_pixels_stop_the_layer() {
    let img = Image::filled(12, 12, 50);
    let mut data = img.data().to_vec();
    data[5] = 250;
    let img = Image::new(12, 12, data).unwrap();
    let cfg = layer_cfg(3);
    let mut acq = Acquisition::new(&img, &cfg);
    for i in 0..40 {
        acq.measure(Location::from_index(i, 12), 0).unwrap();
    }
    let out = layer_gmm(&Region::full(12, 12), &cfg, &mut acq).unwrap();
    assert_eq!(out.status, LayerStatus::TooFewForeground);
    assert_eq!(out.new_measurements, 0);
    assert!(out.model.is_none());
}

#[test]
fn partition_children_are_disjoint_and_cover_the_kept_members() {
    let img = generate_dendrite(&DendriteParams {
        width: 48,
        height: 48,
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let cfg = SamplerConfig {
        stop_ratio: 1.0,
        maxiter: 2,
        ..Default::default()
    };
    let mut acq = Acquisition::new(&img, &cfg);
    for i in (0..img.len()).step_by(3) {
        acq.measure(Location::from_index(i, 48), 0).unwrap();
    }
    let region = Region::full(48, 48);
    let out = layer_gmm(&region, &cfg, &mut acq).unwrap();
    let (model, tau) = (out.model.unwrap(), out.threshold.unwrap());
    let children = partition(&region, &model, tau, &acq);
    assert!(children.len() <= model.k());

    let mut union = HashSet::new();
    for members in &children {
        assert!(!members.is_empty());
        let child = construct_region(&region, 1, members).unwrap();
        assert_eq!(child.depth, region.depth + 1);
        for m in members {
            assert!(union.insert(*m), "{m:?} in two children");
        }
    }
    let kept: HashSet<Location> = region
        .members()
        .iter()
        .copied()
        .filter(|&l| !acq.measurements().contains(l) || tau.is_foreground(img.get(l).unwrap()))
        .collect();
    assert_eq!(union, kept);
}

#[test]
fn construct_region_rejects_bad_members() {
    let parent = Region::full(4, 4);
    assert!(matches!(
        construct_region(&parent, 1, &[]),
        Err(SamplerError::EmptyRegion)
    ));
    let child = construct_region(&parent, 1, &[Location::new(0, 0), Location::new(1, 1)]).unwrap();
    assert!(matches!(
        construct_region(&child, 2, &[Location::new(2, 2)]),
        Err(SamplerError::OutsideParent(_))
    ));
}

#[test]
fn stopping_just_above_the_initial_ratio() {
    let img = generate_dendrite(&DendriteParams {
        width: 64,
        height: 64,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let cfg = SamplerConfig {
        stop_ratio: 0.0501,
        ..Default::default()
    };
    check_run(&img, &cfg, true);
    let (ms, _) = run_uslads(&img, &cfg).unwrap();
    assert!(ms.len() <= 204 + cfg.n_max * cfg.epsilon);
}

#[test]
fn blank_and_saturated_images_terminate() {
    for value in [0, 255] {
        let img = Image::filled(40, 40, value);
        check_run(
            &img,
            &SamplerConfig {
                stop_ratio: 0.2,
                ..Default::default()
            },
            true,
        );
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let img = generate_dendrite(&DendriteParams {
        width: 64,
        height: 64,
        seed: 5,
        ..Default::default()
    })
    .unwrap();
    let cfg = SamplerConfig {
        stop_ratio: 0.25,
        seed: 3,
        ..Default::default()
    };
    let (a, ta) = run_uslads(&img, &cfg).unwrap();
    let (b, tb) = run_uslads(&img, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(ta.same_decisions(&tb));
    let (c, _) = run_uslads(&img, &SamplerConfig { seed: 4, ..cfg }).unwrap();
    assert_ne!(a.mask(), c.mask());
}

#[test]
fn run_invariants_on_dendrites() {
    for seed in 0..4 {
        let img = generate_dendrite(&DendriteParams {
            width: 64,
            height: 48,
            seed,
            ..Default::default()
        })
        .unwrap();
        check_run(
            &img,
            &SamplerConfig {
                stop_ratio: 0.3,
                seed,
                ..Default::default()
            },
            true,
        );
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let img = Image::filled(32, 32, 0);
    for cfg in [
        SamplerConfig {
            stop_ratio: 0.05,
            initial_ratio: 0.05,
            ..Default::default()
        },
        SamplerConfig {
            initial_ratio: 0.0,
            ..Default::default()
        },
        SamplerConfig {
            epsilon: 0,
            ..Default::default()
        },
        SamplerConfig {
            stop_ratio: 1.5,
            ..Default::default()
        },
    ] {
        assert!(matches!(
            run_uslads(&img, &cfg),
            Err(SamplerError::InvalidConfig(_))
        ));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn child_regions_are_sorted_subsets(picks in prop::collection::vec(0usize..96, 1..60)) {
        let parent = Region::full(12, 8);
        let members: Vec<Location> = picks.iter().map(|&i| Location::from_index(i, 12)).collect();
        let child = construct_region(&parent, 1, &members).unwrap();
        let idx: Vec<usize> = child.members().iter().map(|m| m.index(12)).collect();
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        let want: HashSet<usize> = picks.iter().copied().collect();
        prop_assert_eq!(idx.len(), want.len());
        prop_assert!(idx.iter().all(|i| want.contains(i)));
        prop_assert!(child.members().iter().all(|&m| parent.contains(m) && child.contains(m)));
    }

    #[test]
    fn small_runs_never_remeasure(seed in 0u64..500, phi in 0.08f64..0.5) {
        let img = generate_dendrite(&DendriteParams { width: 32, height: 32, seed, ..Default::default() }).unwrap();
        let cfg = SamplerConfig { stop_ratio: phi, seed, maxiter: 3, ..Default::default() };
        check_run(&img, &cfg, false);
    }
}
