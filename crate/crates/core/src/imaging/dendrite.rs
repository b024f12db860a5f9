//! Synthetic dendrite images: straight primary arms radiating from the centre
//! with shorter perpendicular secondary arms, bright on a dark noisy
//! background.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Image, ImagingError, Result};
use crate::seed;

pub const MIN_SIDE: usize = 32;
const BACKGROUND_MAX: u8 = 30;
const FOREGROUND_MIN: u8 = 200;
/// Primary arm length as a fraction of the shorter image side.
const ARM_LENGTH: f64 = 0.45;
/// Secondary arms never start closer than this to the centre.
const SECONDARY_OFFSET: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DendriteParams {
    pub width: usize,
    pub height: usize,
    pub n_primary_arms: usize,
    /// Expected secondary arms per pixel of primary arm length.
    pub secondary_arm_rate: f64,
    pub arm_thickness: usize,
    pub seed: u64,
}

impl Default for DendriteParams {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            n_primary_arms: 4,
            secondary_arm_rate: 0.1,
            arm_thickness: 2,
            seed: 0,
        }
    }
}

impl DendriteParams {
    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_SIDE || self.height < MIN_SIDE {
            return Err(ImagingError::InvalidParameters(format!(
                "size {}x{} below the {MIN_SIDE}x{MIN_SIDE} minimum",
                self.width, self.height
            )));
        }
        if self.n_primary_arms == 0 {
            return Err(ImagingError::InvalidParameters(
                "at least one primary arm is required".into(),
            ));
        }
        if !self.secondary_arm_rate.is_finite() || !(0.0..=1.0).contains(&self.secondary_arm_rate) {
            return Err(ImagingError::InvalidParameters(format!(
                "secondary arm rate {} outside [0, 1]",
                self.secondary_arm_rate
            )));
        }
        if self.arm_thickness == 0 {
            return Err(ImagingError::InvalidParameters(
                "arm thickness must be at least one pixel".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    from: [f64; 2],
    to: [f64; 2],
}

impl Segment {
    fn distance(&self, p: [f64; 2]) -> f64 {
        let d = [self.to[0] - self.from[0], self.to[1] - self.from[1]];
        let v = [p[0] - self.from[0], p[1] - self.from[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 {
            ((v[0] * d[0] + v[1] * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = [v[0] - t * d[0], v[1] - t * d[1]];
        (q[0] * q[0] + q[1] * q[1]).sqrt()
    }
}

fn paint(mask: &mut [bool], width: usize, height: usize, seg: &Segment, half: f64) {
    let lo = |a: f64, b: f64| (a.min(b) - half).floor().max(0.0) as usize;
    let hi =
        |a: f64, b: f64, limit: usize| ((a.max(b) + half).ceil().max(0.0) as usize).min(limit - 1);
    let (r0, r1) = (
        lo(seg.from[0], seg.to[0]),
        hi(seg.from[0], seg.to[0], height),
    );
    let (c0, c1) = (
        lo(seg.from[1], seg.to[1]),
        hi(seg.from[1], seg.to[1], width),
    );
    for r in r0..=r1 {
        for c in c0..=c1 {
            if seg.distance([r as f64, c as f64]) <= half {
                mask[r * width + c] = true;
            }
        }
    }
}

/// Generates a dendrite image; identical parameters give identical pixels.
pub fn generate_dendrite(params: &DendriteParams) -> Result<Image> {
    params.validate()?;
    let DendriteParams {
        width,
        height,
        n_primary_arms,
        secondary_arm_rate,
        arm_thickness,
        seed,
    } = *params;
    let mut rng = seed::rng(seed);

    let centre = [(height - 1) as f64 / 2.0, (width - 1) as f64 / 2.0];
    let arm_len = ARM_LENGTH * width.min(height) as f64;
    let rotation = rng.gen::<f64>() * TAU / n_primary_arms as f64;

    let mut segments = Vec::new();
    for arm in 0..n_primary_arms {
        let theta = rotation + TAU * arm as f64 / n_primary_arms as f64;
        let dir = [theta.sin(), theta.cos()];
        let perp = [-dir[1], dir[0]];
        segments.push(Segment {
            from: centre,
            to: [centre[0] + arm_len * dir[0], centre[1] + arm_len * dir[1]],
        });

        let mut along = SECONDARY_OFFSET;
        while along < arm_len {
            if rng.gen::<f64>() < secondary_arm_rate {
                let side = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                // Side branches shorten towards the tip.
                let taper = 1.0 - 0.5 * along / arm_len;
                let len = arm_len * rng.gen_range(0.1..0.3) * taper;
                let from = [centre[0] + along * dir[0], centre[1] + along * dir[1]];
                segments.push(Segment {
                    from,
                    to: [
                        from[0] + side * len * perp[0],
                        from[1] + side * len * perp[1],
                    ],
                });
            }
            along += 1.0;
        }
    }

    let mut mask = vec![false; width * height];
    // The pixel nearest to any point of a segment lies within sqrt(2)/2 of it,
    // so this radius keeps every arm and every junction 8-connected.
    let half = (arm_thickness as f64 / 2.0).max(FRAC_1_SQRT_2 + 1e-9);
    for seg in &segments {
        paint(&mut mask, width, height, seg, half);
    }

    let data = mask
        .iter()
        .map(|&fg| {
            if fg {
                rng.gen_range(FOREGROUND_MIN..=u8::MAX)
            } else {
                rng.gen_range(0..=BACKGROUND_MAX)
            }
        })
        .collect();
    Image::new(width, height, data)
}
