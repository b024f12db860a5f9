//! Otsu's threshold over 8-bit intensities.
//!
//! The returned threshold is the lower bound of the foreground class: a pixel
//! is foreground when `intensity >= threshold`. Candidate thresholds run over
//! `1..=255`; ties in between-class variance go to the smallest candidate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ThresholdError {
    #[error("cannot threshold an empty intensity list")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Threshold(pub u8);

impl Threshold {
    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_foreground(self, intensity: u8) -> bool {
        intensity >= self.0
    }
}

/// Between-class variance of a split, as an exact rational up to the common
/// factor `1 / n^2`: `(s0 * n1 - s1 * n0)^2 / (n0 * n1)`.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(n0: u64, s0: u64, n1: u64, s1: u64) -> Self {
        let diff =
            (i128::from(s0) * i128::from(n1) - i128::from(s1) * i128::from(n0)).unsigned_abs();
        Self {
            num: diff * diff,
            den: u128::from(n0) * u128::from(n1),
        }
    }

    fn greater_than(&self, other: &Score) -> bool {
        match (
            self.num.checked_mul(other.den),
            other.num.checked_mul(self.den),
        ) {
            (Some(a), Some(b)) => a > b,
            // Only reachable for inputs with well over a million samples.
            _ => self.num as f64 / self.den as f64 > other.num as f64 / other.den as f64,
        }
    }
}

pub fn histogram(intensities: &[u8]) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in intensities {
        hist[v as usize] += 1;
    }
    hist
}

/// Otsu threshold of `intensities`.
///
/// Input with a single distinct value `v` has no proper split; `v` itself is
/// returned so that every sample is kept as foreground.
pub fn otsu_threshold(intensities: &[u8]) -> Result<Threshold, ThresholdError> {
    let first = *intensities.first().ok_or(ThresholdError::Empty)?;
    if intensities.iter().all(|&v| v == first) {
        return Ok(Threshold(first));
    }
    let hist = histogram(intensities);
    let n = intensities.len() as u64;
    let total: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let (mut n0, mut s0) = (0u64, 0u64);
    let mut best: Option<(u8, Score)> = None;
    for t in 1..=255usize {
        n0 += hist[t - 1];
        s0 += (t as u64 - 1) * hist[t - 1];
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let score = Score::new(n0, s0, n1, total - s0);
        if best.as_ref().is_none_or(|(_, b)| score.greater_than(b)) {
            best = Some((t as u8, score));
        }
    }
    // At least two distinct values guarantee a proper split above.
    let (t, _) = best.expect("non-degenerate input has a proper split");
    Ok(Threshold(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_input_takes_smallest_tied_threshold() {
        assert_eq!(
            otsu_threshold(&[0, 0, 0, 255, 255, 255]).unwrap(),
            Threshold(1)
        );
    }

    #[test]
    fn degenerate_input_returns_its_value() {
        assert_eq!(otsu_threshold(&[100, 100, 100]).unwrap(), Threshold(100));
        assert_eq!(otsu_threshold(&[0]).unwrap(), Threshold(0));
    }

    #[test]
    fn empty_input_errors() {
        assert_eq!(otsu_threshold(&[]), Err(ThresholdError::Empty));
    }

    #[test]
    fn foreground_predicate_is_inclusive() {
        let t = Threshold(100);
        assert!(t.is_foreground(100));
        assert!(!t.is_foreground(99));
    }
}
