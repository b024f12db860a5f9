use crate::imaging::{Location, MeasurementSet};

use super::{Result, SamplerError};

/// A sub-image of the parent: the set of pixel locations a layer may cluster
/// and measure. Measurements are not stored here; they are read from the
/// global [`MeasurementSet`], so a region's measured entries are always a
/// subset of the global ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub id: usize,
    pub depth: usize,
    width: usize,
    height: usize,
    /// Sorted by linear index, no duplicates.
    members: Vec<Location>,
}

impl Region {
    /// The whole image as a depth-1 region.
    pub fn full(width: usize, height: usize) -> Self {
        let members = (0..width * height)
            .map(|i| Location::from_index(i, width))
            .collect();
        Self {
            id: 0,
            depth: 1,
            width,
            height,
            members,
        }
    }

    pub fn members(&self) -> &[Location] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn contains(&self, loc: Location) -> bool {
        self.members
            .binary_search_by_key(&loc.index(self.width), |m| m.index(self.width))
            .is_ok()
    }

    fn membership(&self) -> Vec<bool> {
        let mut inside = vec![false; self.width * self.height];
        for m in &self.members {
            inside[m.index(self.width)] = true;
        }
        inside
    }

    /// Measured members with their intensities, in measurement order.
    pub fn measured(&self, global: &MeasurementSet) -> Vec<(Location, u8)> {
        let inside = self.membership();
        global
            .entries()
            .iter()
            .filter(|(loc, _)| inside[loc.index(self.width)])
            .copied()
            .collect()
    }

    /// Unmeasured members in linear-index order.
    pub fn unmeasured(&self, global: &MeasurementSet) -> Vec<Location> {
        self.members
            .iter()
            .filter(|&&m| !global.contains(m))
            .copied()
            .collect()
    }
}

/// Child region over `members` (any order; duplicates collapse).
pub fn construct_region(parent: &Region, id: usize, members: &[Location]) -> Result<Region> {
    if members.is_empty() {
        return Err(SamplerError::EmptyRegion);
    }
    if let Some(&outside) = members.iter().find(|&&m| !parent.contains(m)) {
        return Err(SamplerError::OutsideParent(outside));
    }
    let mut members = members.to_vec();
    members.sort_unstable_by_key(|m| m.index(parent.width));
    members.dedup();
    Ok(Region {
        id,
        depth: parent.depth + 1,
        width: parent.width,
        height: parent.height,
        members,
    })
}
