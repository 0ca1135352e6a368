use std::f64::consts::SQRT_2;

use nalgebra::{Vector2, Vector3};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::Box3D;

/// Georeferenced BEV road raster. Row `r`, column `c` covers
/// `[origin.x + c·s, origin.x + (c+1)·s) × [origin.y + r·s, origin.y + (r+1)·s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadMap {
    pub cols: u32,
    pub rows: u32,
    /// Row-major 8-bit values; `>= 128` is road.
    pub cells: Vec<u8>,
    pub origin: Vector2<f64>,
    pub cell_size: f64,
    pub ground_z: f64,
}

impl RoadMap {
    pub fn uniform(cols: u32, rows: u32, origin: Vector2<f64>, cell_size: f64, value: u8) -> Self {
        Self {
            cols,
            rows,
            cells: vec![value; cols as usize * rows as usize],
            origin,
            cell_size,
            ground_z: 0.0,
        }
    }

    pub fn extent(&self) -> Vector2<f64> {
        Vector2::new(self.cols as f64, self.rows as f64) * self.cell_size
    }

    pub fn is_road(&self, p: &Vector2<f64>) -> bool {
        let c = ((p.x - self.origin.x) / self.cell_size).floor();
        let r = ((p.y - self.origin.y) / self.cell_size).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols as f64 || r >= self.rows as f64 {
            return false;
        }
        self.cells[r as usize * self.cols as usize + c as usize] >= 128
    }
}

/// Placeable ground cells for one agent footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivableSpace {
    pub origin: Vector2<f64>,
    pub cell_size: f64,
    pub cols: u32,
    pub rows: u32,
    pub cells: Vec<bool>,
    pub ground_z: f64,
    /// Distance a cell center must keep from every box footprint.
    pub clearance: f64,
    free: Vec<u32>,
}

impl DrivableSpace {
    pub fn cell_center(&self, idx: usize) -> Vector2<f64> {
        let c = (idx % self.cols as usize) as f64;
        let r = (idx / self.cols as usize) as f64;
        self.origin + Vector2::new(c + 0.5, r + 0.5) * self.cell_size
    }

    pub fn cell_of(&self, p: &Vector2<f64>) -> Option<usize> {
        let c = ((p.x - self.origin.x) / self.cell_size).floor();
        let r = ((p.y - self.origin.y) / self.cell_size).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols as f64 || r >= self.rows as f64 {
            return None;
        }
        Some(r as usize * self.cols as usize + c as usize)
    }

    pub fn is_placeable(&self, p: &Vector2<f64>) -> bool {
        self.cell_of(p).is_some_and(|i| self.cells[i])
    }

    /// Indices of true cells in ascending order.
    pub fn free_cells(&self) -> &[u32] {
        &self.free
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    /// Clears every cell whose center lies within `clearance` of the box's
    /// footprint.
    pub fn carve(&mut self, bbox: &Box3D) {
        let fp = bbox.footprint();
        let reach = bbox.footprint_radius() + self.clearance;
        let lo = (fp.center.add_scalar(-reach) - self.origin) / self.cell_size;
        let hi = (fp.center.add_scalar(reach) - self.origin) / self.cell_size;
        let c0 = lo.x.floor().max(0.0) as usize;
        let r0 = lo.y.floor().max(0.0) as usize;
        let c1 = (hi.x.ceil().max(0.0) as usize).min(self.cols as usize);
        let r1 = (hi.y.ceil().max(0.0) as usize).min(self.rows as usize);
        let mut changed = false;
        for r in r0..r1 {
            for c in c0..c1 {
                let idx = r * self.cols as usize + c;
                if self.cells[idx] && fp.distance_to_point(&self.cell_center(idx)) <= self.clearance {
                    self.cells[idx] = false;
                    changed = true;
                }
            }
        }
        if changed {
            self.reindex();
        }
    }

    fn reindex(&mut self) {
        self.free = self
            .cells
            .iter()
            .enumerate()
            .filter(|(_, v)| **v)
            .map(|(i, _)| i as u32)
            .collect();
    }
}

/// Builds the placeable set for an agent with footprint `(width, length)`.
///
/// A cell is true iff its center is on the road, its ground point is seen by
/// at least one camera, and an agent of that footprint at any yaw centered
/// there keeps `margin` from every box (tested with the circumscribed circle).
pub fn build_drivable_space(
    road: &RoadMap,
    boxes: &[Box3D],
    cameras: &[Camera],
    footprint: (f64, f64),
    cell_size: f64,
    margin: f64,
) -> Result<DrivableSpace> {
    if !(cell_size > 0.0) {
        return Err(Error::Config("drivable cell size must be positive".into()));
    }
    let extent = road.extent();
    let cols = (extent.x / cell_size).ceil() as u32;
    let rows = (extent.y / cell_size).ceil() as u32;
    let agent_radius = 0.5 * footprint.0.hypot(footprint.1);
    let mut space = DrivableSpace {
        origin: road.origin,
        cell_size,
        cols,
        rows,
        cells: vec![false; cols as usize * rows as usize],
        ground_z: road.ground_z,
        // Both footprints may be inflated by up to margin/2 per axis; the
        // inflated corners move by at most margin/√2 each.
        clearance: agent_radius + SQRT_2 * margin,
        free: Vec::new(),
    };
    for idx in 0..space.cells.len() {
        let p = space.cell_center(idx);
        let ground = Vector3::new(p.x, p.y, road.ground_z);
        space.cells[idx] = road.is_road(&p) && cameras.iter().any(|c| c.sees(&ground));
    }
    space.reindex();
    for b in boxes {
        space.carve(b);
    }
    if space.is_empty() {
        return Err(Error::NoPlacementPossible("drivable space is empty".into()));
    }
    Ok(space)
}
