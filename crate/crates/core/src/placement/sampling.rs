use std::f64::consts::TAU;

use nalgebra::{Vector2, Vector3};
use rand::Rng;

use super::drivable::DrivableSpace;
use super::visibility::VisibilityContext;
use super::{PlacementMode, PlacementPolicy};
use crate::asset::Agent;
use crate::gaussian::{apply_rigid_transform, RigidTransform};
use crate::geometry::Box3D;

/// A validated agent pose: ground position, heading and bottom elevation.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    /// Elevation of the agent's bottom face, meters.
    pub z: f64,
    pub agent_id: String,
    /// Drivable cell the position was drawn from.
    pub cell: usize,
    /// Canonical-to-world transform of the agent.
    pub transform: RigidTransform,
    /// World-frame annotation box.
    pub bbox: Box3D,
    /// Visibility ratio per camera, in camera order.
    pub visibility: Vec<f64>,
    /// Attempts spent including the accepted one.
    pub attempts: u32,
}

impl Placement {
    pub fn max_visibility(&self) -> f64 {
        self.visibility.iter().copied().fold(0.0, f64::max)
    }
}

/// Why sampling gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Rejection {
    pub attempts: u32,
    pub collisions: u32,
    pub occluded: u32,
}

/// Yaw of the box nearest to `location` in the ground plane, lowest index on
/// ties. `None` when there are no boxes.
pub fn nearest_object_pose(location: &Vector2<f64>, boxes: &[Box3D]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for b in boxes {
        let d = (b.center.xy() - location).norm_squared();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, b.yaw));
        }
    }
    best.map(|(_, yaw)| yaw)
}

/// Mean bottom elevation of the `k` boxes nearest to `location`; `ground`
/// when there are none.
pub fn infer_elevation(location: &Vector2<f64>, boxes: &[Box3D], k: usize, ground: f64) -> f64 {
    if boxes.is_empty() || k == 0 {
        return ground;
    }
    let mut by_dist: Vec<(f64, usize)> = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| ((b.center.xy() - location).norm_squared(), i))
        .collect();
    by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n = k.min(by_dist.len());
    by_dist[..n].iter().map(|(_, i)| boxes[*i].bottom()).sum::<f64>() / n as f64
}

/// True when `candidate` overlaps any box: both BEV footprints, each grown by
/// half the margin, intersect (separating-axis test) and the vertical
/// extents overlap.
pub fn collision_check(candidate: &Box3D, boxes: &[Box3D], margin: f64) -> bool {
    let fp = candidate.footprint().inflated(0.5 * margin);
    boxes
        .iter()
        .any(|b| candidate.z_overlaps(b) && fp.intersects(&b.footprint().inflated(0.5 * margin)))
}

/// Canonical-to-world transform putting the agent's canonical origin at
/// `(x, y)`, heading `yaw`, with its box bottom at elevation `z`.
pub fn placement_transform(canonical: &Box3D, x: f64, y: f64, yaw: f64, z: f64) -> RigidTransform {
    RigidTransform::from_yaw(yaw, Vector3::new(x, y, z - canonical.bottom()))
}

/// Rejection-samples one placement.
///
/// Each attempt draws a free cell uniformly, a point uniformly inside it and
/// a yaw according to the policy mode, infers the elevation, then rejects on
/// collision or when no camera sees at least `visibility_threshold` of the
/// agent.
pub fn sample_placement<R: Rng + ?Sized>(
    space: &DrivableSpace,
    policy: &PlacementPolicy,
    existing: &[Box3D],
    agent: &Agent,
    vis: &VisibilityContext<'_>,
    rng: &mut R,
) -> Result<Placement, Rejection> {
    let mut rejection = Rejection::default();
    let free = space.free_cells();
    if free.is_empty() {
        return Err(rejection);
    }
    for attempt in 1..=policy.max_attempts {
        rejection.attempts = attempt;
        let cell = free[rng.random_range(0..free.len())] as usize;
        let corner = space.cell_center(cell).add_scalar(-0.5 * space.cell_size);
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let random_yaw = rng.random::<f64>() * TAU;
        let p = corner + Vector2::new(u, v) * space.cell_size;
        let yaw = match policy.mode {
            PlacementMode::PoseAligned => nearest_object_pose(&p, existing).unwrap_or(random_yaw),
            _ => random_yaw,
        };
        let z = infer_elevation(&p, existing, policy.elevation_neighbors, space.ground_z);
        let transform = placement_transform(&agent.canonical_box, p.x, p.y, yaw, z);
        let bbox = agent.canonical_box.transformed(&transform);
        if collision_check(&bbox, existing, policy.margin) {
            rejection.collisions += 1;
            continue;
        }
        let world = apply_rigid_transform(&agent.primitives, &transform)
            .expect("agent primitives are validated at load");
        let visibility = vis.ratios(&world);
        if !visibility.iter().any(|r| *r >= policy.visibility_threshold) {
            rejection.occluded += 1;
            continue;
        }
        log::debug!(
            "placement agent={} x={:.3} y={:.3} yaw={:.4} z={:.3} attempts={attempt}",
            agent.id,
            p.x,
            p.y,
            yaw,
            z
        );
        return Ok(Placement {
            x: p.x,
            y: p.y,
            yaw: crate::geometry::normalize_yaw(yaw),
            z,
            agent_id: agent.id.clone(),
            cell,
            transform,
            bbox,
            visibility,
            attempts: attempt,
        });
    }
    Err(rejection)
}
