//! Agent placement: drivable space, rejection sampling with collision and
//! visibility checks, occlusion scoring, hard-example search, and sequential
//! multi-agent insertion.

mod drivable;
mod occlusion;
mod pipeline;
mod sampling;
mod search;
mod visibility;

use serde::{Deserialize, Serialize};

pub use drivable::{build_drivable_space, DrivableSpace, RoadMap};
pub use occlusion::{count_fully_occluded, occlusion_in_camera, occlusion_score, project_box};
pub use pipeline::{place_agents, AgentRecord, FrameInput, PlacementRun};
pub use sampling::{
    collision_check, infer_elevation, nearest_object_pose, placement_transform, sample_placement,
    Placement, Rejection,
};
pub use search::{hard_example_search, Candidate, CandidateView, Scorer, SearchContext, SearchOutcome};
pub use visibility::{visibility_ratio, VisibilityContext};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementMode {
    /// Yaw uniform on `[0, 2π)`.
    RandomPose,
    /// Yaw copied from the nearest existing box.
    PoseAligned,
    /// Best of `seeds` candidates under the negated occlusion score.
    MinOcclusion,
    /// Best of `seeds` candidates under the occlusion score.
    MaxOcclusion,
    /// Best of `seeds` candidates under a caller-supplied scorer.
    ScorerMax,
}

impl PlacementMode {
    pub fn is_search(self) -> bool {
        matches!(
            self,
            PlacementMode::MinOcclusion | PlacementMode::MaxOcclusion | PlacementMode::ScorerMax
        )
    }
}

impl std::str::FromStr for PlacementMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown placement mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementPolicy {
    pub mode: PlacementMode,
    /// Candidates evaluated per placement by the search modes.
    pub seeds: u32,
    pub visibility_threshold: f64,
    pub agents_per_camera: u32,
    /// Sampling attempts before a placement is given up.
    pub max_attempts: u32,
    /// BEV grid resolution, meters.
    pub cell_size: f64,
    /// Collision safety margin, meters.
    pub margin: f64,
    /// Boxes averaged when inferring elevation.
    pub elevation_neighbors: usize,
    /// Score penalty per fully occluded object.
    pub occlusion_penalty: f64,
    /// Area fraction inside the agent's 2D box for an object to count as
    /// fully occluded.
    pub full_occlusion_fraction: f64,
}

impl Default for PlacementPolicy {
    fn default() -> Self {
        Self {
            mode: PlacementMode::RandomPose,
            seeds: 16,
            visibility_threshold: 0.25,
            agents_per_camera: 1,
            max_attempts: 64,
            cell_size: 0.25,
            margin: 0.1,
            elevation_neighbors: 3,
            occlusion_penalty: 1.0,
            full_occlusion_fraction: 0.95,
        }
    }
}

impl PlacementPolicy {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.seeds < 1 {
            return fail("seeds must be at least 1");
        }
        if self.agents_per_camera < 1 {
            return fail("agents_per_camera must be at least 1");
        }
        if !(self.visibility_threshold > 0.0 && self.visibility_threshold < 1.0) {
            return fail("visibility_threshold must lie in (0, 1)");
        }
        if self.max_attempts < 1 {
            return fail("max_attempts must be at least 1");
        }
        if !(self.cell_size > 0.0) {
            return fail("cell_size must be positive");
        }
        if !(self.margin >= 0.0) {
            return fail("margin must be non-negative");
        }
        if self.elevation_neighbors < 1 {
            return fail("elevation_neighbors must be at least 1");
        }
        if !(self.occlusion_penalty >= 0.0) {
            return fail("occlusion_penalty must be non-negative");
        }
        if !(self.full_occlusion_fraction > 0.0 && self.full_occlusion_fraction <= 1.0) {
            return fail("full_occlusion_fraction must lie in (0, 1]");
        }
        Ok(())
    }
}
