use crate::camera::Camera;
use crate::gaussian::GaussianPrimitive;
use crate::render::DepthMap;

/// Cameras with the scene depth rendered before the candidate is inserted.
#[derive(Debug, Clone, Copy)]
pub struct VisibilityContext<'a> {
    pub cameras: &'a [Camera],
    pub depths: &'a [DepthMap],
}

impl VisibilityContext<'_> {
    pub fn ratios(&self, agent_world: &[GaussianPrimitive]) -> Vec<f64> {
        self.cameras
            .iter()
            .zip(self.depths)
            .map(|(cam, depth)| visibility_ratio(agent_world, depth, cam))
            .collect()
    }
}

/// Fraction of agent means that are strictly nearer than the scene depth at
/// their pixel. Means behind the near plane or outside the image do not
/// count; the ratio is 0 when none remain.
pub fn visibility_ratio(agent_world: &[GaussianPrimitive], depth: &DepthMap, cam: &Camera) -> f64 {
    let mut seen = 0usize;
    let mut total = 0usize;
    for g in agent_world {
        let pc = cam.to_camera(&g.mean);
        if pc.z <= cam.near_clip {
            continue;
        }
        let Some((x, y)) = cam.pixel_of(&cam.project(&pc)) else {
            continue;
        };
        total += 1;
        if pc.z < depth.get(x, y) {
            seen += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        seen as f64 / total as f64
    }
}
