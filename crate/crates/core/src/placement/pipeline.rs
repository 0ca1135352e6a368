use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::drivable::{build_drivable_space, RoadMap};
use super::occlusion::occlusion_in_camera;
use super::sampling::{sample_placement, Placement};
use super::search::{hard_example_search, CandidateView, Scorer, SearchContext};
use super::visibility::VisibilityContext;
use super::{PlacementMode, PlacementPolicy};
use crate::asset::AssetLibrary;
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::Box3D;
use crate::render::{render_depth, DepthMap};
use crate::scene::{RigidNode, SceneGraph};

/// One frame to augment.
#[derive(Debug, Clone, Copy)]
pub struct FrameInput<'a> {
    pub scene: &'a SceneGraph,
    pub timestep: u32,
    pub cameras: &'a [Camera],
    /// Real annotations at this timestep, world frame.
    pub existing_boxes: &'a [Box3D],
    pub road: &'a RoadMap,
    pub background: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub instance_id: String,
    pub node_id: u32,
    /// Camera whose quota the agent was placed for.
    pub camera: String,
    pub placement: Placement,
    /// Candidate scores in stream order; empty for the non-search modes.
    pub candidate_scores: Vec<f64>,
    pub winner: usize,
    /// Seed of the RNG the placement was drawn from.
    pub seed: u64,
    /// Stream of that RNG the winning placement came from.
    pub stream: u64,
    /// Number of boxes (real first, then earlier agents) that existed when
    /// this placement was sampled.
    pub boxes_before: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementRun {
    /// Input scene with every accepted agent appended as a rigid node.
    pub scene: SceneGraph,
    /// One box per accepted agent, in placement order.
    pub annotations: Vec<Box3D>,
    pub agents: Vec<AgentRecord>,
    pub accepted: u32,
    pub rejected: u32,
    pub warnings: Vec<String>,
}

fn depth_maps(scene: &SceneGraph, cameras: &[Camera], t: u32) -> Result<Vec<DepthMap>> {
    cameras.iter().map(|c| render_depth(scene, c, t)).collect()
}

/// Inserts agents camera by camera until each camera's quota is met.
///
/// Agents are global scene nodes; an agent counts toward every camera that
/// sees its bottom-center point. After each acceptance the new box joins the
/// collision set, the drivable space is re-carved and depth maps are
/// re-rendered with the agent merged in. Placement failures are counted as
/// warnings, not errors.
pub fn place_agents<R: Rng + ?Sized>(
    frame: &FrameInput<'_>,
    library: &AssetLibrary,
    policy: &PlacementPolicy,
    scorer: Option<&Scorer<'_>>,
    rng: &mut R,
) -> Result<PlacementRun> {
    policy.validate()?;
    if library.is_empty() {
        return Err(Error::Config("asset library is empty".into()));
    }
    if policy.mode == PlacementMode::ScorerMax && scorer.is_none() {
        return Err(Error::Config("scorer-max mode needs a scorer".into()));
    }
    let t = frame.timestep;
    let mut scene = frame.scene.clone();
    let mut boxes: Vec<Box3D> = frame.existing_boxes.to_vec();
    let mut depths = depth_maps(&scene, frame.cameras, t)?;
    let mut agents: Vec<AgentRecord> = Vec::new();
    let mut rejected = 0u32;
    let mut warnings = Vec::new();
    let footprint = library.max_footprint();

    for cam in frame.cameras {
        let seen = agents
            .iter()
            .filter(|a| {
                let p = &a.placement;
                cam.sees(&nalgebra::Vector3::new(p.x, p.y, p.z))
            })
            .count() as u32;
        if seen >= policy.agents_per_camera {
            continue;
        }
        let mut space = match build_drivable_space(
            frame.road,
            &boxes,
            std::slice::from_ref(cam),
            footprint,
            policy.cell_size,
            policy.margin,
        ) {
            Ok(s) => s,
            Err(Error::NoPlacementPossible(msg)) => {
                let missing = policy.agents_per_camera - seen;
                rejected += missing;
                warnings.push(format!("t={t} camera {}: {msg}", cam.name));
                continue;
            }
            Err(e) => return Err(e),
        };

        for _ in seen..policy.agents_per_camera {
            if space.is_empty() {
                rejected += 1;
                warnings.push(format!("t={t} camera {}: drivable space exhausted", cam.name));
                continue;
            }
            let agent = library.pick(rng);
            let seed: u64 = rng.random();
            let mut sub = ChaCha8Rng::seed_from_u64(seed);
            let boxes_before = boxes.len();

            let outcome = if policy.mode.is_search() {
                let ctx = SearchContext {
                    scene: &scene,
                    timestep: t,
                    cameras: frame.cameras,
                    depths: &depths,
                    existing_boxes: &boxes,
                    space: &space,
                    background: frame.background,
                };
                let occlusion = |view: &CandidateView<'_>| {
                    occlusion_in_camera(
                        &view.placement.bbox,
                        &view.context.existing_boxes,
                        cam,
                        policy.occlusion_penalty,
                        policy.full_occlusion_fraction,
                    )
                };
                let negated = |view: &CandidateView<'_>| -occlusion(view);
                let chosen: &Scorer<'_> = match policy.mode {
                    PlacementMode::MaxOcclusion => &occlusion,
                    PlacementMode::MinOcclusion => &negated,
                    _ => scorer.expect("checked above"),
                };
                match hard_example_search(&ctx, agent, policy, chosen, &mut sub) {
                    Ok(out) => {
                        let scores = out.candidates.iter().map(|c| c.score).collect();
                        let winner = out.winner();
                        Ok((winner.placement.clone(), scores, out.best, winner.stream))
                    }
                    Err(Error::NoPlacementPossible(msg)) => Err(msg),
                    Err(e) => return Err(e),
                }
            } else {
                let vis = VisibilityContext {
                    cameras: frame.cameras,
                    depths: &depths,
                };
                sample_placement(&space, policy, &boxes, agent, &vis, &mut sub)
                    .map(|p| (p, Vec::new(), 0, 0))
                    .map_err(|r| {
                        format!(
                            "rejected after {} attempts ({} collisions, {} occluded)",
                            r.attempts, r.collisions, r.occluded
                        )
                    })
            };

            let (placement, candidate_scores, winner, stream) = match outcome {
                Ok(v) => v,
                Err(msg) => {
                    rejected += 1;
                    log::warn!("t={t} camera={} agent={} {msg}", cam.name, agent.id);
                    warnings.push(format!("t={t} camera {}: {msg}", cam.name));
                    continue;
                }
            };

            let node_id = scene.next_node_id();
            let instance_id = format!("inserted-t{t}-{}", agents.len());
            log::info!(
                "accepted t={t} camera={} instance={instance_id} agent={} x={:.3} y={:.3} yaw={:.4} z={:.3} vis_max={:.3}",
                cam.name,
                agent.id,
                placement.x,
                placement.y,
                placement.yaw,
                placement.z,
                placement.max_visibility()
            );
            scene.rigid_nodes.push(RigidNode {
                id: node_id,
                label: agent.label.clone(),
                primitives: agent.primitives.clone(),
                transforms: BTreeMap::from([(t, placement.transform)]),
                canonical_box: Some(agent.canonical_box.clone()),
            });
            boxes.push(placement.bbox.clone());
            space.carve(&placement.bbox);
            depths = depth_maps(&scene, frame.cameras, t)?;
            agents.push(AgentRecord {
                instance_id,
                node_id,
                camera: cam.name.clone(),
                placement,
                candidate_scores,
                winner,
                seed,
                stream,
                boxes_before,
            });
        }
    }

    Ok(PlacementRun {
        scene,
        annotations: agents.iter().map(|a| a.placement.bbox.clone()).collect(),
        accepted: agents.len() as u32,
        agents,
        rejected,
        warnings,
    })
}
