use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::drivable::DrivableSpace;
use super::sampling::{sample_placement, Placement};
use super::visibility::VisibilityContext;
use super::PlacementPolicy;
use crate::asset::Agent;
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::Box3D;
use crate::render::{render_augmented, DepthMap, Image, PosedAgent};
use crate::scene::SceneGraph;

/// Scene state a candidate placement is evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct SearchContext<'a> {
    pub scene: &'a SceneGraph,
    pub timestep: u32,
    pub cameras: &'a [Camera],
    /// Pre-insertion depth, one map per camera.
    pub depths: &'a [DepthMap],
    pub existing_boxes: &'a [Box3D],
    pub space: &'a DrivableSpace,
    pub background: [f64; 3],
}

/// What a scorer sees: the candidate, the annotations it would produce and
/// on-demand augmented renders.
pub struct CandidateView<'a> {
    pub context: &'a SearchContext<'a>,
    pub agent: &'a Agent,
    pub placement: &'a Placement,
    /// Existing boxes followed by the candidate's box.
    pub annotations: Vec<Box3D>,
}

impl CandidateView<'_> {
    pub fn render(&self, camera: usize) -> Result<Image> {
        let posed = PosedAgent {
            label: &self.agent.label,
            primitives: &self.agent.primitives,
            transform: self.placement.transform,
        };
        render_augmented(
            self.context.scene,
            &[posed],
            &self.context.cameras[camera],
            self.context.timestep,
            self.context.background,
        )
    }
}

pub type Scorer<'s> = dyn Fn(&CandidateView<'_>) -> f64 + Sync + 's;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// RNG stream the candidate was drawn from.
    pub stream: u64,
    pub placement: Placement,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub base_seed: u64,
    pub candidates: Vec<Candidate>,
    /// Index into `candidates` of the highest score (earliest on ties).
    pub best: usize,
    /// Streams whose sampling was exhausted without a valid candidate.
    pub failed_seeds: u32,
}

impl SearchOutcome {
    pub fn winner(&self) -> &Candidate {
        &self.candidates[self.best]
    }
}

/// Streams tried per requested seed before the search settles for fewer
/// than `policy.seeds` candidates.
pub const STREAMS_PER_SEED: u64 = 4;

/// Draws `policy.seeds` valid candidates, each from its own RNG stream, and
/// returns the argmax of `scorer`. Streams that fail to produce a valid
/// placement are replaced by the next unused stream, up to
/// `STREAMS_PER_SEED · seeds` streams in total. Streams are independent, so
/// candidates are sampled and scored in parallel without affecting the result.
pub fn hard_example_search<R: Rng + ?Sized>(
    ctx: &SearchContext<'_>,
    agent: &Agent,
    policy: &PlacementPolicy,
    scorer: &Scorer<'_>,
    rng: &mut R,
) -> Result<SearchOutcome> {
    let base_seed: u64 = rng.random();
    let vis = VisibilityContext {
        cameras: ctx.cameras,
        depths: ctx.depths,
    };
    let wanted = policy.seeds as usize;
    let budget = STREAMS_PER_SEED * policy.seeds as u64;
    let mut candidates: Vec<Candidate> = Vec::with_capacity(wanted);
    let mut next_stream = 0u64;
    let mut failed_seeds = 0u32;
    while candidates.len() < wanted && next_stream < budget {
        let batch = ((wanted - candidates.len()) as u64).min(budget - next_stream);
        let drawn: Vec<Option<Candidate>> = (next_stream..next_stream + batch)
            .into_par_iter()
            .map(|stream| {
                let mut sub = ChaCha8Rng::seed_from_u64(base_seed);
                sub.set_stream(stream);
                let placement =
                    sample_placement(ctx.space, policy, ctx.existing_boxes, agent, &vis, &mut sub).ok()?;
                let mut annotations = ctx.existing_boxes.to_vec();
                annotations.push(placement.bbox.clone());
                let view = CandidateView {
                    context: ctx,
                    agent,
                    placement: &placement,
                    annotations,
                };
                let score = scorer(&view);
                Some(Candidate {
                    stream,
                    placement,
                    score,
                })
            })
            .collect();
        next_stream += batch;
        failed_seeds += drawn.iter().filter(|c| c.is_none()).count() as u32;
        candidates.extend(drawn.into_iter().flatten());
    }
    if candidates.is_empty() {
        return Err(Error::NoPlacementPossible(format!(
            "none of {budget} seed streams produced a valid placement"
        )));
    }
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        if c.score > candidates[best].score || (candidates[best].score.is_nan() && !c.score.is_nan()) {
            best = i;
        }
    }
    Ok(SearchOutcome {
        base_seed,
        candidates,
        best,
        failed_seeds,
    })
}
