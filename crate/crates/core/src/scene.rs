//! Scene graph: static background nodes plus rigid object nodes that carry
//! per-timestep poses.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::gaussian::{apply_rigid_transform, GaussianPrimitive, RigidTransform};
use crate::geometry::Box3D;

#[derive(Debug, Clone, PartialEq)]
pub struct StaticNode {
    pub id: u32,
    pub label: String,
    pub primitives: Vec<GaussianPrimitive>,
}

/// A rigid object stored in its canonical frame; `transforms` maps a
/// timestep to the canonical-to-world pose. The node is absent at timesteps
/// without an entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidNode {
    pub id: u32,
    pub label: String,
    pub primitives: Vec<GaussianPrimitive>,
    pub transforms: BTreeMap<u32, RigidTransform>,
    pub canonical_box: Option<Box3D>,
}

impl RigidNode {
    pub fn world_primitives(&self, timestep: u32) -> Result<Option<Vec<GaussianPrimitive>>> {
        match self.transforms.get(&timestep) {
            Some(t) => apply_rigid_transform(&self.primitives, t).map(Some),
            None => Ok(None),
        }
    }

    pub fn world_box(&self, timestep: u32) -> Option<Box3D> {
        let t = self.transforms.get(&timestep)?;
        self.canonical_box.as_ref().map(|b| b.transformed(t))
    }
}

/// Deformable nodes are not modelled; the slot exists so a scene always
/// carries all three node sets. This type has no values.
#[derive(Debug, Clone, PartialEq)]
pub enum MorphableNode {}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneGraph {
    pub static_nodes: Vec<StaticNode>,
    pub rigid_nodes: Vec<RigidNode>,
    pub morphable_nodes: Vec<MorphableNode>,
    pub timestep_count: u32,
}

impl SceneGraph {
    pub fn new(timestep_count: u32) -> Self {
        Self {
            timestep_count,
            ..Default::default()
        }
    }

    pub fn primitive_count(&self) -> usize {
        self.static_nodes.iter().map(|n| n.primitives.len()).sum::<usize>()
            + self.rigid_nodes.iter().map(|n| n.primitives.len()).sum::<usize>()
    }

    pub fn next_node_id(&self) -> u32 {
        self.static_nodes
            .iter()
            .map(|n| n.id)
            .chain(self.rigid_nodes.iter().map(|n| n.id))
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        let mut check_node = |id: u32, label: &str, prims: &[GaussianPrimitive]| -> Result<()> {
            if !ids.insert(id) {
                return Err(Error::Scene(format!("duplicate node id {id}")));
            }
            if let Some(first) = prims.first() {
                if prims.iter().any(|p| p.sh_degree != first.sh_degree) {
                    return Err(Error::Scene(format!(
                        "node {id} ({label}) mixes spherical-harmonics degrees"
                    )));
                }
            }
            for (i, p) in prims.iter().enumerate() {
                p.validate(i).map_err(|e| Error::Scene(format!("node {id}: {e}")))?;
            }
            Ok(())
        };
        for n in &self.static_nodes {
            check_node(n.id, &n.label, &n.primitives)?;
        }
        for n in &self.rigid_nodes {
            check_node(n.id, &n.label, &n.primitives)?;
            if let Some(t) = n.transforms.keys().find(|t| **t >= self.timestep_count) {
                return Err(Error::Scene(format!(
                    "node {} has a pose at timestep {t} but the scene has {} timesteps",
                    n.id, self.timestep_count
                )));
            }
            if let Some(b) = &n.canonical_box {
                if !b.is_valid() {
                    return Err(Error::Scene(format!("node {} has an invalid box", n.id)));
                }
            }
        }
        Ok(())
    }

    /// All primitives present at `timestep` in world coordinates: static
    /// nodes first, then rigid nodes in order, then `extra` nodes. The
    /// position in this list is the primitive's global index.
    pub fn world_primitives(
        &self,
        extra: &[RigidNode],
        timestep: u32,
    ) -> Result<Vec<GaussianPrimitive>> {
        let mut out: Vec<GaussianPrimitive> = self
            .static_nodes
            .iter()
            .flat_map(|n| n.primitives.iter().cloned())
            .collect();
        for node in self.rigid_nodes.iter().chain(extra) {
            if let Some(prims) = node.world_primitives(timestep)? {
                out.extend(prims);
            }
        }
        Ok(out)
    }

    /// World boxes of rigid nodes posed at `timestep`.
    pub fn rigid_boxes(&self, timestep: u32) -> Vec<Box3D> {
        self.rigid_nodes.iter().filter_map(|n| n.world_box(timestep)).collect()
    }
}
