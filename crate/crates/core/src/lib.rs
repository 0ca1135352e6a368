//! Scene augmentation with Gaussian-splat agents.
//!
//! Agents stored as 3D Gaussians in a canonical frame are placed into a
//! reconstructed driving scene at physically plausible, visible poses,
//! rendered into every camera by tile-based forward splatting, and annotated
//! with exact 3D boxes derived from the placement transform.

pub mod asset;
pub mod augment;
pub mod camera;
pub mod error;
pub mod gaussian;
pub mod geometry;
pub mod io;
pub mod placement;
pub mod render;
pub mod scene;
pub mod synthetic;

pub use asset::{icp_align, load_agent, Agent, AssetLibrary};
pub use camera::Camera;
pub use error::{Error, Result};
pub use gaussian::{apply_rigid_transform, compose, GaussianPrimitive, RigidTransform};
pub use geometry::{BevRect, Box3D, Rect2};
pub use placement::{PlacementMode, PlacementPolicy};
pub use render::{render, render_depth, DepthMap, Image};
pub use scene::SceneGraph;
