use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::annotations::{read_annotations, AnnotationRecord, Source};
use super::bev::read_bev_map;
use super::gspl::read_scene;
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::RigidTransform;
use crate::placement::RoadMap;
use crate::scene::SceneGraph;

fn default_near_clip() -> f64 {
    0.1
}

/// Pinhole camera on disk. `rotation` (row-major rows) and `translation` map
/// world points into the camera frame (x right, y down, z forward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub name: String,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_near_clip")]
    pub near_clip: f64,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl CameraRecord {
    pub fn from_camera(c: &Camera) -> Self {
        let r = c.world_to_camera.rotation();
        Self {
            name: c.name.clone(),
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            near_clip: c.near_clip,
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: (*c.world_to_camera.translation()).into(),
        }
    }

    pub fn to_camera(&self) -> Result<Camera> {
        let r = Matrix3::from_fn(|i, j| self.rotation[i][j]);
        let t = RigidTransform::new(r, Vector3::from(self.translation))?;
        Camera::new(
            self.name.clone(),
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.width,
            self.height,
            self.near_clip,
            t,
        )
    }
}

pub fn read_cameras(path: &Path) -> Result<Vec<Camera>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<CameraRecord> = serde_json::from_str(&text).map_err(|e| Error::schema(path, e.to_string()))?;
    if records.is_empty() {
        return Err(Error::schema(path, "at least one camera is required"));
    }
    let mut names = std::collections::HashSet::new();
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if !names.insert(r.name.as_str()) {
                return Err(Error::schema(path, format!("camera {i}: duplicate name {:?}", r.name)));
            }
            r.to_camera()
                .map_err(|e| Error::schema(path, format!("camera {i} ({}): {e}", r.name)))
        })
        .collect()
}

pub fn write_cameras(cameras: &[Camera], path: &Path) -> Result<()> {
    let records: Vec<CameraRecord> = cameras.iter().map(CameraRecord::from_camera).collect();
    write_json(&records, path)
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Bundle description. Paths are relative to the bundle file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneBundle {
    pub gaussians: PathBuf,
    pub cameras: PathBuf,
    /// Annotation file per annotated timestep.
    pub annotations: BTreeMap<u32, PathBuf>,
    pub bev_map: PathBuf,
    pub bev_sidecar: PathBuf,
    pub frame_rate_hz: f64,
    pub annotated_frames: Vec<u32>,
}

/// A fully validated scene bundle in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScene {
    pub name: String,
    pub bundle: SceneBundle,
    pub scene: SceneGraph,
    pub cameras: Vec<Camera>,
    /// Real annotations per annotated timestep.
    pub annotations: BTreeMap<u32, Vec<AnnotationRecord>>,
    pub road: RoadMap,
}

impl LoadedScene {
    /// Real annotations at `t` (empty for unannotated timesteps).
    pub fn records(&self, t: u32) -> &[AnnotationRecord] {
        self.annotations.get(&t).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Loads and validates every file a bundle references. The bundle name is
/// the file stem of `path`.
pub fn load_scene(path: &Path) -> Result<LoadedScene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bundle: SceneBundle = serde_json::from_str(&text).map_err(|e| Error::schema(path, e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    if !(bundle.frame_rate_hz > 0.0 && bundle.frame_rate_hz.is_finite()) {
        return Err(Error::schema(path, "frame_rate_hz must be positive"));
    }
    let scene = read_scene(&base.join(&bundle.gaussians))?;
    let cameras = read_cameras(&base.join(&bundle.cameras))?;
    let road = read_bev_map(&base.join(&bundle.bev_map), &base.join(&bundle.bev_sidecar))?;
    let mut annotations = BTreeMap::new();
    for (t, file) in &bundle.annotations {
        if *t >= scene.timestep_count {
            return Err(Error::schema(
                path,
                format!("annotations for timestep {t} but the scene has {}", scene.timestep_count),
            ));
        }
        let file = base.join(file);
        let records = read_annotations(&file)?;
        if let Some(i) = records.iter().position(|r| r.source != Source::Real) {
            return Err(Error::schema(&file, format!("record {i}: input annotations must be real")));
        }
        annotations.insert(*t, records);
    }
    if let Some(t) = bundle.annotated_frames.iter().find(|t| !bundle.annotations.contains_key(t)) {
        return Err(Error::schema(path, format!("annotated frame {t} has no annotation file")));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "bundle".into());
    Ok(LoadedScene {
        name,
        bundle,
        scene,
        cameras,
        annotations,
        road,
    })
}
