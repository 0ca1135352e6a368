//! Procedural scene bundles and asset libraries for demos, tests and benches.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use nalgebra::{Quaternion, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asset::Agent;
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::{GaussianPrimitive, RigidTransform};
use crate::io::{
    gspl, write_annotations, write_bev_map, write_cameras, write_json, AnnotationRecord, ImageFormat, SceneBundle,
    Source,
};
use crate::placement::{PlacementPolicy, RoadMap};
use crate::scene::{RigidNode, SceneGraph, StaticNode};

/// Shape of a generated bundle: a cross-shaped road through the origin,
/// ground splats, one block building per off-road quadrant, parked cars
/// along the road, and a ring of outward-facing cameras at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub cameras: usize,
    pub image_width: u32,
    pub image_height: u32,
    /// Half the side of the square world, meters.
    pub half_extent: f64,
    /// Half width of each road arm, meters.
    pub road_half_width: f64,
    /// Spacing of the ground splat grid, meters.
    pub ground_spacing: f64,
    pub building_splats: usize,
    pub parked_cars: usize,
    pub car_splats: usize,
    pub timesteps: u32,
    pub assets: usize,
    pub asset_splats: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            cameras: 6,
            image_width: 128,
            image_height: 80,
            half_extent: 24.0,
            road_half_width: 6.0,
            ground_spacing: 1.5,
            building_splats: 120,
            parked_cars: 6,
            car_splats: 60,
            timesteps: 2,
            assets: 10,
            asset_splats: 60,
            seed: 1,
        }
    }
}

impl SynthConfig {
    /// Roughly 200 scene primitives, three cameras and two assets.
    pub fn small() -> Self {
        Self {
            cameras: 3,
            image_width: 96,
            image_height: 64,
            ground_spacing: 4.8,
            building_splats: 10,
            parked_cars: 2,
            car_splats: 30,
            timesteps: 1,
            assets: 2,
            asset_splats: 40,
            ..Self::default()
        }
    }
}

/// Radius around the camera rig left without ground splats, meters.
pub const EGO_RADIUS: f64 = 4.0;

const ASSET_CATEGORIES: [&str; 5] = ["car", "car", "truck", "motorcycle", "bicycle"];

fn category_size(category: &str) -> Vector3<f64> {
    // (width, length, height)
    match category {
        "truck" => Vector3::new(2.2, 5.6, 2.4),
        "motorcycle" => Vector3::new(0.8, 2.1, 1.4),
        "bicycle" => Vector3::new(0.6, 1.8, 1.3),
        _ => Vector3::new(1.9, 4.5, 1.6),
    }
}

fn splat(mean: Vector3<f64>, scale: Vector3<f64>, opacity: f64, rgb: [f64; 3]) -> GaussianPrimitive {
    GaussianPrimitive::with_color(mean, Quaternion::identity(), scale, opacity, rgb)
}

fn jitter<R: Rng>(rng: &mut R, rgb: [f64; 3], amount: f64) -> [f64; 3] {
    rgb.map(|c| (c + rng.random_range(-amount..amount)).clamp(0.0, 1.0))
}

/// Vehicle-like splat cloud in its canonical frame (x forward, z up, origin
/// at the footprint center): a lower body, a narrower cabin and dark wheels.
pub fn vehicle_primitives<R: Rng>(size: Vector3<f64>, n: usize, color: [f64; 3], rng: &mut R) -> Vec<GaussianPrimitive> {
    let (w, l, h) = (size.x, size.y, size.z);
    let s = 0.12 * w.min(h);
    let scale = Vector3::new(1.5 * s, s, s);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (x, y, z, rgb) = match i % 8 {
            0 => {
                let sx = if rng.random::<bool>() { 0.3 } else { -0.3 };
                let sy = if rng.random::<bool>() { 0.4 } else { -0.4 };
                (sx * l, sy * w, 0.15 * h, [0.05, 0.05, 0.05])
            }
            1 | 2 => (
                rng.random_range(-0.25..0.2) * l,
                rng.random_range(-0.35..0.35) * w,
                rng.random_range(0.65..0.85) * h,
                [0.15, 0.2, 0.3],
            ),
            _ => (
                rng.random_range(-0.4..0.4) * l,
                rng.random_range(-0.4..0.4) * w,
                rng.random_range(0.2..0.6) * h,
                jitter(rng, color, 0.05),
            ),
        };
        out.push(splat(Vector3::new(x, y, z), scale, 0.9, rgb));
    }
    out
}

/// Asset `index` of a generated library.
pub fn synthetic_agent(index: usize, splats: usize, seed: u64) -> Result<Agent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1000 + index as u64);
    let category = ASSET_CATEGORIES[index % ASSET_CATEGORIES.len()];
    let size = category_size(category).map(|v| v * rng.random_range(0.9..1.1));
    let hue = index as f64 / 10.0 * TAU;
    let color = [0.5 + 0.4 * hue.cos(), 0.5 + 0.4 * (hue + 2.1).cos(), 0.5 + 0.4 * (hue + 4.2).cos()];
    let prims = vehicle_primitives(size, splats.max(8), color, &mut rng);
    Agent::new(format!("asset{index:02}"), category, prims, None)
}

pub fn synthetic_library(cfg: &SynthConfig) -> Result<Vec<Agent>> {
    (0..cfg.assets).map(|i| synthetic_agent(i, cfg.asset_splats, cfg.seed)).collect()
}

/// In-memory bundle contents.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub scene: SceneGraph,
    pub cameras: Vec<Camera>,
    pub annotations: BTreeMap<u32, Vec<AnnotationRecord>>,
    pub road: RoadMap,
}

pub fn ring_cameras(n: usize, (width, height): (u32, u32)) -> Result<Vec<Camera>> {
    let focal = 0.5 * width as f64 / (35f64.to_radians()).tan();
    (0..n)
        .map(|k| {
            let yaw = k as f64 * TAU / n as f64;
            let pos = Vector3::new(0.5 * yaw.cos(), 0.5 * yaw.sin(), 1.6);
            Camera::looking_along(format!("cam{k}"), pos, yaw, (width, height), focal)
        })
        .collect()
}

pub fn synthetic_scene(cfg: &SynthConfig) -> Result<SynthScene> {
    if cfg.cameras == 0 || cfg.timesteps == 0 || !(cfg.ground_spacing > 0.0) || !(cfg.half_extent > 0.0) {
        return Err(Error::Config("synthetic scene needs cameras, timesteps and a positive extent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = cfg.half_extent;
    let rw = cfg.road_half_width;
    let on_road = |x: f64, y: f64| x.abs() < rw || y.abs() < rw;

    let cell = 0.5;
    let cols = (2.0 * half / cell).round() as u32;
    let mut road = RoadMap::uniform(cols, cols, Vector2::new(-half, -half), cell, 0);
    for r in 0..cols {
        for c in 0..cols {
            let x = -half + (c as f64 + 0.5) * cell;
            let y = -half + (r as f64 + 0.5) * cell;
            if on_road(x, y) {
                road.cells[(r * cols + c) as usize] = 255;
            }
        }
    }

    let mut scene = SceneGraph::new(cfg.timesteps);
    let mut ground = Vec::new();
    let steps = (2.0 * half / cfg.ground_spacing).floor() as usize;
    let s = cfg.ground_spacing;
    for i in 0..=steps {
        for j in 0..=steps {
            let x = -half + i as f64 * s;
            let y = -half + j as f64 * s;
            // The area under the rig is not reconstructed, as with real ego
            // vehicles; splats that close would smear over the whole image.
            if x.hypot(y) < EGO_RADIUS {
                continue;
            }
            let base = if on_road(x, y) { [0.32, 0.32, 0.35] } else { [0.3, 0.5, 0.25] };
            ground.push(splat(
                Vector3::new(x, y, 0.0),
                Vector3::new(0.5 * s, 0.5 * s, 0.02),
                0.95,
                jitter(&mut rng, base, 0.03),
            ));
        }
    }
    scene.static_nodes.push(StaticNode {
        id: 0,
        label: "ground".into(),
        primitives: ground,
    });

    let mut buildings = Vec::new();
    let offset = 0.5 * (half + rw);
    let side = 0.6 * (half - rw);
    for (qx, qy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        let color = jitter(&mut rng, [0.6, 0.55, 0.5], 0.1);
        for _ in 0..cfg.building_splats {
            let face = rng.random_range(0..4);
            let t = rng.random_range(-0.5..0.5) * side;
            let (dx, dy) = match face {
                0 => (0.5 * side, t),
                1 => (-0.5 * side, t),
                2 => (t, 0.5 * side),
                _ => (t, -0.5 * side),
            };
            let z = rng.random_range(0.5..6.0);
            buildings.push(splat(
                Vector3::new(qx * offset + dx, qy * offset + dy, z),
                Vector3::new(0.8, 0.8, 0.8),
                0.97,
                jitter(&mut rng, color, 0.04),
            ));
        }
    }
    if !buildings.is_empty() {
        scene.static_nodes.push(StaticNode {
            id: 1,
            label: "buildings".into(),
            primitives: buildings,
        });
    }

    for k in 0..cfg.parked_cars {
        let size = category_size("car");
        let prims = vehicle_primitives(size, cfg.car_splats.max(8), jitter(&mut rng, [0.7, 0.7, 0.7], 0.3), &mut rng);
        let canonical = crate::asset::fit_canonical_box(&prims);
        // Parked along the curb of one of the four arms, facing along it.
        let arm = k % 4;
        let along = 0.35 * half + 0.5 * half * rng.random::<f64>();
        let curb = rw - 1.3;
        let (x, y, yaw) = match arm {
            0 => (along, curb, 0.0),
            1 => (-curb, along, 0.5 * PI),
            2 => (-along, -curb, PI),
            _ => (curb, -along, 1.5 * PI),
        };
        let transforms = (0..cfg.timesteps)
            .map(|t| {
                let shift = 0.5 * t as f64;
                let (dx, dy) = (shift * f64::cos(yaw), shift * f64::sin(yaw));
                (t, RigidTransform::from_yaw(yaw, Vector3::new(x + dx, y + dy, -canonical.bottom())))
            })
            .collect();
        let mut bbox = canonical;
        bbox.label = "car".into();
        scene.rigid_nodes.push(RigidNode {
            id: 10 + k as u32,
            label: "car".into(),
            primitives: prims,
            transforms,
            canonical_box: Some(bbox),
        });
    }
    scene.validate()?;

    let annotations = (0..cfg.timesteps)
        .map(|t| {
            let records = scene
                .rigid_nodes
                .iter()
                .filter_map(|n| {
                    n.world_box(t)
                        .map(|b| AnnotationRecord::from_box(format!("real-{}", n.id), &b, Source::Real))
                })
                .collect();
            (t, records)
        })
        .collect();
    let cameras = ring_cameras(cfg.cameras, (cfg.image_width, cfg.image_height))?;
    Ok(SynthScene {
        scene,
        cameras,
        annotations,
        road,
    })
}

/// Files written by [`write_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPaths {
    pub bundle: PathBuf,
    pub asset_manifest: PathBuf,
    pub run_config: PathBuf,
}

/// Writes a bundle (`scene.json` and the files it references), an asset
/// library under `assets/`, and a ready-to-run `run.json` into `dir`.
pub fn write_synthetic(dir: &Path, cfg: &SynthConfig) -> Result<SynthPaths> {
    std::fs::create_dir_all(dir.join("assets")).map_err(|e| Error::io(dir, e))?;
    let s = synthetic_scene(cfg)?;
    gspl::write_scene(&s.scene, &dir.join("scene.gspl"))?;
    write_cameras(&s.cameras, &dir.join("cameras.json"))?;
    write_bev_map(&s.road, &dir.join("bev.pgm"), &dir.join("bev.json"))?;
    let mut annotation_files = BTreeMap::new();
    for (t, records) in &s.annotations {
        let name = format!("annotations_t{t:04}.json");
        write_annotations(records, &dir.join(&name))?;
        annotation_files.insert(*t, PathBuf::from(name));
    }
    let bundle = SceneBundle {
        gaussians: "scene.gspl".into(),
        cameras: "cameras.json".into(),
        annotated_frames: annotation_files.keys().copied().collect(),
        annotations: annotation_files,
        bev_map: "bev.pgm".into(),
        bev_sidecar: "bev.json".into(),
        frame_rate_hz: 10.0,
    };
    let bundle_path = dir.join("scene.json");
    write_json(&bundle, &bundle_path)?;

    let mut manifest: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for agent in synthetic_library(cfg)? {
        let file = PathBuf::from(format!("{}.gspl", agent.id));
        crate::asset::save_agent(&agent, &dir.join("assets").join(&file))?;
        manifest.entry(agent.label.clone()).or_default().push(file);
    }
    let manifest_path = dir.join("assets").join("manifest.json");
    write_json(&manifest, &manifest_path)?;

    let run = crate::augment::RunConfig {
        bundles: vec!["scene.json".into()],
        assets: "assets/manifest.json".into(),
        policy: PlacementPolicy::default(),
        seed: Some(7),
        output_dir: "out".into(),
        image_format: ImageFormat::Ppm,
        cameras: None,
        timesteps: None,
        copies: 1,
        background: crate::render::DEFAULT_BACKGROUND,
    };
    let run_path = dir.join("run.json");
    write_json(&run, &run_path)?;
    Ok(SynthPaths {
        bundle: bundle_path,
        asset_manifest: manifest_path,
        run_config: run_path,
    })
}
