//! Batch runs: load bundles and assets, augment or re-render every requested
//! frame, and write images, annotations and a manifest.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! manifest.json                     config echo and every placement
//! timing.json                       wall-clock seconds per frame
//! <bundle>/t0000/copy0/<camera>.ppm augmented images
//! <bundle>/t0000/copy0/annotations.json
//! <bundle>/t0000/render/<camera>.ppm  unedited renders (render command)
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asset::AssetLibrary;
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::Box3D;
use crate::io::{self, write_json, AnnotationRecord, ImageFormat, LoadedScene, Source};
use crate::placement::{place_agents, AgentRecord, FrameInput, PlacementMode, PlacementPolicy};
use crate::render::{render, DEFAULT_BACKGROUND};

fn default_copies() -> u32 {
    1
}

fn default_background() -> [f64; 3] {
    DEFAULT_BACKGROUND
}

/// Run configuration. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bundles: Vec<PathBuf>,
    pub assets: PathBuf,
    #[serde(default)]
    pub policy: PlacementPolicy,
    /// Mandatory; `None` only so a missing seed gets a clear diagnostic.
    #[serde(default)]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub image_format: ImageFormat,
    /// Camera names to use; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cameras: Option<Vec<String>>,
    /// Timesteps to process; the bundle's annotated frames when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timesteps: Option<Vec<u32>>,
    #[serde(default = "default_copies")]
    pub copies: u32,
    #[serde(default = "default_background")]
    pub background: [f64; 3],
}

impl RunConfig {
    /// Reads a config and makes its paths absolute-or-cwd-relative.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::schema(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for b in &mut cfg.bundles {
            *b = base.join(&*b);
        }
        cfg.assets = base.join(&cfg.assets);
        cfg.output_dir = base.join(&cfg.output_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<u64> {
        let seed = self
            .seed
            .ok_or_else(|| Error::Config("seed is mandatory".into()))?;
        self.policy.validate()?;
        if self.policy.mode == PlacementMode::ScorerMax {
            return Err(Error::Config(
                "scorer-max needs a scorer callback and is only available through the library".into(),
            ));
        }
        if self.bundles.is_empty() {
            return Err(Error::Config("no scene bundles given".into()));
        }
        if self.copies == 0 {
            return Err(Error::Config("copies must be at least 1".into()));
        }
        if !self.background.iter().all(|c| c.is_finite()) {
            return Err(Error::Config("background must be finite".into()));
        }
        Ok(seed)
    }
}

/// Frames and cameras a run will touch, fully loaded and checked.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub seed: u64,
    pub scenes: Vec<LoadedScene>,
    pub library: AssetLibrary,
    /// Per bundle, indices into its camera list.
    pub cameras: Vec<Vec<usize>>,
    /// Per bundle, timesteps to process.
    pub timesteps: Vec<Vec<u32>>,
}

impl Prepared {
    pub fn frame_count(&self, copies: u32) -> usize {
        self.timesteps.iter().map(Vec::len).sum::<usize>() * copies as usize
    }
}

/// Loads and checks everything `config` references without writing output.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    let seed = config.validate()?;
    let library = AssetLibrary::load(&config.assets)?;
    if library.is_empty() {
        return Err(Error::schema(&config.assets, "asset library is empty"));
    }
    let mut scenes = Vec::new();
    let mut names = HashSet::new();
    let mut cameras = Vec::new();
    let mut timesteps = Vec::new();
    for path in &config.bundles {
        let s = io::load_scene(path)?;
        if !names.insert(s.name.clone()) {
            return Err(Error::Config(format!("two bundles are named {:?}", s.name)));
        }
        let cams: Vec<usize> = match &config.cameras {
            None => (0..s.cameras.len()).collect(),
            Some(wanted) => wanted
                .iter()
                .map(|w| {
                    s.cameras
                        .iter()
                        .position(|c| &c.name == w)
                        .ok_or_else(|| Error::Config(format!("bundle {}: no camera named {w:?}", s.name)))
                })
                .collect::<Result<_>>()?,
        };
        if cams.is_empty() {
            return Err(Error::Config(format!("bundle {}: no cameras selected", s.name)));
        }
        let ts: Vec<u32> = match &config.timesteps {
            Some(ts) => ts.clone(),
            None if !s.bundle.annotated_frames.is_empty() => s.bundle.annotated_frames.clone(),
            None => (0..s.scene.timestep_count).collect(),
        };
        if let Some(t) = ts.iter().find(|t| **t >= s.scene.timestep_count) {
            return Err(Error::Config(format!(
                "bundle {}: timestep {t} out of range ({} timesteps)",
                s.name, s.scene.timestep_count
            )));
        }
        cameras.push(cams);
        timesteps.push(ts);
        scenes.push(s);
    }
    Ok(Prepared {
        seed,
        scenes,
        library,
        cameras,
        timesteps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    /// Row-major rotation rows.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRecord {
    pub instance_id: String,
    pub asset_id: String,
    pub category: String,
    /// Camera whose quota the agent filled.
    pub camera: String,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub z: f64,
    /// Canonical-to-world transform of the agent.
    pub transform: TransformRecord,
    /// Visibility ratio per selected camera.
    pub visibility: Vec<f64>,
    pub candidate_scores: Vec<f64>,
    pub winner: usize,
    pub seed: u64,
    pub stream: u64,
    pub attempts: u32,
    /// Number of leading annotation records (real, then earlier inserted)
    /// the placement was checked against.
    pub boxes_before: usize,
}

impl PlacementRecord {
    fn new(a: &AgentRecord, category: &str) -> Self {
        let p = &a.placement;
        let r = p.transform.rotation();
        PlacementRecord {
            instance_id: a.instance_id.clone(),
            asset_id: p.agent_id.clone(),
            category: category.to_string(),
            camera: a.camera.clone(),
            x: p.x,
            y: p.y,
            yaw: p.yaw,
            z: p.z,
            transform: TransformRecord {
                rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
                translation: (*p.transform.translation()).into(),
            },
            visibility: p.visibility.clone(),
            candidate_scores: a.candidate_scores.clone(),
            winner: a.winner,
            seed: a.seed,
            stream: a.stream,
            attempts: p.attempts,
            boxes_before: a.boxes_before,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub bundle: String,
    pub timestep: u32,
    pub copy: u32,
    /// RNG stream of the frame.
    pub stream: u64,
    pub cameras: Vec<String>,
    /// Output directory of the frame relative to the run's output directory.
    pub directory: PathBuf,
    pub real_boxes: usize,
    pub accepted: u32,
    pub rejected: u32,
    pub warnings: Vec<String>,
    pub placements: Vec<PlacementRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub policy: PlacementPolicy,
    pub image_format: ImageFormat,
    pub copies: u32,
    pub background: [f64; 3],
    pub bundles: Vec<String>,
    pub assets: Vec<String>,
    pub accepted: u32,
    pub rejected: u32,
    pub frames: Vec<FrameRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub threads: usize,
    pub total_seconds: f64,
    /// Seconds per frame in manifest order.
    pub frame_seconds: Vec<f64>,
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub timing: Timing,
    pub images_written: usize,
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

struct FrameJob {
    bundle: usize,
    timestep: u32,
    copy: u32,
    stream: u64,
}

fn frame_jobs(prep: &Prepared, copies: u32) -> Vec<FrameJob> {
    let mut jobs = Vec::new();
    for (bundle, ts) in prep.timesteps.iter().enumerate() {
        for &timestep in ts {
            for copy in 0..copies {
                let stream = jobs.len() as u64;
                jobs.push(FrameJob {
                    bundle,
                    timestep,
                    copy,
                    stream,
                });
            }
        }
    }
    jobs
}

fn write_frame_images(
    scene: &crate::scene::SceneGraph,
    cameras: &[Camera],
    t: u32,
    config: &RunConfig,
    dir: &Path,
) -> Result<usize> {
    create_dir(dir)?;
    for cam in cameras {
        let img = render(scene, &[], cam, t, config.background)?;
        let path = dir.join(format!("{}.{}", cam.name, config.image_format.extension()));
        io::write_image(&img, &path, config.image_format)?;
    }
    Ok(cameras.len())
}

fn run_frame(prep: &Prepared, config: &RunConfig, job: &FrameJob) -> Result<(FrameRecord, usize)> {
    let scene = &prep.scenes[job.bundle];
    let cameras: Vec<Camera> = prep.cameras[job.bundle]
        .iter()
        .map(|i| scene.cameras[*i].clone())
        .collect();
    let real = scene.records(job.timestep);
    let real_boxes: Vec<Box3D> = real.iter().map(AnnotationRecord::to_box).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(prep.seed);
    rng.set_stream(job.stream);
    let frame = FrameInput {
        scene: &scene.scene,
        timestep: job.timestep,
        cameras: &cameras,
        existing_boxes: &real_boxes,
        road: &scene.road,
        background: config.background,
    };
    let run = place_agents(&frame, &prep.library, &config.policy, None, &mut rng)?;

    let rel = PathBuf::from(&scene.name)
        .join(format!("t{:04}", job.timestep))
        .join(format!("copy{}", job.copy));
    let dir = config.output_dir.join(&rel);
    let images = write_frame_images(&run.scene, &cameras, job.timestep, config, &dir)?;

    let mut records: Vec<AnnotationRecord> = real.to_vec();
    records.extend(
        run.agents
            .iter()
            .map(|a| AnnotationRecord::from_box(a.instance_id.clone(), &a.placement.bbox, Source::Inserted)),
    );
    io::write_annotations(&records, &dir.join("annotations.json"))?;

    let placements = run
        .agents
        .iter()
        .map(|a| PlacementRecord::new(a, &a.placement.bbox.label))
        .collect();
    Ok((
        FrameRecord {
            bundle: scene.name.clone(),
            timestep: job.timestep,
            copy: job.copy,
            stream: job.stream,
            cameras: cameras.iter().map(|c| c.name.clone()).collect(),
            directory: rel,
            real_boxes: real.len(),
            accepted: run.accepted,
            rejected: run.rejected,
            warnings: run.warnings,
            placements,
        },
        images,
    ))
}

fn finish(
    command: &str,
    config: &RunConfig,
    prep: &Prepared,
    results: Vec<Result<((FrameRecord, usize), f64)>>,
    threads: usize,
    started: Instant,
) -> Result<RunSummary> {
    let mut frames = Vec::new();
    let mut frame_seconds = Vec::new();
    let mut images_written = 0;
    for r in results {
        let ((frame, images), secs) = r?;
        frames.push(frame);
        frame_seconds.push(secs);
        images_written += images;
    }
    let manifest = Manifest {
        command: command.into(),
        seed: prep.seed,
        policy: config.policy.clone(),
        image_format: config.image_format,
        copies: config.copies,
        background: config.background,
        bundles: prep.scenes.iter().map(|s| s.name.clone()).collect(),
        assets: prep.library.agents().iter().map(|a| a.id.clone()).collect(),
        accepted: frames.iter().map(|f| f.accepted).sum(),
        rejected: frames.iter().map(|f| f.rejected).sum(),
        frames,
    };
    write_json(&manifest, &config.output_dir.join("manifest.json"))?;
    let timing = Timing {
        threads,
        total_seconds: started.elapsed().as_secs_f64(),
        frame_seconds,
    };
    write_json(&timing, &config.output_dir.join("timing.json"))?;
    Ok(RunSummary {
        manifest,
        timing,
        images_written,
    })
}

/// Augments every requested frame. Frames run in parallel on a pool of
/// `threads` workers (rayon's default when `None`); each frame draws from
/// its own RNG stream, so outputs do not depend on the thread count.
pub fn run_augment(config: &RunConfig, threads: Option<usize>) -> Result<RunSummary> {
    let started = Instant::now();
    let prep = prepare(config)?;
    create_dir(&config.output_dir)?;
    let jobs = frame_jobs(&prep, config.copies);
    let pool = pool(threads)?;
    let results = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let t0 = Instant::now();
                let out = run_frame(&prep, config, job)?;
                log::info!(
                    "frame bundle={} t={} copy={} accepted={} rejected={}",
                    out.0.bundle,
                    out.0.timestep,
                    out.0.copy,
                    out.0.accepted,
                    out.0.rejected
                );
                Ok((out, t0.elapsed().as_secs_f64()))
            })
            .collect::<Vec<_>>()
    });
    finish("augment", config, &prep, results, pool.current_num_threads(), started)
}

/// Renders the unedited scenes for every requested camera and timestep.
pub fn run_render(config: &RunConfig, threads: Option<usize>) -> Result<RunSummary> {
    let started = Instant::now();
    let prep = prepare(config)?;
    create_dir(&config.output_dir)?;
    let jobs = frame_jobs(&prep, 1);
    let pool = pool(threads)?;
    let results = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let t0 = Instant::now();
                let scene = &prep.scenes[job.bundle];
                let cameras: Vec<Camera> = prep.cameras[job.bundle]
                    .iter()
                    .map(|i| scene.cameras[*i].clone())
                    .collect();
                let rel = PathBuf::from(&scene.name)
                    .join(format!("t{:04}", job.timestep))
                    .join("render");
                let images =
                    write_frame_images(&scene.scene, &cameras, job.timestep, config, &config.output_dir.join(&rel))?;
                let frame = FrameRecord {
                    bundle: scene.name.clone(),
                    timestep: job.timestep,
                    copy: 0,
                    stream: job.stream,
                    cameras: cameras.iter().map(|c| c.name.clone()).collect(),
                    directory: rel,
                    real_boxes: scene.records(job.timestep).len(),
                    accepted: 0,
                    rejected: 0,
                    warnings: Vec::new(),
                    placements: Vec::new(),
                };
                Ok(((frame, images), t0.elapsed().as_secs_f64()))
            })
            .collect::<Vec<_>>()
    });
    finish("render", config, &prep, results, pool.current_num_threads(), started)
}

/// Dry run: schema and scene checks only.
pub fn validate(config: &RunConfig) -> Result<Prepared> {
    prepare(config)
}
