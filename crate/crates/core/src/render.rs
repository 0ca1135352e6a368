//! Forward tile-based Gaussian splatting.
//!
//! Primitives are projected with the local affine (EWA) approximation,
//! binned into 16×16 tiles by their 3σ bounding rectangle, sorted by
//! camera-frame depth (ties by global index) and alpha-blended front to back.
//! Tiles are rendered in parallel; every pixel's blend order is fixed by the
//! sort, so the output does not depend on the worker count.

use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};
use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::{sh_evaluate_unchecked, GaussianPrimitive, RigidTransform};
use crate::scene::{RigidNode, SceneGraph};

pub const TILE_SIZE: u32 = 16;
/// Added to the 2D covariance diagonal, px².
pub const BLUR_FLOOR: f64 = 0.3;
pub const ALPHA_MAX: f64 = 0.99;
pub const TRANSMITTANCE_MIN: f64 = 1e-4;
/// Footprint cutoff in standard deviations.
pub const FOOTPRINT_SIGMA: f64 = 3.0;
/// Pixels with less accumulated alpha than this have no depth.
/// The Jacobian is evaluated with `x/z` and `y/z` clamped to this multiple
/// of the frustum half-angle tangents, so splats far outside the view are not
/// inflated by the linearization.
pub const FRUSTUM_GUARD: f64 = 1.3;
pub const DEPTH_ALPHA_MIN: f64 = 0.5;
pub const DEFAULT_BACKGROUND: [f64; 3] = [0.5, 0.5, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB in `[0, 1]`.
    pub pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn filled(width: u32, height: u32, rgb: [f64; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![rgb; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> [f64; 3] {
        self.pixels[(y * self.width + x) as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    /// Row-major depth in meters; `f64::INFINITY` where nothing was hit.
    pub values: Vec<f64>,
}

impl DepthMap {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![f64::INFINITY; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[(y * self.width + x) as usize]
    }
}

/// A primitive projected onto the image plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat2D {
    pub mean2d: Vector2<f64>,
    pub cov2d: Matrix2<f64>,
    pub conic: Matrix2<f64>,
    pub depth: f64,
    pub color: [f64; 3],
    pub opacity: f64,
    /// Inclusive pixel bounds of the 3σ rectangle, clipped to the image.
    pub pixel_min: (u32, u32),
    pub pixel_max: (u32, u32),
}

impl Splat2D {
    /// Blending weight at image coordinate `p`, zero outside the 3σ ellipse.
    #[inline]
    pub fn alpha_at(&self, p: &Vector2<f64>) -> f64 {
        let d = p - self.mean2d;
        let m = d.x * (self.conic[(0, 0)] * d.x + self.conic[(0, 1)] * d.y)
            + d.y * (self.conic[(1, 0)] * d.x + self.conic[(1, 1)] * d.y);
        if m > FOOTPRINT_SIGMA * FOOTPRINT_SIGMA {
            return 0.0;
        }
        (self.opacity * (-0.5 * m).exp()).min(ALPHA_MAX)
    }
}

/// Perspective Jacobian of `(fx x/z + cx, fy y/z + cy)` at a camera-frame point.
pub fn projection_jacobian(cam: &Camera, p: &Vector3<f64>) -> Matrix2x3<f64> {
    let iz = 1.0 / p.z;
    let iz2 = iz * iz;
    Matrix2x3::new(
        cam.fx * iz,
        0.0,
        -cam.fx * p.x * iz2,
        0.0,
        cam.fy * iz,
        -cam.fy * p.y * iz2,
    )
}

/// `p` with its view-ray slopes clamped to the guarded frustum.
pub fn guarded(cam: &Camera, p: &Vector3<f64>) -> Vector3<f64> {
    let lim = |c: f64, f: f64, extent: u32| {
        (-FRUSTUM_GUARD * c / f, FRUSTUM_GUARD * (extent as f64 - c) / f)
    };
    let (x0, x1) = lim(cam.cx, cam.fx, cam.width);
    let (y0, y1) = lim(cam.cy, cam.fy, cam.height);
    Vector3::new((p.x / p.z).clamp(x0, x1) * p.z, (p.y / p.z).clamp(y0, y1) * p.z, p.z)
}

/// Projects one primitive, or `None` when it is behind the near plane or its
/// 3σ footprint misses the image.
pub fn project_gaussian(g: &GaussianPrimitive, cam: &Camera) -> Option<Splat2D> {
    let pc = cam.to_camera(&g.mean);
    if !(pc.z > cam.near_clip) {
        return None;
    }
    let w = cam.world_to_camera.rotation();
    let j = projection_jacobian(cam, &guarded(cam, &pc));
    let t = j * w;
    let mut cov2d = t * g.covariance() * t.transpose();
    cov2d[(0, 0)] += BLUR_FLOOR;
    cov2d[(1, 1)] += BLUR_FLOOR;
    // Exact symmetry keeps the conic symmetric too.
    let off = 0.5 * (cov2d[(0, 1)] + cov2d[(1, 0)]);
    cov2d[(0, 1)] = off;
    cov2d[(1, 0)] = off;
    let det = cov2d[(0, 0)] * cov2d[(1, 1)] - off * off;
    if !(det > 0.0) {
        return None;
    }
    let conic = Matrix2::new(cov2d[(1, 1)] / det, -off / det, -off / det, cov2d[(0, 0)] / det);

    let mean2d = cam.project(&pc);
    let ex = FOOTPRINT_SIGMA * cov2d[(0, 0)].sqrt();
    let ey = FOOTPRINT_SIGMA * cov2d[(1, 1)].sqrt();
    let x0 = (mean2d.x - ex).ceil().max(0.0);
    let y0 = (mean2d.y - ey).ceil().max(0.0);
    let x1 = (mean2d.x + ex).floor().min(cam.width as f64 - 1.0);
    let y1 = (mean2d.y + ey).floor().min(cam.height as f64 - 1.0);
    if !(x0 <= x1 && y0 <= y1) {
        return None;
    }

    let dir = (g.mean - cam.center()).normalize();
    let color = sh_evaluate_unchecked(g.sh_degree, &g.sh_coeffs, &dir);
    Some(Splat2D {
        mean2d,
        cov2d,
        conic,
        depth: pc.z,
        color,
        opacity: g.opacity,
        pixel_min: (x0 as u32, y0 as u32),
        pixel_max: (x1 as u32, y1 as u32),
    })
}

/// Everything one blend pass produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub image: Image,
    pub depth: DepthMap,
    /// Per-pixel `Σ α_i T_i`.
    pub alpha: Vec<f64>,
    /// Per-pixel transmittance left after blending.
    pub transmittance: Vec<f64>,
}

#[derive(Clone, Copy, Default)]
struct PixelOut {
    color: [f64; 3],
    depth: f64,
    alpha: f64,
    transmittance: f64,
}

fn blend_pixel<'a>(
    p: Vector2<f64>,
    splats: impl Iterator<Item = &'a Splat2D>,
    background: &[f64; 3],
) -> PixelOut {
    let mut t = 1.0f64;
    let mut color = [0.0f64; 3];
    let mut depth_sum = 0.0;
    let mut weight_sum = 0.0;
    for s in splats {
        let alpha = s.alpha_at(&p);
        if alpha <= 0.0 {
            continue;
        }
        let w = alpha * t;
        for c in 0..3 {
            color[c] += s.color[c] * w;
        }
        depth_sum += s.depth * w;
        weight_sum += w;
        t *= 1.0 - alpha;
        if t < TRANSMITTANCE_MIN {
            break;
        }
    }
    for c in 0..3 {
        color[c] += t * background[c];
    }
    let depth = if weight_sum >= DEPTH_ALPHA_MIN {
        depth_sum / weight_sum
    } else {
        f64::INFINITY
    };
    PixelOut {
        color,
        depth,
        alpha: weight_sum,
        transmittance: t,
    }
}

/// Renders world-frame primitives. Global index = position in `primitives`.
pub fn rasterize(
    primitives: &[GaussianPrimitive],
    cam: &Camera,
    background: [f64; 3],
) -> Result<RenderOutput> {
    if cam.width == 0 || cam.height == 0 {
        return Err(Error::Config(format!("camera {}: zero-sized image", cam.name)));
    }
    let (w, h) = (cam.width, cam.height);

    let projected: Vec<Option<Splat2D>> =
        primitives.par_iter().map(|g| project_gaussian(g, cam)).collect();
    let mut order: Vec<usize> = (0..projected.len()).filter(|i| projected[*i].is_some()).collect();
    let splats: Vec<Splat2D> = projected.into_iter().flatten().collect();
    // `order` and `splats` are aligned; sort positions by (depth, global index).
    let mut keyed: Vec<(usize, usize)> = order.drain(..).enumerate().collect();
    keyed.sort_by(|a, b| {
        splats[a.0]
            .depth
            .total_cmp(&splats[b.0].depth)
            .then(a.1.cmp(&b.1))
    });

    let tiles_x = w.div_ceil(TILE_SIZE);
    let tiles_y = h.div_ceil(TILE_SIZE);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); (tiles_x * tiles_y) as usize];
    for &(pos, _) in &keyed {
        let s = &splats[pos];
        for ty in s.pixel_min.1 / TILE_SIZE..=s.pixel_max.1 / TILE_SIZE {
            for tx in s.pixel_min.0 / TILE_SIZE..=s.pixel_max.0 / TILE_SIZE {
                bins[(ty * tiles_x + tx) as usize].push(pos as u32);
            }
        }
    }

    let tile_outputs: Vec<Vec<PixelOut>> = bins
        .par_iter()
        .enumerate()
        .map(|(tile, list)| {
            let tx = tile as u32 % tiles_x;
            let ty = tile as u32 / tiles_x;
            let (x0, y0) = (tx * TILE_SIZE, ty * TILE_SIZE);
            let (x1, y1) = ((x0 + TILE_SIZE).min(w), (y0 + TILE_SIZE).min(h));
            let mut out = Vec::with_capacity(((x1 - x0) * (y1 - y0)) as usize);
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = Vector2::new(x as f64, y as f64);
                    out.push(blend_pixel(
                        p,
                        list.iter().map(|&i| &splats[i as usize]),
                        &background,
                    ));
                }
            }
            out
        })
        .collect();

    let n = (w * h) as usize;
    let mut image = Image::filled(w, h, [0.0; 3]);
    let mut depth = DepthMap::empty(w, h);
    let mut alpha = vec![0.0; n];
    let mut transmittance = vec![1.0; n];
    for (tile, out) in tile_outputs.into_iter().enumerate() {
        let tx = tile as u32 % tiles_x;
        let ty = tile as u32 / tiles_x;
        let (x0, y0) = (tx * TILE_SIZE, ty * TILE_SIZE);
        let x1 = (x0 + TILE_SIZE).min(w);
        let tile_w = x1 - x0;
        for (k, px) in out.into_iter().enumerate() {
            let x = x0 + k as u32 % tile_w;
            let y = y0 + k as u32 / tile_w;
            let idx = (y * w + x) as usize;
            image.pixels[idx] = px.color;
            depth.values[idx] = px.depth;
            alpha[idx] = px.alpha;
            transmittance[idx] = px.transmittance;
        }
    }
    Ok(RenderOutput {
        image,
        depth,
        alpha,
        transmittance,
    })
}

/// Renders the scene at timestep `t` with `extra_nodes` appended to the
/// rigid node set.
pub fn render_frame(
    scene: &SceneGraph,
    extra_nodes: &[RigidNode],
    cam: &Camera,
    t: u32,
    background: [f64; 3],
) -> Result<RenderOutput> {
    let prims = scene.world_primitives(extra_nodes, t)?;
    rasterize(&prims, cam, background)
}

pub fn render(
    scene: &SceneGraph,
    extra_nodes: &[RigidNode],
    cam: &Camera,
    t: u32,
    background: [f64; 3],
) -> Result<Image> {
    Ok(render_frame(scene, extra_nodes, cam, t, background)?.image)
}

/// Alpha-weighted expected depth; `+∞` where accumulated alpha < 0.5.
pub fn render_depth(scene: &SceneGraph, cam: &Camera, t: u32) -> Result<DepthMap> {
    Ok(render_frame(scene, &[], cam, t, DEFAULT_BACKGROUND)?.depth)
}

/// A canonical-frame agent posed in the world.
#[derive(Debug, Clone, Copy)]
pub struct PosedAgent<'a> {
    pub label: &'a str,
    pub primitives: &'a [GaussianPrimitive],
    pub transform: RigidTransform,
}

/// Agents as rigid nodes posed at timestep `t`, with ids following the
/// scene's existing ones.
pub fn agent_nodes(scene: &SceneGraph, agents: &[PosedAgent<'_>], t: u32) -> Vec<RigidNode> {
    let first = scene.next_node_id();
    agents
        .iter()
        .enumerate()
        .map(|(k, a)| RigidNode {
            id: first + k as u32,
            label: a.label.to_string(),
            primitives: a.primitives.to_vec(),
            transforms: [(t, a.transform)].into_iter().collect(),
            canonical_box: None,
        })
        .collect()
}

/// Renders the scene with each agent inserted under its placement transform.
pub fn render_augmented(
    scene: &SceneGraph,
    agents: &[PosedAgent<'_>],
    cam: &Camera,
    t: u32,
    background: [f64; 3],
) -> Result<Image> {
    render(scene, &agent_nodes(scene, agents, t), cam, t, background)
}
