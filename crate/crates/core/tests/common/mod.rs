//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the renderer or the geometry
//! code under test; only plain data types are shared.
#![allow(dead_code)]

use gsaug_core::{Camera, GaussianPrimitive};
use nalgebra::{Matrix2, Matrix3, Matrix4, UnitQuaternion, Vector2, Vector3, Vector4};
use rand::Rng;

// ---------------------------------------------------------------- rendering

const SH_C0: f64 = 0.28209479177387814;
const SH_C1: f64 = 0.4886025119029199;
const SH_C2: [f64; 5] = [
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
];
const SH_C3: [f64; 7] = [
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
];

/// Real SH basis values up to degree 3 in the usual splatting order.
pub fn sh_basis(d: &Vector3<f64>) -> Vec<f64> {
    let (x, y, z) = (d.x, d.y, d.z);
    let (xx, yy, zz) = (x * x, y * y, z * z);
    vec![
        SH_C0,
        -SH_C1 * y,
        SH_C1 * z,
        -SH_C1 * x,
        SH_C2[0] * x * y,
        SH_C2[1] * y * z,
        SH_C2[2] * (2.0 * zz - xx - yy),
        SH_C2[3] * x * z,
        SH_C2[4] * (xx - yy),
        SH_C3[0] * y * (3.0 * xx - yy),
        SH_C3[1] * x * y * z,
        SH_C3[2] * y * (4.0 * zz - xx - yy),
        SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        SH_C3[4] * x * (4.0 * zz - xx - yy),
        SH_C3[5] * z * (xx - yy),
        SH_C3[6] * x * (xx - 3.0 * yy),
    ]
}

pub fn sh_color(g: &GaussianPrimitive, dir: &Vector3<f64>) -> [f64; 3] {
    let basis = sh_basis(dir);
    let n = (g.sh_degree as usize + 1).pow(2);
    let mut rgb = [0.5; 3];
    for (k, b) in basis.iter().take(n).enumerate() {
        for (c, out) in rgb.iter_mut().enumerate() {
            *out += b * g.sh_coeffs[3 * k + c];
        }
    }
    rgb.map(|v| v.clamp(0.0, 1.0))
}

fn world_to_camera_h(cam: &Camera) -> Matrix4<f64> {
    cam.world_to_camera.to_homogeneous()
}

pub fn world_covariance(g: &GaussianPrimitive) -> Matrix3<f64> {
    let r = UnitQuaternion::from_quaternion(g.rotation).to_rotation_matrix().into_inner();
    let s2 = Matrix3::from_diagonal(&g.scale.component_mul(&g.scale));
    r * s2 * r.transpose()
}

pub struct OracleSplat {
    pub mean: Vector2<f64>,
    pub inv: Matrix2<f64>,
    pub depth: f64,
    pub opacity: f64,
    pub color: [f64; 3],
    pub index: usize,
}

/// Direct EWA projection. The Jacobian is evaluated at the camera-frame
/// mean with view slopes clamped to 1.3× the frustum tangents.
pub fn oracle_project(g: &GaussianPrimitive, cam: &Camera, index: usize) -> Option<OracleSplat> {
    let m = world_to_camera_h(cam);
    let pc4 = m * Vector4::new(g.mean.x, g.mean.y, g.mean.z, 1.0);
    let (x, y, z) = (pc4.x, pc4.y, pc4.z);
    if z <= cam.near_clip {
        return None;
    }
    let sx = (x / z).clamp(-1.3 * cam.cx / cam.fx, 1.3 * (cam.width as f64 - cam.cx) / cam.fx);
    let sy = (y / z).clamp(-1.3 * cam.cy / cam.fy, 1.3 * (cam.height as f64 - cam.cy) / cam.fy);
    let j = nalgebra::Matrix2x3::new(cam.fx / z, 0.0, -cam.fx * sx / z, 0.0, cam.fy / z, -cam.fy * sy / z);
    let w = m.fixed_view::<3, 3>(0, 0).into_owned();
    let cov = j * w * world_covariance(g) * w.transpose() * j.transpose() + Matrix2::identity() * 0.3;
    let cov = (cov + cov.transpose()) * 0.5;
    let inv = cov.try_inverse()?;
    let cam_center = -(w.transpose() * Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]));
    let dir = (g.mean - cam_center).normalize();
    Some(OracleSplat {
        mean: Vector2::new(cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy),
        inv,
        depth: z,
        opacity: g.opacity,
        color: sh_color(g, &dir),
        index,
    })
}

pub struct OracleFrame {
    pub colors: Vec<[f64; 3]>,
    pub depth: Vec<f64>,
    pub transmittance: Vec<f64>,
}

/// Untiled renderer: every pixel loops over every projected primitive in
/// (depth, index) order.
pub fn brute_force_render(prims: &[GaussianPrimitive], cam: &Camera, background: [f64; 3]) -> OracleFrame {
    let mut splats: Vec<OracleSplat> = prims
        .iter()
        .enumerate()
        .filter_map(|(i, g)| oracle_project(g, cam, i))
        .collect();
    splats.sort_by(|a, b| a.depth.partial_cmp(&b.depth).unwrap().then(a.index.cmp(&b.index)));
    let n = (cam.width * cam.height) as usize;
    let mut frame = OracleFrame {
        colors: Vec::with_capacity(n),
        depth: Vec::with_capacity(n),
        transmittance: Vec::with_capacity(n),
    };
    for py in 0..cam.height {
        for px in 0..cam.width {
            let p = Vector2::new(px as f64, py as f64);
            let mut t = 1.0;
            let mut rgb = [0.0; 3];
            let (mut zs, mut ws) = (0.0, 0.0);
            for s in &splats {
                let d = p - s.mean;
                let power = (d.transpose() * s.inv * d)[(0, 0)];
                if power > 9.0 {
                    continue;
                }
                let a = (s.opacity * (-0.5 * power).exp()).min(0.99);
                if a <= 0.0 {
                    continue;
                }
                for c in 0..3 {
                    rgb[c] += s.color[c] * a * t;
                }
                zs += s.depth * a * t;
                ws += a * t;
                t *= 1.0 - a;
                if t < 1e-4 {
                    break;
                }
            }
            for c in 0..3 {
                rgb[c] += t * background[c];
            }
            frame.colors.push(rgb);
            frame.depth.push(if ws >= 0.5 { zs / ws } else { f64::INFINITY });
            frame.transmittance.push(t);
        }
    }
    frame
}

// ---------------------------------------------------------------- geometry

/// Corners of a yawed rectangle, counter-clockwise.
pub fn rect_polygon(center: Vector2<f64>, half_length: f64, half_width: f64, yaw: f64) -> Vec<Vector2<f64>> {
    let (s, c) = yaw.sin_cos();
    let ax = Vector2::new(c, s) * half_length;
    let ay = Vector2::new(-s, c) * half_width;
    vec![center - ax - ay, center + ax - ay, center + ax + ay, center - ax + ay]
}

fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

pub fn polygon_area(poly: &[Vector2<f64>]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        .abs()
}

/// Sutherland–Hodgman clip of `subject` by the convex CCW polygon `clip`.
pub fn clip_polygon(subject: &[Vector2<f64>], clip: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        if input.is_empty() {
            break;
        }
        for k in 0..input.len() {
            let cur = input[k];
            let prev = input[(k + input.len() - 1) % input.len()];
            let cin = cross(&a, &b, &cur) >= 0.0;
            let pin = cross(&a, &b, &prev) >= 0.0;
            if cin {
                if !pin {
                    out.push(intersect(&prev, &cur, &a, &b));
                }
                out.push(cur);
            } else if pin {
                out.push(intersect(&prev, &cur, &a, &b));
            }
        }
    }
    out
}

fn intersect(p: &Vector2<f64>, q: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> Vector2<f64> {
    let r = q - p;
    let s = b - a;
    let denom = r.x * s.y - r.y * s.x;
    let t = ((a.x - p.x) * s.y - (a.y - p.y) * s.x) / denom;
    p + r * t
}

pub fn overlap_area(a: &[Vector2<f64>], b: &[Vector2<f64>]) -> f64 {
    polygon_area(&clip_polygon(a, b))
}

/// Footprint polygon of a box.
pub fn footprint_polygon(b: &gsaug_core::Box3D) -> Vec<Vector2<f64>> {
    rect_polygon(b.center.xy(), 0.5 * b.size.y, 0.5 * b.size.x, b.yaw)
}

// --------------------------------------------------------------- visibility

/// Per-point visibility, computed with the homogeneous world-to-camera
/// matrix and explicit pixel rounding.
pub fn per_point_visibility(means: &[Vector3<f64>], depth: &[f64], cam: &Camera) -> f64 {
    let m = world_to_camera_h(cam);
    let (mut seen, mut total) = (0u32, 0u32);
    for p in means {
        let q = m * Vector4::new(p.x, p.y, p.z, 1.0);
        if !(q.z > cam.near_clip) {
            continue;
        }
        let u = cam.fx * q.x / q.z + cam.cx;
        let v = cam.fy * q.y / q.z + cam.cy;
        let (i, j) = ((u + 0.5).floor(), (v + 0.5).floor());
        if i < 0.0 || j < 0.0 || i >= cam.width as f64 || j >= cam.height as f64 {
            continue;
        }
        total += 1;
        if q.z < depth[(j as usize) * cam.width as usize + i as usize] {
            seen += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        seen as f64 / total as f64
    }
}

// -------------------------------------------------------------- statistics

/// Two-sided one-sample Kolmogorov–Smirnov test against U(lo, hi).
/// Returns (D, asymptotic p-value).
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let mut xs: Vec<f64> = samples.iter().map(|v| (v - lo) / (hi - lo)).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = x.clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    (d, p.clamp(0.0, 1.0))
}

/// Pearson chi-square goodness of fit against equal expected counts.
/// Returns (statistic, p-value).
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|c| (*c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    (stat, 1.0 - dist.cdf(stat))
}

// --------------------------------------------------------------- fixtures

pub fn random_unit_quaternion<R: Rng>(rng: &mut R) -> nalgebra::Quaternion<f64> {
    let q = nalgebra::Quaternion::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let q = q.normalize();
    if q.w < 0.0 {
        -q
    } else {
        q
    }
}

pub fn random_primitive<R: Rng>(rng: &mut R, center: Vector3<f64>, spread: f64, max_degree: u8) -> GaussianPrimitive {
    let degree = rng.random_range(0..=max_degree);
    let n = 3 * (degree as usize + 1).pow(2);
    GaussianPrimitive {
        opacity: rng.random_range(0.05..0.99),
        mean: center
            + Vector3::new(
                rng.random_range(-spread..spread),
                rng.random_range(-spread..spread),
                rng.random_range(-spread..spread),
            ),
        rotation: random_unit_quaternion(rng),
        scale: Vector3::new(
            rng.random_range(0.02..0.5),
            rng.random_range(0.02..0.5),
            rng.random_range(0.02..0.5),
        ),
        sh_degree: degree,
        sh_coeffs: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

/// Camera at a random position near the origin, looking roughly toward it.
pub fn random_camera<R: Rng>(rng: &mut R, size: u32) -> Camera {
    let yaw: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let dist = rng.random_range(4.0..8.0);
    let pos = Vector3::new(-dist * yaw.cos(), -dist * yaw.sin(), rng.random_range(-0.5..0.5));
    let focal = rng.random_range(40.0..90.0);
    let mut cam = Camera::looking_along("rand", pos, yaw, (size, size), focal).unwrap();
    cam.cx += rng.random_range(-4.0..4.0);
    cam.cy += rng.random_range(-4.0..4.0);
    cam
}
