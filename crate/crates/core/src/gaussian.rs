//! Gaussian primitives, rigid transforms and spherical-harmonics shading.
//!
//! Quaternions are stored `(w, x, y, z)` through [`nalgebra::Quaternion`]
//! and normalized to `w >= 0` whenever this module produces one.

use nalgebra::{Matrix3, Matrix4, Quaternion, Vector3};

use crate::error::{Error, Result};

/// Tolerance on `|q| = 1` for stored primitives.
pub const QUATERNION_NORM_TOL: f64 = 1e-6;
/// Tolerance on `RᵀR = I` and `det R = 1`.
pub const ROTATION_TOL: f64 = 1e-6;
/// Highest supported spherical-harmonics degree.
pub const MAX_SH_DEGREE: u8 = 3;

/// Real SH basis normalization constants up to degree 3.
const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Number of coefficients (all three channels) for an SH degree.
pub fn sh_coeff_count(degree: u8) -> usize {
    let bands = degree as usize + 1;
    3 * bands * bands
}

/// One anisotropic 3D Gaussian.
///
/// `sh_coeffs` is laid out basis-function-major: coefficient `k` of channel
/// `c` lives at `3 * k + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    pub opacity: f64,
    pub mean: Vector3<f64>,
    pub rotation: Quaternion<f64>,
    /// Linear standard deviations along the local axes, meters.
    pub scale: Vector3<f64>,
    pub sh_degree: u8,
    pub sh_coeffs: Vec<f64>,
}

impl GaussianPrimitive {
    /// Degree-0 primitive whose rendered color is `rgb` (inverse of the DC
    /// shading convention).
    pub fn with_color(
        mean: Vector3<f64>,
        rotation: Quaternion<f64>,
        scale: Vector3<f64>,
        opacity: f64,
        rgb: [f64; 3],
    ) -> Self {
        let sh_coeffs = rgb.iter().map(|c| (c - 0.5) / SH_C0).collect();
        Self {
            opacity,
            mean,
            rotation,
            scale,
            sh_degree: 0,
            sh_coeffs,
        }
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        let bad = |reason: String| Error::InvalidPrimitive { index, reason };
        if !(self.opacity > 0.0 && self.opacity < 1.0) {
            return Err(bad(format!("opacity {} outside (0, 1)", self.opacity)));
        }
        if !self.mean.iter().all(|v| v.is_finite()) {
            return Err(bad("non-finite mean".into()));
        }
        let norm = self.rotation.norm();
        if !((norm - 1.0).abs() <= QUATERNION_NORM_TOL) {
            return Err(bad(format!("quaternion norm {norm} is not 1")));
        }
        if !self.scale.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(bad(format!(
                "scale ({}, {}, {}) must be strictly positive",
                self.scale.x, self.scale.y, self.scale.z
            )));
        }
        if self.sh_degree > MAX_SH_DEGREE {
            return Err(bad(format!("sh degree {} exceeds 3", self.sh_degree)));
        }
        if self.sh_coeffs.len() != sh_coeff_count(self.sh_degree) {
            return Err(bad(format!(
                "{} sh coefficients for degree {}",
                self.sh_coeffs.len(),
                self.sh_degree
            )));
        }
        Ok(())
    }

    /// World-frame covariance `R_q diag(s²) R_qᵀ`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = rotation_matrix(&self.rotation);
        let s2 = Matrix3::from_diagonal(&self.scale.component_mul(&self.scale));
        r * s2 * r.transpose()
    }
}

/// Rotation matrix of a unit quaternion.
pub fn rotation_matrix(q: &Quaternion<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

fn canonical_sign(q: Quaternion<f64>) -> Quaternion<f64> {
    if q.w < 0.0 {
        -q
    } else {
        q
    }
}

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidRotation("non-finite entry".into()));
    }
    let ortho = (r.transpose() * r - Matrix3::identity()).amax();
    if ortho > ROTATION_TOL {
        return Err(Error::InvalidRotation(format!(
            "not orthonormal (max |RᵀR - I| = {ortho:e})"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ROTATION_TOL {
        return Err(Error::InvalidRotation(format!("determinant {det}")));
    }
    Ok(())
}

/// Unit quaternion of a rotation matrix, sign-normalized to `w >= 0`.
pub fn quaternion_of_rotation(r: &Matrix3<f64>) -> Result<Quaternion<f64>> {
    check_rotation(r)?;
    // Shepperd: branch on the largest diagonal combination for stability.
    let trace = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
    let q = if trace > r[(0, 0)].max(r[(1, 1)]).max(r[(2, 2)]) {
        let s = (1.0 + trace).sqrt() * 2.0;
        Quaternion::new(
            0.25 * s,
            (r[(2, 1)] - r[(1, 2)]) / s,
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(1, 0)] - r[(0, 1)]) / s,
        )
    } else if r[(0, 0)] >= r[(1, 1)] && r[(0, 0)] >= r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        Quaternion::new(
            (r[(2, 1)] - r[(1, 2)]) / s,
            0.25 * s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
        )
    } else if r[(1, 1)] >= r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        Quaternion::new(
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            0.25 * s,
            (r[(1, 2)] + r[(2, 1)]) / s,
        )
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        Quaternion::new(
            (r[(1, 0)] - r[(0, 1)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
            (r[(1, 2)] + r[(2, 1)]) / s,
            0.25 * s,
        )
    };
    Ok(canonical_sign(q.normalize()))
}

/// Element of SE(3): `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        check_rotation(&rotation)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidRotation("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation by `yaw` radians about +z followed by a translation.
    pub fn from_yaw(yaw: f64, translation: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation,
        }
    }

    pub fn from_quaternion(q: &Quaternion<f64>, translation: Vector3<f64>) -> Result<Self> {
        Self::new(rotation_matrix(&q.normalize()), translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Yaw of the rotation's image of +x projected onto the ground plane.
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

/// `second ∘ first`: applies `first`, then `second`.
pub fn compose(second: &RigidTransform, first: &RigidTransform) -> RigidTransform {
    RigidTransform {
        rotation: second.rotation * first.rotation,
        translation: second.rotation * first.translation + second.translation,
    }
}

/// Maps a primitive set through `transform`: means to `R μ + t`, rotations
/// left-composed with the quaternion of `R`. Everything else is copied.
pub fn apply_rigid_transform(
    primitives: &[GaussianPrimitive],
    transform: &RigidTransform,
) -> Result<Vec<GaussianPrimitive>> {
    let q_r = quaternion_of_rotation(&transform.rotation)?;
    primitives
        .iter()
        .enumerate()
        .map(|(index, g)| {
            let norm = g.rotation.norm();
            if !((norm - 1.0).abs() <= QUATERNION_NORM_TOL) {
                return Err(Error::InvalidPrimitive {
                    index,
                    reason: format!("quaternion norm {norm} is not 1"),
                });
            }
            Ok(GaussianPrimitive {
                opacity: g.opacity,
                mean: transform.apply(&g.mean),
                rotation: canonical_sign(q_r * g.rotation),
                scale: g.scale,
                sh_degree: g.sh_degree,
                sh_coeffs: g.sh_coeffs.clone(),
            })
        })
        .collect()
}

/// Evaluates view-dependent color for a unit `dir`, with the `+0.5` offset
/// and `[0, 1]` clamp of the usual splatting convention.
pub fn sh_evaluate(degree: u8, coeffs: &[f64], dir: &Vector3<f64>) -> Result<[f64; 3]> {
    if degree > MAX_SH_DEGREE {
        return Err(Error::Format(format!("sh degree {degree} exceeds 3")));
    }
    if coeffs.len() != sh_coeff_count(degree) {
        return Err(Error::Format(format!(
            "{} sh coefficients for degree {degree}",
            coeffs.len()
        )));
    }
    Ok(sh_evaluate_unchecked(degree, coeffs, dir))
}

pub(crate) fn sh_evaluate_unchecked(degree: u8, coeffs: &[f64], dir: &Vector3<f64>) -> [f64; 3] {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let mut basis = [0.0f64; 16];
    basis[0] = SH_C0;
    if degree >= 1 {
        basis[1] = -SH_C1 * y;
        basis[2] = SH_C1 * z;
        basis[3] = -SH_C1 * x;
    }
    if degree >= 2 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        basis[4] = SH_C2[0] * x * y;
        basis[5] = SH_C2[1] * y * z;
        basis[6] = SH_C2[2] * (2.0 * zz - xx - yy);
        basis[7] = SH_C2[3] * x * z;
        basis[8] = SH_C2[4] * (xx - yy);
        if degree >= 3 {
            basis[9] = SH_C3[0] * y * (3.0 * xx - yy);
            basis[10] = SH_C3[1] * x * y * z;
            basis[11] = SH_C3[2] * y * (4.0 * zz - xx - yy);
            basis[12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
            basis[13] = SH_C3[4] * x * (4.0 * zz - xx - yy);
            basis[14] = SH_C3[5] * z * (xx - yy);
            basis[15] = SH_C3[6] * x * (xx - 3.0 * yy);
        }
    }
    let mut rgb = [0.0f64; 3];
    for (k, b) in basis.iter().take(coeffs.len() / 3).enumerate() {
        for (c, out) in rgb.iter_mut().enumerate() {
            *out += b * coeffs[3 * k + c];
        }
    }
    rgb.map(|v| (v + 0.5).clamp(0.0, 1.0))
}
