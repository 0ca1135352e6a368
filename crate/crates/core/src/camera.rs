//! Pinhole camera with world-to-camera extrinsics.
//!
//! Camera frame: +x right, +y down, +z along the optical axis. Pixel `(i, j)`
//! is sampled at image coordinate `(i, j)` and covers `[i - ½, i + ½)`.

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::gaussian::RigidTransform;

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub name: String,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub near_clip: f64,
    pub world_to_camera: RigidTransform,
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        near_clip: f64,
        world_to_camera: RigidTransform,
    ) -> Result<Self> {
        let cam = Self {
            name: name.into(),
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            near_clip,
            world_to_camera,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config(format!("camera {}: zero-sized image", self.name)));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Config(format!("camera {}: focal lengths must be positive", self.name)));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64 && self.cy > 0.0 && self.cy < self.height as f64)
        {
            return Err(Error::Config(format!(
                "camera {}: principal point outside the image",
                self.name
            )));
        }
        if !(self.near_clip > 0.0) {
            return Err(Error::Config(format!("camera {}: near_clip must be positive", self.name)));
        }
        Ok(())
    }

    /// Camera looking along `forward` from `position` with world +z up.
    pub fn looking_along(
        name: impl Into<String>,
        position: Vector3<f64>,
        yaw: f64,
        (width, height): (u32, u32),
        focal: f64,
    ) -> Result<Self> {
        let (s, c) = yaw.sin_cos();
        let z = Vector3::new(c, s, 0.0);
        let x = Vector3::new(s, -c, 0.0);
        let y = Vector3::new(0.0, 0.0, -1.0);
        let r = nalgebra::Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let w2c = RigidTransform::new(r, -(r * position))?;
        Camera::new(
            name,
            focal,
            focal,
            width as f64 / 2.0,
            height as f64 / 2.0,
            width,
            height,
            0.1,
            w2c,
        )
    }

    pub fn to_camera(&self, p_world: &Vector3<f64>) -> Vector3<f64> {
        self.world_to_camera.apply(p_world)
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        self.world_to_camera.inverse().translation().to_owned()
    }

    /// Image coordinates of a camera-frame point (no depth check).
    pub fn project(&self, p_cam: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(
            self.fx * p_cam.x / p_cam.z + self.cx,
            self.fy * p_cam.y / p_cam.z + self.cy,
        )
    }

    /// Pixel containing image coordinate `uv`, if inside the image.
    pub fn pixel_of(&self, uv: &Vector2<f64>) -> Option<(u32, u32)> {
        let i = (uv.x + 0.5).floor();
        let j = (uv.y + 0.5).floor();
        if i >= 0.0 && j >= 0.0 && i < self.width as f64 && j < self.height as f64 {
            Some((i as u32, j as u32))
        } else {
            None
        }
    }

    /// Pixel hit by a world point in front of the near plane.
    pub fn world_to_pixel(&self, p_world: &Vector3<f64>) -> Option<(u32, u32)> {
        let pc = self.to_camera(p_world);
        if pc.z <= self.near_clip {
            return None;
        }
        self.pixel_of(&self.project(&pc))
    }

    pub fn sees(&self, p_world: &Vector3<f64>) -> bool {
        self.world_to_pixel(p_world).is_some()
    }
}
