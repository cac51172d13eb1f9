use crate::error::{Error, Result};
use crate::geometry::Ray;
use crate::math::Vec3;

/// Pinhole camera. Pixel `(0, 0)` is the top-left corner of the image.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    tan_half_fov: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    /// `fov_deg` is the vertical field of view.
    pub fn new(position: Vec3, look_at: Vec3, up: Vec3, fov_deg: f64, width: usize, height: usize) -> Result<Self> {
        let forward = look_at - position;
        if forward.length() == 0.0 {
            return Err(Error::invalid("camera look_at coincides with its position"));
        }
        let forward = forward.normalized();
        let right = forward.cross(up);
        if right.length() < 1e-9 {
            return Err(Error::invalid("camera up vector is parallel to the view direction"));
        }
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::invalid(format!(
                "camera fov must lie in (0, 180) degrees, got {fov_deg}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("camera resolution must be positive"));
        }
        let right = right.normalized();
        Ok(Camera {
            position,
            forward,
            right,
            up: right.cross(forward),
            tan_half_fov: (0.5 * fov_deg.to_radians()).tan(),
            width,
            height,
        })
    }

    pub fn with_resolution(&self, width: usize, height: usize) -> Camera {
        Camera {
            width,
            height,
            ..self.clone()
        }
    }

    /// Primary ray through continuous pixel coordinates `(px, py)`.
    pub fn ray(&self, px: f64, py: f64) -> Ray {
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * px / self.width as f64 - 1.0) * self.tan_half_fov * aspect;
        let sy = (1.0 - 2.0 * py / self.height as f64) * self.tan_half_fov;
        let d = self.forward + self.right * sx + self.up * sy;
        Ray::new(self.position, d.normalized())
    }

    /// Continuous pixel coordinates of a world point in front of the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        let d = p - self.position;
        let z = d.dot(self.forward);
        if z <= 0.0 {
            return None;
        }
        let aspect = self.width as f64 / self.height as f64;
        let sx = d.dot(self.right) / z / (self.tan_half_fov * aspect);
        let sy = d.dot(self.up) / z / self.tan_half_fov;
        Some((
            0.5 * (sx + 1.0) * self.width as f64,
            0.5 * (1.0 - sy) * self.height as f64,
        ))
    }
}
