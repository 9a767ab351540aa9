use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    /// Principal point at the image center.
    pub fn centered(focal: f64, width: usize, height: usize) -> Self {
        Self {
            focal,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    /// Focal length giving the requested horizontal field of view.
    pub fn from_fov_x(fov_x: f64, width: usize, height: usize) -> Self {
        Self::centered(0.5 * width as f64 / (0.5 * fov_x).tan(), width, height)
    }

    pub fn resized(&self, width: usize, height: usize) -> Self {
        let s = width as f64 / self.width as f64;
        Self {
            focal: self.focal * s,
            cx: self.cx * s,
            cy: self.cy * height as f64 / self.height as f64,
            width,
            height,
        }
    }
}

/// Camera position and orientation.
///
/// `rotation` maps camera axes to world axes. The camera looks along its
/// local -Z with +Y up and +X right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    pub intrinsics: Intrinsics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl CameraPose {
    pub fn new(position: Vector3<f64>, rotation: Matrix3<f64>, intrinsics: Intrinsics) -> Result<Self> {
        let pose = Self {
            position,
            rotation,
            intrinsics,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn validate(&self) -> Result<()> {
        let err = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        if !(err <= 1e-8) {
            return Err(Error::InvalidParameter(format!(
                "rotation is not orthonormal (deviation {err:e})"
            )));
        }
        if !(self.intrinsics.focal.is_finite() && self.intrinsics.focal > 0.0) {
            return Err(Error::InvalidParameter(format!("focal {}", self.intrinsics.focal)));
        }
        if self.intrinsics.width == 0 || self.intrinsics.height == 0 {
            return Err(Error::Dimension("camera image has a zero side".into()));
        }
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("camera position is not finite".into()));
        }
        Ok(())
    }

    /// Camera-to-world 4x4 matrix.
    pub fn from_matrix(c2w: &Matrix4<f64>, intrinsics: Intrinsics) -> Result<Self> {
        let rotation = c2w.fixed_view::<3, 3>(0, 0).into_owned();
        let position = c2w.fixed_view::<3, 1>(0, 3).into_owned();
        Self::new(position, rotation, intrinsics)
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.position);
        m
    }

    pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>, intrinsics: Intrinsics) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() == 0.0 {
            return Err(Error::InvalidParameter("eye and target coincide".into()));
        }
        Self::looking(eye, forward, up, intrinsics)
    }

    /// Camera at `eye` looking along `forward`.
    pub fn looking(eye: Vector3<f64>, forward: Vector3<f64>, up: Vector3<f64>, intrinsics: Intrinsics) -> Result<Self> {
        let back = -forward.normalize();
        let mut right = up.cross(&back);
        if right.norm() < 1e-9 {
            // looking straight along `up`; pick any perpendicular
            let alt = if back.x.abs() < 0.9 { Vector3::x() } else { Vector3::z() };
            right = alt.cross(&back);
        }
        let right = right.normalize();
        let true_up = back.cross(&right);
        let rotation = Matrix3::from_columns(&[right, true_up, back]);
        Self::new(eye, rotation, intrinsics)
    }

    /// Pose from a view vector `(x, y, z, theta, phi)`: position plus viewing
    /// direction `(sin(theta) sin(phi), cos(theta), sin(theta) cos(phi))`, where
    /// `theta` is the polar angle from world +Y and `phi` the azimuth from +Z
    /// toward +X.
    pub fn from_view_vector(view: [f64; 5], intrinsics: Intrinsics) -> Result<Self> {
        let [x, y, z, theta, phi] = view;
        let dir = Vector3::new(theta.sin() * phi.sin(), theta.cos(), theta.sin() * phi.cos());
        Self::looking(Vector3::new(x, y, z), dir, Vector3::y(), intrinsics)
    }

    /// Inverse of [`Self::from_view_vector`] (roll is discarded).
    pub fn view_vector(&self) -> [f64; 5] {
        let d = self.forward();
        let theta = d.y.clamp(-1.0, 1.0).acos();
        let phi = d.x.atan2(d.z);
        [self.position.x, self.position.y, self.position.z, theta, phi]
    }

    /// World-space viewing direction (unit).
    pub fn forward(&self) -> Vector3<f64> {
        -self.rotation.column(2).into_owned()
    }

    /// Ray through the center of pixel `(px, py)`.
    pub fn ray(&self, px: usize, py: usize) -> Ray {
        self.ray_at(px as f64 + 0.5, py as f64 + 0.5)
    }

    /// Ray through continuous image coordinates (pixel corners at integers).
    pub fn ray_at(&self, u: f64, v: f64) -> Ray {
        let k = &self.intrinsics;
        let cam = Vector3::new((u - k.cx) / k.focal, -(v - k.cy) / k.focal, -1.0);
        Ray {
            origin: self.position,
            direction: (self.rotation * cam).normalize(),
        }
    }

    pub fn with_intrinsics(&self, intrinsics: Intrinsics) -> Self {
        Self { intrinsics, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn look_at_points_center_ray_at_target() {
        let k = Intrinsics::centered(100.0, 64, 48);
        let pose = CameraPose::look_at(Vector3::new(1.0, 2.0, 3.0), Vector3::zeros(), Vector3::y(), k).unwrap();
        let r = pose.ray_at(32.0, 24.0);
        let expected = -Vector3::new(1.0, 2.0, 3.0).normalize();
        assert!((r.direction - expected).norm() < 1e-12);
        // image +x maps to the right of the view
        let right = pose.ray_at(64.0, 24.0).direction;
        assert!(right.dot(&pose.rotation.column(0)) > 0.0);
    }

    #[test]
    fn view_vector_round_trip() {
        let k = Intrinsics::centered(80.0, 16, 16);
        let v = [0.3, -0.2, 2.5, 1.2, -2.0];
        let pose = CameraPose::from_view_vector(v, k).unwrap();
        let back = pose.view_vector();
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_round_trip_and_validation() {
        let k = Intrinsics::centered(50.0, 8, 8);
        let pose = CameraPose::look_at(Vector3::new(0.0, 0.0, 3.0), Vector3::zeros(), Vector3::y(), k).unwrap();
        assert_eq!(CameraPose::from_matrix(&pose.to_matrix(), k).unwrap(), pose);

        let mut skew = pose.to_matrix();
        skew[(0, 0)] = 1.1;
        assert!(CameraPose::from_matrix(&skew, k).is_err());
        assert!(CameraPose::new(pose.position, pose.rotation, Intrinsics::centered(0.0, 8, 8)).is_err());
    }

    #[test]
    fn looking_along_up_is_handled() {
        let k = Intrinsics::centered(50.0, 8, 8);
        let pose = CameraPose::looking(Vector3::new(0.0, 3.0, 0.0), -Vector3::y(), Vector3::y(), k).unwrap();
        assert!((pose.forward() + Vector3::y()).norm() < 1e-12);
    }
}
