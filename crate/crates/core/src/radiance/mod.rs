//! Trainable radiance fields and differentiable volume rendering.
//!
//! A field maps a 3D point (and viewing direction) to an emitted color and a
//! volume density. Images are formed by alpha-compositing samples along
//! camera rays; depth maps come from the expected ray-termination distance.
//! [`RadianceGrid`] is the default field: a dense voxel lattice with
//! trilinear interpolation. [`MlpField`] offers the same interface backed by
//! a small positional-encoded network.

mod camera;
pub mod checkpoint;
pub mod dataset;
mod encoding;
mod grid;
mod mlp;
mod render;
mod train;

pub use camera::{CameraPose, Intrinsics, Ray};
pub use dataset::{PosedDataset, PosedView};
pub use encoding::{positional_encode, EncodingConfig};
pub use grid::RadianceGrid;
pub use mlp::MlpField;
pub use render::{
    loss, render_depth, render_ray, render_rgbd, render_view, RayOutput, RenderOptions,
};
pub use train::{fit, loss_and_grad, FitOptions, FitReport};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Activated field value at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub rgb: [f64; 3],
    pub sigma: f64,
}

/// Axis-aligned box in scene units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn cube(half: f64) -> Self {
        Self::new([-half; 3], [half; 3])
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|i| self.min[i].is_finite() && self.max[i].is_finite() && self.min[i] < self.max[i])
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Maps `p` into `[-1, 1]^3`.
    pub fn normalize(&self, p: &Vector3<f64>) -> [f64; 3] {
        std::array::from_fn(|i| 2.0 * (p[i] - self.min[i]) / self.extent(i) - 1.0)
    }

    /// Parametric entry/exit of a ray, if it hits the box.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let (a, b) = ((self.min[i] - origin[i]) * inv, (self.max[i] - origin[i]) * inv);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

/// Anything that can be volume rendered.
pub trait RadianceField: Sync {
    fn bounds(&self) -> Aabb;

    /// Activated color and density at `p`; `None` outside the field's support
    /// (treated as empty space).
    fn query(&self, p: &Vector3<f64>, dir: &Vector3<f64>) -> Option<FieldSample>;
}

/// A field whose parameters can be fitted by gradient descent.
pub trait TrainableField: RadianceField {
    fn params(&self) -> &[f64];

    fn params_mut(&mut self) -> &mut [f64];

    /// Adds `d_rgb . d(rgb)/d(theta) + d_sigma * d(sigma)/d(theta)` at `p`
    /// into `grad` (same layout as [`Self::params`]).
    fn accumulate_grad(&self, p: &Vector3<f64>, dir: &Vector3<f64>, d_rgb: [f64; 3], d_sigma: f64, grad: &mut [f64]);

    /// Whether parameter `index` only influences density. Such parameters
    /// take the density learning-rate multiplier during fitting.
    fn is_density_param(&self, _index: usize) -> bool {
        false
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of softplus, for building fields with a prescribed density.
pub fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

/// Inverse of the logistic sigmoid.
pub fn logit(y: f64) -> f64 {
    (y / (1.0 - y)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activations_invert() {
        for &y in &[1e-6, 0.3, 1.0, 7.5, 50.0] {
            assert!((softplus(softplus_inverse(y)) - y).abs() < 1e-9 * y.max(1.0));
        }
        for &y in &[0.01, 0.5, 0.97] {
            assert!((sigmoid(logit(y)) - y).abs() < 1e-12);
        }
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn box_intersection() {
        let b = Aabb::cube(1.0);
        let (t0, t1) = b
            .intersect(&Vector3::new(-3.0, 0.0, 0.0), &Vector3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert_eq!((t0, t1), (2.0, 4.0));
        assert!(b
            .intersect(&Vector3::new(-3.0, 2.0, 0.0), &Vector3::new(1.0, 0.0, 0.0))
            .is_none());
    }
}
