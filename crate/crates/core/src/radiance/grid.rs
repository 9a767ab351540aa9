use nalgebra::Vector3;

use super::{sigmoid, softplus, Aabb, FieldSample, RadianceField, TrainableField};
use crate::{Error, Result};

pub(crate) const CHANNELS: usize = 4;

/// Initial pre-activation density (softplus(-1) ~ 0.31).
pub const INIT_DENSITY_PRE: f64 = -1.0;
/// Initial pre-activation color (sigmoid(0) = 0.5).
pub const INIT_COLOR_PRE: f64 = 0.0;

/// Dense voxel lattice of pre-activation `(r, g, b, sigma)`.
///
/// Lattice points sit on the box corners and are spaced evenly in between,
/// so a resolution of `n` along an axis spans `n - 1` cells. Color is passed
/// through a sigmoid and density through a softplus after trilinear
/// interpolation. Color does not depend on the viewing direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceGrid {
    resolution: [usize; 3],
    bounds: Aabb,
    /// Interleaved `[r, g, b, sigma]` per lattice point, x fastest.
    params: Vec<f64>,
}

struct Corners {
    base: [usize; 3],
    frac: [f64; 3],
}

impl RadianceGrid {
    pub fn new(resolution: [usize; 3], bounds: Aabb) -> Result<Self> {
        Self::filled(resolution, bounds, [INIT_COLOR_PRE; 3], INIT_DENSITY_PRE)
    }

    /// Every lattice point set to the given pre-activation values.
    pub fn filled(resolution: [usize; 3], bounds: Aabb, color_pre: [f64; 3], density_pre: f64) -> Result<Self> {
        if resolution.iter().any(|&n| n < 2) {
            return Err(Error::Dimension(format!("grid resolution {resolution:?} (need >= 2 per axis)")));
        }
        if !bounds.is_valid() {
            return Err(Error::InvalidParameter(format!("grid bounds {bounds:?}")));
        }
        let n = resolution
            .iter()
            .try_fold(CHANNELS, |acc, &r| acc.checked_mul(r))
            .ok_or_else(|| Error::Dimension(format!("grid resolution {resolution:?} overflows")))?;
        let mut params = Vec::with_capacity(n);
        for _ in 0..n / CHANNELS {
            params.extend_from_slice(&[color_pre[0], color_pre[1], color_pre[2], density_pre]);
        }
        Ok(Self {
            resolution,
            bounds,
            params,
        })
    }

    pub(crate) fn from_params(resolution: [usize; 3], bounds: Aabb, params: Vec<f64>) -> Result<Self> {
        let mut grid = Self::filled(resolution, bounds, [0.0; 3], 0.0)?;
        if params.len() != grid.params.len() {
            return Err(Error::Mismatch(format!(
                "{} parameters for grid {resolution:?}",
                params.len()
            )));
        }
        grid.params = params;
        Ok(grid)
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn voxel_count(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Spacing between lattice points along `axis`.
    pub fn cell_size(&self, axis: usize) -> f64 {
        self.bounds.extent(axis) / (self.resolution[axis] - 1) as f64
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.resolution[1] + iy) * self.resolution[0] + ix
    }

    /// Pre-activation `[r, g, b, sigma]` at a lattice point.
    pub fn voxel(&self, ix: usize, iy: usize, iz: usize) -> [f64; 4] {
        let i = CHANNELS * self.index(ix, iy, iz);
        [self.params[i], self.params[i + 1], self.params[i + 2], self.params[i + 3]]
    }

    pub fn set_voxel(&mut self, ix: usize, iy: usize, iz: usize, value: [f64; 4]) {
        let i = CHANNELS * self.index(ix, iy, iz);
        self.params[i..i + CHANNELS].copy_from_slice(&value);
    }

    /// World position of a lattice point.
    pub fn lattice_point(&self, ix: usize, iy: usize, iz: usize) -> Vector3<f64> {
        let idx = [ix, iy, iz];
        Vector3::from_fn(|i, _| self.bounds.min[i] + idx[i] as f64 * self.cell_size(i))
    }

    /// Sets every lattice point from a function of its position.
    pub fn fill_with(&mut self, f: impl Fn(&Vector3<f64>) -> [f64; 4]) {
        let [nx, ny, nz] = self.resolution;
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let v = f(&self.lattice_point(ix, iy, iz));
                    self.set_voxel(ix, iy, iz, v);
                }
            }
        }
    }

    fn corners(&self, p: &Vector3<f64>) -> Option<Corners> {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for i in 0..3 {
            let n = self.resolution[i];
            let u = (p[i] - self.bounds.min[i]) / self.bounds.extent(i) * (n - 1) as f64;
            if !(0.0..=(n - 1) as f64).contains(&u) {
                return None;
            }
            let b = (u.floor() as usize).min(n - 2);
            base[i] = b;
            frac[i] = u - b as f64;
        }
        Some(Corners { base, frac })
    }

    /// Calls `f(flat_param_offset, weight)` for the 8 interpolation corners.
    #[inline]
    fn for_corners(&self, c: &Corners, mut f: impl FnMut(usize, f64)) {
        let [fx, fy, fz] = c.frac;
        let sx = CHANNELS;
        let sy = CHANNELS * self.resolution[0];
        let sz = sy * self.resolution[1];
        let origin = CHANNELS * self.index(c.base[0], c.base[1], c.base[2]);
        for (dz, wz) in [(0, 1.0 - fz), (sz, fz)] {
            for (dy, wy) in [(0, 1.0 - fy), (sy, fy)] {
                let wyz = wy * wz;
                f(origin + dz + dy, (1.0 - fx) * wyz);
                f(origin + dz + dy + sx, fx * wyz);
            }
        }
    }

    /// Interpolated pre-activation values.
    pub fn interpolate(&self, p: &Vector3<f64>) -> Option<[f64; 4]> {
        let c = self.corners(p)?;
        let mut acc = [0.0; 4];
        self.for_corners(&c, |o, w| {
            for (k, a) in acc.iter_mut().enumerate() {
                *a += w * self.params[o + k];
            }
        });
        Some(acc)
    }
}

impl RadianceField for RadianceGrid {
    fn bounds(&self) -> Aabb {
        self.bounds
    }

    fn query(&self, p: &Vector3<f64>, _dir: &Vector3<f64>) -> Option<FieldSample> {
        let v = self.interpolate(p)?;
        Some(FieldSample {
            rgb: [sigmoid(v[0]), sigmoid(v[1]), sigmoid(v[2])],
            sigma: softplus(v[3]),
        })
    }
}

impl TrainableField for RadianceGrid {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn is_density_param(&self, index: usize) -> bool {
        index % CHANNELS == 3
    }

    fn accumulate_grad(&self, p: &Vector3<f64>, _dir: &Vector3<f64>, d_rgb: [f64; 3], d_sigma: f64, grad: &mut [f64]) {
        let Some(c) = self.corners(p) else { return };
        let mut pre = [0.0; 4];
        self.for_corners(&c, |o, w| {
            for (k, a) in pre.iter_mut().enumerate() {
                *a += w * self.params[o + k];
            }
        });
        let mut d_pre = [0.0; 4];
        for k in 0..3 {
            let s = sigmoid(pre[k]);
            d_pre[k] = d_rgb[k] * s * (1.0 - s);
        }
        // softplus' = sigmoid
        d_pre[3] = d_sigma * sigmoid(pre[3]);
        self.for_corners(&c, |o, w| {
            for (k, d) in d_pre.iter().enumerate() {
                grad[o + k] += w * d;
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(seed: u64) -> RadianceGrid {
        let mut g = RadianceGrid::new([5, 4, 6], Aabb::new([-1.0, -0.5, 0.0], [1.0, 0.5, 2.0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in g.params_mut() {
            *v = rng.gen_range(-3.0..3.0);
        }
        g
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(RadianceGrid::new([1, 4, 4], Aabb::cube(1.0)).is_err());
        assert!(RadianceGrid::new([4, 4, 4], Aabb::new([0.0; 3], [0.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn interpolation_hits_lattice_values() {
        let g = random_grid(1);
        let p = g.lattice_point(3, 2, 4);
        let v = g.interpolate(&p).unwrap();
        let expected = g.voxel(3, 2, 4);
        for k in 0..4 {
            assert!((v[k] - expected[k]).abs() < 1e-12);
        }
        // far corner is inside
        assert!(g.interpolate(&Vector3::new(1.0, 0.5, 2.0)).is_some());
        assert!(g.interpolate(&Vector3::new(1.0 + 1e-9, 0.0, 1.0)).is_none());
    }

    #[test]
    fn continuous_across_cell_faces() {
        let g = random_grid(2);
        let face_x = g.lattice_point(2, 0, 0).x;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let y = rng.gen_range(-0.5..0.5);
            let z = rng.gen_range(0.0..2.0);
            let a = g.interpolate(&Vector3::new(face_x - 1e-12, y, z)).unwrap();
            let b = g.interpolate(&Vector3::new(face_x + 1e-12, y, z)).unwrap();
            for k in 0..4 {
                assert!((a[k] - b[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn activated_ranges() {
        let g = random_grid(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let p = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(0.0..2.0));
            let s = g.query(&p, &Vector3::z()).unwrap();
            assert!(s.sigma >= 0.0);
            assert!(s.rgb.iter().all(|c| (0.0..=1.0).contains(c)));
        }
    }

    #[test]
    fn grad_matches_finite_difference_pointwise() {
        let g = random_grid(6);
        let p = Vector3::new(0.13, -0.21, 1.37);
        let d_rgb = [0.7, -0.4, 0.2];
        let d_sigma = 1.3;
        let objective = |g: &RadianceGrid| {
            let s = g.query(&p, &Vector3::z()).unwrap();
            s.rgb.iter().zip(&d_rgb).map(|(c, d)| c * d).sum::<f64>() + d_sigma * s.sigma
        };
        let mut grad = vec![0.0; g.params().len()];
        g.accumulate_grad(&p, &Vector3::z(), d_rgb, d_sigma, &mut grad);
        let touched: Vec<usize> = (0..grad.len()).filter(|&i| grad[i] != 0.0).collect();
        assert_eq!(touched.len(), 32);
        for &i in &touched {
            let mut a = g.clone();
            let mut b = g.clone();
            a.params_mut()[i] += 1e-6;
            b.params_mut()[i] -= 1e-6;
            let fd = (objective(&a) - objective(&b)) / 2e-6;
            assert!((fd - grad[i]).abs() < 1e-7 * fd.abs().max(1.0), "{i}: {fd} vs {}", grad[i]);
        }
    }
}
