use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CameraPose, RadianceField};
use crate::field::RealImage;
use crate::{Error, Result};

/// Ray-marching configuration.
///
/// `[near, far]` is split into `n_samples` equal strata; each sample stands
/// for its whole stratum (`delta = (far - near) / n_samples`). Samples sit at
/// stratum midpoints unless `jitter` is set, in which case offsets are drawn
/// from a generator seeded by `seed` and the pixel index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub near: f64,
    pub far: f64,
    pub n_samples: usize,
    pub jitter: bool,
    pub seed: u64,
    /// Stop marching once transmittance drops below this (0 disables).
    pub early_stop: f64,
    /// Pixels whose final transmittance exceeds this are background in depth maps.
    pub background_threshold: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            near: 0.1,
            far: 4.0,
            n_samples: 128,
            jitter: false,
            seed: 0,
            early_stop: 0.0,
            background_threshold: 0.99,
        }
    }
}

impl RenderOptions {
    pub fn spacing(&self) -> f64 {
        (self.far - self.near) / self.n_samples as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.near.is_finite() && self.far.is_finite() && self.near < self.far) {
            return Err(Error::InvalidParameter(format!(
                "near {} must be below far {}",
                self.near, self.far
            )));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter(format!("{} samples per ray (need >= 2)", self.n_samples)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayOutput {
    pub rgb: [f64; 3],
    /// Transmittance left after the last sample.
    pub transmittance: f64,
    /// Expected termination distance along the ray.
    pub depth: f64,
    /// Sum of compositing weights (`1 - transmittance`).
    pub opacity: f64,
}

/// One in-bounds sample of a traced ray.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TraceSample {
    pub t: f64,
    pub pos: Vector3<f64>,
    pub rgb: [f64; 3],
    pub alpha: f64,
    /// Transmittance reaching this sample.
    pub trans: f64,
}

impl TraceSample {
    pub fn weight(&self) -> f64 {
        self.trans * self.alpha
    }
}

fn unit_direction(dir: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = dir.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::DegenerateRay(format!("direction {:?}", dir.as_slice())));
    }
    Ok(dir / n)
}

/// Marches one ray; `samples` receives every in-bounds sample visited.
pub(crate) fn trace<F: RadianceField + ?Sized>(
    field: &F,
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    opts: &RenderOptions,
    mut jitter: Option<&mut ChaCha8Rng>,
    mut samples: Option<&mut Vec<TraceSample>>,
) -> RayOutput {
    if let Some(s) = samples.as_deref_mut() {
        s.clear();
    }
    let delta = opts.spacing();
    let mut trans = 1.0;
    let mut rgb = [0.0; 3];
    let mut depth_acc = 0.0;

    if let Some((t_in, t_out)) = field.bounds().intersect(origin, dir) {
        let lo = ((t_in - opts.near) / delta).floor().max(0.0);
        let hi = ((t_out - opts.near) / delta).ceil().min(opts.n_samples as f64);
        let (lo, hi) = (lo as usize, hi.max(lo) as usize);
        for i in lo..hi {
            let u = match jitter.as_deref_mut() {
                Some(rng) => rng.gen::<f64>(),
                None => 0.5,
            };
            let t = opts.near + (i as f64 + u) * delta;
            let pos = origin + dir * t;
            let Some(s) = field.query(&pos, dir) else { continue };
            let alpha = 1.0 - (-s.sigma * delta).exp();
            let w = trans * alpha;
            for (acc, c) in rgb.iter_mut().zip(&s.rgb) {
                *acc += w * c;
            }
            depth_acc += w * t;
            if let Some(buf) = samples.as_deref_mut() {
                buf.push(TraceSample {
                    t,
                    pos,
                    rgb: s.rgb,
                    alpha,
                    trans,
                });
            }
            trans *= 1.0 - alpha;
            if trans < opts.early_stop {
                break;
            }
        }
    }
    let opacity = 1.0 - trans;
    RayOutput {
        rgb,
        transmittance: trans,
        depth: depth_acc / opacity.max(1e-10),
        opacity,
    }
}

/// Alpha-composites `n_samples` samples along one ray.
pub fn render_ray<F: RadianceField + ?Sized>(
    field: &F,
    origin: &Vector3<f64>,
    direction: &Vector3<f64>,
    opts: &RenderOptions,
) -> Result<RayOutput> {
    opts.validate()?;
    let dir = unit_direction(direction)?;
    let mut rng = opts.jitter.then(|| ChaCha8Rng::seed_from_u64(opts.seed));
    Ok(trace(field, origin, &dir, opts, rng.as_mut(), None))
}

pub(crate) fn pixel_rng(seed: u64, pixel: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pixel);
    rng
}

/// Renders color and metric depth for every pixel of `pose`.
///
/// Depth is measured along the camera's optical axis; background pixels
/// (final transmittance above `background_threshold`) are set to `far`.
pub fn render_rgbd<F: RadianceField + ?Sized>(
    field: &F,
    pose: &CameraPose,
    opts: &RenderOptions,
) -> Result<(RealImage, RealImage)> {
    opts.validate()?;
    pose.validate()?;
    let (w, h) = (pose.intrinsics.width, pose.intrinsics.height);
    let forward = pose.forward();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut rgb = Vec::with_capacity(3 * w);
            let mut depth = Vec::with_capacity(w);
            for x in 0..w {
                let ray = pose.ray(x, y);
                let mut rng = opts.jitter.then(|| pixel_rng(opts.seed, (y * w + x) as u64));
                let out = trace(field, &ray.origin, &ray.direction, opts, rng.as_mut(), None);
                rgb.extend(out.rgb.iter().map(|c| c.clamp(0.0, 1.0)));
                depth.push(if out.transmittance > opts.background_threshold {
                    opts.far
                } else {
                    out.depth * ray.direction.dot(&forward)
                });
            }
            (rgb, depth)
        })
        .collect();
    let mut rgb = Vec::with_capacity(3 * w * h);
    let mut depth = Vec::with_capacity(w * h);
    for (r, d) in rows {
        rgb.extend(r);
        depth.extend(d);
    }
    Ok((RealImage::from_data(w, h, 3, rgb)?, RealImage::from_data(w, h, 1, depth)?))
}

/// Novel view synthesis: one composited color per pixel.
pub fn render_view<F: RadianceField + ?Sized>(field: &F, pose: &CameraPose, opts: &RenderOptions) -> Result<RealImage> {
    Ok(render_rgbd(field, pose, opts)?.0)
}

/// Expected-termination depth map in scene units (single channel).
pub fn render_depth<F: RadianceField + ?Sized>(field: &F, pose: &CameraPose, opts: &RenderOptions) -> Result<RealImage> {
    Ok(render_rgbd(field, pose, opts)?.1)
}

/// Mean squared error over all pixels and channels.
pub fn loss(rendered: &RealImage, truth: &RealImage) -> Result<f64> {
    if !rendered.same_shape(truth) {
        return Err(Error::Mismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            rendered.width(),
            rendered.height(),
            rendered.channels(),
            truth.width(),
            truth.height(),
            truth.channels()
        )));
    }
    let sum: f64 = rendered
        .data()
        .iter()
        .zip(truth.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / rendered.data().len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiance::{logit, softplus_inverse, Aabb, Intrinsics, RadianceGrid, TrainableField};
    use rand::SeedableRng;

    fn constant_grid(density: f64, rgb: [f64; 3]) -> RadianceGrid {
        RadianceGrid::filled(
            [4, 4, 4],
            Aabb::cube(1.0),
            rgb.map(|c| logit(c.clamp(1e-9, 1.0 - 1e-9))),
            softplus_inverse(density),
        )
        .unwrap()
    }

    fn empty_grid() -> RadianceGrid {
        RadianceGrid::filled([4, 4, 4], Aabb::cube(1.0), [0.0; 3], -800.0).unwrap()
    }

    #[test]
    fn empty_space_is_transparent() {
        let g = empty_grid();
        let out = render_ray(&g, &Vector3::new(0.0, 0.0, 3.0), &-Vector3::z(), &RenderOptions::default()).unwrap();
        assert_eq!(out.rgb, [0.0; 3]);
        assert_eq!(out.transmittance, 1.0);
    }

    #[test]
    fn opaque_slab_limit() {
        let g = constant_grid(1e4, [1.0, 0.0, 0.0]);
        let out = render_ray(&g, &Vector3::new(0.0, 0.0, 3.0), &-Vector3::z(), &RenderOptions::default()).unwrap();
        assert!((out.rgb[0] - 1.0).abs() < 1e-6);
        assert!(out.rgb[1] < 1e-6 && out.rgb[2] < 1e-6);
        assert!(out.transmittance < 1e-12);
    }

    #[test]
    fn beer_lambert_closed_form() {
        // path through the box is exactly [1, 3] along the ray, aligned to strata
        let sigma = 0.8;
        let g = constant_grid(sigma, [0.5; 3]);
        let mut prev: Option<f64> = None;
        for n in [256, 512, 1024] {
            let opts = RenderOptions {
                near: 0.0,
                far: 4.0,
                n_samples: n,
                ..Default::default()
            };
            let out = render_ray(&g, &Vector3::new(-2.0, 0.1, 0.2), &Vector3::x(), &opts).unwrap();
            let closed = 1.0 - (-sigma * 2.0).exp();
            assert!((out.opacity - closed).abs() < 1e-3, "{n}: {} vs {closed}", out.opacity);
            if let Some(p) = prev {
                assert!((out.opacity - p).abs() < 1e-3);
            }
            prev = Some(out.opacity);
        }
    }

    #[test]
    fn weights_sum_to_one_with_monotone_transmittance() {
        let mut g = RadianceGrid::new([6, 6, 6], Aabb::cube(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in g.params_mut() {
            *v = rng.gen_range(-4.0..4.0);
        }
        let opts = RenderOptions {
            near: 0.5,
            far: 5.5,
            n_samples: 64,
            jitter: true,
            ..Default::default()
        };
        let mut samples = Vec::new();
        for _ in 0..200 {
            let origin = Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), 3.0);
            let target = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let dir = (target - origin).normalize();
            let out = trace(&g, &origin, &dir, &opts, Some(&mut rng), Some(&mut samples));
            let wsum: f64 = samples.iter().map(TraceSample::weight).sum();
            assert!((wsum + out.transmittance - 1.0).abs() < 1e-6);
            assert!(samples.windows(2).all(|p| p[1].trans <= p[0].trans));
            let max_c = samples.iter().flat_map(|s| s.rgb).fold(0.0, f64::max);
            assert!(out.rgb.iter().all(|&c| c <= max_c + 1e-6));
        }
    }

    #[test]
    fn rejects_bad_rays() {
        let g = empty_grid();
        let o = Vector3::zeros();
        assert!(matches!(
            render_ray(&g, &o, &Vector3::zeros(), &RenderOptions::default()),
            Err(Error::DegenerateRay(_))
        ));
        let bad = RenderOptions {
            near: 2.0,
            far: 1.0,
            ..Default::default()
        };
        assert!(render_ray(&g, &o, &Vector3::z(), &bad).is_err());
        let few = RenderOptions {
            n_samples: 1,
            ..Default::default()
        };
        assert!(render_ray(&g, &o, &Vector3::z(), &few).is_err());
    }

    #[test]
    fn empty_grid_renders_black_and_far() {
        let g = empty_grid();
        let k = Intrinsics::centered(20.0, 12, 8);
        let pose = CameraPose::look_at(Vector3::new(0.0, 0.0, 3.0), Vector3::zeros(), Vector3::y(), k).unwrap();
        let opts = RenderOptions {
            near: 1.0,
            far: 5.0,
            ..Default::default()
        };
        let (rgb, depth) = render_rgbd(&g, &pose, &opts).unwrap();
        assert!(rgb.data().iter().all(|&v| v == 0.0));
        assert!(depth.data().iter().all(|&d| d == 5.0));
    }

    #[test]
    fn loss_values() {
        let a = RealImage::zeros(4, 3, 3).unwrap();
        let b = RealImage::filled(4, 3, 3, 1.0).unwrap();
        assert_eq!(loss(&a, &a).unwrap(), 0.0);
        assert_eq!(loss(&a, &b).unwrap(), 1.0);
        assert!(loss(&a, &RealImage::zeros(4, 3, 1).unwrap()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = RealImage::from_data(5, 4, 3, (0..60).map(|_| rng.gen()).collect()).unwrap();
        let y = RealImage::from_data(5, 4, 3, (0..60).map(|_| rng.gen()).collect()).unwrap();
        let mut naive = 0.0;
        for py in 0..4 {
            for px in 0..5 {
                for c in 0..3 {
                    let d = x.get(px, py, c) - y.get(px, py, c);
                    naive += d * d;
                }
            }
        }
        naive /= 60.0;
        assert!((loss(&x, &y).unwrap() - naive).abs() < 1e-12);
    }
}
