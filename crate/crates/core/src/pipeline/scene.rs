//! Analytic test scenes and their exact renders.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::RealImage;
use crate::radiance::{CameraPose, Intrinsics, PosedDataset, PosedView};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneName {
    Spheres,
    Planes,
    Boxes,
    /// Nothing at all; every pixel is background.
    Empty,
}

impl std::str::FromStr for SceneName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spheres" => Ok(Self::Spheres),
            "planes" => Ok(Self::Planes),
            "boxes" => Ok(Self::Boxes),
            "empty" => Ok(Self::Empty),
            other => Err(Error::Config(format!("unknown scene `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Sphere { center: Vector3<f64>, radius: f64 },
    /// Rectangle in the plane `z = const`, visible from both sides.
    QuadZ { z: f64, x: [f64; 2], y: [f64; 2] },
    Cuboid { min: Vector3<f64>, max: Vector3<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub primitive: Primitive,
    pub albedo: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    /// Unit normal facing the incoming ray.
    pub normal: Vector3<f64>,
    pub albedo: [f64; 3],
}

const AMBIENT: f64 = 0.25;
const EPS: f64 = 1e-9;

impl Primitive {
    /// Nearest intersection with `t > EPS`, with the outward (or +z) normal.
    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        match *self {
            Primitive::Sphere { center, radius } => {
                let oc = o - center;
                let b = oc.dot(d);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                let t = if -b - s > EPS { -b - s } else { -b + s };
                (t > EPS).then(|| (t, (o + d * t - center) / radius))
            }
            Primitive::QuadZ { z, x, y } => {
                if d.z.abs() < 1e-15 {
                    return None;
                }
                let t = (z - o.z) / d.z;
                let p = o + d * t;
                (t > EPS && (x[0]..=x[1]).contains(&p.x) && (y[0]..=y[1]).contains(&p.y)).then(|| (t, Vector3::z()))
            }
            Primitive::Cuboid { min, max } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                let mut axis = 0;
                let mut exit_axis = 0;
                for a in 0..3 {
                    let inv = 1.0 / d[a];
                    let (mut lo, mut hi) = ((min[a] - o[a]) * inv, (max[a] - o[a]) * inv);
                    if lo > hi {
                        std::mem::swap(&mut lo, &mut hi);
                    }
                    if lo > t0 {
                        t0 = lo;
                        axis = a;
                    }
                    if hi < t1 {
                        t1 = hi;
                        exit_axis = a;
                    }
                }
                if t0 > t1 {
                    return None;
                }
                let (t, a) = if t0 > EPS { (t0, axis) } else { (t1, exit_axis) };
                if t <= EPS {
                    return None;
                }
                let mut n = Vector3::zeros();
                n[a] = 1.0;
                Some((t, n))
            }
        }
    }
}

/// A few diffuse shapes lit by one directional light plus ambient.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub shapes: Vec<Shape>,
    /// Unit vector toward the light.
    pub light: Vector3<f64>,
}

impl Scene {
    pub fn named(name: SceneName) -> Self {
        let shapes = match name {
            SceneName::Spheres => vec![
                Shape {
                    primitive: Primitive::Sphere {
                        center: Vector3::new(-0.4, -0.05, 0.1),
                        radius: 0.45,
                    },
                    albedo: [0.9, 0.35, 0.25],
                },
                Shape {
                    primitive: Primitive::Sphere {
                        center: Vector3::new(0.45, 0.15, -0.25),
                        radius: 0.38,
                    },
                    albedo: [0.3, 0.55, 0.95],
                },
            ],
            SceneName::Planes => vec![
                Shape {
                    primitive: Primitive::QuadZ {
                        z: 0.3,
                        x: [-0.9, -0.05],
                        y: [-0.6, 0.6],
                    },
                    albedo: [0.85, 0.8, 0.3],
                },
                Shape {
                    primitive: Primitive::QuadZ {
                        z: -0.4,
                        x: [0.05, 0.9],
                        y: [-0.7, 0.5],
                    },
                    albedo: [0.3, 0.8, 0.6],
                },
            ],
            SceneName::Boxes => vec![
                Shape {
                    primitive: Primitive::Cuboid {
                        min: Vector3::new(-0.8, -0.6, -0.3),
                        max: Vector3::new(-0.1, 0.2, 0.4),
                    },
                    albedo: [0.8, 0.5, 0.2],
                },
                Shape {
                    primitive: Primitive::Cuboid {
                        min: Vector3::new(0.1, -0.4, -0.6),
                        max: Vector3::new(0.7, 0.5, 0.0),
                    },
                    albedo: [0.4, 0.4, 0.9],
                },
            ],
            SceneName::Empty => vec![],
        };
        Self {
            shapes,
            light: Vector3::new(0.4, 0.8, 0.6).normalize(),
        }
    }

    pub fn hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for s in &self.shapes {
            if let Some((t, n)) = s.primitive.intersect(origin, dir) {
                if best.is_none_or(|b| t < b.t) {
                    let normal = if n.dot(dir) > 0.0 { -n } else { n };
                    best = Some(Hit {
                        t,
                        normal,
                        albedo: s.albedo,
                    });
                }
            }
        }
        best
    }

    /// Linear radiance leaving a hit toward the camera.
    pub fn shade(&self, hit: &Hit) -> [f64; 3] {
        let k = AMBIENT + (1.0 - AMBIENT) * hit.normal.dot(&self.light).max(0.0);
        hit.albedo.map(|a| a * k)
    }

    /// Exact color and optical-axis depth through each pixel center.
    /// Background is black at depth `far`.
    pub fn render(&self, pose: &CameraPose, far: f64) -> Result<(RealImage, RealImage)> {
        let (w, h) = (pose.intrinsics.width, pose.intrinsics.height);
        let forward = pose.forward();
        let mut rgb = RealImage::zeros(w, h, 3)?;
        let mut depth = RealImage::filled(w, h, 1, far)?;
        for y in 0..h {
            for x in 0..w {
                let ray = pose.ray(x, y);
                if let Some(hit) = self.hit(&ray.origin, &ray.direction) {
                    let z = hit.t * ray.direction.dot(&forward);
                    if z < far {
                        for (c, v) in self.shade(&hit).into_iter().enumerate() {
                            rgb.set(x, y, c, v);
                        }
                        depth.set(x, y, 0, z);
                    }
                }
            }
        }
        Ok((rgb, depth))
    }
}

/// Camera looking at the origin from polar angle `theta` (from +Y) and
/// azimuth `phi` (from +Z toward +X) at distance `radius`.
pub fn orbit_pose(theta: f64, phi: f64, radius: f64, intrinsics: Intrinsics) -> Result<CameraPose> {
    let eye = Vector3::new(theta.sin() * phi.sin(), theta.cos(), theta.sin() * phi.cos()) * radius;
    CameraPose::look_at(eye, Vector3::zeros(), Vector3::y(), intrinsics)
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub scene: Scene,
    pub dataset: PosedDataset,
    /// Exact depth per view, aligned with the dataset.
    pub depths: Vec<RealImage>,
}

/// Training views of a named scene.
///
/// View 0 looks down -Z from `(0, 0, radius)`. The rest follow a golden-angle
/// spiral in azimuth with a seeded offset and seeded elevations between
/// about 30 degrees below and 55 degrees above the horizon.
pub fn generate_synthetic_scene(
    name: SceneName,
    n_views: usize,
    resolution: [usize; 2],
    fov_x: f64,
    radius: f64,
    far: f64,
    seed: u64,
) -> Result<SyntheticScene> {
    if n_views == 0 {
        return Err(Error::InvalidParameter("need at least one view".into()));
    }
    let scene = Scene::named(name);
    let k = Intrinsics::from_fov_x(fov_x, resolution[0], resolution[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.gen_range(0.0..TAU);
    let golden = TAU * (1.0 - 1.0 / ((1.0 + 5f64.sqrt()) / 2.0));
    let mut views = Vec::with_capacity(n_views);
    let mut depths = Vec::with_capacity(n_views);
    for i in 0..n_views {
        let pose = if i == 0 {
            CameraPose::look_at(Vector3::new(0.0, 0.0, radius), Vector3::zeros(), Vector3::y(), k)?
        } else {
            let up: f64 = rng.gen_range(-0.5..0.82);
            orbit_pose(up.acos(), offset + i as f64 * golden, radius, k)?
        };
        let (image, depth) = scene.render(&pose, far)?;
        views.push(PosedView { image, pose });
        depths.push(depth);
    }
    Ok(SyntheticScene {
        scene,
        dataset: PosedDataset::new(views)?,
        depths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Second intersection routine: sphere by the geometric (tangent) method,
    /// quads and boxes by testing each face plane.
    fn oracle_t(p: &Primitive, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        match *p {
            Primitive::Sphere { center, radius } => {
                let l = center - o;
                let tca = l.dot(d);
                let d2 = l.dot(&l) - tca * tca;
                if d2 > radius * radius {
                    return None;
                }
                let thc = (radius * radius - d2).sqrt();
                [tca - thc, tca + thc].into_iter().find(|t| *t > 1e-9)
            }
            Primitive::QuadZ { z, x, y } => {
                let t = (z - o.z) / d.z;
                let q = o + d * t;
                (t > 1e-9 && q.x >= x[0] && q.x <= x[1] && q.y >= y[0] && q.y <= y[1]).then_some(t)
            }
            Primitive::Cuboid { min, max } => {
                let mut best: Option<f64> = None;
                for a in 0..3 {
                    for plane in [min[a], max[a]] {
                        let t = (plane - o[a]) / d[a];
                        if !(t > 1e-9) {
                            continue;
                        }
                        let q = o + d * t;
                        let inside = (0..3).filter(|&b| b != a).all(|b| q[b] >= min[b] - 1e-12 && q[b] <= max[b] + 1e-12);
                        if inside && best.is_none_or(|bt| t < bt) {
                            best = Some(t);
                        }
                    }
                }
                best
            }
        }
    }

    fn k() -> Intrinsics {
        Intrinsics::from_fov_x(40f64.to_radians(), 48, 40)
    }

    #[test]
    fn renders_match_independent_intersections() {
        for name in [SceneName::Spheres, SceneName::Planes, SceneName::Boxes] {
            let data = generate_synthetic_scene(name, 3, [48, 40], 40f64.to_radians(), 3.0, 5.0, 7).unwrap();
            for (view, depth) in data.dataset.views().iter().zip(&data.depths) {
                let fwd = view.pose.forward();
                for y in 0..40 {
                    for x in 0..48 {
                        let ray = view.pose.ray(x, y);
                        let t = data
                            .scene
                            .shapes
                            .iter()
                            .filter_map(|s| oracle_t(&s.primitive, &ray.origin, &ray.direction))
                            .fold(f64::INFINITY, f64::min);
                        let expected = if t.is_finite() { t * ray.direction.dot(&fwd) } else { 5.0 };
                        assert!((depth.get(x, y, 0) - expected).abs() < 1e-9, "{name:?} ({x},{y})");
                        if !t.is_finite() {
                            assert!(view.image.pixel(y * 48 + x).iter().all(|v| *v == 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn frontal_planes_give_plateau_depths() {
        let data = generate_synthetic_scene(SceneName::Planes, 1, [64, 64], 40f64.to_radians(), 3.0, 5.0, 0).unwrap();
        let mut seen: Vec<f64> = data.depths[0].data().to_vec();
        seen.sort_by(f64::total_cmp);
        seen.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(seen.len(), 3, "{seen:?}");
        assert!((seen[0] - 2.7).abs() < 1e-12 && (seen[1] - 3.4).abs() < 1e-12 && seen[2] == 5.0);
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = generate_synthetic_scene(SceneName::Spheres, 4, [16, 16], 0.7, 3.0, 5.0, 3).unwrap();
        let b = generate_synthetic_scene(SceneName::Spheres, 4, [16, 16], 0.7, 3.0, 5.0, 3).unwrap();
        let c = generate_synthetic_scene(SceneName::Spheres, 4, [16, 16], 0.7, 3.0, 5.0, 4).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.depths, b.depths);
        assert_ne!(a.dataset.views()[1].pose, c.dataset.views()[1].pose);
    }

    #[test]
    fn shading_is_bounded_by_albedo() {
        let scene = Scene::named(SceneName::Spheres);
        let pose = orbit_pose(1.2, 0.4, 3.0, k()).unwrap();
        let (rgb, _) = scene.render(&pose, 5.0).unwrap();
        assert!(rgb.data().iter().all(|v| (0.0..=0.95).contains(v)));
        assert!(rgb.mean() > 0.01);
    }

    #[test]
    fn empty_scene_is_black_and_far() {
        let data = generate_synthetic_scene(SceneName::Empty, 2, [8, 8], 0.7, 3.0, 5.0, 0).unwrap();
        assert!(data.dataset.views()[1].image.data().iter().all(|v| *v == 0.0));
        assert!(data.depths[1].data().iter().all(|v| *v == 5.0));
        assert!("cones".parse::<SceneName>().is_err());
        assert_eq!("boxes".parse::<SceneName>().unwrap(), SceneName::Boxes);
    }
}
