//! Independent oracles and fixtures shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use holonerf::radiance::{Aabb, FieldSample, RadianceField};
use holonerf::{ComplexField, RealImage};
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-12 {
        1.0
    } else {
        (PI * u).sin() / (PI * u)
    }
}

/// Field at the `region` output samples (row-major, square region starting at
/// `(r0, r0)` of side `side`) from a unit discrete impulse at pixel
/// `(center, center)`, by direct first-kind Rayleigh-Sommerfeld summation.
///
/// The impulse is read as its band-limited continuous source
/// `sinc(x/p) sinc(y/p)`, integrated over a `window`-pixel square with
/// `sub`x`sub` midpoint quadrature per pixel. O(region^2 * (window*sub)^2).
pub fn rayleigh_sommerfeld_impulse(
    pitch: f64,
    wavelength: f64,
    z: f64,
    center: usize,
    r0: usize,
    side: usize,
    window: usize,
    sub: usize,
) -> Vec<Complex64> {
    let k = TAU / wavelength;
    let step = pitch / sub as f64;
    let half = (window / 2) as f64;
    let src: Vec<(f64, f64)> = (0..window * sub)
        .map(|i| {
            let x = (i as f64 + 0.5) * step - (half + 0.5) * pitch;
            (x, sinc(x / pitch))
        })
        .collect();
    let area = step * step;
    (0..side * side)
        .into_par_iter()
        .map(|o| {
            let ox = ((r0 + o % side) as f64 - center as f64) * pitch;
            let oy = ((r0 + o / side) as f64 - center as f64) * pitch;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(sy, wy) in &src {
                let dy2 = (oy - sy) * (oy - sy) + z * z;
                for &(sx, wx) in &src {
                    let r2 = (ox - sx) * (ox - sx) + dy2;
                    let r = r2.sqrt();
                    let kernel = Complex64::new(1.0 / r, -k) * Complex64::from_polar(z / (TAU * r2), k * r);
                    acc += kernel * (wx * wy);
                }
            }
            acc * area
        })
        .collect()
}

/// `sqrt(sum |a-b|^2 / sum |b|^2)`.
pub fn relative_rms(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Crops `side`x`side` starting at `(r0, r0)`.
pub fn crop(f: &ComplexField, r0: usize, side: usize) -> Vec<Complex64> {
    (0..side * side).map(|o| f.get(r0 + o % side, r0 + o / side)).collect()
}

/// Uniform random real and imaginary parts in `[-1, 1)`.
pub fn random_field(w: usize, h: usize, pitch: f64, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..w * h)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ComplexField::from_data(w, h, pitch, data).unwrap()
}

/// Smooth random field, periodic on the grid: sums of six cosines with
/// integer frequencies in [-3, 3] for amplitude (rescaled to [0.2, 1]) and
/// phase.
pub fn smooth_periodic_field(n: usize, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plane = || {
        let modes: Vec<(f64, f64, f64, f64)> = (0..6)
            .map(|_| {
                (
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(0.0..TAU),
                    rng.gen_range(0.2..1.0),
                )
            })
            .collect();
        (0..n * n)
            .map(|i| {
                let (u, v) = ((i % n) as f64 / n as f64, (i / n) as f64 / n as f64);
                modes.iter().map(|&(kx, ky, p, a)| a * (TAU * (kx * u + ky * v) + p).cos()).sum::<f64>()
            })
            .collect::<Vec<f64>>()
    };
    let amp = plane();
    let phase = plane();
    let (lo, hi) = amp.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let amp: Vec<f64> = amp.iter().map(|v| 0.2 + 0.8 * (v - lo) / (hi - lo)).collect();
    let phase: Vec<f64> = phase.iter().map(|v| 2.0 * v).collect();
    ComplexField::from_polar(&amp, &phase, n, n, 8e-6).unwrap()
}

/// Global histogram equalization by rank: for each pixel, the fraction of
/// pixels whose `bins`-level quantization is at or below its own.
pub fn global_equalization(img: &RealImage, bins: usize) -> Vec<f64> {
    let level = |v: f64| ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
    let levels: Vec<usize> = img.data().iter().map(|&v| level(v)).collect();
    let mut counts = vec![0usize; bins];
    for &l in &levels {
        counts[l] += 1;
    }
    let mut cdf = vec![0usize; bins];
    let mut run = 0;
    for (c, n) in cdf.iter_mut().zip(&counts) {
        run += n;
        *c = run;
    }
    let n = levels.len() as f64;
    levels.iter().map(|&l| cdf[l] as f64 / n).collect()
}

/// Skewed random grayscale image.
pub fn skewed_image(w: usize, h: usize, seed: u64) -> RealImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RealImage::from_data(w, h, 1, (0..w * h).map(|_| rng.gen::<f64>().powi(3)).collect()).unwrap()
}

/// Constant density and color everywhere inside a large box.
pub struct Homogeneous {
    pub sigma: f64,
    pub rgb: [f64; 3],
}

impl RadianceField for Homogeneous {
    fn bounds(&self) -> Aabb {
        Aabb::cube(1e3)
    }

    fn query(&self, _p: &Vector3<f64>, _dir: &Vector3<f64>) -> Option<FieldSample> {
        Some(FieldSample {
            rgb: self.rgb,
            sigma: self.sigma,
        })
    }
}

/// White field whose density is a sum of Gaussian blobs.
pub struct WhiteBlobs {
    pub blobs: Vec<(Vector3<f64>, f64, f64)>,
}

impl WhiteBlobs {
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blobs = (0..n)
            .map(|_| {
                let c = Vector3::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
                (c, rng.gen_range(0.1..0.4), rng.gen_range(1.0..40.0))
            })
            .collect();
        Self { blobs }
    }
}

impl RadianceField for WhiteBlobs {
    fn bounds(&self) -> Aabb {
        Aabb::cube(1.0)
    }

    fn query(&self, p: &Vector3<f64>, _dir: &Vector3<f64>) -> Option<FieldSample> {
        let sigma = self
            .blobs
            .iter()
            .map(|(c, r, s)| s * (-(p - c).norm_squared() / (2.0 * r * r)).exp())
            .sum();
        Some(FieldSample { rgb: [1.0; 3], sigma })
    }
}

/// Uniform random unit vector.
pub fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Every regular file under `dir`, relative, sorted.
pub fn list_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// Files (other than those named in `skip`) whose bytes differ between two
/// run directories, plus files present in only one.
pub fn differing_files(a: &Path, b: &Path, skip: &[&str]) -> Vec<PathBuf> {
    let (fa, fb) = (list_files(a), list_files(b));
    let mut bad: Vec<PathBuf> = fa.iter().filter(|f| !fb.contains(f)).cloned().collect();
    bad.extend(fb.iter().filter(|f| !fa.contains(f)).cloned());
    for f in fa.iter().filter(|f| fb.contains(f)) {
        if skip.iter().any(|s| f.as_os_str() == *s) {
            continue;
        }
        if std::fs::read(a.join(f)).unwrap() != std::fs::read(b.join(f)).unwrap() {
            bad.push(f.clone());
        }
    }
    bad
}

/// Manifest JSON with wall-clock fields removed.
pub fn manifest_without_timings(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    if let Some(stages) = v.get_mut("stages").and_then(|s| s.as_array_mut()) {
        for s in stages {
            s.as_object_mut().unwrap().remove("seconds");
        }
    }
    if let Some(fit) = v.get_mut("fit").and_then(|f| f.as_object_mut()) {
        fit.retain(|k, _| !k.contains("second"));
    }
    v
}
