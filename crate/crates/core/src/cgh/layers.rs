use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{ComplexField, RealImage};
use crate::{Error, Result};

/// Registered RGB image and metric depth map.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbdFrame {
    rgb: RealImage,
    depth: RealImage,
}

impl RgbdFrame {
    /// `rgb` holds linear intensities in `[0, 1]`; `depth` is in meters with
    /// background pixels set to the far plane.
    pub fn new(rgb: RealImage, depth: RealImage) -> Result<Self> {
        if rgb.channels() != 3 || depth.channels() != 1 {
            return Err(Error::Dimension(format!(
                "expected 3-channel rgb and 1-channel depth, got {} and {}",
                rgb.channels(),
                depth.channels()
            )));
        }
        if rgb.width() != depth.width() || rgb.height() != depth.height() {
            return Err(Error::Mismatch(format!(
                "rgb is {}x{}, depth is {}x{}",
                rgb.width(),
                rgb.height(),
                depth.width(),
                depth.height()
            )));
        }
        if rgb.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("rgb values outside [0, 1]".into()));
        }
        if depth.data().iter().any(|d| *d < 0.0) {
            return Err(Error::InvalidParameter("negative depth".into()));
        }
        Ok(Self { rgb, depth })
    }

    pub fn rgb(&self) -> &RealImage {
        &self.rgb
    }

    pub fn depth(&self) -> &RealImage {
        &self.depth
    }

    pub fn width(&self) -> usize {
        self.rgb.width()
    }

    pub fn height(&self) -> usize {
        self.rgb.height()
    }
}

/// Phase given to every foreground pixel before propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InitialPhase {
    /// Uniform in `[0, 2pi)` per pixel, shared across color channels.
    Random { seed: u64 },
    Constant,
}

/// Slab of a depth value when `[near, far)` is split into `n` equal slabs.
/// Values outside the range are clamped to the first or last slab.
pub fn slab_index(depth: f64, near: f64, far: f64, n: usize) -> usize {
    let s = ((depth - near) / (far - near) * n as f64).floor();
    if s <= 0.0 {
        0
    } else {
        (s as usize).min(n - 1)
    }
}

/// Depth-sliced frame: each foreground pixel belongs to exactly one layer.
///
/// Layer fields are built on demand per color channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    near: f64,
    far: f64,
    n_layers: usize,
    slab: Vec<Option<usize>>,
    amplitude: RealImage,
    phase: Vec<f64>,
    empty_foreground: bool,
}

/// Splits a frame into `n_layers` equal depth slabs over `[near, far)`.
///
/// Pixels with depth at or beyond `far` are background. An all-background
/// frame yields a single empty layer and sets [`LayerStack::empty_foreground`].
pub fn slice_layers(frame: &RgbdFrame, n_layers: usize, near: f64, far: f64, phase: InitialPhase) -> Result<LayerStack> {
    if n_layers == 0 {
        return Err(Error::InvalidParameter("need at least one layer".into()));
    }
    if !(near.is_finite() && far.is_finite() && near < far) {
        return Err(Error::InvalidParameter(format!("depth range [{near}, {far}]")));
    }
    let slab: Vec<Option<usize>> = frame
        .depth
        .data()
        .iter()
        .map(|&d| (d < far).then(|| slab_index(d, near, far, n_layers)))
        .collect();
    let empty_foreground = slab.iter().all(Option::is_none);
    if empty_foreground {
        log::warn!("frame has no foreground pixels; hologram will be empty");
    }
    let phase = match phase {
        InitialPhase::Constant => vec![0.0; slab.len()],
        InitialPhase::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..slab.len()).map(|_| rng.gen::<f64>() * TAU).collect()
        }
    };
    Ok(LayerStack {
        near,
        far,
        n_layers: if empty_foreground { 1 } else { n_layers },
        slab,
        amplitude: frame.rgb.map(f64::sqrt),
        phase,
        empty_foreground,
    })
}

impl LayerStack {
    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn width(&self) -> usize {
        self.amplitude.width()
    }

    pub fn height(&self) -> usize {
        self.amplitude.height()
    }

    pub fn empty_foreground(&self) -> bool {
        self.empty_foreground
    }

    /// Scene depth of each slab center, increasing.
    pub fn layer_depths(&self) -> Vec<f64> {
        let step = (self.far - self.near) / self.n_layers as f64;
        (0..self.n_layers).map(|k| self.near + (k as f64 + 0.5) * step).collect()
    }

    /// Per-pixel layer index, `None` for background.
    pub fn slabs(&self) -> &[Option<usize>] {
        &self.slab
    }

    pub fn mask(&self, layer: usize) -> Vec<bool> {
        self.slab.iter().map(|s| *s == Some(layer)).collect()
    }

    pub fn foreground_mask(&self) -> Vec<bool> {
        self.slab.iter().map(Option::is_some).collect()
    }

    /// Layers containing at least one pixel, increasing.
    pub fn nonempty_layers(&self) -> Vec<usize> {
        let mut used = vec![false; self.n_layers];
        for s in self.slab.iter().flatten() {
            used[*s] = true;
        }
        (0..self.n_layers).filter(|&k| used[k]).collect()
    }

    /// Amplitude of one color channel (square root of linear intensity).
    pub fn amplitude(&self) -> &RealImage {
        &self.amplitude
    }

    /// Complex field of one layer for one color channel; zero off the layer.
    pub fn layer_field(&self, layer: usize, channel: usize, pitch: f64) -> Result<ComplexField> {
        if layer >= self.n_layers || channel >= 3 {
            return Err(Error::InvalidParameter(format!("layer {layer}, channel {channel}")));
        }
        let data = self
            .slab
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if *s == Some(layer) {
                    Complex64::from_polar(self.amplitude.pixel(i)[channel], self.phase[i])
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        ComplexField::from_data(self.width(), self.height(), pitch, data)
    }
}
