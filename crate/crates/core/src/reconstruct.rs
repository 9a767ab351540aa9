//! Simulated optical reconstruction of holograms and image-quality metrics.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgh::{add_linear_phase, ChannelData, HologramSet, CHANNEL_NAMES};
use crate::field::{io, ComplexField, Direction, RealImage};
use crate::propagation::{propagate, PropagationParams};
use crate::{Error, Result};

/// Peak signal-to-noise ratio in dB for signals in `[0, 1]`.
/// Identical inputs give `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psnr {
    #[serde(with = "infinite_as_null")]
    pub db: f64,
}

impl Psnr {
    pub fn is_infinite(&self) -> bool {
        self.db.is_infinite()
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

pub fn mse(a: &RealImage, b: &RealImage) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Mismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(1 / MSE)`.
pub fn psnr(a: &RealImage, b: &RealImage) -> Result<Psnr> {
    let m = mse(a, b)?;
    let db = if m == 0.0 { f64::INFINITY } else { -10.0 * m.log10() };
    Ok(Psnr { db })
}

/// Simulated 4f filtering of a phase-only hologram: the unit phasor field is
/// low-passed with a circular aperture of radius `aperture * 0.5` cycles per
/// pixel centered on `carrier` (cycles per pixel, wrapping periodically).
pub fn decode_double_phase_at(phase: &RealImage, aperture: f64, carrier: [f64; 2], pitch: f64) -> Result<ComplexField> {
    if phase.channels() != 1 {
        return Err(Error::Dimension("phase image must have one channel".into()));
    }
    if !(aperture > 0.0 && aperture <= 1.0) {
        return Err(Error::InvalidParameter(format!("aperture {aperture} not in (0, 1]")));
    }
    let (w, h) = (phase.width(), phase.height());
    let field = ComplexField::from_data(
        w,
        h,
        pitch,
        phase.data().iter().map(|v| Complex64::from_polar(1.0, TAU * v)).collect(),
    )?;
    let mut spec = field.fft2(Direction::Forward)?;
    let radius = 0.5 * aperture;
    // signed frequency distance to the carrier with periodic wrap
    let wrap = |f: f64| f - f.round();
    let fx: Vec<f64> = (0..w).map(|k| wrap(k as f64 / w as f64 - carrier[0])).collect();
    for (y, row) in spec.data_mut().chunks_exact_mut(w).enumerate() {
        let fy = wrap(y as f64 / h as f64 - carrier[1]);
        for (v, fx) in row.iter_mut().zip(&fx) {
            if fx * fx + fy * fy > radius * radius {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }
    spec.fft2(Direction::Inverse)
}

/// [`decode_double_phase_at`] without a carrier.
pub fn decode_double_phase(phase: &RealImage, aperture: f64, pitch: f64) -> Result<ComplexField> {
    decode_double_phase_at(phase, aperture, [0.0, 0.0], pitch)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    /// 4f aperture as a fraction of Nyquist.
    pub aperture: f64,
    pub band_limit: bool,
    pub padding: bool,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            aperture: 0.5,
            band_limit: true,
            padding: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReconstruction {
    pub wavelength: f64,
    /// `|u|^2` at the focus plane, unclamped.
    pub intensity: RealImage,
    pub psnr: Option<Psnr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// 64-bin histogram of the clamped composite.
    pub histogram: Vec<u64>,
}

impl ContrastStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut histogram = vec![0u64; 64];
        for v in values {
            histogram[((v.clamp(0.0, 1.0) * 64.0) as usize).min(63)] += 1;
        }
        Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            histogram,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub focus: f64,
    pub channels: Vec<ChannelReconstruction>,
    /// Channels stacked as RGB and clamped to `[0, 1]`.
    pub composite: RealImage,
    /// Statistics of the unclamped stacked intensity.
    pub contrast: ContrastStats,
    pub psnr: Option<Psnr>,
}

fn check_band_limit(params: &PropagationParams, w: usize, h: usize) -> Result<()> {
    if !params.band_limit {
        return Ok(());
    }
    let (pw, ph) = params.working_size(w, h);
    for n in [pw, ph] {
        let df = 1.0 / (n as f64 * params.pitch);
        if params.band_limit_frequency(n) < 2.0 * df {
            return Err(Error::InvalidParameter(format!(
                "focus distance {} m leaves fewer than two frequency bins after band limiting",
                params.distance
            )));
        }
    }
    Ok(())
}

/// Decodes (when encoded), removes the carrier, back-propagates each channel
/// by `focus` and measures intensity. `reference` (RGB, `[0, 1]`) enables PSNR.
pub fn reconstruct_intensity(
    set: &HologramSet,
    focus: f64,
    opts: &ReconstructionOptions,
    reference: Option<&RealImage>,
) -> Result<ReconstructionReport> {
    if !focus.is_finite() {
        return Err(Error::InvalidParameter(format!("focus {focus}")));
    }
    let (w, h) = (set.width(), set.height());
    if let Some(r) = reference {
        if r.width() != w || r.height() != h || r.channels() != set.channels().len() {
            return Err(Error::Mismatch("reference does not match the hologram set".into()));
        }
    }
    let carrier = set.carrier();
    let undo = [-carrier[0], -carrier[1]];
    let scale = Complex64::new(set.normalization(), 0.0);

    let channels = set
        .channels()
        .par_iter()
        .enumerate()
        .map(|(c, ch)| {
            let params = PropagationParams::new(ch.wavelength, -focus, set.pitch())
                .band_limit(opts.band_limit)
                .padding(opts.padding);
            check_band_limit(&params, w, h)?;
            let field = match &ch.data {
                ChannelData::Phase(p) => decode_double_phase_at(p, opts.aperture, carrier, set.pitch())?,
                ChannelData::Complex(f) => f.clone(),
            };
            let field = add_linear_phase(&field.scale(scale), undo)?;
            let u = propagate(&field, &params)?;
            let intensity = RealImage::from_data(w, h, 1, u.intensity())?;
            let psnr = match reference {
                Some(r) => Some(psnr(&intensity.clamp01(), &r.channel(c)?)?),
                None => None,
            };
            Ok(ChannelReconstruction {
                wavelength: ch.wavelength,
                intensity,
                psnr,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let planes: Vec<RealImage> = channels.iter().map(|c| c.intensity.clone()).collect();
    let stacked = RealImage::from_planes(&planes)?;
    let contrast = ContrastStats::of(stacked.data());
    let composite = stacked.clamp01();
    let psnr = match reference {
        Some(r) => Some(psnr(&composite, r)?),
        None => None,
    };
    Ok(ReconstructionReport {
        focus,
        channels,
        composite,
        contrast,
        psnr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub name: String,
    pub wavelength: f64,
    pub psnr: Option<Psnr>,
    pub mean: f64,
    pub std: f64,
}

/// Serializable part of a [`ReconstructionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub focus: f64,
    pub image: String,
    pub psnr: Option<Psnr>,
    pub contrast: ContrastStats,
    pub channels: Vec<ChannelSummary>,
}

impl ReconstructionReport {
    pub fn summary(&self, image: impl Into<String>) -> ReportSummary {
        ReportSummary {
            focus: self.focus,
            image: image.into(),
            psnr: self.psnr,
            contrast: self.contrast.clone(),
            channels: self
                .channels
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let s = ContrastStats::of(c.intensity.data());
                    ChannelSummary {
                        name: CHANNEL_NAMES.get(i).map_or_else(|| format!("ch{i}"), |n| n.to_string()),
                        wavelength: c.wavelength,
                        psnr: c.psnr,
                        mean: s.mean,
                        std: s.std,
                    }
                })
                .collect(),
        }
    }

    /// Writes `<stem>.png` (sRGB composite) and `<stem>.json`; returns the JSON path.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let image = format!("{stem}.png");
        io::write_png_srgb(dir.join(&image), &self.composite)?;
        let path = dir.join(format!("{stem}.json"));
        fs::write(&path, serde_json::to_string_pretty(&self.summary(image))? + "\n")?;
        Ok(path)
    }
}
