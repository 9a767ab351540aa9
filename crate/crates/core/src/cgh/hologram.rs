use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clahe::{clahe, ClaheParams};
use super::encode::{add_linear_phase, antialias_filter, double_phase_encode_with, DoublePhaseOptions};
use super::layers::{slice_layers, InitialPhase, LayerStack, RgbdFrame};
use super::{DEFAULT_BASE_DISTANCE, DEFAULT_PITCH, RGB_WAVELENGTHS};
use crate::field::{io, ComplexField, RealImage};
use crate::propagation::{propagate_sum, PropagationParams};
use crate::{Error, Result};

pub const CHANNEL_NAMES: [&str; 3] = ["red", "green", "blue"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Complex,
    DoublePhase,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelData {
    Complex(ComplexField),
    /// Phase as a fraction of `2pi`, in `[0, 1]`.
    Phase(RealImage),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HologramChannel {
    pub wavelength: f64,
    pub data: ChannelData,
}

impl HologramChannel {
    fn dims(&self) -> (usize, usize) {
        match &self.data {
            ChannelData::Complex(f) => (f.width(), f.height()),
            ChannelData::Phase(p) => (p.width(), p.height()),
        }
    }
}

/// Per-wavelength holograms sharing size and pitch.
///
/// `normalization` is the factor the complex holograms were divided by
/// before encoding (1 for complex sets, 0 when the encoded field was all
/// zero, so the phases carry no signal); `carrier` is the linear phase that
/// was applied, in cycles per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct HologramSet {
    channels: Vec<HologramChannel>,
    pitch: f64,
    normalization: f64,
    carrier: [f64; 2],
    clahe: Option<ClaheParams>,
}

impl HologramSet {
    pub fn new(channels: Vec<HologramChannel>, pitch: f64) -> Result<Self> {
        Self::with_metadata(channels, pitch, 1.0, [0.0, 0.0], None)
    }

    fn with_metadata(
        channels: Vec<HologramChannel>,
        pitch: f64,
        normalization: f64,
        carrier: [f64; 2],
        clahe: Option<ClaheParams>,
    ) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidParameter("hologram set has no channels".into()))?;
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::InvalidParameter(format!("pitch {pitch}")));
        }
        if !(normalization >= 0.0 && normalization.is_finite()) {
            return Err(Error::InvalidParameter(format!("normalization {normalization}")));
        }
        let dims = first.dims();
        let complex = matches!(first.data, ChannelData::Complex(_));
        for (i, c) in channels.iter().enumerate() {
            if c.dims() != dims {
                return Err(Error::Mismatch(format!("channel {i} is {:?}, expected {dims:?}", c.dims())));
            }
            if matches!(c.data, ChannelData::Complex(_)) != complex {
                return Err(Error::Mismatch("channels mix complex and encoded data".into()));
            }
            if !(c.wavelength > 0.0 && c.wavelength.is_finite()) {
                return Err(Error::InvalidParameter(format!("channel {i} wavelength {}", c.wavelength)));
            }
            match &c.data {
                ChannelData::Complex(f) if (f.pitch() - pitch).abs() > 1e-12 * pitch => {
                    return Err(Error::Mismatch(format!("channel {i} pitch {} != {pitch}", f.pitch())));
                }
                ChannelData::Phase(p) if p.channels() != 1 => {
                    return Err(Error::Dimension(format!("channel {i} phase image has {} channels", p.channels())));
                }
                _ => {}
            }
        }
        Ok(Self {
            channels,
            pitch,
            normalization,
            carrier,
            clahe,
        })
    }

    pub fn channels(&self) -> &[HologramChannel] {
        &self.channels
    }

    pub fn encoding(&self) -> Encoding {
        match self.channels[0].data {
            ChannelData::Complex(_) => Encoding::Complex,
            ChannelData::Phase(_) => Encoding::DoublePhase,
        }
    }

    pub fn width(&self) -> usize {
        self.channels[0].dims().0
    }

    pub fn height(&self) -> usize {
        self.channels[0].dims().1
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn carrier(&self) -> [f64; 2] {
        self.carrier
    }

    /// CLAHE settings applied by [`enhance_hologram`], if any.
    pub fn clahe(&self) -> Option<&ClaheParams> {
        self.clahe.as_ref()
    }

    fn require(&self, encoding: Encoding, what: &str) -> Result<()> {
        if self.encoding() != encoding {
            return Err(Error::Unsupported(format!("{what} needs a {encoding:?} hologram set")));
        }
        Ok(())
    }

    /// Applies a linear phase carrier to every channel of a complex set.
    pub fn with_carrier(&self, carrier: [f64; 2]) -> Result<Self> {
        self.require(Encoding::Complex, "adding a carrier")?;
        let channels = self
            .channels
            .iter()
            .map(|c| match &c.data {
                ChannelData::Complex(f) => Ok(HologramChannel {
                    wavelength: c.wavelength,
                    data: ChannelData::Complex(add_linear_phase(f, carrier)?),
                }),
                ChannelData::Phase(_) => unreachable!("checked complex"),
            })
            .collect::<Result<_>>()?;
        let total = [self.carrier[0] + carrier[0], self.carrier[1] + carrier[1]];
        Self::with_metadata(channels, self.pitch, self.normalization, total, None)
    }

    /// Double-phase encodes every channel, normalizing by the largest
    /// modulus over all channels so their relative brightness survives.
    pub fn encode_double_phase(&self, opts: &DoublePhaseOptions) -> Result<Self> {
        self.require(Encoding::Complex, "encoding")?;
        opts.validate()?;
        let fields = self
            .channels
            .iter()
            .map(|c| match &c.data {
                ChannelData::Complex(f) if opts.prefilter_sigma > 0.0 => antialias_filter(f, opts.prefilter_sigma, self.carrier),
                ChannelData::Complex(f) => Ok(f.clone()),
                ChannelData::Phase(_) => unreachable!("checked complex"),
            })
            .collect::<Result<Vec<_>>>()?;
        let max = fields.iter().map(ComplexField::max_modulus).fold(0.0, f64::max);
        let norm = if max > 0.0 { max } else { 1.0 };
        let channels = fields
            .iter()
            .zip(&self.channels)
            .map(|(f, c)| {
                Ok(HologramChannel {
                    wavelength: c.wavelength,
                    data: ChannelData::Phase(double_phase_encode_with(f, norm, opts.phase_floor, self.carrier)?),
                })
            })
            .collect::<Result<_>>()?;
        Self::with_metadata(channels, self.pitch, self.normalization * max, self.carrier, None)
    }

    /// Rounds encoded phases to the 16-bit levels stored on disk.
    pub fn quantized(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.channels {
            if let ChannelData::Phase(p) = &mut c.data {
                *p = p.map(|v| io::quantize16(v) as f64 / 65535.0);
            }
        }
        out
    }

    /// Writes `<stem>.json` plus one file set per channel next to it:
    /// 16-bit PNG phase images for encoded sets, `.re.pfm`/`.im.pfm` pairs
    /// for complex ones. Returns the sidecar path.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut entries = Vec::new();
        for (i, c) in self.channels.iter().enumerate() {
            let name = channel_name(i);
            let file = match &c.data {
                ChannelData::Phase(p) => {
                    let file = format!("{stem}_{name}.png");
                    io::write_png16(dir.join(&file), p)?;
                    file
                }
                ChannelData::Complex(f) => {
                    let file = format!("{stem}_{name}");
                    io::write_complex_pfm(dir.join(&file), f)?;
                    file
                }
            };
            entries.push(ChannelMeta {
                name,
                wavelength: c.wavelength,
                file,
            });
        }
        let meta = HologramMeta {
            encoding: self.encoding(),
            width: self.width(),
            height: self.height(),
            pitch: self.pitch,
            normalization: self.normalization,
            carrier: self.carrier,
            clahe: self.clahe,
            channels: entries,
        };
        let path = dir.join(format!("{stem}.json"));
        fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(path)
    }

    /// Reads a set written by [`HologramSet::save`] from its sidecar.
    pub fn load(sidecar: impl AsRef<Path>) -> Result<Self> {
        let sidecar = sidecar.as_ref();
        let meta: HologramMeta = serde_json::from_str(&fs::read_to_string(sidecar)?)
            .map_err(|e| Error::format(sidecar, e.to_string()))?;
        let dir = sidecar.parent().unwrap_or(Path::new("."));
        let channels = meta
            .channels
            .iter()
            .map(|c| {
                let path = dir.join(&c.file);
                let data = match meta.encoding {
                    Encoding::DoublePhase => ChannelData::Phase(io::read_png16(&path)?),
                    Encoding::Complex => ChannelData::Complex(io::read_complex_pfm(&path, meta.pitch)?),
                };
                Ok(HologramChannel {
                    wavelength: c.wavelength,
                    data,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let set = Self::with_metadata(channels, meta.pitch, meta.normalization, meta.carrier, meta.clahe)?;
        if set.width() != meta.width || set.height() != meta.height {
            return Err(Error::format(sidecar, "image size disagrees with metadata"));
        }
        Ok(set)
    }
}

fn channel_name(i: usize) -> String {
    CHANNEL_NAMES
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("ch{i}"))
}

#[derive(Debug, Serialize, Deserialize)]
struct ChannelMeta {
    name: String,
    wavelength: f64,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct HologramMeta {
    encoding: Encoding,
    width: usize,
    height: usize,
    pitch: f64,
    normalization: f64,
    carrier: [f64; 2],
    clahe: Option<ClaheParams>,
    channels: Vec<ChannelMeta>,
}

/// Layered synthesis settings.
///
/// Slab `k` of `n_layers` sits at `base_distance + k / n_layers * depth_span`
/// from the hologram plane, so `depth_span` maps the scene range
/// `[near, far)` onto the optical axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub n_layers: usize,
    pub near: f64,
    pub far: f64,
    pub initial_phase: InitialPhase,
    pub pitch: f64,
    pub base_distance: f64,
    pub depth_span: f64,
    pub wavelengths: [f64; 3],
    pub band_limit: bool,
    pub padding: bool,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            n_layers: 8,
            near: 1.0,
            far: 5.0,
            initial_phase: InitialPhase::Random { seed: 0 },
            pitch: DEFAULT_PITCH,
            base_distance: DEFAULT_BASE_DISTANCE,
            depth_span: 0.1e-3,
            wavelengths: RGB_WAVELENGTHS,
            band_limit: true,
            padding: true,
        }
    }
}

impl SynthesisParams {
    pub fn layer_distance(&self, layer: usize, n_layers: usize) -> f64 {
        self.base_distance + layer as f64 / n_layers as f64 * self.depth_span
    }
}

/// Slices a frame into depth layers and propagates them to the hologram plane.
pub fn synthesize(frame: &RgbdFrame, params: &SynthesisParams) -> Result<HologramSet> {
    let stack = slice_layers(frame, params.n_layers, params.near, params.far, params.initial_phase)?;
    synthesize_layers(&stack, params)
}

/// Complex hologram of each wavelength: the sum over layers of each layer
/// field propagated by its distance. Channels are computed in parallel.
pub fn synthesize_layers(stack: &LayerStack, params: &SynthesisParams) -> Result<HologramSet> {
    if !(params.pitch > 0.0) || params.wavelengths.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidParameter("pitch and wavelengths must be positive".into()));
    }
    let layers = stack.nonempty_layers();
    let n = stack.n_layers();
    let channels = (0..3)
        .into_par_iter()
        .map(|c| {
            let wavelength = params.wavelengths[c];
            if layers.is_empty() {
                let data = ChannelData::Complex(ComplexField::zeros(stack.width(), stack.height(), params.pitch)?);
                return Ok(HologramChannel { wavelength, data });
            }
            let fields = layers
                .iter()
                .map(|&k| stack.layer_field(k, c, params.pitch))
                .collect::<Result<Vec<_>>>()?;
            let props: Vec<PropagationParams> = layers
                .iter()
                .map(|&k| {
                    PropagationParams::new(wavelength, params.layer_distance(k, n), params.pitch)
                        .band_limit(params.band_limit)
                        .padding(params.padding)
                })
                .collect();
            let h = propagate_sum(&fields, &props).map_err(|e| match e {
                Error::Layer { layer, source } => Error::Layer {
                    layer: layers[layer],
                    source,
                },
                other => other,
            })?;
            Ok(HologramChannel {
                wavelength,
                data: ChannelData::Complex(h),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    HologramSet::new(channels, params.pitch)
}

/// CLAHE on each channel's phase image. Only encoded sets are accepted.
pub fn enhance_hologram(set: &HologramSet, params: &ClaheParams) -> Result<HologramSet> {
    set.require(Encoding::DoublePhase, "enhancement")?;
    let channels = set
        .channels
        .iter()
        .map(|c| match &c.data {
            ChannelData::Phase(p) => Ok(HologramChannel {
                wavelength: c.wavelength,
                data: ChannelData::Phase(clahe(p, params)?),
            }),
            ChannelData::Complex(_) => unreachable!("checked encoded"),
        })
        .collect::<Result<_>>()?;
    HologramSet::with_metadata(channels, set.pitch, set.normalization, set.carrier, Some(*params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::propagate;
    use num_complex::Complex64;

    fn flat_frame(w: usize, h: usize, depth: f64, value: f64) -> RgbdFrame {
        RgbdFrame::new(
            RealImage::filled(w, h, 3, value).unwrap(),
            RealImage::filled(w, h, 1, depth).unwrap(),
        )
        .unwrap()
    }

    fn complex_of(set: &HologramSet, c: usize) -> &ComplexField {
        match &set.channels()[c].data {
            ChannelData::Complex(f) => f,
            ChannelData::Phase(_) => panic!("encoded"),
        }
    }

    #[test]
    fn single_layer_at_zero_distance_is_identity() {
        let frame = flat_frame(16, 16, 1.0, 1.0);
        let params = SynthesisParams {
            n_layers: 1,
            base_distance: 0.0,
            initial_phase: InitialPhase::Constant,
            ..Default::default()
        };
        let set = synthesize(&frame, &params).unwrap();
        assert_eq!(set.encoding(), Encoding::Complex);
        for c in 0..3 {
            for v in complex_of(&set, c).data() {
                assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_pixel_matches_direct_propagation() {
        let mut depth = RealImage::filled(32, 32, 1, 5.0).unwrap();
        depth.set(20, 9, 0, 2.0);
        let mut rgb = RealImage::zeros(32, 32, 3).unwrap();
        rgb.set(20, 9, 1, 0.64);
        let frame = RgbdFrame::new(rgb, depth).unwrap();
        let params = SynthesisParams {
            n_layers: 1,
            initial_phase: InitialPhase::Constant,
            ..Default::default()
        };
        let set = synthesize(&frame, &params).unwrap();
        let mut impulse = ComplexField::zeros(32, 32, params.pitch).unwrap();
        impulse.set(20, 9, Complex64::new(0.8, 0.0));
        let expected = propagate(&impulse, &PropagationParams::new(532e-9, params.base_distance, params.pitch)).unwrap();
        assert!(complex_of(&set, 1).rms_diff(&expected).unwrap() < 1e-14);
        assert_eq!(complex_of(&set, 0).energy(), 0.0);
    }

    #[test]
    fn linear_in_amplitude() {
        let mk = |s: f64| {
            let rgb = RealImage::from_data(16, 8, 3, (0..384).map(|i| s * (i % 5) as f64 / 5.0).collect()).unwrap();
            let depth = RealImage::from_data(16, 8, 1, (0..128).map(|i| 1.0 + (i % 16) as f64 / 4.0).collect()).unwrap();
            RgbdFrame::new(rgb, depth).unwrap()
        };
        let params = SynthesisParams {
            n_layers: 4,
            ..Default::default()
        };
        // amplitude is sqrt(intensity): scaling intensity by s^2 scales the field by s
        let s = 0.7f64;
        let a = synthesize(&mk(1.0), &params).unwrap();
        let b = synthesize(&mk(s * s), &params).unwrap();
        for c in 0..3 {
            let scaled = complex_of(&a, c).scale(Complex64::new(s, 0.0));
            assert!(complex_of(&b, c).rms_diff(&scaled).unwrap() < 1e-10);
        }
    }

    #[test]
    fn empty_frame_gives_zero_hologram() {
        let set = synthesize(&flat_frame(8, 8, 5.0, 0.3), &SynthesisParams::default()).unwrap();
        assert!((0..3).all(|c| complex_of(&set, c).energy() == 0.0));
        let enc = set.encode_double_phase(&DoublePhaseOptions::default()).unwrap();
        assert_eq!(enc.normalization(), 0.0);
    }

    #[test]
    fn encoding_normalizes_across_channels() {
        let mut rgb = RealImage::zeros(16, 16, 3).unwrap();
        for y in 4..12 {
            for x in 4..12 {
                rgb.set(x, y, 0, 0.9);
                rgb.set(x, y, 2, 0.1);
            }
        }
        let frame = RgbdFrame::new(rgb, RealImage::filled(16, 16, 1, 2.0).unwrap()).unwrap();
        let set = synthesize(&frame, &SynthesisParams { n_layers: 2, ..Default::default() }).unwrap();
        let max = (0..3).map(|c| complex_of(&set, c).max_modulus()).fold(0.0, f64::max);
        let enc = set.with_carrier([0.125, 0.0]).unwrap().encode_double_phase(&DoublePhaseOptions::plain()).unwrap();
        assert_eq!(enc.encoding(), Encoding::DoublePhase);
        assert!((enc.normalization() - max).abs() < 1e-12 * max);
        assert_eq!(enc.carrier(), [0.125, 0.0]);
        assert!(enc.encode_double_phase(&DoublePhaseOptions::plain()).is_err());
        assert!(enc.with_carrier([0.1, 0.0]).is_err());
    }

    #[test]
    fn enhancement_requires_encoding() {
        let set = synthesize(&flat_frame(16, 16, 2.0, 0.5), &SynthesisParams::default()).unwrap();
        assert!(enhance_hologram(&set, &ClaheParams::default()).is_err());
        let enc = set.encode_double_phase(&DoublePhaseOptions::default()).unwrap();
        let out = enhance_hologram(&enc, &ClaheParams { tiles: (2, 2), ..Default::default() }).unwrap();
        assert_eq!(out.encoding(), Encoding::DoublePhase);
        assert!(out.clahe().is_some());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rgb = RealImage::zeros(12, 10, 3).unwrap();
        rgb.set(5, 5, 0, 1.0);
        rgb.set(6, 5, 1, 0.5);
        let frame = RgbdFrame::new(rgb, RealImage::filled(12, 10, 1, 3.0).unwrap()).unwrap();
        let set = synthesize(&frame, &SynthesisParams::default()).unwrap();

        let complex = HologramSet::new(
            set.channels().iter().map(|c| HologramChannel {
                wavelength: c.wavelength,
                data: match &c.data {
                    ChannelData::Complex(f) => ChannelData::Complex(f.map(|v| Complex64::new(v.re as f32 as f64, v.im as f32 as f64))),
                    ChannelData::Phase(_) => unreachable!(),
                },
            }).collect(),
            set.pitch(),
        )
        .unwrap();
        let path = complex.save(dir.path(), "holo").unwrap();
        assert_eq!(HologramSet::load(&path).unwrap(), complex);

        let enc = set.with_carrier([0.1, -0.05]).unwrap().encode_double_phase(&DoublePhaseOptions::default()).unwrap().quantized();
        let path = enc.save(dir.path(), "enc").unwrap();
        assert!(dir.path().join("enc_green.png").exists());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"double_phase\""));
        assert_eq!(HologramSet::load(&path).unwrap(), enc);
    }

    #[test]
    fn rejects_inconsistent_sets() {
        let a = ComplexField::zeros(4, 4, 8e-6).unwrap();
        let b = ComplexField::zeros(5, 4, 8e-6).unwrap();
        let ch = |f: ComplexField| HologramChannel { wavelength: 5e-7, data: ChannelData::Complex(f) };
        assert!(HologramSet::new(vec![], 8e-6).is_err());
        assert!(HologramSet::new(vec![ch(a.clone()), ch(b)], 8e-6).is_err());
        assert!(HologramSet::new(vec![ch(a.clone())], 4e-6).is_err());
        let phase = HologramChannel { wavelength: 5e-7, data: ChannelData::Phase(RealImage::zeros(4, 4, 1).unwrap()) };
        assert!(HologramSet::new(vec![ch(a), phase], 8e-6).is_err());
    }
}
