//! Complex and real 2D grids shared by every wave-optics stage.
//!
//! Storage is row-major with the origin at the top-left pixel. Frequency
//! domain fields keep the zero frequency at index `(0, 0)`; use
//! [`ComplexField::fftshift`] to center it for display.

mod fft;
pub mod io;

pub use fft::Direction;

use num_complex::Complex64;

use crate::{Error, Result};

/// A 2D grid of complex amplitudes with a physical (square) pixel pitch.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    pitch: f64,
    data: Vec<Complex64>,
}

fn check_dims(width: usize, height: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!("{width}x{height} has a zero side")));
    }
    width
        .checked_mul(height)
        .ok_or_else(|| Error::Dimension(format!("{width}x{height} overflows")))
}

fn check_pitch(pitch: f64) -> Result<()> {
    if pitch.is_finite() && pitch > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("pitch must be positive, got {pitch}")))
    }
}

impl ComplexField {
    pub fn zeros(width: usize, height: usize, pitch: f64) -> Result<Self> {
        let n = check_dims(width, height)?;
        check_pitch(pitch)?;
        Ok(Self {
            width,
            height,
            pitch,
            data: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    pub fn from_data(width: usize, height: usize, pitch: f64, data: Vec<Complex64>) -> Result<Self> {
        let n = check_dims(width, height)?;
        check_pitch(pitch)?;
        if data.len() != n {
            return Err(Error::Mismatch(format!(
                "{} samples for a {width}x{height} field",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("field contains non-finite values".into()));
        }
        Ok(Self {
            width,
            height,
            pitch,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        pitch: f64,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(check_dims(width, height)?);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_data(width, height, pitch, data)
    }

    /// Builds a field from real amplitude and phase (radians) planes.
    pub fn from_polar(amplitude: &[f64], phase: &[f64], width: usize, height: usize, pitch: f64) -> Result<Self> {
        if amplitude.len() != phase.len() {
            return Err(Error::Mismatch("amplitude and phase lengths differ".into()));
        }
        let data = amplitude
            .iter()
            .zip(phase)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        Self::from_data(width, height, pitch, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Mutable access to the samples. Callers must keep them finite.
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: Complex64) {
        self.data[y * self.width + x] = value;
    }

    pub fn with_pitch(mut self, pitch: f64) -> Result<Self> {
        check_pitch(pitch)?;
        self.pitch = pitch;
        Ok(self)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Sum of squared moduli.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_modulus(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn amplitude(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pitch: self.pitch,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Pointwise `a*self + b*other`.
    pub fn axpby(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(Error::Mismatch("fields differ in shape".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        Ok(Self { data, ..self.clone_meta() })
    }

    pub(crate) fn clone_meta(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pitch: self.pitch,
            data: Vec::new(),
        }
    }

    /// Root-mean-square of the pointwise difference.
    pub fn rms_diff(&self, other: &Self) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::Mismatch("fields differ in shape".into()));
        }
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(u, v)| (u - v).norm_sqr())
            .sum();
        Ok((sum / self.len() as f64).sqrt())
    }

    pub fn rms(&self) -> f64 {
        (self.energy() / self.len() as f64).sqrt()
    }

    /// Zero-pads to `new_w` x `new_h`, keeping the original block centered.
    pub fn pad_center(&self, new_w: usize, new_h: usize) -> Result<Self> {
        if new_w < self.width || new_h < self.height {
            return Err(Error::Dimension(format!(
                "cannot pad {}x{} to smaller {new_w}x{new_h}",
                self.width, self.height
            )));
        }
        let mut out = Self::zeros(new_w, new_h, self.pitch)?;
        let ox = (new_w - self.width) / 2;
        let oy = (new_h - self.height) / 2;
        for y in 0..self.height {
            let src = &self.data[y * self.width..(y + 1) * self.width];
            let start = (y + oy) * new_w + ox;
            out.data[start..start + self.width].copy_from_slice(src);
        }
        Ok(out)
    }

    /// Extracts the centered `new_w` x `new_h` block. Inverse of [`Self::pad_center`].
    pub fn crop_center(&self, new_w: usize, new_h: usize) -> Result<Self> {
        if new_w > self.width || new_h > self.height || new_w == 0 || new_h == 0 {
            return Err(Error::Dimension(format!(
                "cannot crop {}x{} to {new_w}x{new_h}",
                self.width, self.height
            )));
        }
        let ox = (self.width - new_w) / 2;
        let oy = (self.height - new_h) / 2;
        let mut data = Vec::with_capacity(new_w * new_h);
        for y in 0..new_h {
            let start = (y + oy) * self.width + ox;
            data.extend_from_slice(&self.data[start..start + new_w]);
        }
        Ok(Self {
            width: new_w,
            height: new_h,
            pitch: self.pitch,
            data,
        })
    }

    /// Cyclic shift moving index `(0,0)` to `(w/2, h/2)`.
    pub fn fftshift(&self) -> Self {
        self.roll(self.width / 2, self.height / 2)
    }

    pub fn ifftshift(&self) -> Self {
        self.roll(self.width - self.width / 2, self.height - self.height / 2)
    }

    /// Cyclic translation: output(x+dx, y+dy) = input(x, y).
    pub fn roll(&self, dx: usize, dy: usize) -> Self {
        let (w, h) = (self.width, self.height);
        let mut data = vec![Complex64::new(0.0, 0.0); self.len()];
        for y in 0..h {
            let ty = (y + dy) % h;
            for x in 0..w {
                data[ty * w + (x + dx) % w] = self.data[y * w + x];
            }
        }
        Self { data, ..self.clone_meta() }
    }

    pub fn fft2(&self, direction: Direction) -> Result<Self> {
        fft::fft2(self, direction)
    }
}

/// A real-valued image with 1 or 3 interleaved channels.
///
/// Color and normalized images live in `[0, 1]`; depth maps reuse the type
/// with metric values.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl RealImage {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        let n = check_dims(width, height)?;
        check_channels(channels)?;
        Ok(Self {
            width,
            height,
            channels,
            data: vec![value; n * channels],
        })
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let n = check_dims(width, height)?;
        check_channels(channels)?;
        if data.len() != n * channels {
            return Err(Error::Mismatch(format!(
                "{} values for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("image contains non-finite values".into()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Stacks single-channel planes into one interleaved image.
    pub fn from_planes(planes: &[RealImage]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::Dimension("no planes".into()))?;
        if planes
            .iter()
            .any(|p| p.channels != 1 || p.width != first.width || p.height != first.height)
        {
            return Err(Error::Mismatch("planes must be single-channel and equally sized".into()));
        }
        let c = planes.len();
        let mut data = vec![0.0; first.pixel_count() * c];
        for (k, plane) in planes.iter().enumerate() {
            for (i, &v) in plane.data.iter().enumerate() {
                data[i * c + k] = v;
            }
        }
        Self::from_data(first.width, first.height, c, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn channel(&self, c: usize) -> Result<Self> {
        if c >= self.channels {
            return Err(Error::InvalidParameter(format!(
                "channel {c} of a {}-channel image",
                self.channels
            )));
        }
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Self::from_data(self.width, self.height, 1, data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Rounds every value to the nearest `f32`, matching what PFM files hold.
    pub fn to_f32_precision(&self) -> Self {
        self.map(|v| v as f32 as f64)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var = self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64;
        var.sqrt()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

fn check_channels(channels: usize) -> Result<()> {
    if channels == 1 || channels == 3 {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{channels} channels (expected 1 or 3)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> ComplexField {
        ComplexField::from_fn(w, h, 1e-6, |x, y| Complex64::new(x as f64, y as f64 + 0.5)).unwrap()
    }

    #[test]
    fn pad_then_crop_is_bit_exact() {
        let f = ramp(4, 4);
        let back = f.pad_center(8, 8).unwrap().crop_center(4, 4).unwrap();
        assert_eq!(back, f);

        let odd = ramp(5, 3);
        assert_eq!(odd.pad_center(10, 6).unwrap().crop_center(5, 3).unwrap(), odd);
    }

    #[test]
    fn padding_adds_zero_border_and_no_energy() {
        let ones = ComplexField::from_fn(2, 2, 1.0, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let p = ones.pad_center(4, 4).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let inside = (1..3).contains(&x) && (1..3).contains(&y);
                assert_eq!(p.get(x, y).re, if inside { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(p.energy(), ones.energy());
    }

    #[test]
    fn invalid_pad_and_crop_targets() {
        let f = ramp(4, 4);
        assert!(f.pad_center(3, 8).is_err());
        assert!(f.crop_center(5, 4).is_err());
        assert!(f.crop_center(0, 2).is_err());
    }

    #[test]
    fn construction_checks() {
        assert!(ComplexField::zeros(0, 4, 1.0).is_err());
        assert!(ComplexField::zeros(4, 4, 0.0).is_err());
        assert!(ComplexField::zeros(usize::MAX, 2, 1.0).is_err());
        let bad = vec![Complex64::new(f64::NAN, 0.0); 4];
        assert!(ComplexField::from_data(2, 2, 1.0, bad).is_err());
        assert!(RealImage::zeros(2, 2, 2).is_err());
    }

    #[test]
    fn shift_round_trip() {
        let f = ramp(5, 4);
        assert_eq!(f.fftshift().ifftshift(), f);
        assert_eq!(f.fftshift().get(2, 2), f.get(0, 0));
    }

    #[test]
    fn planes_and_channels() {
        let r = RealImage::filled(3, 2, 1, 0.1).unwrap();
        let g = RealImage::filled(3, 2, 1, 0.2).unwrap();
        let b = RealImage::filled(3, 2, 1, 0.3).unwrap();
        let rgb = RealImage::from_planes(&[r, g.clone(), b]).unwrap();
        assert_eq!(rgb.get(2, 1, 1), 0.2);
        assert_eq!(rgb.channel(1).unwrap(), g);
    }
}
