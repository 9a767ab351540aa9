use std::f64::consts::TAU;

use num_complex::Complex64;

use serde::{Deserialize, Serialize};

use crate::field::{ComplexField, Direction, RealImage};
use crate::{Error, Result};

/// Multiplies by the plane wave `exp(i 2pi (cx x + cy y))`, carrier in
/// cycles per pixel along columns (`x`) and rows (`y`).
pub fn add_linear_phase(h: &ComplexField, carrier: [f64; 2]) -> Result<ComplexField> {
    let [cx, cy] = carrier;
    if !(cx.abs() < 0.5 && cy.abs() < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "carrier ({cx}, {cy}) is not below Nyquist (0.5 cycles/pixel)"
        )));
    }
    if cx == 0.0 && cy == 0.0 {
        return Ok(h.clone());
    }
    let w = h.width();
    let row: Vec<Complex64> = (0..w).map(|x| Complex64::from_polar(1.0, TAU * cx * x as f64)).collect();
    let mut out = h.clone();
    for (y, line) in out.data_mut().chunks_exact_mut(w).enumerate() {
        let ry = Complex64::from_polar(1.0, TAU * cy * y as f64);
        for (v, r) in line.iter_mut().zip(&row) {
            *v *= r * ry;
        }
    }
    Ok(out)
}

/// The two phases `phi + theta`, `phi - theta` whose phasor mean is
/// `a e^{i phi}` (`a` clamped to `[0, 1]`).
pub fn double_phase_pair(value: Complex64) -> (f64, f64) {
    let a = value.norm().clamp(0.0, 1.0);
    let phi = value.arg();
    let theta = a.acos();
    (phi + theta, phi - theta)
}

/// Wraps a phase in radians to a fraction of a turn in `[0, 1)`.
pub fn phase_fraction(phase: f64) -> f64 {
    let f = phase.rem_euclid(TAU) / TAU;
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Conditioning applied when encoding a hologram set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublePhaseOptions {
    /// Standard deviation in cycles per pixel of a Gaussian low-pass applied
    /// around the carrier before encoding; 0 disables it.
    pub prefilter_sigma: f64,
    /// Relative amplitude below which the field phase is treated as
    /// undefined and replaced by the carrier phase.
    pub phase_floor: f64,
}

impl Default for DoublePhaseOptions {
    fn default() -> Self {
        Self {
            prefilter_sigma: 0.125,
            phase_floor: 1e-3,
        }
    }
}

impl DoublePhaseOptions {
    /// Plain encoding: no prefilter, phase kept everywhere.
    pub fn plain() -> Self {
        Self {
            prefilter_sigma: 0.0,
            phase_floor: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prefilter_sigma >= 0.0 && self.prefilter_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("prefilter sigma {}", self.prefilter_sigma)));
        }
        if !(0.0..1.0).contains(&self.phase_floor) {
            return Err(Error::InvalidParameter(format!("phase floor {} not in [0, 1)", self.phase_floor)));
        }
        Ok(())
    }
}

/// Signed distance from `f` to `center` on the unit frequency circle.
pub(crate) fn wrapped(f: f64, center: f64) -> f64 {
    let d = f - center;
    d - d.round()
}

/// Gaussian low-pass of `h` centered on `carrier` (both in cycles per pixel,
/// wrapping periodically).
pub fn antialias_filter(h: &ComplexField, sigma: f64, carrier: [f64; 2]) -> Result<ComplexField> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("filter sigma {sigma}")));
    }
    let (w, hh) = (h.width(), h.height());
    let gx: Vec<f64> = (0..w)
        .map(|k| (-wrapped(k as f64 / w as f64, carrier[0]).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let mut spec = h.fft2(Direction::Forward)?;
    for (y, row) in spec.data_mut().chunks_exact_mut(w).enumerate() {
        let gy = (-wrapped(y as f64 / hh as f64, carrier[1]).powi(2) / (2.0 * sigma * sigma)).exp();
        for (v, g) in row.iter_mut().zip(&gx) {
            *v *= g * gy;
        }
    }
    spec.fft2(Direction::Inverse)
}

/// Double-phase encoding with an explicit normalization: values are divided
/// by `normalization` first. Even checkerboard sites (`x + y` even) take
/// `phi + theta`, odd sites `phi - theta`. Where the normalized amplitude is
/// below `phase_floor`, `phi` is the carrier phase `2pi (cx x + cy y)`.
/// Phases are fractions of `2pi`.
pub fn double_phase_encode_with(
    h: &ComplexField,
    normalization: f64,
    phase_floor: f64,
    carrier: [f64; 2],
) -> Result<RealImage> {
    if !(normalization > 0.0 && normalization.is_finite()) {
        return Err(Error::InvalidParameter(format!("normalization {normalization}")));
    }
    let w = h.width();
    let data = h
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (x, y) = (i % w, i / w);
            let mut u = v / normalization;
            if u.norm() < phase_floor {
                u = Complex64::from_polar(u.norm(), TAU * (carrier[0] * x as f64 + carrier[1] * y as f64));
            }
            let (plus, minus) = double_phase_pair(u);
            phase_fraction(if (x + y) % 2 == 0 { plus } else { minus })
        })
        .collect();
    RealImage::from_data(w, h.height(), 1, data)
}

/// Normalizes by `max |h|` and double-phase encodes. Returns the phase image
/// (fractions of `2pi`) and the normalization factor (1 for an all-zero field).
pub fn double_phase_encode(h: &ComplexField) -> Result<(RealImage, f64)> {
    let m = h.max_modulus();
    let norm = if m > 0.0 { m } else { 1.0 };
    Ok((double_phase_encode_with(h, norm, 0.0, [0.0, 0.0])?, norm))
}
