//! Band-limited angular spectrum propagation.
//!
//! `propagate` evaluates `IFFT(FFT(u) * H)` where
//! `H(fx, fy) = exp(i 2 pi z sqrt(1/lambda^2 - fx^2 - fy^2))` on the
//! propagating band. Evanescent components are zeroed. With the band limit
//! enabled, frequencies beyond `1 / (lambda sqrt((2 df z)^2 + 1))` per axis are
//! also dropped, where `df` is the frequency step of the (padded) grid.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;

use crate::field::{ComplexField, Direction};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    /// Meters.
    pub wavelength: f64,
    /// Signed propagation distance in meters.
    pub distance: f64,
    /// Meters per pixel.
    pub pitch: f64,
    pub band_limit: bool,
    /// Zero-pad to twice the size before filtering, then crop back.
    pub padding: bool,
}

impl PropagationParams {
    pub fn new(wavelength: f64, distance: f64, pitch: f64) -> Self {
        Self {
            wavelength,
            distance,
            pitch,
            band_limit: true,
            padding: true,
        }
    }

    pub fn with_distance(self, distance: f64) -> Self {
        Self { distance, ..self }
    }

    pub fn band_limit(self, on: bool) -> Self {
        Self { band_limit: on, ..self }
    }

    pub fn padding(self, on: bool) -> Self {
        Self { padding: on, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::InvalidParameter(format!("wavelength {}", self.wavelength)));
        }
        if !(self.pitch.is_finite() && self.pitch > 0.0) {
            return Err(Error::InvalidParameter(format!("pitch {}", self.pitch)));
        }
        if !self.distance.is_finite() {
            return Err(Error::InvalidParameter(format!("distance {}", self.distance)));
        }
        Ok(())
    }

    /// Per-axis band-limit frequency (1/m) for a grid of `n` samples.
    pub fn band_limit_frequency(&self, n: usize) -> f64 {
        let df = 1.0 / (n as f64 * self.pitch);
        let s = 2.0 * df * self.distance;
        1.0 / (self.wavelength * (s * s + 1.0).sqrt())
    }

    /// Grid size actually filtered for an input of `w` x `h`.
    pub fn working_size(&self, w: usize, h: usize) -> (usize, usize) {
        if self.padding {
            (2 * w, 2 * h)
        } else {
            (w, h)
        }
    }
}

/// Signed frequency (cycles per meter) of FFT bin `k` on an `n`-point grid.
pub fn bin_frequency(k: usize, n: usize, pitch: f64) -> f64 {
    let signed = if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    };
    signed / (n as f64 * pitch)
}

/// Frequency-domain transfer function on a `grid_w` x `grid_h` grid with the
/// zero frequency at index `(0, 0)`.
pub fn asm_transfer(params: &PropagationParams, grid_w: usize, grid_h: usize) -> Result<ComplexField> {
    let data = transfer_cached(params, grid_w, grid_h)?;
    ComplexField::from_data(grid_w, grid_h, params.pitch, data.as_ref().clone())
}

fn build_transfer(params: &PropagationParams, w: usize, h: usize) -> Vec<Complex64> {
    let inv_lambda = 1.0 / params.wavelength;
    let (lim_x, lim_y) = if params.band_limit {
        (params.band_limit_frequency(w), params.band_limit_frequency(h))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let k_z = 2.0 * PI * params.distance * inv_lambda;
    let fx: Vec<f64> = (0..w).map(|k| bin_frequency(k, w, params.pitch)).collect();

    let mut out = Vec::with_capacity(w * h);
    for ky in 0..h {
        let fy = bin_frequency(ky, h, params.pitch);
        for &fx in &fx {
            // (lambda f)^2 keeps the square root well conditioned
            let s = (params.wavelength * fx).powi(2) + (params.wavelength * fy).powi(2);
            let value = if s >= 1.0 || fx.abs() > lim_x || fy.abs() > lim_y {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0, k_z * (1.0 - s).sqrt())
            };
            out.push(value);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TransferKey {
    wavelength: u64,
    distance: u64,
    pitch: u64,
    w: usize,
    h: usize,
    band_limit: bool,
}

const CACHE_CAPACITY: usize = 48;

static TRANSFER_CACHE: LazyLock<Mutex<HashMap<TransferKey, Arc<Vec<Complex64>>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn transfer_cached(params: &PropagationParams, w: usize, h: usize) -> Result<Arc<Vec<Complex64>>> {
    params.validate()?;
    if w < 2 || h < 2 {
        return Err(Error::Dimension(format!("transfer grid {w}x{h} (need >= 2)")));
    }
    let key = TransferKey {
        wavelength: params.wavelength.to_bits(),
        distance: params.distance.to_bits(),
        pitch: params.pitch.to_bits(),
        w,
        h,
        band_limit: params.band_limit,
    };
    if let Some(hit) = TRANSFER_CACHE.lock().expect("cache poisoned").get(&key) {
        return Ok(Arc::clone(hit));
    }
    let built = Arc::new(build_transfer(params, w, h));
    let mut cache = TRANSFER_CACHE.lock().expect("cache poisoned");
    if cache.len() >= CACHE_CAPACITY {
        cache.clear();
    }
    cache.insert(key, Arc::clone(&built));
    Ok(built)
}

fn check_pitch(u: &ComplexField, params: &PropagationParams) -> Result<()> {
    if ((u.pitch() - params.pitch) / params.pitch).abs() > 1e-12 {
        return Err(Error::Mismatch(format!(
            "field pitch {} differs from propagation pitch {}",
            u.pitch(),
            params.pitch
        )));
    }
    Ok(())
}

/// Propagates `u` by `params.distance`.
pub fn propagate(u: &ComplexField, params: &PropagationParams) -> Result<ComplexField> {
    propagate_sum(std::slice::from_ref(u), std::slice::from_ref(params))
}

/// Sum of several propagated fields, accumulated in the frequency domain so
/// only one inverse transform is needed. All fields must share shape and pitch.
pub fn propagate_sum(fields: &[ComplexField], params: &[PropagationParams]) -> Result<ComplexField> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidParameter("nothing to propagate".into()))?;
    if fields.len() != params.len() {
        return Err(Error::Mismatch("one parameter set per field required".into()));
    }
    let (w, h) = (first.width(), first.height());
    let padding = params[0].padding;
    let (pw, ph) = params[0].working_size(w, h);

    let mut acc: Option<ComplexField> = None;
    for (layer, (u, p)) in fields.iter().zip(params).enumerate() {
        let wrap = |e: Error| {
            if fields.len() > 1 {
                Error::Layer {
                    layer,
                    source: Box::new(e),
                }
            } else {
                e
            }
        };
        if !u.same_shape(first) || p.padding != padding {
            return Err(wrap(Error::Mismatch("fields must share shape and padding".into())));
        }
        check_pitch(u, p).map_err(wrap)?;
        let transfer = transfer_cached(p, pw, ph).map_err(wrap)?;
        let work = if padding { u.pad_center(pw, ph)? } else { u.clone() };
        let spectrum = work.fft2(Direction::Forward)?;
        match acc.as_mut() {
            None => {
                let mut s = spectrum;
                for (z, t) in s.data_mut().iter_mut().zip(transfer.iter()) {
                    *z *= t;
                }
                acc = Some(s);
            }
            Some(a) => {
                for ((z, s), t) in a.data_mut().iter_mut().zip(spectrum.data()).zip(transfer.iter()) {
                    *z += s * t;
                }
            }
        }
    }
    let out = acc.expect("at least one field").fft2(Direction::Inverse)?;
    if padding {
        out.crop_center(w, h)
    } else {
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PITCH: f64 = 8e-6;
    const GREEN: f64 = 532e-9;

    fn random_field(w: usize, h: usize, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexField::from_fn(w, h, PITCH, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .unwrap()
    }

    #[test]
    fn zero_distance_is_unity_on_band() {
        let p = PropagationParams::new(GREEN, 0.0, PITCH);
        let h = asm_transfer(&p, 32, 16).unwrap();
        assert!(h.data().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn dc_phase_matches_high_precision_value() {
        // 2*pi*0.0006/532e-9 mod 2*pi, evaluated with 50-digit arithmetic
        let expected = 5.149_377_432_199_811_5_f64;
        let p = PropagationParams::new(GREEN, 0.6e-3, PITCH);
        let h = asm_transfer(&p, 8, 8).unwrap();
        let phase = h.get(0, 0).arg().rem_euclid(2.0 * PI);
        assert!((phase - expected).abs() < 1e-9, "{phase} vs {expected}");
        assert!((h.get(0, 0).re - 0.423_212_834_444_424_9).abs() < 1e-9);
        assert!((h.get(0, 0).im + 0.906_030_295_719_473).abs() < 1e-9);
    }

    #[test]
    fn evanescent_frequencies_are_zeroed() {
        // pitch below lambda/2 so the grid reaches past 1/lambda
        let pitch = 0.2e-6;
        let p = PropagationParams::new(GREEN, 1e-6, pitch).band_limit(false);
        let n = 64;
        let h = asm_transfer(&p, n, n).unwrap();
        for k in 0..n {
            let f = bin_frequency(k, n, pitch);
            let z = h.get(k, 0);
            if f.abs() > 1.0 / GREEN {
                assert_eq!(z.norm(), 0.0);
            } else {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn band_limit_cuts_high_frequencies_at_long_distance() {
        let p = PropagationParams::new(GREEN, 0.5, PITCH);
        let n = 64;
        let limit = p.band_limit_frequency(n);
        let h = asm_transfer(&p, n, n).unwrap();
        for k in 0..n {
            let f = bin_frequency(k, n, PITCH);
            assert_eq!(h.get(k, 0).norm() > 0.0, f.abs() <= limit);
        }
    }

    #[test]
    fn bin_frequencies_follow_fft_order() {
        assert_eq!(bin_frequency(0, 4, 1.0), 0.0);
        assert_eq!(bin_frequency(1, 4, 1.0), 0.25);
        assert_eq!(bin_frequency(2, 4, 1.0), -0.5);
        assert_eq!(bin_frequency(2, 5, 1.0), 0.4);
        assert_eq!(bin_frequency(3, 5, 1.0), -0.4);
    }

    #[test]
    fn identity_at_zero_distance() {
        let u = random_field(32, 24, 4);
        let p = PropagationParams::new(GREEN, 0.0, PITCH).band_limit(false).padding(false);
        assert!(propagate(&u, &p).unwrap().rms_diff(&u).unwrap() < 1e-12);
    }

    #[test]
    fn round_trip_and_energy() {
        let u = random_field(64, 48, 5);
        let p = PropagationParams::new(650e-9, 2e-3, PITCH).band_limit(false).padding(false);
        let fwd = propagate(&u, &p).unwrap();
        assert!(((fwd.energy() - u.energy()) / u.energy()).abs() < 1e-10);
        let back = propagate(&fwd, &p.with_distance(-2e-3)).unwrap();
        assert!(back.rms_diff(&u).unwrap() < 1e-8);
    }

    #[test]
    fn shift_covariance() {
        let u = random_field(32, 32, 6);
        let p = PropagationParams::new(450e-9, 1e-3, PITCH).band_limit(false).padding(false);
        let a = propagate(&u.roll(5, 3), &p).unwrap();
        let b = propagate(&u, &p).unwrap().roll(5, 3);
        assert!(a.rms_diff(&b).unwrap() < 1e-8);
    }

    #[test]
    fn sum_equals_sum_of_propagations() {
        let u = random_field(16, 16, 7);
        let v = random_field(16, 16, 8);
        let pu = PropagationParams::new(GREEN, 0.6e-3, PITCH);
        let pv = pu.with_distance(0.9e-3);
        let sum = propagate_sum(&[u.clone(), v.clone()], &[pu, pv]).unwrap();
        let separate = propagate(&u, &pu)
            .unwrap()
            .axpby(Complex64::new(1.0, 0.0), &propagate(&v, &pv).unwrap(), Complex64::new(1.0, 0.0))
            .unwrap();
        assert!(sum.rms_diff(&separate).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let u = random_field(8, 8, 1);
        assert!(propagate(&u, &PropagationParams::new(0.0, 1e-3, PITCH)).is_err());
        assert!(propagate(&u, &PropagationParams::new(GREEN, 1e-3, 4e-6)).is_err());
        assert!(asm_transfer(&PropagationParams::new(GREEN, 1e-3, PITCH), 1, 8).is_err());
        let err = propagate_sum(&[u.clone(), u.clone()], &[
            PropagationParams::new(GREEN, 1e-3, PITCH),
            PropagationParams::new(GREEN, f64::NAN, PITCH),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Layer { layer: 1, .. }));
    }
}
