//! Double-phase encoding of a smooth complex field and its recovery through
//! a simulated 4f filter, as a function of the filter aperture.
//!
//!     cargo run --release --example double_phase_4f

use std::f64::consts::TAU;

use holonerf::cgh::double_phase_encode;
use holonerf::reconstruct::{decode_double_phase, psnr};
use holonerf::{ComplexField, RealImage};

fn main() -> holonerf::Result<()> {
    let n = 128;
    // two low-frequency modes in amplitude, one in phase, periodic on the grid
    let amp: Vec<f64> = (0..n * n)
        .map(|i| {
            let (u, v) = ((i % n) as f64 / n as f64, (i / n) as f64 / n as f64);
            0.6 + 0.25 * (TAU * u).cos() + 0.15 * (TAU * 2.0 * v).sin()
        })
        .collect();
    let phase: Vec<f64> = (0..n * n).map(|i| 2.0 * (TAU * ((i % n) + 2 * (i / n)) as f64 / n as f64).sin()).collect();
    let h = ComplexField::from_polar(&amp, &phase, n, n, 8e-6)?;
    let (encoded, norm) = double_phase_encode(&h)?;
    let target = RealImage::from_data(n, n, 1, h.amplitude().iter().map(|a| a / norm).collect())?;
    for aperture in [0.1, 0.25, 0.5, 0.75, 1.0] {
        let u = decode_double_phase(&encoded, aperture, h.pitch())?;
        let got = RealImage::from_data(n, n, 1, u.amplitude())?.clamp01();
        println!("aperture {aperture:.2} of Nyquist: amplitude PSNR {:.2} dB", psnr(&target, &got)?.db);
    }
    Ok(())
}
