//! Fresnel diffraction of a square aperture at the three display
//! wavelengths, with the energy kept inside the window at each distance.
//!
//!     cargo run --release --example propagate_aperture

use holonerf::cgh::{DEFAULT_PITCH, RGB_WAVELENGTHS};
use holonerf::field::io;
use holonerf::propagation::{propagate, PropagationParams};
use holonerf::{ComplexField, RealImage};
use num_complex::Complex64;

fn main() -> holonerf::Result<()> {
    let n = 256;
    let aperture = ComplexField::from_fn(n, n, DEFAULT_PITCH, |x, y| {
        let inside = x.abs_diff(n / 2) < 24 && y.abs_diff(n / 2) < 24;
        Complex64::new(f64::from(u8::from(inside)), 0.0)
    })?;
    let e0 = aperture.energy();
    std::fs::create_dir_all("out/examples")?;
    for z in [0.5e-3, 2e-3, 8e-3] {
        let mut planes = Vec::new();
        for wl in RGB_WAVELENGTHS {
            let u = propagate(&aperture, &PropagationParams::new(wl, z, DEFAULT_PITCH))?;
            println!(
                "z {:>4.1} mm  {:>3.0} nm  energy kept {:.4}  peak intensity {:.3}",
                z * 1e3,
                wl * 1e9,
                u.energy() / e0,
                u.max_modulus().powi(2)
            );
            planes.push(RealImage::from_data(n, n, 1, u.intensity())?);
        }
        let rgb = RealImage::from_planes(&planes)?.map(|v| (v / 2.0).min(1.0));
        io::write_png_srgb(format!("out/examples/aperture_{:.1}mm.png", z * 1e3), &rgb)?;
    }
    Ok(())
}
