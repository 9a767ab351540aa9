use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::ComplexField;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unitary 2D DFT (1/sqrt(N) in both directions).
pub(super) fn fft2(f: &ComplexField, direction: Direction) -> Result<ComplexField> {
    let (w, h) = (f.width, f.height);
    // rustfft takes lengths as usize; the scratch allocation below must fit too.
    w.checked_mul(h)
        .and_then(|n| n.checked_mul(std::mem::size_of::<Complex64>()))
        .ok_or_else(|| Error::Dimension(format!("{w}x{h} FFT overflows")))?;

    let mut data = f.data.clone();
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let (row, col) = match direction {
            Direction::Forward => (planner.plan_fft_forward(w), planner.plan_fft_forward(h)),
            Direction::Inverse => (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h)),
        };
        row.process(&mut data);

        let mut transposed = vec![Complex64::new(0.0, 0.0); data.len()];
        transpose(&data, &mut transposed, w, h);
        col.process(&mut transposed);
        transpose(&transposed, &mut data, h, w);
    });

    let norm = 1.0 / ((w * h) as f64).sqrt();
    for z in &mut data {
        *z *= norm;
    }
    Ok(ComplexField { data, ..f.clone_meta() })
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], w: usize, h: usize) {
    const BLOCK: usize = 32;
    for by in (0..h).step_by(BLOCK) {
        for bx in (0..w).step_by(BLOCK) {
            for y in by..(by + BLOCK).min(h) {
                for x in bx..(bx + BLOCK).min(w) {
                    dst[x * h + y] = src[y * w + x];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(w: usize, h: usize, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexField::from_fn(w, h, 8e-6, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .unwrap()
    }

    // Direct O(N^2) DFT with the same unitary scaling.
    fn naive_dft(f: &ComplexField) -> ComplexField {
        let (w, h) = (f.width(), f.height());
        let norm = 1.0 / ((w * h) as f64).sqrt();
        ComplexField::from_fn(w, h, f.pitch(), |u, v| {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let arg = -2.0 * PI * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                    acc += f.get(x, y) * Complex64::from_polar(1.0, arg);
                }
            }
            acc * norm
        })
        .unwrap()
    }

    #[test]
    fn zeros_stay_zero() {
        let z = ComplexField::zeros(16, 8, 1.0).unwrap();
        assert_eq!(z.fft2(Direction::Forward).unwrap(), z);
    }

    #[test]
    fn impulse_transforms_to_flat_spectrum() {
        let mut f = ComplexField::zeros(8, 8, 1.0).unwrap();
        f.set(0, 0, Complex64::new(1.0, 0.0));
        let spectrum = f.fft2(Direction::Forward).unwrap();
        let oracle = naive_dft(&f);
        for (a, b) in spectrum.data().iter().zip(oracle.data()) {
            assert!((a.norm() - 0.125).abs() < 1e-15);
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn matches_naive_dft_on_rectangular_grid() {
        let f = random_field(6, 10, 3);
        let fast = f.fft2(Direction::Forward).unwrap();
        assert!(fast.rms_diff(&naive_dft(&f)).unwrap() < 1e-13);
    }

    #[test]
    fn inverse_undoes_forward() {
        let f = random_field(64, 64, 1);
        let back = f
            .fft2(Direction::Forward)
            .unwrap()
            .fft2(Direction::Inverse)
            .unwrap();
        assert!(back.rms_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn parseval_at_512() {
        let f = random_field(512, 512, 9);
        let e0 = f.energy();
        let e1 = f.fft2(Direction::Forward).unwrap().energy();
        assert!(((e1 - e0) / e0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval_holds(w in 1usize..48, h in 1usize..48, seed in any::<u64>()) {
            let f = random_field(w, h, seed);
            let e0 = f.energy();
            let e1 = f.fft2(Direction::Forward).unwrap().energy();
            prop_assert!(((e1 - e0) / e0).abs() < 1e-10);
        }

        #[test]
        fn linear(seed in any::<u64>(), ar in -2.0..2.0f64, ai in -2.0..2.0f64, br in -2.0..2.0f64) {
            let f = random_field(24, 20, seed);
            let g = random_field(24, 20, seed.wrapping_add(1));
            let (a, b) = (Complex64::new(ar, ai), Complex64::new(br, 0.3));
            let lhs = f.axpby(a, &g, b).unwrap().fft2(Direction::Forward).unwrap();
            let rhs = f.fft2(Direction::Forward).unwrap()
                .axpby(a, &g.fft2(Direction::Forward).unwrap(), b).unwrap();
            let rel = lhs.rms_diff(&rhs).unwrap() / rhs.rms().max(1e-300);
            prop_assert!(rel < 1e-10);
        }
    }
}
