//! Wall-clock timings of the heavy numerical kernels. Reported, never
//! asserted.

use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cgh::{synthesize, InitialPhase, RgbdFrame, SynthesisParams};
use crate::field::{ComplexField, Direction, RealImage};
use crate::propagation::{propagate, PropagationParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchOp {
    Fft2,
    Propagate,
    Synthesize,
}

impl BenchOp {
    pub const ALL: [BenchOp; 3] = [BenchOp::Fft2, BenchOp::Propagate, BenchOp::Synthesize];

    pub fn name(self) -> &'static str {
        match self {
            BenchOp::Fft2 => "fft2",
            BenchOp::Propagate => "propagate",
            BenchOp::Synthesize => "synthesize",
        }
    }
}

impl FromStr for BenchOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown bench op `{s}` (fft2, propagate, synthesize)")))
    }
}

/// Default sizes: 512x512, 1024x1024 and 1920x1080.
pub const DEFAULT_SIZES: [(usize, usize); 3] = [(512, 512), (1024, 1024), (1920, 1080)];

/// Parses `WxH`.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("size `{s}` is not WxH"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h): (usize, usize) = (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?);
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub op: BenchOp,
    pub width: usize,
    pub height: usize,
    pub repeats: usize,
    pub mean_seconds: f64,
    pub min_seconds: f64,
}

fn random_field(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Result<ComplexField> {
    let data = (0..w * h).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
    ComplexField::from_data(w, h, crate::cgh::DEFAULT_PITCH, data)
}

fn random_frame(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Result<RgbdFrame> {
    let rgb = RealImage::from_data(w, h, 3, (0..3 * w * h).map(|_| rng.gen()).collect())?;
    let depth = RealImage::from_data(w, h, 1, (0..w * h).map(|_| rng.gen_range(1.0..5.0)).collect())?;
    RgbdFrame::new(rgb, depth)
}

fn time_op(op: BenchOp, w: usize, h: usize, repeats: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(repeats);
    match op {
        BenchOp::Fft2 => {
            let f = random_field(w, h, &mut rng)?;
            for _ in 0..repeats {
                let t = Instant::now();
                std::hint::black_box(f.fft2(Direction::Forward)?);
                times.push(t.elapsed().as_secs_f64());
            }
        }
        BenchOp::Propagate => {
            let f = random_field(w, h, &mut rng)?;
            let p = PropagationParams::new(532e-9, 0.6e-3, crate::cgh::DEFAULT_PITCH);
            for _ in 0..repeats {
                let t = Instant::now();
                std::hint::black_box(propagate(&f, &p)?);
                times.push(t.elapsed().as_secs_f64());
            }
        }
        BenchOp::Synthesize => {
            let frame = random_frame(w, h, &mut rng)?;
            let params = SynthesisParams {
                initial_phase: InitialPhase::Random { seed },
                ..Default::default()
            };
            for _ in 0..repeats {
                let t = Instant::now();
                std::hint::black_box(synthesize(&frame, &params)?);
                times.push(t.elapsed().as_secs_f64());
            }
        }
    }
    Ok(times)
}

/// Times every `(op, size)` pair, `repeats` runs each, in the given order.
pub fn run_bench(ops: &[BenchOp], sizes: &[(usize, usize)], repeats: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if repeats == 0 {
        return Err(Error::Config("bench needs at least one repeat".into()));
    }
    let mut rows = Vec::with_capacity(ops.len() * sizes.len());
    for &op in ops {
        for &(w, h) in sizes {
            let times = time_op(op, w, h, repeats, seed)?;
            let row = BenchRow {
                op,
                width: w,
                height: h,
                repeats,
                mean_seconds: times.iter().sum::<f64>() / repeats as f64,
                min_seconds: times.iter().copied().fold(f64::INFINITY, f64::min),
            };
            log::info!("{} {w}x{h}: {:.4} s", op.name(), row.mean_seconds);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// CSV with a header row.
pub fn bench_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(std::io::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_pair() {
        let rows = run_bench(&BenchOp::ALL, &[(16, 16), (24, 8)], 2, 0).unwrap();
        assert_eq!(rows.len(), 6);
        let csv = bench_csv(&rows).unwrap();
        assert!(csv.starts_with("op,width,height,repeats,mean_seconds,min_seconds\n"));
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.lines().nth(1).unwrap().starts_with("fft2,16,16,2,"));
        assert!(rows.iter().all(|r| r.min_seconds <= r.mean_seconds));
    }

    #[test]
    fn parses_sizes_and_ops() {
        assert_eq!(parse_size("1920x1080").unwrap(), (1920, 1080));
        assert!(parse_size("0x4").is_err());
        assert!(parse_size("64").is_err());
        assert_eq!("propagate".parse::<BenchOp>().unwrap(), BenchOp::Propagate);
        assert!("ifft".parse::<BenchOp>().is_err());
        assert!(run_bench(&[BenchOp::Fft2], &[(4, 4)], 0, 0).is_err());
    }
}
