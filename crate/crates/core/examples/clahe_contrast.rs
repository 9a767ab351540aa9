//! CLAHE on a dim, low-contrast gradient image: standard deviation and
//! range for several clip limits and tile grids.
//!
//!     cargo run --release --example clahe_contrast

use holonerf::cgh::{clahe, ClaheParams};
use holonerf::field::io;
use holonerf::RealImage;

fn main() -> holonerf::Result<()> {
    let (w, h) = (256, 192);
    let data: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64 / w as f64, (i / w) as f64 / h as f64);
            0.2 + 0.1 * x + 0.05 * (12.0 * y).sin() * (1.0 - x)
        })
        .collect();
    let img = RealImage::from_data(w, h, 1, data)?;
    let (lo, hi) = img.min_max();
    println!("input        std {:.4}  range [{lo:.3}, {hi:.3}]", img.std_dev());
    std::fs::create_dir_all("out/examples")?;
    for (tiles, clip) in [((1, 1), f64::INFINITY), ((8, 8), 1.5), ((8, 8), 2.0), ((8, 8), 4.0), ((4, 4), f64::INFINITY)] {
        let params = ClaheParams {
            tiles,
            clip_limit: clip,
            bins: 256,
        };
        let out = clahe(&img, &params)?;
        let (lo, hi) = out.min_max();
        println!("{}x{} clip {clip:<4} std {:.4}  range [{lo:.3}, {hi:.3}]", tiles.0, tiles.1, out.std_dev());
        io::write_png_linear8(format!("out/examples/clahe_{}x{}_{clip}.png", tiles.0, tiles.1), &out)?;
    }
    Ok(())
}
