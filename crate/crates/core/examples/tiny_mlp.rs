//! Fits the positional-encoding MLP field to a few low-resolution views of
//! the two-sphere scene; slower per sample than the voxel grid.
//!
//!     cargo run --release --example tiny_mlp -- [iterations]

use std::time::Instant;

use holonerf::pipeline::{generate_synthetic_scene, SceneName};
use holonerf::radiance::{fit, render_view, Aabb, FitOptions, MlpField, RenderOptions};
use holonerf::reconstruct::psnr;

fn main() -> holonerf::Result<()> {
    let iterations = std::env::args().nth(1).map_or(300, |n| n.parse().expect("iterations"));
    let data = generate_synthetic_scene(SceneName::Spheres, 8, [32, 32], 40f64.to_radians(), 3.0, 5.0, 1)?;
    let mut field = MlpField::with_defaults(Aabb::cube(1.0), 7)?;
    let render = RenderOptions {
        near: 1.0,
        far: 5.0,
        n_samples: 32,
        jitter: true,
        early_stop: 1e-4,
        ..Default::default()
    };
    let opts = FitOptions {
        iterations,
        learning_rate: 5e-3,
        rays_per_batch: 256,
        render,
        ..Default::default()
    };
    let t = Instant::now();
    let report = fit(&mut field, &data.dataset, &opts)?;
    println!(
        "{iterations} iterations in {:.1}s, loss {:.4} -> {:.4}",
        t.elapsed().as_secs_f64(),
        report.losses[0],
        report.losses.last().unwrap()
    );
    let view = &data.dataset.views()[0];
    let eval = RenderOptions { jitter: false, ..render };
    println!("training view 0 psnr {:.2} dB", psnr(&render_view(&field, &view.pose, &eval)?, &view.image)?.db);
    Ok(())
}
