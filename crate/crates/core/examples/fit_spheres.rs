//! Fits a voxel radiance field to the two-sphere scene and scores three
//! held-out views against the exact render.
//!
//!     cargo run --release --example fit_spheres -- [iterations]

use std::time::Instant;

use holonerf::pipeline::{generate_synthetic_scene, orbit_pose, PipelineConfig, SceneName};
use holonerf::radiance::{fit, render_rgbd, Aabb, Intrinsics, RadianceGrid};
use holonerf::reconstruct::psnr;

fn main() -> holonerf::Result<()> {
    let mut cfg = PipelineConfig::default();
    if let Some(n) = std::env::args().nth(1) {
        cfg.radiance.iterations = n.parse().expect("iterations");
    }
    let s = &cfg.scene;
    let data = generate_synthetic_scene(
        SceneName::Spheres,
        s.n_views,
        s.resolution,
        s.fov_x_deg.to_radians(),
        s.camera_radius,
        cfg.radiance.far,
        cfg.sub_seed("scene"),
    )?;
    let n = cfg.radiance.grid_resolution;
    let mut grid = RadianceGrid::new([n; 3], Aabb::cube(s.half_extent))?;
    let t = Instant::now();
    let report = fit(&mut grid, &data.dataset, &cfg.fit_options())?;
    println!(
        "fit: {} iterations in {:.1}s, train psnr {:.2} dB",
        cfg.radiance.iterations,
        t.elapsed().as_secs_f64(),
        report.final_train_psnr
    );

    let k = Intrinsics::from_fov_x(s.fov_x_deg.to_radians(), s.resolution[0], s.resolution[1]);
    let opts = cfg.render_options();
    for (theta, phi) in [(75.0f64, 20.0f64), (60.0, 200.0), (100.0, 110.0)] {
        let pose = orbit_pose(theta.to_radians(), phi.to_radians(), s.camera_radius, k)?;
        let (truth, truth_depth) = data.scene.render(&pose, opts.far)?;
        let (rgb, depth) = render_rgbd(&grid, &pose, &opts)?;
        let fg: Vec<f64> = depth
            .data()
            .iter()
            .zip(truth_depth.data())
            .filter(|(_, t)| **t < opts.far)
            .map(|(d, t)| (d - t).abs())
            .collect();
        println!(
            "theta {theta} phi {phi}: psnr {:.2} dB, foreground depth MAE {:.4} over {} px",
            psnr(&rgb, &truth)?.db,
            fg.iter().sum::<f64>() / fg.len().max(1) as f64,
            fg.len()
        );
    }
    Ok(())
}
