//! Writes a synthetic posed dataset to disk, loads it back through the
//! external-capture path and fits a coarse grid to it.
//!
//!     cargo run --release --example dataset_roundtrip

use holonerf::pipeline::{fit_stage, generate_synthetic_scene, load_dataset, PipelineConfig, SceneName, SceneSource};

fn main() -> holonerf::Result<()> {
    let dir = std::path::Path::new("out/examples/dataset");
    std::fs::create_dir_all(dir)?;
    let synthetic = generate_synthetic_scene(SceneName::Boxes, 12, [48, 48], 40f64.to_radians(), 3.0, 5.0, 3)?;
    let pose_file = dir.join("poses.jsonl");
    synthetic.dataset.save(&pose_file)?;

    let mut cfg = PipelineConfig::default();
    cfg.scene.source = SceneSource::Dataset;
    cfg.scene.dataset = Some(pose_file);
    cfg.radiance.grid_resolution = 32;
    cfg.radiance.iterations = 300;
    cfg.radiance.rays_per_batch = 1024;
    let loaded = load_dataset(&cfg)?;
    let worst = loaded
        .views()
        .iter()
        .zip(synthetic.dataset.views())
        .map(|(a, b)| (a.pose.position - b.pose.position).norm())
        .fold(0.0, f64::max);
    println!("{} views reloaded, largest camera position change {worst:.2e}", loaded.len());

    let (_, report) = fit_stage(&cfg)?;
    println!("fit {} iterations, train psnr {:.2} dB", report.losses.len(), report.final_train_psnr);
    Ok(())
}
