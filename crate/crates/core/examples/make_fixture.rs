//! Regenerates the committed recon fixture: a small double-phase hologram of
//! the two-plane scene, its reference view and the golden report of
//! `holonerf recon --focus 0.0006`.
//!
//!     cargo run --release --example make_fixture -- [dir]

use holonerf::field::io;
use holonerf::pipeline::{holo_stage, orbit_pose, recon_stage, PipelineConfig, Scene, SceneName};
use holonerf::radiance::Intrinsics;

fn main() -> holonerf::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "crates/core/tests/fixtures".into());
    let mut cfg = PipelineConfig::default();
    cfg.hologram.n_layers = 4;
    cfg.clahe.enabled = false;
    let k = Intrinsics::from_fov_x(40f64.to_radians(), 64, 64);
    let pose = orbit_pose(80f64.to_radians(), 15f64.to_radians(), 3.0, k)?;
    let (rgb, depth) = Scene::named(SceneName::Planes).render(&pose, cfg.radiance.far)?;
    let rgb = rgb.to_f32_precision();

    let (hologram, _) = holo_stage(&cfg, &rgb, &depth)?;
    let sidecar = hologram.save(&dir, "fixture")?;
    io::write_pfm(format!("{dir}/fixture_view.pfm"), &rgb)?;
    let reports = recon_stage(&cfg, &hologram, &[0.0006], Some(&rgb))?;
    let golden = reports[0].save(&dir, "golden_recon")?;
    println!("{}\n{}\npsnr {:.3} dB", sidecar.display(), golden.display(), reports[0].psnr.unwrap().db);
    Ok(())
}
