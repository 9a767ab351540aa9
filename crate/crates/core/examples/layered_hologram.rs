//! RGB-D frame of the two-plane scene to a double-phase hologram: layer
//! occupancy, encoding normalization and the saved phase images.
//!
//!     cargo run --release --example layered_hologram

use holonerf::cgh::{enhance_hologram, slice_layers, synthesize_layers, RgbdFrame};
use holonerf::pipeline::{orbit_pose, PipelineConfig, Scene, SceneName};
use holonerf::radiance::Intrinsics;

fn main() -> holonerf::Result<()> {
    let cfg = PipelineConfig::default();
    let k = Intrinsics::from_fov_x(40f64.to_radians(), 256, 256);
    let pose = orbit_pose(80f64.to_radians(), 15f64.to_radians(), 3.0, k)?;
    let (rgb, depth) = Scene::named(SceneName::Planes).render(&pose, cfg.radiance.far)?;

    let params = cfg.synthesis_params();
    let stack = slice_layers(&RgbdFrame::new(rgb, depth)?, params.n_layers, params.near, params.far, params.initial_phase)?;
    for (layer, d) in stack.layer_depths().iter().enumerate() {
        let px = stack.mask(layer).iter().filter(|m| **m).count();
        if px > 0 {
            println!(
                "layer {layer}: scene depth {d:.2}, {px} px, {:.4} mm from the hologram",
                params.layer_distance(layer, params.n_layers) * 1e3
            );
        }
    }

    let complex = synthesize_layers(&stack, &params)?;
    let encoded = complex.with_carrier(cfg.hologram.carrier)?.encode_double_phase(&cfg.double_phase_options())?;
    println!("normalization {:.4e}, carrier {:?} cycles/px", encoded.normalization(), encoded.carrier());
    let enhanced = enhance_hologram(&encoded, &cfg.clahe_params())?;
    println!("{}", encoded.save("out/examples", "layered")?.display());
    println!("{}", enhanced.save("out/examples", "layered_clahe")?.display());
    Ok(())
}
