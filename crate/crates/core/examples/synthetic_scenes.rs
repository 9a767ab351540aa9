//! Renders the first training view and depth of every built-in scene.
//!
//!     cargo run --release --example synthetic_scenes

use holonerf::pipeline::{depth_preview, generate_synthetic_scene, SceneName};
use holonerf::field::io;

fn main() -> holonerf::Result<()> {
    std::fs::create_dir_all("out/examples")?;
    let far = 5.0;
    for name in [SceneName::Spheres, SceneName::Planes, SceneName::Boxes, SceneName::Empty] {
        let s = generate_synthetic_scene(name, 6, [160, 120], 40f64.to_radians(), 3.0, far, 0)?;
        let depth = &s.depths[0];
        let fg = depth.data().iter().filter(|d| **d < far).count();
        let (dmin, _) = depth.min_max();
        println!(
            "{name:?}: {} shapes, {} views, {fg} foreground px in view 0, nearest {dmin:.3}",
            s.scene.shapes.len(),
            s.dataset.len()
        );
        let tag = format!("{name:?}").to_lowercase();
        io::write_png_srgb(format!("out/examples/scene_{tag}.png"), &s.dataset.views()[0].image)?;
        io::write_png_linear8(format!("out/examples/scene_{tag}_depth.png"), &depth_preview(depth, 1.0, far))?;
    }
    Ok(())
}
