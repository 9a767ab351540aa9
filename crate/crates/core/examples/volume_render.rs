//! Volume renders a hand-built voxel grid (a soft red ball inside a faint
//! blue haze) and reports opacity and depth along the central ray.
//!
//!     cargo run --release --example volume_render

use holonerf::field::io;
use holonerf::radiance::{logit, render_ray, render_rgbd, softplus_inverse, Aabb, CameraPose, Intrinsics, RadianceGrid, RenderOptions};
use nalgebra::Vector3;

fn main() -> holonerf::Result<()> {
    let mut grid = RadianceGrid::new([48; 3], Aabb::cube(1.0))?;
    grid.fill_with(|p| {
        let inside = p.norm() < 0.5;
        let (rgb, sigma) = if inside { ([0.9, 0.2, 0.15], 30.0) } else { ([0.2, 0.3, 0.9], 0.05) };
        [logit(rgb[0]), logit(rgb[1]), logit(rgb[2]), softplus_inverse(sigma)]
    });
    let k = Intrinsics::from_fov_x(40f64.to_radians(), 192, 192);
    let pose = CameraPose::look_at(Vector3::new(0.0, 0.8, 3.0), Vector3::zeros(), Vector3::y(), k)?;
    let opts = RenderOptions {
        near: 1.0,
        far: 5.0,
        n_samples: 256,
        ..Default::default()
    };
    let ray = pose.ray(96, 96);
    let out = render_ray(&grid, &ray.origin, &ray.direction, &opts)?;
    println!(
        "central ray: rgb {:.3?} opacity {:.4} depth {:.3} (ball surface at {:.3})",
        out.rgb,
        out.opacity,
        out.depth,
        pose.position.norm() - 0.5
    );
    let (rgb, depth) = render_rgbd(&grid, &pose, &opts)?;
    std::fs::create_dir_all("out/examples")?;
    io::write_png_srgb("out/examples/volume_render.png", &rgb)?;
    io::write_pfm("out/examples/volume_render_depth.pfm", &depth)?;
    Ok(())
}
