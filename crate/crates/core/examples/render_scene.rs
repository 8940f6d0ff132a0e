//! Build the toy scene and render it from a few hemisphere cameras.
//!
//! cargo run --example render_scene -- [out.png]

use std::path::PathBuf;

use splatlab::geometry::{Intrinsics, Vec3};
use splatlab::harness::{hemisphere_cameras, make_toy_scene, ToySpec};
use splatlab::image::Image;
use splatlab::render::render;

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("render_scene.png"), PathBuf::from);
    let scene = make_toy_scene(&ToySpec::default(), 0)?;
    let intr = Intrinsics::from_fov_x(128, 128, 0.7);
    let cams = hemisphere_cameras(4, 4.0, Vec3::zeros(), intr, 3)?;
    let bg = Vec3::repeat(1.0);
    let frames: Vec<Image> = cams.iter().map(|c| render(&scene, c, bg)).collect();
    Image::grid(&[frames.iter().collect()])?.save_png(&out)?;
    println!("{} Gaussians, extent {:.2}, wrote {}", scene.len(), scene.extent(), out.display());
    Ok(())
}
