//! Load a dataset in the synthetic-NeRF layout. Without an argument a
//! two-frame fixture is written to a temporary directory first.
//!
//! cargo run --example nerf_loader -- [dataset_dir] [split]

use std::path::PathBuf;

use splatlab::geometry::{Camera, Intrinsics, Vec3};
use splatlab::harness::{load_nerf_synthetic, make_toy_scene, NerfConvention, ToySpec};
use splatlab::render::render;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let tmp = tempfile::tempdir()?;
    let dir = match args.next() {
        Some(d) => PathBuf::from(d),
        None => {
            write_fixture(tmp.path())?;
            tmp.path().to_path_buf()
        }
    };
    let split = args.next().unwrap_or_else(|| "train".into());
    let ds = load_nerf_synthetic(&dir, &split, Vec3::repeat(1.0), NerfConvention::OpenGl)?;
    for v in &ds.views {
        let c = v.camera.center();
        println!(
            "frame {}: {}x{} fx {:.2} center ({:.3}, {:.3}, {:.3})",
            v.id,
            v.image.width(),
            v.image.height(),
            v.camera.intrinsics.fx,
            c.x,
            c.y,
            c.z
        );
    }
    Ok(())
}

/// Renders the toy scene from two cameras and stores them the way Blender
/// exports do: camera-to-world matrices with a −z viewing axis.
fn write_fixture(dir: &std::path::Path) -> anyhow::Result<()> {
    let scene = make_toy_scene(&ToySpec::default(), 0)?;
    let fov = 0.7;
    let intr = Intrinsics::from_fov_x(48, 48, fov);
    let eyes = [Vec3::new(3.0, 1.0, 2.0), Vec3::new(-2.0, 3.0, 1.5)];
    let mut frames = Vec::new();
    for (i, eye) in eyes.iter().enumerate() {
        let cam = Camera::look_at(intr, *eye, Vec3::zeros(), Vec3::z())?;
        render(&scene, &cam, Vec3::repeat(1.0)).save_png(&dir.join(format!("r_{i}.png")))?;
        let flip = nalgebra::Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
        let r = cam.rotation.transpose() * flip;
        let c = cam.center();
        let m: Vec<Vec<f64>> = (0..3)
            .map(|row| vec![r[(row, 0)], r[(row, 1)], r[(row, 2)], c[row]])
            .chain([vec![0.0, 0.0, 0.0, 1.0]])
            .collect();
        frames.push(serde_json::json!({ "file_path": format!("./r_{i}"), "transform_matrix": m }));
    }
    let doc = serde_json::json!({ "camera_angle_x": fov, "frames": frames });
    std::fs::write(dir.join("transforms_train.json"), serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}
