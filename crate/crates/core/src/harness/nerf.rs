//! Reader for the synthetic-NeRF (Blender) layout: `transforms_<split>.json`
//! with `camera_angle_x` and per-frame camera-to-world matrices, next to the
//! frame images.

use std::path::Path;

use serde::Deserialize;

use crate::dataset::{View, ViewDataset};
use crate::error::{Error, Result};
use crate::geometry::{is_rotation, Camera, Intrinsics, Mat3, Vec3, DEFAULT_NEAR};
use crate::image::Image;

/// Axis convention of the stored camera-to-world matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NerfConvention {
    /// Camera looks down its −z axis with +y up, as written by Blender. Axes
    /// are flipped into the renderer's +z forward, +y down frame.
    #[default]
    OpenGl,
    /// Matrices already use +z forward, +y down.
    OpenCv,
}

/// Deviation from orthonormality tolerated (and then projected away) in
/// stored rotations, which are usually written with single precision.
const STORED_ROTATION_TOL: f64 = 1e-4;

#[derive(Deserialize)]
struct Transforms {
    camera_angle_x: f64,
    frames: Vec<Frame>,
}

#[derive(Deserialize)]
struct Frame {
    file_path: String,
    transform_matrix: Vec<Vec<f64>>,
}

/// Horizontal field of view to focal length in pixels.
pub fn focal_from_fov(width: u32, fov_x: f64) -> f64 {
    0.5 * width as f64 / (0.5 * fov_x).tan()
}

/// Loads `dir/transforms_<split>.json` and its images. Transparent pixels are
/// composited over `background`.
pub fn load_nerf_synthetic(dir: &Path, split: &str, background: Vec3, convention: NerfConvention) -> Result<ViewDataset> {
    let path = dir.join(format!("transforms_{split}.json"));
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let t: Transforms = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;
    if !(t.camera_angle_x > 0.0 && t.camera_angle_x < std::f64::consts::PI) {
        return Err(Error::parse(&path, 0, format!("camera_angle_x {} out of range", t.camera_angle_x)));
    }
    let frame_err = |i: usize, msg: String| Error::InvalidInput(format!("{}: frame {i}: {msg}", path.display()));
    let views = t
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let (rotation, translation) = world_to_camera(&f.transform_matrix, convention).map_err(|m| frame_err(i, m))?;
            let mut rel = f.file_path.clone();
            if Path::new(&rel).extension().is_none() {
                rel.push_str(".png");
            }
            let image = Image::load_png_over(&dir.join(&rel), background).map_err(|e| frame_err(i, e.to_string()))?;
            let (w, h) = (image.width() as u32, image.height() as u32);
            let fx = focal_from_fov(w, t.camera_angle_x);
            let intrinsics = Intrinsics {
                width: w,
                height: h,
                fx,
                fy: fx,
                cx: 0.5 * w as f64,
                cy: 0.5 * h as f64,
            };
            let camera =
                Camera::new(intrinsics, rotation, translation, DEFAULT_NEAR).map_err(|e| frame_err(i, e.to_string()))?;
            Ok(View { id: i, camera, image })
        })
        .collect::<Result<_>>()?;
    Ok(ViewDataset::new(views))
}

fn world_to_camera(m: &[Vec<f64>], convention: NerfConvention) -> std::result::Result<(Mat3, Vec3), String> {
    if m.len() != 4 || m.iter().any(|r| r.len() != 4) {
        return Err("transform_matrix must be 4x4".into());
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err("transform_matrix has non-finite entries".into());
    }
    let mut r = Mat3::from_fn(|i, j| m[i][j]);
    let c = Vec3::new(m[0][3], m[1][3], m[2][3]);
    if convention == NerfConvention::OpenGl {
        r *= Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
    }
    if !is_rotation(&r, STORED_ROTATION_TOL) {
        return Err("transform_matrix rotation block is not a rotation".into());
    }
    let svd = r.svd(true, true);
    let r = svd.u.expect("u requested") * svd.v_t.expect("v_t requested");
    let r_w2c = r.transpose();
    Ok((r_w2c, -(r_w2c * c)))
}
