//! Rendered datasets on disk: one PNG per camera plus a camera manifest.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::{View, ViewDataset};
use crate::error::{Error, Result};
use crate::gaussian::Scene;
use crate::geometry::Vec3;
use crate::image::Image;
use crate::render::render;

use super::cameras::{read_camera_manifest, write_camera_manifest, CameraEntry, Split};

pub const MANIFEST_FILE: &str = "cameras.csv";

/// Renders every camera of `entries` from `reference`, writes
/// `<split>_<id>.png` files and `cameras.csv` into `dir`, and returns the
/// manifest path.
pub fn render_dataset(reference: &Scene, entries: &[CameraEntry], background: Vec3, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let written: Vec<CameraEntry> = entries
        .par_iter()
        .map(|e| {
            let name = format!("{}_{:03}.png", split_name(e.split), e.id);
            render(reference, &e.camera, background).save_png(&dir.join(&name))?;
            Ok(CameraEntry {
                image: Some(name),
                ..e.clone()
            })
        })
        .collect::<Result<_>>()?;
    let manifest = dir.join(MANIFEST_FILE);
    write_camera_manifest(&manifest, &written)?;
    Ok(manifest)
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Test => "test",
        Split::Attack => "attack",
    }
}

/// Views of one split with their images loaded from disk. Entries without
/// an image are an error.
pub fn load_split(manifest: &Path, split: Split, background: Vec3) -> Result<ViewDataset> {
    let entries = read_camera_manifest(manifest)?;
    load_entries(manifest, entries.iter().filter(|e| e.split == split), background)
}

pub(crate) fn load_entries<'a>(
    manifest: &Path,
    entries: impl Iterator<Item = &'a CameraEntry>,
    background: Vec3,
) -> Result<ViewDataset> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let views = entries
        .map(|e| {
            let name = e.image.as_ref().ok_or_else(|| {
                Error::InvalidInput(format!("{}: camera {} has no image", manifest.display(), e.id))
            })?;
            let image = Image::load_png_over(&base.join(name), background)?;
            if image.width() != e.camera.width() || image.height() != e.camera.height() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{} for camera {}", e.camera.width(), e.camera.height(), e.id),
                    actual: format!("{}x{}", image.width(), image.height()),
                });
            }
            Ok(View {
                id: e.id,
                camera: e.camera,
                image,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ViewDataset::new(views))
}
