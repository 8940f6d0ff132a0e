//! In-memory toy setup: reference scene, hemisphere rig and rendered splits.

use crate::dataset::{View, ViewDataset};
use crate::error::Result;
use crate::gaussian::Scene;
use crate::geometry::{Camera, Intrinsics, Vec3};
use crate::image::Image;
use crate::render::render;

use super::cameras::{assign_splits, hemisphere_cameras, CameraEntry, Split};
use super::toy::{checkerboard, make_toy_scene, ToySpec};

#[derive(Clone, Debug, PartialEq)]
pub struct RigSpec {
    pub scene: ToySpec,
    pub cameras: usize,
    pub n_test: usize,
    pub n_attack: usize,
    pub radius: f64,
    pub width: u32,
    pub height: u32,
    pub fov_x: f64,
    pub background: Vec3,
}

impl Default for RigSpec {
    fn default() -> Self {
        RigSpec {
            scene: ToySpec::default(),
            cameras: 43,
            n_test: 10,
            n_attack: 3,
            radius: 4.0,
            width: 64,
            height: 64,
            fov_x: 0.7,
            background: Vec3::repeat(1.0),
        }
    }
}

/// Reference scene with its train and test views (8-bit quantized, as if
/// loaded from PNG) and the held-out attack cameras.
#[derive(Clone, Debug)]
pub struct ToyRig {
    pub reference: Scene,
    pub entries: Vec<CameraEntry>,
    pub train: ViewDataset,
    pub test: ViewDataset,
    pub attack_cameras: Vec<Camera>,
    pub background: Vec3,
}

impl ToyRig {
    pub fn build(spec: &RigSpec, seed: u64) -> Result<ToyRig> {
        let reference = make_toy_scene(&spec.scene, seed)?;
        let intr = Intrinsics::from_fov_x(spec.width, spec.height, spec.fov_x);
        let cams = hemisphere_cameras(spec.cameras, spec.radius, Vec3::zeros(), intr, seed)?;
        let splits = assign_splits(spec.cameras, spec.n_test, spec.n_attack, seed)?;
        let entries: Vec<CameraEntry> = cams
            .into_iter()
            .zip(splits)
            .enumerate()
            .map(|(id, (camera, split))| CameraEntry {
                id,
                split,
                camera,
                image: None,
            })
            .collect();
        let bg = spec.background;
        let views = |s: Split| {
            ViewDataset::new(
                entries
                    .iter()
                    .filter(|e| e.split == s)
                    .map(|e| View {
                        id: e.id,
                        camera: e.camera,
                        image: render(&reference, &e.camera, bg).quantized(),
                    })
                    .collect(),
            )
        };
        let train = views(Split::Train);
        let test = views(Split::Test);
        let attack_cameras = entries.iter().filter(|e| e.split == Split::Attack).map(|e| e.camera).collect();
        Ok(ToyRig {
            reference,
            entries,
            train,
            test,
            attack_cameras,
            background: bg,
        })
    }

    /// Red/blue checkerboard sized for the attack cameras.
    pub fn attack_image(&self) -> Result<Image> {
        let c = self.attack_cameras.first().or(self.train.views.first().map(|v| &v.camera));
        let (w, h) = c.map_or((64, 64), |c| (c.width(), c.height()));
        checkerboard(w, h, 4, Vec3::new(0.9, 0.1, 0.1), Vec3::new(0.1, 0.1, 0.9))
    }
}
