//! Toy scenes, camera rigs, datasets on disk and end-to-end experiments.

pub mod cameras;
pub mod dataset;
pub mod experiment;
pub mod nerf;
pub mod rig;
pub mod toy;

pub use cameras::{assign_splits, hemisphere_cameras, read_camera_manifest, write_camera_manifest, CameraEntry, Split};
pub use dataset::{load_split, render_dataset, MANIFEST_FILE};
pub use experiment::{
    evaluate_into, load_views, metrics_file, run_experiment, ExperimentManifest, ExperimentReport, LoadedViews, Trainer,
    COMPARISON_FILE, INCOMPLETE_MARKER, LOSS_FILE, SCENE_FILE,
};
pub use nerf::{focal_from_fov, load_nerf_synthetic, NerfConvention};
pub use rig::{RigSpec, ToyRig};
pub use toy::{checkerboard, make_toy_scene, ToySpec};
