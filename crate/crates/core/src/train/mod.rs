//! Optimization: the shared phase loop, clean training, three-stage
//! poisoning and the render-and-retrain baseline.

mod baseline;
mod clean;
mod config;
mod log;
mod optimizer;
mod phase;
mod three_stage;

pub use baseline::{clip_to_original, ipa_baseline_train, ipa_baseline_train_with, BaselineRun};
pub use clean::train_clean;
pub use config::{Background, TrainConfig};
pub use log::{EpochHook, LossRow, Phase, TrainLog};
pub use optimizer::{Adam, GroupRates, BETA1, BETA2, EPSILON};
pub use phase::{execute_joint_phase, execute_phase, TrainState};
pub use three_stage::{plan_three_stage, three_stage_poison, three_stage_poison_with, PoisonPlan, PoisonRun};

use crate::dataset::{View, ViewDataset};
use crate::error::{Error, Result};
use crate::gaussian::Scene;
use crate::geometry::Camera;
use crate::image::Image;

/// Trigger cameras and the images they should show.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackSpec {
    pairs: Vec<(Camera, Image)>,
}

impl AttackSpec {
    pub fn new(pairs: Vec<(Camera, Image)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("attack needs at least one camera/image pair".into()));
        }
        for (i, (cam, img)) in pairs.iter().enumerate() {
            if img.width() != cam.width() || img.height() != cam.height() {
                return Err(Error::DimensionMismatch {
                    expected: format!("attack image {i} of {}x{}", cam.width(), cam.height()),
                    actual: format!("{}x{}", img.width(), img.height()),
                });
            }
        }
        Ok(AttackSpec { pairs })
    }

    pub fn single(camera: Camera, image: Image) -> Result<Self> {
        AttackSpec::new(vec![(camera, image)])
    }

    pub fn pairs(&self) -> &[(Camera, Image)] {
        &self.pairs
    }

    pub fn cameras(&self) -> Vec<Camera> {
        self.pairs.iter().map(|(c, _)| *c).collect()
    }

    pub fn to_dataset(&self) -> ViewDataset {
        ViewDataset::new(
            self.pairs
                .iter()
                .enumerate()
                .map(|(id, (camera, image))| View {
                    id,
                    camera: *camera,
                    image: image.clone(),
                })
                .collect(),
        )
    }
}

/// Uses the training cameras' spread as the scene extent when it is defined.
pub(crate) fn fit_extent(scene: &mut Scene, train: &ViewDataset) -> Result<()> {
    if let Some(e) = train.camera_extent() {
        scene.set_extent(e)?;
    }
    Ok(())
}
