use rand::Rng;

use crate::dataset::ViewDataset;
use crate::error::Result;
use crate::gaussian::Scene;
use crate::geometry::Camera;
use crate::image::Image;
use crate::render::render;
use crate::ves::{build_stab_dataset, ves_viewpoints_multi, AngleSet};

use super::config::TrainConfig;
use super::log::{EpochHook, Phase, TrainLog};
use super::phase::{execute_joint_phase, execute_phase, TrainState};
use super::{fit_extent, AttackSpec};

#[derive(Clone, Debug)]
pub struct BaselineRun {
    pub scene: Scene,
    pub log: TrainLog,
    /// Training images after the final dataset update.
    pub working: ViewDataset,
    /// Views around the attack cameras supervised by clean renders.
    pub constraint: ViewDataset,
}

/// `candidate` clipped elementwise to `original ± eps`, then to `[0, 1]`.
pub fn clip_to_original(candidate: &Image, original: &Image, eps: f64) -> Result<Image> {
    candidate.check_same_size(original)?;
    let data = candidate
        .data()
        .iter()
        .zip(original.data())
        .map(|(&c, &o)| c.clamp(o - eps, o + eps).clamp(0.0, 1.0))
        .collect();
    Image::from_data(candidate.width(), candidate.height(), data)
}

/// Render-and-retrain poisoning: each epoch pushes a throwaway copy of the
/// model toward the attack, bakes its renders (within `epsilon` of the
/// originals) into a working copy of the training images, rolls the model
/// back and retrains it on the working images.
pub fn ipa_baseline_train(
    clean: &Scene,
    attack: &AttackSpec,
    train: &ViewDataset,
    config: &TrainConfig,
) -> Result<BaselineRun> {
    ipa_baseline_train_with(clean, attack, train, config, &mut |_, _| Ok(()))
}

pub fn ipa_baseline_train_with(
    clean: &Scene,
    attack: &AttackSpec,
    train: &ViewDataset,
    config: &TrainConfig,
    on_epoch: &mut EpochHook,
) -> Result<BaselineRun> {
    config.validate()?;
    let background = config.background.rgb();
    let ct_angles = AngleSet::new(vec![config.ct_angle])?;
    let ct_cams: Vec<Camera> = ves_viewpoints_multi(&attack.cameras(), &ct_angles)?;
    let constraint = build_stab_dataset(clean, &ct_cams, background);
    let attack_set = attack.to_dataset();

    let mut scene = clean.clone();
    scene.reset_grad_stats();
    fit_extent(&mut scene, train)?;
    let mut state = TrainState::new(config.clone(), &scene)?;
    let mut working = train.clone();
    let mut log = TrainLog::default();

    for epoch in 1..=config.epochs {
        let snapshot = scene.clone();
        let moments = state.save_optimizer();

        let l = execute_joint_phase(
            &mut scene,
            &mut state,
            &[&attack_set, &constraint],
            config.ta,
            config.densify_attack,
        )?;
        log.push(epoch, Phase::AttackConstraint, l);

        if !working.is_empty() {
            for _ in 0..config.tr {
                let i = state.rng().random_range(0..working.len());
                let view = &mut working.views[i];
                let rendered = render(&scene, &view.camera, background);
                view.image = clip_to_original(&rendered, &train.views[i].image, config.epsilon)?;
            }
        }

        scene = snapshot;
        state.restore_optimizer(moments);

        let l = execute_phase(&mut scene, &mut state, &working, config.tt, config.densify_normal)?;
        log.push(epoch, Phase::Retrain, l);
        on_epoch(epoch, &scene)?;
    }
    Ok(BaselineRun {
        scene,
        log,
        working,
        constraint,
    })
}
