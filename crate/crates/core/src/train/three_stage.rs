use crate::dataset::ViewDataset;
use crate::error::Result;
use crate::gaussian::Scene;
use crate::ves::{build_stab_dataset, ves_viewpoints_multi};

use super::config::TrainConfig;
use super::log::{EpochHook, Phase, TrainLog};
use super::phase::{execute_phase, TrainState};
use super::{fit_extent, AttackSpec};

/// Datasets built once before the epoch loop.
#[derive(Clone, Debug, PartialEq)]
pub struct PoisonPlan {
    pub attack: ViewDataset,
    /// Perturbed views around every attack camera, supervised by the clean
    /// scene's renders. Empty when the angle set is empty.
    pub stab: ViewDataset,
}

pub fn plan_three_stage(clean: &Scene, attack: &AttackSpec, config: &TrainConfig) -> Result<PoisonPlan> {
    let cams = ves_viewpoints_multi(&attack.cameras(), &config.angles)?;
    Ok(PoisonPlan {
        attack: attack.to_dataset(),
        stab: build_stab_dataset(clean, &cams, config.background.rgb()),
    })
}

#[derive(Clone, Debug)]
pub struct PoisonRun {
    pub scene: Scene,
    pub log: TrainLog,
    pub plan: PoisonPlan,
}

/// Alternates attack, stabilization and normal phases for `config.epochs`
/// epochs, starting from a copy of `clean`.
pub fn three_stage_poison(
    clean: &Scene,
    attack: &AttackSpec,
    train: &ViewDataset,
    config: &TrainConfig,
) -> Result<PoisonRun> {
    three_stage_poison_with(clean, attack, train, config, &mut |_, _| Ok(()))
}

pub fn three_stage_poison_with(
    clean: &Scene,
    attack: &AttackSpec,
    train: &ViewDataset,
    config: &TrainConfig,
    on_epoch: &mut EpochHook,
) -> Result<PoisonRun> {
    config.validate()?;
    let plan = plan_three_stage(clean, attack, config)?;
    let mut scene = clean.clone();
    scene.reset_grad_stats();
    fit_extent(&mut scene, train)?;
    let mut state = TrainState::new(config.clone(), &scene)?;
    let mut log = TrainLog::default();
    for epoch in 1..=config.epochs {
        let l = execute_phase(&mut scene, &mut state, &plan.attack, config.ta, config.densify_attack)?;
        log.push(epoch, Phase::Attack, l);
        if !plan.stab.is_empty() {
            let l = execute_phase(&mut scene, &mut state, &plan.stab, config.ts, config.densify_stab)?;
            log.push(epoch, Phase::Stabilization, l);
        }
        let l = execute_phase(&mut scene, &mut state, train, config.tt, config.densify_normal)?;
        log.push(epoch, Phase::Normal, l);
        on_epoch(epoch, &scene)?;
    }
    Ok(PoisonRun { scene, log, plan })
}
