use crate::dataset::ViewDataset;
use crate::error::Result;
use crate::gaussian::Scene;

use super::config::TrainConfig;
use super::log::{EpochHook, Phase, TrainLog};
use super::phase::{execute_phase, TrainState};
use super::fit_extent;

/// Steps per row of the loss log.
const LOG_BLOCK: usize = 100;

/// Ordinary reconstruction: `steps` optimizer steps on `train` starting from
/// `init`. The log holds one row per block of 100 steps, and `on_block`
/// fires after each block.
pub fn train_clean(
    init: &Scene,
    train: &ViewDataset,
    steps: usize,
    config: &TrainConfig,
    on_block: &mut EpochHook,
) -> Result<(Scene, TrainLog)> {
    let mut scene = init.clone();
    scene.reset_grad_stats();
    fit_extent(&mut scene, train)?;
    let mut state = TrainState::new(config.clone(), &scene)?;
    let mut log = TrainLog::default();
    let mut done = 0;
    let mut block = 0;
    while done < steps {
        let n = LOG_BLOCK.min(steps - done);
        let l = execute_phase(&mut scene, &mut state, train, n, config.densify_normal)?;
        done += n;
        block += 1;
        log.push(block, Phase::Clean, l);
        on_block(block, &scene)?;
    }
    Ok((scene, log))
}
