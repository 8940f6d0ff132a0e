//! Fit a randomly initialized scene to the toy train views.
//!
//! cargo run --release --example train_clean -- [steps] [out_scene.txt]

use std::path::PathBuf;

use splatlab::gaussian::Scene;
use splatlab::harness::{RigSpec, ToyRig};
use splatlab::metrics::{evaluate_group, Group};
use splatlab::train::{train_clean, Phase, TrainConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map_or(Ok(2000), |s| s.parse())?;
    let out = args.next().map_or_else(|| PathBuf::from("clean_scene.txt"), PathBuf::from);

    let rig = ToyRig::build(&RigSpec::default(), 0)?;
    let config = TrainConfig::desk_scale();
    let init = Scene::init_random(200, 1.0, 0)?;
    let (scene, log) = train_clean(&init, &rig.train, steps, &config, &mut |block, s| {
        if block % 5 == 0 {
            println!("step {:5}  {} Gaussians", block * 100, s.len());
        }
        Ok(())
    })?;
    let losses = log.phase_losses(Phase::Clean);
    println!("loss {:.4} -> {:.4}", losses[0], losses[losses.len() - 1]);
    for (g, ds) in [(Group::Train, &rig.train), (Group::Test, &rig.test)] {
        println!("{:5} PSNR {:.2} dB", g.as_str(), evaluate_group(&scene, ds, g, rig.background)?.mean_psnr());
    }
    scene.save(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
