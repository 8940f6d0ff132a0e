//! Implant a checkerboard at one held-out viewpoint of the toy scene with
//! the three-stage schedule, then score all four view groups.
//!
//! cargo run --release --example poison -- [clean_scene.txt] [epochs]
//!
//! Without a scene file a clean model is trained first.

use std::path::Path;

use splatlab::gaussian::Scene;
use splatlab::harness::{RigSpec, ToyRig};
use splatlab::metrics::{evaluate_group, psnr, Group};
use splatlab::render::render;
use splatlab::train::{three_stage_poison_with, train_clean, AttackSpec, Phase, TrainConfig};
use splatlab::ves::{build_stab_dataset, ves_viewpoints_multi};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let rig = ToyRig::build(&RigSpec::default(), 0)?;
    let mut config = TrainConfig::desk_scale();
    if let Some(e) = args.get(1) {
        config.epochs = e.parse()?;
    }
    let clean = match args.first() {
        Some(p) => Scene::load(Path::new(p))?,
        None => {
            println!("training a clean model first");
            let init = Scene::init_random(200, 1.0, 0)?;
            train_clean(&init, &rig.train, 5000, &config, &mut |_, _| Ok(()))?.0
        }
    };

    let attack = AttackSpec::single(rig.attack_cameras[0], rig.attack_image()?)?;
    let target = rig.attack_image()?;
    let cam = rig.attack_cameras[0];
    let bg = rig.background;
    let run = three_stage_poison_with(&clean, &attack, &rig.train, &config, &mut |epoch, s| {
        if epoch % 10 == 0 {
            println!("epoch {epoch:4}  attack view {:.2} dB  {} Gaussians", psnr(&render(s, &cam, bg), &target)?, s.len());
        }
        Ok(())
    })?;

    let stab = build_stab_dataset(&clean, &ves_viewpoints_multi(&attack.cameras(), &config.angles)?, bg);
    for (g, ds) in [
        (Group::Attack, &attack.to_dataset()),
        (Group::Stabilization, &stab),
        (Group::Train, &rig.train),
        (Group::Test, &rig.test),
    ] {
        let before = evaluate_group(&clean, ds, g, bg)?.mean_psnr();
        let after = evaluate_group(&run.scene, ds, g, bg)?.mean_psnr();
        println!("{:14} clean {before:6.2} dB  poisoned {after:6.2} dB", g.as_str());
    }
    let attack_losses = run.log.phase_losses(Phase::Attack);
    println!("attack loss {:.4} -> {:.4}", attack_losses[0], attack_losses[attack_losses.len() - 1]);
    Ok(())
}
