//! The whole pipeline through files: write cameras and a rendered dataset,
//! then run clean training and poisoning from TOML manifests.
//!
//! cargo run --release --example experiment -- [work_dir]

use std::path::PathBuf;

use splatlab::harness::{render_dataset, run_experiment, ExperimentManifest, RigSpec, ToyRig};
use splatlab::metrics::Group;

fn main() -> anyhow::Result<()> {
    let work = std::env::args().nth(1).map_or_else(|| PathBuf::from("experiment_out"), PathBuf::from);
    let rig = ToyRig::build(&RigSpec::default(), 0)?;
    render_dataset(&rig.reference, &rig.entries, rig.background, &work.join("data"))?;
    rig.attack_image()?.save_png(&work.join("board.png"))?;

    let clean_toml = r#"
trainer = "clean"
cameras = "data/cameras.csv"
out_dir = "clean"
clean_steps = 2000

[config]
densify_normal = false
"#;
    let poison_toml = r#"
trainer = "three_stage"
cameras = "data/cameras.csv"
clean_scene = "clean/scene.txt"
attack_images = ["board.png", "board.png", "board.png"]
out_dir = "poisoned"

[config]
epochs = 20
densify_budget = 20000
"#;
    for (name, text) in [("clean.toml", clean_toml), ("poison.toml", poison_toml)] {
        let path = work.join(name);
        std::fs::write(&path, text)?;
        let report = run_experiment(&ExperimentManifest::load(&path)?)?;
        println!("{name}: outputs in {}", report.out_dir.display());
        for g in [Group::Attack, Group::Stabilization, Group::Train, Group::Test] {
            if let Some(r) = report.group(g) {
                println!("  {:14} {:6.2} dB", g.as_str(), r.mean_psnr());
            }
        }
    }
    Ok(())
}
