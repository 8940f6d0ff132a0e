use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use splatlab::gaussian::Scene;
use splatlab::geometry::{Intrinsics, Vec3};
use splatlab::harness::{
    assign_splits, evaluate_into, hemisphere_cameras, load_views, make_toy_scene, read_camera_manifest,
    render_dataset, run_experiment, write_camera_manifest, CameraEntry, ExperimentManifest, Split, ToySpec, Trainer,
};
use splatlab::train::{Background, TrainConfig};
use splatlab::ves::{generate_offsets, ves_viewpoints, AngleSet};

#[derive(Parser)]
#[command(name = "splatlab", version, about = "Gaussian splatting training and viewpoint poisoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a procedural colored-cluster scene.
    MakeScene {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        clusters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scene file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a camera manifest of hemisphere cameras with train/test/attack splits.
    MakeCameras {
        #[arg(long, default_value_t = 43)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        test: usize,
        #[arg(long, default_value_t = 3)]
        attack: usize,
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        #[arg(long, default_value_t = 64)]
        width: u32,
        #[arg(long, default_value_t = 64)]
        height: u32,
        /// Horizontal field of view in radians.
        #[arg(long, default_value_t = 0.7)]
        fov_x: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Manifest file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render every camera of a manifest into a dataset directory.
    RenderDataset {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        cameras: PathBuf,
        #[arg(long, value_enum, default_value_t = Bg::White)]
        background: Bg,
        /// Dataset directory to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a scene from random initialization on the train views.
    TrainClean {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
        #[arg(long, default_value_t = 200)]
        init_count: usize,
        #[arg(long, default_value_t = 1.0)]
        init_extent: f64,
    },
    /// Implant the attack images with the three-stage schedule.
    Poison {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        attack: AttackArgs,
    },
    /// Poison by iterative dataset updates within a perturbation budget.
    PoisonBaseline {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        attack: AttackArgs,
    },
    /// Score a scene on the attack, train, test and stabilization groups.
    Eval {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        cameras: PathBuf,
        /// Reference for the stabilization group.
        #[arg(long)]
        clean_scene: Option<PathBuf>,
        /// One per attack camera, in manifest order; defaults to the manifest images.
        #[arg(long = "attack-image")]
        attack_images: Vec<PathBuf>,
        #[arg(long, default_value = "13,15")]
        eval_angles: String,
        #[arg(long, value_enum, default_value_t = Bg::White)]
        background: Bg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the stabilization cameras generated around each attack camera.
    VesPreview {
        #[arg(long)]
        cameras: PathBuf,
        /// Only this manifest id; defaults to every attack row.
        #[arg(long)]
        id: Option<usize>,
        #[arg(long, default_value = "13,15")]
        angles: String,
    },
    /// Run an experiment manifest (TOML).
    Experiment { manifest: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Bg {
    White,
    Black,
}

impl From<Bg> for Background {
    fn from(b: Bg) -> Background {
        match b {
            Bg::White => Background::White,
            Bg::Black => Background::Black,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Full-length schedule.
    Full,
    /// Short schedule for small scenes.
    Desk,
}

#[derive(Args)]
struct RunArgs {
    /// Camera manifest with rendered images.
    #[arg(long)]
    cameras: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "13,15")]
    eval_angles: String,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    clean_scene: PathBuf,
    /// One per attack camera, in manifest order; defaults to the manifest images.
    #[arg(long = "attack-image")]
    attack_images: Vec<PathBuf>,
}

/// Settings resolve as preset, then `--config` file, then individual flags.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long, value_enum, default_value_t = Preset::Full)]
    preset: Preset,
    /// TOML file with any subset of the training settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    ta: Option<usize>,
    #[arg(long)]
    ts: Option<usize>,
    #[arg(long)]
    tt: Option<usize>,
    #[arg(long)]
    tr: Option<usize>,
    #[arg(long)]
    densify_budget: Option<u64>,
    #[arg(long)]
    densify_from: Option<u64>,
    #[arg(long)]
    densify_interval: Option<u64>,
    #[arg(long)]
    densify_attack: Option<bool>,
    #[arg(long)]
    densify_stab: Option<bool>,
    #[arg(long)]
    densify_normal: Option<bool>,
    /// Comma-separated degrees; empty disables stabilization.
    #[arg(long)]
    angles: Option<String>,
    #[arg(long)]
    lr_mean: Option<f64>,
    #[arg(long)]
    lr_log_scale: Option<f64>,
    #[arg(long)]
    lr_rotation: Option<f64>,
    #[arg(long)]
    lr_color: Option<f64>,
    #[arg(long)]
    lr_opacity: Option<f64>,
    #[arg(long)]
    tau_g: Option<f64>,
    #[arg(long)]
    tau_alpha: Option<f64>,
    #[arg(long)]
    percent_dense: Option<f64>,
    #[arg(long)]
    split_factor: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    ct_angle: Option<f64>,
    #[arg(long, value_enum)]
    background: Option<Bg>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
}

macro_rules! apply {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $(if let Some(v) = $args.$field { $cfg.$field = v; })*
    };
}

impl ConfigArgs {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = match self.preset {
            Preset::Full => TrainConfig::default(),
            Preset::Desk => TrainConfig::desk_scale(),
        };
        if let Some(p) = &self.config {
            cfg = cfg.merge_file(p)?;
        }
        apply!(
            cfg, self, seed, lambda, epochs, ta, ts, tt, tr, densify_budget, densify_from, densify_interval,
            densify_attack, densify_stab, densify_normal, lr_mean, lr_log_scale, lr_rotation, lr_color, lr_opacity,
            tau_g, tau_alpha, percent_dense, split_factor, epsilon, ct_angle, checkpoint_every
        );
        if let Some(a) = &self.angles {
            cfg.angles = AngleSet::parse(a)?;
        }
        if let Some(b) = self.background {
            cfg.background = b.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::MakeScene {
            count,
            clusters,
            seed,
            out,
        } => {
            let spec = ToySpec {
                count,
                clusters,
                ..ToySpec::default()
            };
            make_toy_scene(&spec, seed)?.save(&out)?;
            println!("wrote {count} Gaussians to {}", out.display());
        }
        Command::MakeCameras {
            count,
            test,
            attack,
            radius,
            width,
            height,
            fov_x,
            seed,
            out,
        } => {
            let intr = Intrinsics::from_fov_x(width, height, fov_x);
            let cams = hemisphere_cameras(count, radius, Vec3::zeros(), intr, seed)?;
            let splits = assign_splits(count, test, attack, seed)?;
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
            write_camera_manifest(&out, &entries)?;
            println!("wrote {count} cameras to {}", out.display());
        }
        Command::RenderDataset {
            scene,
            cameras,
            background,
            out,
        } => {
            let scene = Scene::load(&scene)?;
            let entries = read_camera_manifest(&cameras)?;
            let bg = Background::from(background).rgb();
            let manifest = render_dataset(&scene, &entries, bg, &out)?;
            println!("wrote {} images and {}", entries.len(), manifest.display());
        }
        Command::TrainClean {
            run,
            steps,
            init_count,
            init_extent,
        } => {
            let mut m = manifest(Trainer::Clean, &run, None)?;
            m.clean_steps = steps;
            m.init_count = init_count;
            m.init_extent = init_extent;
            report(run_experiment(&m)?);
        }
        Command::Poison { run, attack } => {
            report(run_experiment(&manifest(Trainer::ThreeStage, &run, Some(attack))?)?);
        }
        Command::PoisonBaseline { run, attack } => {
            report(run_experiment(&manifest(Trainer::Baseline, &run, Some(attack))?)?);
        }
        Command::Eval {
            scene,
            cameras,
            clean_scene,
            attack_images,
            eval_angles,
            background,
            out,
        } => {
            let bg = Background::from(background).rgb();
            let scene = Scene::load(&scene)?;
            let clean = clean_scene.as_deref().map(Scene::load).transpose()?;
            let views = load_views(&cameras, &attack_images, bg)?;
            let groups = evaluate_into(&scene, clean.as_ref(), &views, &AngleSet::parse(&eval_angles)?, bg, &out)?;
            for g in &groups {
                println!("{:<14} psnr {:6.2} dB  ssim {:.4}", g.group.as_str(), g.mean_psnr(), g.mean_ssim());
            }
        }
        Command::VesPreview { cameras, id, angles } => ves_preview(&cameras, id, &angles)?,
        Command::Experiment { manifest } => {
            let m = ExperimentManifest::load(&manifest)?;
            report(run_experiment(&m)?);
        }
    }
    Ok(())
}

fn manifest(trainer: Trainer, run: &RunArgs, attack: Option<AttackArgs>) -> Result<ExperimentManifest> {
    let config = run.config.resolve()?;
    let (clean_scene, attack_images) = match attack {
        Some(a) => (Some(a.clean_scene), a.attack_images),
        None => (None, Vec::new()),
    };
    Ok(ExperimentManifest {
        trainer,
        cameras: run.cameras.clone(),
        clean_scene,
        attack_images,
        out_dir: run.out.clone(),
        seed: config.seed,
        clean_steps: 5000,
        init_count: 200,
        init_extent: 1.0,
        eval_angles: AngleSet::parse(&run.eval_angles)?,
        config,
    })
}

fn report(r: splatlab::harness::ExperimentReport) {
    println!("{} Gaussians, outputs in {}", r.scene.len(), r.out_dir.display());
    for g in &r.groups {
        println!("{:<14} psnr {:6.2} dB  ssim {:.4}", g.group.as_str(), g.mean_psnr(), g.mean_ssim());
    }
}

fn ves_preview(cameras: &Path, id: Option<usize>, angles: &str) -> Result<()> {
    let angles = AngleSet::parse(angles)?;
    let entries = read_camera_manifest(cameras)?;
    let picked: Vec<&CameraEntry> = match id {
        Some(id) => entries.iter().filter(|e| e.id == id).collect(),
        None => entries.iter().filter(|e| e.split == Split::Attack).collect(),
    };
    if picked.is_empty() {
        bail!("no matching cameras in {}", cameras.display());
    }
    let offsets = generate_offsets(&angles);
    for e in picked {
        let cams = ves_viewpoints(&e.camera, &angles).with_context(|| format!("camera {}", e.id))?;
        println!("camera {} ({} viewpoints)", e.id, cams.len());
        for ((pitch, yaw), c) in offsets.iter().zip(&cams) {
            let r = &c.rotation;
            let t = &c.translation;
            println!(
                "  pitch {pitch:+7.2} yaw {yaw:+7.2}  R [{:+.6} {:+.6} {:+.6}; {:+.6} {:+.6} {:+.6}; {:+.6} {:+.6} {:+.6}]  t [{:+.6} {:+.6} {:+.6}]",
                r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)],
                t.x, t.y, t.z
            );
        }
    }
    Ok(())
}
