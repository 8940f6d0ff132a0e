//! End-to-end runs described by a TOML manifest: train or poison, then score
//! the attack, train, test and stabilization groups.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{View, ViewDataset};
use crate::error::{Error, Result};
use crate::gaussian::Scene;
use crate::geometry::Vec3;
use crate::image::Image;
use crate::metrics::{evaluate_group, Group, MetricsReport};
use crate::render::render;
use crate::train::{
    ipa_baseline_train_with, three_stage_poison_with, train_clean, AttackSpec, TrainConfig, TrainLog,
};
use crate::ves::{build_stab_dataset, ves_viewpoints_multi, AngleSet};

use super::cameras::{read_camera_manifest, CameraEntry, Split};
use super::dataset::load_entries;

/// Present in the output directory while a run is in progress or after it
/// failed.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trainer {
    Clean,
    ThreeStage,
    Baseline,
}

/// Paths are relative to the manifest file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub trainer: Trainer,
    /// Camera manifest with train, test and attack rows and their images.
    pub cameras: PathBuf,
    /// Pre-trained scene to poison; required unless `trainer = "clean"`.
    #[serde(default)]
    pub clean_scene: Option<PathBuf>,
    /// One image per attack camera, in manifest order.
    #[serde(default)]
    pub attack_images: Vec<PathBuf>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Clean trainer: optimizer steps.
    #[serde(default = "default_clean_steps")]
    pub clean_steps: usize,
    /// Clean trainer: random initial Gaussians.
    #[serde(default = "default_init_count")]
    pub init_count: usize,
    /// Clean trainer: half-width of the initialization cube.
    #[serde(default = "default_init_extent")]
    pub init_extent: f64,
    /// Perturbation angles for the stabilization evaluation group,
    /// independent of the angles used for training.
    #[serde(default = "default_eval_angles")]
    pub eval_angles: AngleSet,
    #[serde(default)]
    pub config: TrainConfig,
}

fn default_clean_steps() -> usize {
    5000
}

fn default_init_count() -> usize {
    200
}

fn default_init_extent() -> f64 {
    1.0
}

fn default_eval_angles() -> AngleSet {
    AngleSet::new(vec![13.0, 15.0]).expect("valid angles")
}

impl ExperimentManifest {
    /// Parses the manifest and resolves its paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: ExperimentManifest =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.resolve(base);
        m.config.validate()?;
        Ok(m)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.cameras);
        fix(&mut self.out_dir);
        if let Some(p) = self.clean_scene.as_mut() {
            fix(p);
        }
        self.attack_images.iter_mut().for_each(fix);
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub out_dir: PathBuf,
    pub scene: Scene,
    pub log: TrainLog,
    pub groups: Vec<MetricsReport>,
}

impl ExperimentReport {
    pub fn group(&self, g: Group) -> Option<&MetricsReport> {
        self.groups.iter().find(|r| r.group == g)
    }
}

pub const SCENE_FILE: &str = "scene.txt";
pub const LOSS_FILE: &str = "loss.csv";
pub const COMPARISON_FILE: &str = "comparison.png";

pub fn metrics_file(g: Group) -> String {
    format!("metrics_{}.csv", g.as_str())
}

/// Runs the manifest. Outputs: `scene.txt`, `loss.csv`, one
/// `metrics_<group>.csv` per evaluated group, `comparison.png`, and scene
/// checkpoints under `checkpoints/` when enabled.
pub fn run_experiment(manifest: &ExperimentManifest) -> Result<ExperimentReport> {
    let out = &manifest.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let marker = out.join(INCOMPLETE_MARKER);
    crate::io_util::write_atomic(&marker, b"run in progress\n")?;
    match run_stages(manifest) {
        Ok(report) => {
            std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
            Ok(report)
        }
        Err(e) => {
            let _ = crate::io_util::write_atomic(&marker, format!("{e}\n").as_bytes());
            Err(e)
        }
    }
}

/// Train, test and attack views of a camera manifest.
#[derive(Clone, Debug)]
pub struct LoadedViews {
    pub train: ViewDataset,
    pub test: ViewDataset,
    pub attack: Option<AttackSpec>,
    /// Manifest ids of the attack cameras, parallel to `attack`.
    pub attack_ids: Vec<usize>,
}

impl LoadedViews {
    /// Attack views carrying their manifest ids.
    pub fn attack_dataset(&self) -> Option<ViewDataset> {
        self.attack.as_ref().map(|spec| {
            let mut ds = spec.to_dataset();
            for (v, id) in ds.views.iter_mut().zip(&self.attack_ids) {
                v.id = *id;
            }
            ds
        })
    }
}

/// Loads every split of `cameras`. Attack images come from `attack_images`
/// (one per attack row, in manifest order) or, when that is empty, from the
/// images listed in the manifest.
pub fn load_views(cameras: &Path, attack_images: &[PathBuf], bg: Vec3) -> Result<LoadedViews> {
    let entries = read_camera_manifest(cameras).map_err(|e| e.at_stage("load cameras"))?;
    let of = |s: Split| entries.iter().filter(move |e| e.split == s);
    let train = load_entries(cameras, of(Split::Train), bg).map_err(|e| e.at_stage("load train views"))?;
    let test = load_entries(cameras, of(Split::Test), bg).map_err(|e| e.at_stage("load test views"))?;
    let attack_entries: Vec<&CameraEntry> = of(Split::Attack).collect();
    let attack = load_attack(cameras, attack_images, &attack_entries, bg).map_err(|e| e.at_stage("load attack images"))?;
    Ok(LoadedViews {
        train,
        test,
        attack,
        attack_ids: attack_entries.iter().map(|e| e.id).collect(),
    })
}

/// Scores `scene` on the attack, train, test and (given a clean scene and
/// attack cameras) stabilization groups, writing one CSV per group and the
/// comparison image into `out`.
pub fn evaluate_into(
    scene: &Scene,
    clean: Option<&Scene>,
    views: &LoadedViews,
    eval_angles: &AngleSet,
    bg: Vec3,
    out: &Path,
) -> Result<Vec<MetricsReport>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let attack_ds = views.attack_dataset();
    let mut groups = Vec::new();
    let mut eval = |g: Group, ds: &ViewDataset| -> Result<()> {
        let r = evaluate_group(scene, ds, g, bg)?;
        r.write_csv(&out.join(metrics_file(g)))?;
        groups.push(r);
        Ok(())
    };
    if let Some(ds) = &attack_ds {
        eval(Group::Attack, ds)?;
    }
    eval(Group::Train, &views.train)?;
    eval(Group::Test, &views.test)?;
    if let (Some(clean), Some(spec)) = (clean, &views.attack) {
        let cams = ves_viewpoints_multi(&spec.cameras(), eval_angles)?;
        eval(Group::Stabilization, &build_stab_dataset(clean, &cams, bg))?;
    }
    write_comparison(scene, clean, attack_ds.as_ref(), &views.train, &views.test, bg, &out.join(COMPARISON_FILE))?;
    Ok(groups)
}

fn run_stages(m: &ExperimentManifest) -> Result<ExperimentReport> {
    let mut config = m.config.clone();
    config.seed = m.seed;
    config.validate().map_err(|e| e.at_stage("config"))?;
    let bg = config.background.rgb();
    let out = &m.out_dir;

    let views = load_views(&m.cameras, &m.attack_images, bg)?;
    let clean = match (&m.clean_scene, m.trainer) {
        (Some(p), _) => Some(Scene::load(p).map_err(|e| e.at_stage("load clean scene"))?),
        (None, Trainer::Clean) => None,
        (None, _) => {
            return Err(Error::Config("poisoning trainers need clean_scene".into()).at_stage("config"));
        }
    };

    let ckpt_dir = out.join("checkpoints");
    let every = config.checkpoint_every;
    let mut checkpoint = |epoch: usize, scene: &Scene| -> Result<()> {
        if every > 0 && epoch.is_multiple_of(every) {
            std::fs::create_dir_all(&ckpt_dir).map_err(|e| Error::io(&ckpt_dir, e))?;
            scene.save(&ckpt_dir.join(format!("epoch_{epoch:05}.txt")))?;
        }
        Ok(())
    };

    let (scene, log) = match m.trainer {
        Trainer::Clean => {
            let init = Scene::init_random(m.init_count, m.init_extent, m.seed).map_err(|e| e.at_stage("init"))?;
            train_clean(&init, &views.train, m.clean_steps, &config, &mut checkpoint).map_err(|e| e.at_stage("train"))?
        }
        Trainer::ThreeStage | Trainer::Baseline => {
            let clean = clean.as_ref().expect("checked above");
            let spec = views
                .attack
                .as_ref()
                .ok_or_else(|| Error::Config("poisoning needs attack cameras and images".into()).at_stage("config"))?;
            if m.trainer == Trainer::ThreeStage {
                let run = three_stage_poison_with(clean, spec, &views.train, &config, &mut checkpoint)
                    .map_err(|e| e.at_stage("poison"))?;
                (run.scene, run.log)
            } else {
                let run = ipa_baseline_train_with(clean, spec, &views.train, &config, &mut checkpoint)
                    .map_err(|e| e.at_stage("poison"))?;
                (run.scene, run.log)
            }
        }
    };

    let scene_path = out.join(SCENE_FILE);
    scene.save(&scene_path).map_err(|e| e.at_stage("write scene"))?;
    // score what was written, so re-evaluating the file reproduces the reports
    let scene = Scene::load(&scene_path).map_err(|e| e.at_stage("write scene"))?;
    log.write_csv(&out.join(LOSS_FILE)).map_err(|e| e.at_stage("write loss log"))?;
    let groups =
        evaluate_into(&scene, clean.as_ref(), &views, &m.eval_angles, bg, out).map_err(|e| e.at_stage("evaluate"))?;

    Ok(ExperimentReport {
        out_dir: out.clone(),
        scene,
        log,
        groups,
    })
}

fn load_attack(cameras: &Path, images: &[PathBuf], entries: &[&CameraEntry], bg: Vec3) -> Result<Option<AttackSpec>> {
    if entries.is_empty() {
        return Ok(None);
    }
    if images.is_empty() {
        let ds = load_entries(cameras, entries.iter().copied(), bg)?;
        return AttackSpec::new(ds.views.into_iter().map(|v| (v.camera, v.image)).collect()).map(Some);
    }
    if images.len() != entries.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} attack images", entries.len()),
            actual: images.len().to_string(),
        });
    }
    let pairs = entries
        .iter()
        .zip(images)
        .map(|(e, p)| Ok((e.camera, Image::load_png_over(p, bg)?)))
        .collect::<Result<Vec<_>>>()?;
    AttackSpec::new(pairs).map(Some)
}

/// Rows: attack view, first train view, first test view. Columns: target,
/// trained scene, clean scene (when there is one).
fn write_comparison(
    scene: &Scene,
    clean: Option<&Scene>,
    attack: Option<&ViewDataset>,
    train: &ViewDataset,
    test: &ViewDataset,
    bg: Vec3,
    path: &Path,
) -> Result<()> {
    let picks: Vec<&View> = [attack, Some(train), Some(test)]
        .into_iter()
        .flatten()
        .filter_map(|ds| ds.views.first())
        .collect();
    if picks.is_empty() {
        return Ok(());
    }
    let tiles: Vec<Vec<Image>> = picks
        .iter()
        .map(|v| {
            let mut row = vec![v.image.clone(), render(scene, &v.camera, bg)];
            if let Some(c) = clean {
                row.push(render(c, &v.camera, bg));
            }
            row
        })
        .collect();
    let rows: Vec<Vec<&Image>> = tiles.iter().map(|r| r.iter().collect()).collect();
    Image::grid(&rows)?.save_png(path)
}
