use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::ViewDataset;
use crate::density::densify_and_prune;
use crate::error::{Error, Result};
use crate::gaussian::Scene;
use crate::metrics::training_loss;
use crate::render::{render_forward, Gradients};

use super::config::TrainConfig;
use super::optimizer::{Adam, GroupRates};

/// Optimizer, sampler and global step counter shared by every phase of a run.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub config: TrainConfig,
    optimizer: Adam,
    rng: ChaCha8Rng,
    global_step: u64,
}

impl TrainState {
    pub fn new(config: TrainConfig, scene: &Scene) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(TrainState {
            optimizer: Adam::new(scene.len()),
            config,
            rng,
            global_step: 0,
        })
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn optimizer(&self) -> &Adam {
        &self.optimizer
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Copy of the optimizer moments, for snapshot/restore.
    pub(crate) fn save_optimizer(&self) -> Adam {
        self.optimizer.clone()
    }

    pub(crate) fn restore_optimizer(&mut self, adam: Adam) {
        self.optimizer = adam;
    }

    fn rates(&self, extent: f64) -> GroupRates {
        let c = &self.config;
        GroupRates {
            mean: c.mean_lr_at(self.global_step) * extent,
            log_scale: c.lr_log_scale,
            rotation: c.lr_rotation,
            color: c.lr_color,
            opacity: c.lr_opacity,
        }
    }

    fn densify_due(&self) -> bool {
        let c = &self.config;
        let s = self.global_step;
        s > c.densify_from && s.is_multiple_of(c.densify_interval) && s < c.densify_budget
    }
}

/// `n_iter` optimizer steps, each on one view sampled uniformly with
/// replacement from `dataset`. Returns the mean loss (0 for `n_iter = 0`).
pub fn execute_phase(
    scene: &mut Scene,
    state: &mut TrainState,
    dataset: &ViewDataset,
    n_iter: usize,
    densify: bool,
) -> Result<f64> {
    execute_joint_phase(scene, state, &[dataset], n_iter, densify)
}

/// Like [`execute_phase`], but every step samples one view from each dataset
/// and descends on the sum of their losses.
pub fn execute_joint_phase(
    scene: &mut Scene,
    state: &mut TrainState,
    datasets: &[&ViewDataset],
    n_iter: usize,
    densify: bool,
) -> Result<f64> {
    if n_iter == 0 {
        return Ok(0.0);
    }
    if datasets.is_empty() || datasets.iter().any(|d| d.is_empty()) {
        return Err(Error::Config("training phase has an empty dataset".into()));
    }
    if state.optimizer.len() != scene.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} optimizer slots", scene.len()),
            actual: state.optimizer.len().to_string(),
        });
    }
    let background = state.config.background.rgb();
    let lambda = state.config.lambda;
    let mut total = 0.0;
    for _ in 0..n_iter {
        let mut grads = Gradients::zeros(scene.len());
        let mut loss = 0.0;
        for ds in datasets {
            let view = &ds.views[state.rng.random_range(0..ds.len())];
            let fwd = render_forward(scene, &view.camera, background);
            let (l, dimg) = training_loss(&fwd.image, &view.image, lambda)?;
            let g = fwd.backward(scene, &view.camera, &dimg);
            scene.accumulate_grad_stats(&g.mean2d_norm, &g.visible);
            grads.accumulate(&g);
            loss += l;
        }
        total += loss;

        let rates = state.rates(scene.extent());
        state.optimizer.step(scene, &grads.params, &rates);
        state.global_step += 1;

        if densify && state.densify_due() {
            let params = state.config.densify_params();
            let report = densify_and_prune(scene, &params, &mut state.rng);
            state.optimizer.remap(&report.origins);
        }
    }
    Ok(total / n_iter as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::View;
    use crate::gaussian::Gaussian;
    use crate::geometry::{Camera, Intrinsics, Vec3};
    use crate::render::render;

    fn cam() -> Camera {
        Camera::look_at(
            Intrinsics::from_fov_x(16, 16, 0.8),
            Vec3::new(0.0, 0.0, -3.0),
            Vec3::zeros(),
            Vec3::new(0.0, -1.0, 0.0),
        )
        .unwrap()
    }

    fn config() -> TrainConfig {
        TrainConfig {
            densify_budget: 1000,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_iterations_is_noop() {
        let mut s = Scene::init_random(10, 0.5, 0).unwrap();
        let before = s.clone();
        let mut st = TrainState::new(config(), &s).unwrap();
        let loss = execute_phase(&mut s, &mut st, &ViewDataset::default(), 0, true).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(s, before);
        assert_eq!(st.global_step(), 0);
    }

    #[test]
    fn empty_dataset_is_config_error() {
        let mut s = Scene::init_random(10, 0.5, 0).unwrap();
        let mut st = TrainState::new(config(), &s).unwrap();
        let err = execute_phase(&mut s, &mut st, &ViewDataset::default(), 1, true).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn target_equal_to_render_leaves_parameters() {
        let mut s = Scene::init_random(30, 0.5, 2).unwrap();
        let before = s.clone();
        let c = cam();
        let ds = ViewDataset::new(vec![View {
            id: 0,
            camera: c,
            image: render(&s, &c, Vec3::repeat(1.0)),
        }]);
        let mut st = TrainState::new(config(), &s).unwrap();
        let loss = execute_phase(&mut s, &mut st, &ds, 1, true).unwrap();
        assert_eq!(loss, 0.0);
        assert!(s.same_parameters(&before));
    }

    #[test]
    fn single_gaussian_color_converges() {
        let g = Gaussian::isotropic(Vec3::zeros(), 0.8, Vec3::new(0.1, 0.9, 0.5), 0.999);
        let mut s = Scene::new(vec![g], 1.0).unwrap();
        let target_color = [0.7, 0.2, 0.4];
        let c = cam();
        let mut target_scene = s.clone();
        target_scene.gaussians_mut()[0].color = Vec3::from(target_color);
        let ds = ViewDataset::new(vec![View {
            id: 0,
            camera: c,
            image: render(&target_scene, &c, Vec3::repeat(1.0)),
        }]);
        let cfg = TrainConfig {
            lambda: 0.0,
            lr_mean: 1e-12,
            lr_log_scale: 1e-12,
            lr_rotation: 1e-12,
            lr_opacity: 1e-12,
            ..config()
        };
        let mut st = TrainState::new(cfg, &s).unwrap();
        execute_phase(&mut s, &mut st, &ds, 500, false).unwrap();
        let got = s.gaussians()[0].color;
        for k in 0..3 {
            assert!((got[k] - target_color[k]).abs() < 1e-3, "{got:?}");
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let run = || {
            let mut s = Scene::init_random(40, 0.5, 3).unwrap();
            let reference = Scene::init_random(40, 0.5, 4).unwrap();
            let views = (0..3)
                .map(|i| {
                    let a = i as f64 * 2.0;
                    let c = Camera::look_at(
                        Intrinsics::from_fov_x(16, 16, 0.8),
                        Vec3::new(3.0 * a.sin(), -1.0, -3.0 * a.cos()),
                        Vec3::zeros(),
                        Vec3::new(0.0, -1.0, 0.0),
                    )
                    .unwrap();
                    View {
                        id: i,
                        camera: c,
                        image: render(&reference, &c, Vec3::repeat(1.0)),
                    }
                })
                .collect();
            let ds = ViewDataset::new(views);
            let cfg = TrainConfig {
                densify_from: 5,
                densify_interval: 5,
                tau_g: 1e-6,
                ..config()
            };
            let mut st = TrainState::new(cfg, &s).unwrap();
            execute_phase(&mut s, &mut st, &ds, 30, true).unwrap();
            s.to_text()
        };
        let a = run();
        assert_eq!(a, run());
        assert_ne!(a.lines().next().unwrap(), "40", "densification never fired");
    }
}
