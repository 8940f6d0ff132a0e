//! Adaptive density control: clone small high-gradient Gaussians, split large
//! ones, drop nearly transparent ones.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::gaussian::{Gaussian, Scene};
use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensifyParams {
    /// Threshold on the running mean of projected-mean gradient norms.
    pub grad_threshold: f64,
    /// Gaussians below this opacity are removed.
    pub min_opacity: f64,
    /// Clone/split boundary as a fraction of the scene extent.
    pub percent_dense: f64,
    /// Split children have their scale divided by this.
    pub split_factor: f64,
}

impl Default for DensifyParams {
    fn default() -> Self {
        DensifyParams {
            grad_threshold: 2e-4,
            min_opacity: 0.005,
            percent_dense: 0.01,
            split_factor: 1.6,
        }
    }
}

/// Where each Gaussian of the densified scene came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Unchanged Gaussian that had this index before densification.
    Kept(usize),
    /// Newly created (a clone or a split child of this parent).
    New(usize),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensifyReport {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
    /// One entry per Gaussian in the resulting scene.
    pub origins: Vec<Origin>,
}

impl DensifyReport {
    pub fn changed(&self) -> bool {
        self.cloned + self.split + self.pruned > 0
    }
}

/// Number of children produced per split.
pub const SPLIT_CHILDREN: usize = 2;

pub fn densify_and_prune<R: Rng>(scene: &mut Scene, params: &DensifyParams, rng: &mut R) -> DensifyReport {
    let n = scene.len();
    let size_limit = params.percent_dense * scene.extent();
    let old = scene.gaussians().to_vec();

    let mut clone_from = Vec::new();
    let mut split_from = Vec::new();
    for (i, g) in old.iter().enumerate() {
        if scene.mean_grad(i) > params.grad_threshold {
            if g.max_scale() < size_limit {
                clone_from.push(i);
            } else {
                split_from.push(i);
            }
        }
    }

    let mut is_split = vec![false; n];
    for &i in &split_from {
        is_split[i] = true;
    }

    let mut next: Vec<(Gaussian, Origin)> = Vec::with_capacity(n + clone_from.len() + split_from.len());
    next.extend(
        old.iter()
            .enumerate()
            .filter(|(i, _)| !is_split[*i])
            .map(|(i, g)| (*g, Origin::Kept(i))),
    );
    next.extend(clone_from.iter().map(|&i| (old[i], Origin::New(i))));
    let shrink = params.split_factor.ln();
    for &i in &split_from {
        let parent = &old[i];
        let rot = parent.rotation_matrix();
        let scale = parent.scale();
        for _ in 0..SPLIT_CHILDREN {
            let z = Vec3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            let mut child = *parent;
            child.mean = parent.mean + rot * scale.component_mul(&z);
            child.log_scale = parent.log_scale.map(|l| l - shrink);
            next.push((child, Origin::New(i)));
        }
    }

    let before_prune = next.len();
    next.retain(|(g, _)| g.opacity() >= params.min_opacity);
    let pruned = before_prune - next.len();

    let (gaussians, origins): (Vec<_>, Vec<_>) = next.into_iter().unzip();
    scene.replace_gaussians(gaussians);

    DensifyReport {
        cloned: clone_from.len(),
        split: split_from.len(),
        pruned,
        origins,
    }
}
