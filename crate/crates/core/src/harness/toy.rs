//! Small synthetic scenes and attack images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gaussian::{inverse_sigmoid, Gaussian, Scene};
use crate::geometry::Vec3;
use crate::image::Image;

/// Colored blobs arranged on a ring around the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ToySpec {
    /// Total number of Gaussians.
    pub count: usize,
    pub clusters: usize,
    /// Distance of cluster centers from the z axis.
    pub ring_radius: f64,
    /// Standard deviation of member positions around their cluster center.
    pub cluster_spread: f64,
    /// Range of per-axis Gaussian scales.
    pub scale_range: (f64, f64),
    pub opacity: f64,
}

impl Default for ToySpec {
    fn default() -> Self {
        ToySpec {
            count: 200,
            clusters: 6,
            ring_radius: 0.55,
            cluster_spread: 0.22,
            scale_range: (0.05, 0.14),
            opacity: 0.9,
        }
    }
}

impl ToySpec {
    /// Radius of a ball that holds essentially every Gaussian.
    pub fn extent(&self) -> f64 {
        self.ring_radius + 3.0 * self.cluster_spread + self.scale_range.1
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_range;
        if self.count == 0 || self.clusters == 0 {
            return Err(Error::InvalidInput("toy scene needs at least one Gaussian and one cluster".into()));
        }
        if !(lo > 0.0 && hi >= lo && self.cluster_spread >= 0.0 && self.ring_radius >= 0.0) {
            return Err(Error::InvalidInput("toy scene sizes must be positive".into()));
        }
        if !(self.opacity > 0.0 && self.opacity < 1.0) {
            return Err(Error::InvalidInput(format!("toy opacity must lie in (0, 1), got {}", self.opacity)));
        }
        Ok(())
    }
}

/// Base colors of successive clusters.
const PALETTE: [[f64; 3]; 8] = [
    [0.85, 0.15, 0.12],
    [0.15, 0.65, 0.20],
    [0.15, 0.30, 0.85],
    [0.90, 0.75, 0.10],
    [0.70, 0.20, 0.75],
    [0.10, 0.70, 0.75],
    [0.95, 0.50, 0.10],
    [0.35, 0.35, 0.35],
];

/// Deterministic colored-cluster scene. Cluster `k` sits at angle `2πk/K`
/// on the ring, at a height that alternates around z = 0; Gaussians are
/// dealt to clusters round-robin.
pub fn make_toy_scene(spec: &ToySpec, seed: u64) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec3> = (0..spec.clusters)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / spec.clusters as f64;
            let z = if k % 2 == 0 { 0.15 } else { -0.15 };
            Vec3::new(spec.ring_radius * a.cos(), spec.ring_radius * a.sin(), z)
        })
        .collect();
    let (lo, hi) = spec.scale_range;
    let gaussians = (0..spec.count)
        .map(|i| {
            let k = i % spec.clusters;
            let offset = Vec3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let mean = centers[k] + offset * spec.cluster_spread;
            let log_scale = Vec3::new(
                rng.random_range(lo..=hi).ln(),
                rng.random_range(lo..=hi).ln(),
                rng.random_range(lo..=hi).ln(),
            );
            let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let qn = q.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let base = PALETTE[k % PALETTE.len()];
            let color = Vec3::from_fn(|c, _| (base[c] + rng.random_range(-0.08..0.08)).clamp(0.0, 1.0));
            Gaussian {
                mean,
                log_scale,
                rotation: q.map(|v| v / qn),
                color,
                opacity_logit: inverse_sigmoid(spec.opacity),
            }
        })
        .collect();
    Scene::new(gaussians, spec.extent())
}

/// Checkerboard with `squares` cells across the shorter side; the top-left
/// cell has color `a`.
pub fn checkerboard(width: usize, height: usize, squares: usize, a: Vec3, b: Vec3) -> Result<Image> {
    if width == 0 || height == 0 || squares == 0 {
        return Err(Error::InvalidInput("checkerboard needs nonzero size and square count".into()));
    }
    let cell = (width.min(height) / squares).max(1);
    let mut img = Image::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let c = if (x / cell + y / cell).is_multiple_of(2) { a } else { b };
            img.set_pixel(x, y, [c.x, c.y, c.z]);
        }
    }
    Ok(img)
}
