//! Adam over the flat per-Gaussian parameter vectors, one learning rate per
//! parameter group.

use crate::density::Origin;
use crate::gaussian::{layout, Gaussian, Scene, PARAM_COUNT};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-15;

/// Learning rate for each parameter group at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupRates {
    pub mean: f64,
    pub log_scale: f64,
    pub rotation: f64,
    pub color: f64,
    pub opacity: f64,
}

impl GroupRates {
    fn per_param(&self) -> [f64; PARAM_COUNT] {
        let mut r = [0.0; PARAM_COUNT];
        r[layout::MEAN].fill(self.mean);
        r[layout::LOG_SCALE].fill(self.log_scale);
        r[layout::ROTATION].fill(self.rotation);
        r[layout::COLOR].fill(self.color);
        r[layout::OPACITY] = self.opacity;
        r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    m: Vec<[f64; PARAM_COUNT]>,
    v: Vec<[f64; PARAM_COUNT]>,
    steps: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam {
            m: vec![[0.0; PARAM_COUNT]; n],
            v: vec![[0.0; PARAM_COUNT]; n],
            steps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, scene: &mut Scene, grads: &[[f64; PARAM_COUNT]], rates: &GroupRates) {
        assert_eq!(grads.len(), scene.len(), "gradient count does not match scene");
        assert_eq!(self.m.len(), scene.len(), "optimizer state does not match scene");
        self.steps += 1;
        let t = self.steps as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        let lr = rates.per_param();
        for (i, g) in scene.gaussians_mut().iter_mut().enumerate() {
            let mut p = g.to_params();
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for k in 0..PARAM_COUNT {
                let gk = grads[i][k];
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * gk;
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * gk * gk;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] -= lr[k] * m_hat / (v_hat.sqrt() + EPSILON);
            }
            *g = Gaussian::from_params(&p);
        }
    }

    /// Follows a densification: kept Gaussians keep their moments, new ones
    /// start from zero.
    pub fn remap(&mut self, origins: &[Origin]) {
        let (m, v): (Vec<_>, Vec<_>) = origins
            .iter()
            .map(|o| match *o {
                Origin::Kept(i) => (self.m[i], self.v[i]),
                Origin::New(_) => ([0.0; PARAM_COUNT], [0.0; PARAM_COUNT]),
            })
            .unzip();
        self.m = m;
        self.v = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn rates(r: f64) -> GroupRates {
        GroupRates {
            mean: r,
            log_scale: r,
            rotation: r,
            color: r,
            opacity: r,
        }
    }

    fn one() -> Scene {
        Scene::new(vec![Gaussian::isotropic(Vec3::new(0.1, 0.2, 0.3), 0.1, Vec3::repeat(0.5), 0.4)], 1.0).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = one();
        let before = s.clone();
        let mut opt = Adam::new(1);
        opt.step(&mut s, &[[0.0; PARAM_COUNT]], &rates(0.1));
        assert!(s.same_parameters(&before));
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn first_step_closed_form() {
        // m̂ = g and v̂ = g², so the first displacement is lr·g/(|g| + ε).
        let mut s = one();
        let before = s.gaussians()[0].to_params();
        let mut opt = Adam::new(1);
        let mut g = [0.0; PARAM_COUNT];
        g[10] = 0.37;
        g[0] = -2.0;
        opt.step(&mut s, &[g], &rates(0.01));
        let after = s.gaussians()[0].to_params();
        assert!((after[10] - (before[10] - 0.01 * 0.37 / (0.37 + EPSILON))).abs() < 1e-15);
        assert!((after[0] - (before[0] + 0.01)).abs() < 1e-15);
        assert_eq!(after[5], before[5]);
    }

    #[test]
    fn remap_keeps_and_zeroes() {
        let mut s = Scene::new(vec![Gaussian::isotropic(Vec3::zeros(), 0.1, Vec3::zeros(), 0.5); 2], 1.0).unwrap();
        let mut opt = Adam::new(2);
        opt.step(&mut s, &[[1.0; PARAM_COUNT], [2.0; PARAM_COUNT]], &rates(0.01));
        let m1 = opt.m[1];
        opt.remap(&[Origin::Kept(1), Origin::New(0)]);
        assert_eq!(opt.m[0], m1);
        assert_eq!(opt.m[1], [0.0; PARAM_COUNT]);
        assert_eq!(opt.len(), 2);
    }
}
