use std::hash::{Hash, Hasher};

use crate::geometry::Camera;
use crate::image::Image;

/// One supervised view: a camera and the image it should render.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    /// Stable identifier used in reports.
    pub id: usize,
    pub camera: Camera,
    pub image: Image,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ViewDataset {
    pub views: Vec<View>,
}

impl ViewDataset {
    pub fn new(views: Vec<View>) -> Self {
        ViewDataset { views }
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn cameras(&self) -> Vec<Camera> {
        self.views.iter().map(|v| v.camera).collect()
    }

    /// 1.1 times the largest distance from a camera center to the centroid
    /// of all centers; `None` for fewer than two distinct centers.
    pub fn camera_extent(&self) -> Option<f64> {
        camera_extent(&self.cameras())
    }

    /// Hash over ids, camera bits and pixel bits. Equal fingerprints mean the
    /// dataset is (with overwhelming probability) bit-identical.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for v in &self.views {
            v.id.hash(&mut h);
            for x in v.camera.rotation.iter().chain(v.camera.translation.iter()) {
                x.to_bits().hash(&mut h);
            }
            v.image.width().hash(&mut h);
            v.image.height().hash(&mut h);
            for x in v.image.data() {
                x.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

pub fn camera_extent(cameras: &[Camera]) -> Option<f64> {
    if cameras.is_empty() {
        return None;
    }
    let centers: Vec<_> = cameras.iter().map(Camera::center).collect();
    let centroid = centers.iter().sum::<crate::geometry::Vec3>() / centers.len() as f64;
    let r = centers.iter().map(|c| (c - centroid).norm()).fold(0.0, f64::max);
    (r > 0.0).then_some(1.1 * r)
}
