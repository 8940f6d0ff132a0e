//! Hemisphere camera rigs, train/test/attack splits and the camera manifest.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Camera, Intrinsics, Mat3, Vec3};

/// Lowest and highest camera elevation above the horizon, in degrees.
pub const ELEVATION_RANGE_DEG: (f64, f64) = (10.0, 80.0);

/// `count` cameras at distance `radius` from `look_at` on the upper (+z)
/// hemisphere, each looking at `look_at` with world +z as up. Azimuths are
/// stratified with a random phase and jitter; elevations are drawn so that
/// centers are uniform by area within [`ELEVATION_RANGE_DEG`].
pub fn hemisphere_cameras(
    count: usize,
    radius: f64,
    look_at: Vec3,
    intrinsics: Intrinsics,
    seed: u64,
) -> Result<Vec<Camera>> {
    if count == 0 {
        return Err(Error::InvalidInput("hemisphere_cameras: count must be >= 1".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("hemisphere_cameras: radius must be > 0, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ELEVATION_RANGE_DEG;
    let (z_lo, z_hi) = (lo.to_radians().sin(), hi.to_radians().sin());
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let step = std::f64::consts::TAU / count as f64;
    (0..count)
        .map(|i| {
            let azimuth = phase + step * (i as f64 + rng.random_range(-0.3..0.3));
            let z = rng.random_range(z_lo..z_hi);
            let ring = (1.0 - z * z).sqrt();
            let dir = Vec3::new(ring * azimuth.cos(), ring * azimuth.sin(), z);
            Camera::look_at(intrinsics, look_at + dir * radius, look_at, Vec3::z())
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Attack,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "attack" => Ok(Split::Attack),
            _ => Err(Error::InvalidInput(format!("unknown split {s:?}"))),
        }
    }
}

/// Assigns `n_attack` and `n_test` held-out indices out of `0..count` after a
/// seeded shuffle; every other index is a training view.
pub fn assign_splits(count: usize, n_test: usize, n_attack: usize, seed: u64) -> Result<Vec<Split>> {
    if n_test + n_attack > count {
        return Err(Error::InvalidInput(format!(
            "cannot hold out {n_test} test and {n_attack} attack views from {count} cameras"
        )));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut splits = vec![Split::Train; count];
    for &i in &order[..n_attack] {
        splits[i] = Split::Attack;
    }
    for &i in &order[n_attack..n_attack + n_test] {
        splits[i] = Split::Test;
    }
    Ok(splits)
}

/// One manifest row.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraEntry {
    pub id: usize,
    pub split: Split,
    pub camera: Camera,
    /// Image path relative to the manifest's directory.
    pub image: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    id: usize,
    split: Split,
    r00: f64,
    r01: f64,
    r02: f64,
    r10: f64,
    r11: f64,
    r12: f64,
    r20: f64,
    r21: f64,
    r22: f64,
    t0: f64,
    t1: f64,
    t2: f64,
    width: u32,
    height: u32,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    near: f64,
    image: String,
}

impl From<&CameraEntry> for Row {
    fn from(e: &CameraEntry) -> Row {
        let r = &e.camera.rotation;
        let t = &e.camera.translation;
        let k = &e.camera.intrinsics;
        Row {
            id: e.id,
            split: e.split,
            r00: r[(0, 0)],
            r01: r[(0, 1)],
            r02: r[(0, 2)],
            r10: r[(1, 0)],
            r11: r[(1, 1)],
            r12: r[(1, 2)],
            r20: r[(2, 0)],
            r21: r[(2, 1)],
            r22: r[(2, 2)],
            t0: t.x,
            t1: t.y,
            t2: t.z,
            width: k.width,
            height: k.height,
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            near: e.camera.near,
            image: e.image.clone().unwrap_or_default(),
        }
    }
}

impl Row {
    fn into_entry(self) -> Result<CameraEntry> {
        let rotation = Mat3::new(
            self.r00, self.r01, self.r02, self.r10, self.r11, self.r12, self.r20, self.r21, self.r22,
        );
        let intrinsics = Intrinsics {
            width: self.width,
            height: self.height,
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
        };
        let camera = Camera::new(intrinsics, rotation, Vec3::new(self.t0, self.t1, self.t2), self.near)?;
        Ok(CameraEntry {
            id: self.id,
            split: self.split,
            camera,
            image: (!self.image.is_empty()).then_some(self.image),
        })
    }
}

/// Writes the manifest CSV. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_camera_manifest(path: &Path, entries: &[CameraEntry]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if entries.is_empty() {
        w.write_record([
            "id", "split", "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22", "t0", "t1", "t2", "width",
            "height", "fx", "fy", "cx", "cy", "near", "image",
        ])
        .map_err(csv_err)?;
    }
    for e in entries {
        w.serialize(Row::from(e)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    crate::io_util::write_atomic(path, &bytes)
}

pub fn read_camera_manifest(path: &Path) -> Result<Vec<CameraEntry>> {
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.into(),
        source,
    })?;
    r.deserialize::<Row>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|source| Error::Csv {
                path: path.into(),
                source,
            })?;
            row.into_entry()
                .map_err(|e| Error::parse(path, i + 2, e.to_string()))
        })
        .collect()
}
