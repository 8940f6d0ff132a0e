//! Image losses and quality metrics.
//!
//! SSIM uses an 11×11 Gaussian window (σ = 1.5), `C1 = 0.01²`, `C2 = 0.03²`
//! for unit dynamic range, evaluated on valid window positions only (no
//! padding) and averaged over positions and channels.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ViewDataset;
use crate::error::{Error, Result};
use crate::gaussian::Scene;
use crate::geometry::Vec3;
use crate::image::Image;
use crate::render::render;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Reported PSNR for identical images.
pub const PSNR_IDENTICAL_DB: f64 = 99.0;

pub fn l1(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_size(b)?;
    let n = a.data().len();
    Ok(a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64)
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_size(b)?;
    let n = a.data().len();
    Ok(a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n as f64)
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// Peak signal-to-noise ratio for peak value 1.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_IDENTICAL_DB
    } else {
        -10.0 * mse.log10()
    }
}

pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    Ok(ssim_impl(a, b, false)?.0)
}

/// SSIM and its gradient with respect to every value of `a`.
pub fn ssim_with_grad(a: &Image, b: &Image) -> Result<(f64, Image)> {
    let (v, g) = ssim_impl(a, b, true)?;
    Ok((v, g.expect("gradient requested")))
}

/// `(1-λ)·L1 + λ·(1-SSIM)` and its gradient with respect to `render`.
pub fn training_loss(render: &Image, target: &Image, lambda: f64) -> Result<(f64, Image)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    render.check_same_size(target)?;
    let n = render.data().len() as f64;
    let l1_value = l1(render, target)?;
    let mut grad: Vec<f64> = render
        .data()
        .iter()
        .zip(target.data())
        .map(|(r, t)| {
            let d = r - t;
            let sign = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            (1.0 - lambda) * sign / n
        })
        .collect();
    let mut value = (1.0 - lambda) * l1_value;
    if lambda > 0.0 {
        let (s, ds) = ssim_with_grad(render, target)?;
        value += lambda * (1.0 - s);
        for (g, d) in grad.iter_mut().zip(ds.data()) {
            *g -= lambda * d;
        }
    }
    Ok((value, Image::from_data(render.width(), render.height(), grad)?))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable valid-mode correlation of a single-channel plane.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - SSIM_WINDOW + 1, h - SSIM_WINDOW + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|j| k[j] * tmp[(y + j) * ow + x]).sum();
        }
    }
    out
}

/// Adjoint of [`filter_valid`]: scatters a valid-size map back to full size.
fn filter_valid_adjoint(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - SSIM_WINDOW + 1, h - SSIM_WINDOW + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..oh {
        for x in 0..ow {
            let v = src[y * ow + x];
            for j in 0..SSIM_WINDOW {
                tmp[(y + j) * ow + x] += k[j] * v;
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..ow {
            let v = tmp[y * ow + x];
            for j in 0..SSIM_WINDOW {
                out[y * w + x + j] += k[j] * v;
            }
        }
    }
    out
}

fn plane(img: &Image, c: usize) -> Vec<f64> {
    img.data().iter().skip(c).step_by(3).copied().collect()
}

fn ssim_impl(a: &Image, b: &Image, want_grad: bool) -> Result<(f64, Option<Image>)> {
    a.check_same_size(b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidInput(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    if a.data() == b.data() {
        // global maximum: value 1, gradient exactly zero
        return Ok((1.0, want_grad.then(|| Image::new(w, h))));
    }
    let k = gaussian_window();
    let n_windows = (w - SSIM_WINDOW + 1) * (h - SSIM_WINDOW + 1);
    let norm = 1.0 / (n_windows * 3) as f64;
    let mut total = 0.0;
    let mut grad = want_grad.then(|| Image::new(w, h));

    for c in 0..3 {
        let x = plane(a, c);
        let y = plane(b, c);
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let mu_x = filter_valid(&x, w, h, &k);
        let mu_y = filter_valid(&y, w, h, &k);
        let e_xx = filter_valid(&xx, w, h, &k);
        let e_yy = filter_valid(&yy, w, h, &k);
        let e_xy = filter_valid(&xy, w, h, &k);

        let mut d_mu = vec![0.0; n_windows];
        let mut d_exx = vec![0.0; n_windows];
        let mut d_exy = vec![0.0; n_windows];
        for p in 0..n_windows {
            let (mx, my) = (mu_x[p], mu_y[p]);
            let var_x = e_xx[p] - mx * mx;
            let var_y = e_yy[p] - my * my;
            let cov = e_xy[p] - mx * my;
            let a1 = 2.0 * mx * my + SSIM_C1;
            let a2 = 2.0 * cov + SSIM_C2;
            let b1 = mx * mx + my * my + SSIM_C1;
            let b2 = var_x + var_y + SSIM_C2;
            let s = a1 * a2 / (b1 * b2);
            total += s;
            if want_grad {
                let ds_dmu = 2.0 * my * a2 / (b1 * b2) - s * 2.0 * mx / b1;
                let ds_dvar = -s / b2;
                let ds_dcov = 2.0 * a1 / (b1 * b2);
                d_mu[p] = norm * (ds_dmu - 2.0 * mx * ds_dvar - my * ds_dcov);
                d_exx[p] = norm * ds_dvar;
                d_exy[p] = norm * ds_dcov;
            }
        }

        if let Some(g) = grad.as_mut() {
            let g_mu = filter_valid_adjoint(&d_mu, w, h, &k);
            let g_xx = filter_valid_adjoint(&d_exx, w, h, &k);
            let g_xy = filter_valid_adjoint(&d_exy, w, h, &k);
            let data = g.data_mut();
            for i in 0..w * h {
                data[3 * i + c] = g_mu[i] + 2.0 * x[i] * g_xx[i] + y[i] * g_xy[i];
            }
        }
    }
    Ok((total * norm, grad))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Attack,
    Train,
    Test,
    Stabilization,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Attack => "attack",
            Group::Train => "train",
            Group::Test => "test",
            Group::Stabilization => "stabilization",
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewMetrics {
    pub group: Group,
    pub view_id: usize,
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub group: Group,
    pub rows: Vec<ViewMetrics>,
}

impl MetricsReport {
    pub fn mean_psnr(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.psnr_db))
    }

    pub fn mean_ssim(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.ssim))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["group", "view_id", "psnr_db", "ssim"])
                .map_err(|source| Error::Csv {
                    path: path.into(),
                    source,
                })?;
        }
        for r in &self.rows {
            w.serialize(r).map_err(|source| Error::Csv {
                path: path.into(),
                source,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        crate::io_util::write_atomic(path, &bytes)
    }

    pub fn read_csv(path: &Path) -> Result<Vec<ViewMetrics>> {
        let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })?;
        r.deserialize()
            .collect::<std::result::Result<Vec<ViewMetrics>, _>>()
            .map_err(|source| Error::Csv {
                path: path.into(),
                source,
            })
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Renders every view of `views` and scores it against the stored image.
pub fn evaluate_group(scene: &Scene, views: &ViewDataset, group: Group, background: Vec3) -> Result<MetricsReport> {
    let rows = views
        .views
        .par_iter()
        .map(|v| {
            let img = render(scene, &v.camera, background);
            Ok(ViewMetrics {
                group,
                view_id: v.id,
                psnr_db: psnr(&img, &v.image)?,
                ssim: ssim(&img, &v.image)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport { group, rows })
}
