//! Row-major RGB float images and 8-bit PNG encoding.
//!
//! PNG values are treated as linear in both directions; no gamma transform.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::io_util::write_atomic;

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn filled(width: usize, height: usize, rgb: Vec3) -> Self {
        let mut img = Image::new(width, height);
        for px in img.data.chunks_exact_mut(3) {
            px.copy_from_slice(rgb.as_slice());
        }
        img
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values for {width}x{height} RGB", width * height * 3),
                actual: format!("{}", data.len()),
            });
        }
        Ok(Image { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_size(&self, other: &Image) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.width, self.height),
                actual: format!("{}x{}", other.width, other.height),
            })
        }
    }

    /// Values quantized to 8 bits, as they would be after a PNG round trip.
    pub fn quantized(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| to_u8(v) as f64 / 255.0).collect(),
        }
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let bytes = self.data.iter().map(|&v| to_u8(v)).collect();
        image::RgbImage::from_raw(self.width as u32, self.height as u32, bytes).expect("buffer size matches")
    }

    pub fn from_rgb8(img: &image::RgbImage) -> Image {
        Image {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.as_raw().iter().map(|&b| b as f64 / 255.0).collect(),
        }
    }

    /// RGBA composited over `background` with straight alpha.
    pub fn from_rgba8(img: &image::RgbaImage, background: Vec3) -> Image {
        let mut out = Image::new(img.width() as usize, img.height() as usize);
        for (dst, src) in out.data.chunks_exact_mut(3).zip(img.as_raw().chunks_exact(4)) {
            let a = src[3] as f64 / 255.0;
            for c in 0..3 {
                dst[c] = src[c] as f64 / 255.0 * a + background[c] * (1.0 - a);
            }
        }
        out
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut buf = std::io::Cursor::new(Vec::new());
        self.to_rgb8()
            .write_to(&mut buf, image::ImageFormat::Png)
            .map_err(|source| Error::Image {
                path: path.into(),
                source,
            })?;
        write_atomic(path, buf.get_ref())
    }

    pub fn load_png(path: &Path) -> Result<Image> {
        Image::load_png_over(path, Vec3::repeat(1.0))
    }

    /// Loads any PNG; an alpha channel is composited over `background`.
    pub fn load_png_over(path: &Path, background: Vec3) -> Result<Image> {
        let dynimg = image::open(path).map_err(|source| Error::Image {
            path: path.into(),
            source,
        })?;
        Ok(if dynimg.color().has_alpha() {
            Image::from_rgba8(&dynimg.to_rgba8(), background)
        } else {
            Image::from_rgb8(&dynimg.to_rgb8())
        })
    }

    /// Side-by-side grid of equally sized tiles, row-major.
    pub fn grid(rows: &[Vec<&Image>]) -> Result<Image> {
        let first = rows
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| Error::InvalidInput("empty image grid".into()))?;
        let (w, h) = (first.width, first.height);
        let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = Image::new(w * cols, h * rows.len());
        for (r, row) in rows.iter().enumerate() {
            for (c, tile) in row.iter().enumerate() {
                first.check_same_size(tile)?;
                for y in 0..h {
                    for x in 0..w {
                        out.set_pixel(c * w + x, r * h + y, tile.pixel(x, y));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}
