//! Raster loading, binarization and saving.
//!
//! Ink is dark on a light background: a pixel is foreground when its
//! luminance falls below the threshold.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

/// 8-bit luminance raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.pixels {
            hist[v as usize] += 1;
        }
        hist
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        encode_gray(self.width, self.height, self.pixels.clone())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        write_bytes(path.as_ref(), &self.to_png_bytes()?)
    }
}

/// Binary raster, row-major; `true` marks ink.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    foreground: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32, foreground: Vec<bool>) -> Result<Self> {
        check_dims(width, height, foreground.len())?;
        Ok(BinaryImage {
            width,
            height,
            foreground,
        })
    }

    pub fn blank(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![false; width as usize * height as usize])
    }

    /// Builds an image from ASCII art: `#` (or any of `#X1*`) is ink, every
    /// other character is background. Rows are padded to the longest one.
    pub fn from_ascii(art: &str) -> Result<Self> {
        let rows: Vec<&str> = art.lines().filter(|l| !l.trim().is_empty()).collect();
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        let mut fg = vec![false; width * rows.len()];
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.chars().enumerate() {
                fg[y * width + x] = matches!(c, '#' | 'X' | '1' | '*');
            }
        }
        Self::new(width as u32, rows.len() as u32, fg)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn foreground(&self) -> &[bool] {
        &self.foreground
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.foreground[y as usize * self.width as usize + x as usize]
    }

    /// Out-of-range coordinates read as background.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as u64) < self.width as u64
            && (y as u64) < self.height as u64
            && self.get(x as u32, y as u32)
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let w = self.width as usize;
        self.foreground[y as usize * w + x as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.foreground.iter().filter(|&&f| f).count()
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn iter_foreground(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.foreground
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    /// Black ink on white, as 0/255 luminance.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self
                .foreground
                .iter()
                .map(|&f| if f { 0 } else { 255 })
                .collect(),
        }
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        self.to_gray().to_png_bytes()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_gray().save_png(path)
    }
}

fn check_dims(width: u32, height: u32, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParam(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if len != width as usize * height as usize {
        return Err(Error::InvalidParam(format!(
            "pixel buffer of length {len} does not match {width}x{height}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinarizeMethod {
    Otsu,
    /// Foreground iff luminance < threshold.
    Fixed(u8),
}

/// Integer-rounded Rec. 601 luma.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

/// Otsu's threshold as an effective cut point: pixels with luminance below
/// the returned value are ink.
///
/// The split maximizing between-class variance is searched over all 255
/// cuts `{v <= k} | {v > k}`. Equal maxima form a plateau across empty
/// histogram bins; the cut is placed at the plateau's middle. A constant
/// image returns its own value, yielding no ink.
pub fn otsu_threshold(img: &GrayImage) -> f64 {
    let hist = img.histogram();
    let total = img.pixels.len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();

    let mut best = f64::NEG_INFINITY;
    let mut plateau: Option<(usize, usize)> = None;
    let (mut n0, mut s0) = (0.0f64, 0.0f64);
    for (k, &count) in hist.iter().enumerate().take(255) {
        n0 += count as f64;
        s0 += k as f64 * count as f64;
        let n1 = total - n0;
        if n0 == 0.0 || n1 == 0.0 {
            continue;
        }
        let diff = total * s0 - n0 * sum_all;
        let score = diff * diff / (n0 * n1);
        if score > best {
            best = score;
            plateau = Some((k, k));
        } else if score == best {
            if let Some((_, end)) = plateau.as_mut() {
                if *end + 1 == k {
                    *end = k;
                }
            }
        }
    }
    match plateau {
        Some((start, end)) => {
            let k = (start + end) / 2;
            k as f64 + 0.5
        }
        None => img.pixels.first().copied().unwrap_or(0) as f64,
    }
}

pub fn binarize(img: &GrayImage, method: BinarizeMethod) -> BinaryImage {
    let threshold = match method {
        BinarizeMethod::Otsu => otsu_threshold(img),
        BinarizeMethod::Fixed(t) => t as f64,
    };
    BinaryImage {
        width: img.width,
        height: img.height,
        foreground: img.pixels.iter().map(|&v| (v as f64) < threshold).collect(),
    }
}

/// Decodes a PNG stream to luminance. Gray, gray+alpha, RGB and RGBA inputs
/// are accepted; alpha is ignored.
pub fn load_png(bytes: &[u8]) -> Result<GrayImage> {
    let decoded = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    let (width, height) = (decoded.width(), decoded.height());
    let pixels = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| (p.0[0] >> 8) as u8).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| luma(p.0[0], p.0[1], p.0[2]))
            .collect(),
    };
    GrayImage::new(width, height, pixels)
}

pub fn load_png_file(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_png(&bytes)
}

fn encode_gray(width: u32, height: u32, pixels: Vec<u8>) -> Result<Vec<u8>> {
    let buf = image::GrayImage::from_raw(width, height, pixels)
        .ok_or_else(|| Error::InvalidParam("pixel buffer size mismatch".into()))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
