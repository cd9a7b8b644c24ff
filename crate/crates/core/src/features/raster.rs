//! Three-channel 224×224 rendering of a trial: glyphs, filled character boxes
//! and fixation markers whose gray level encodes start time.

use std::io::Cursor;

use font8x8::legacy::BASIC_LEGACY;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::trial::Trial;

pub const RASTER_SIZE: usize = 224;
/// Side length of a fixation marker in raster pixels.
pub const MARKER_SIZE: usize = 3;

/// Maps stimulus coordinates to raster pixels: `px = x * scale + offset_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterTransform {
    pub width: usize,
    pub height: usize,
    pub scale: f64,
    pub offset_x: f64,
    pub offset_y: f64,
    pub marker_size: usize,
    /// Region that was fitted into the frame: `[x0, y0, x1, y1]`, the union of
    /// the stimulus and all fixations.
    pub extent: [f64; 4],
}

impl RasterTransform {
    pub fn to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.scale + self.offset_x, y * self.scale + self.offset_y)
    }

    /// Pixel index range whose centers fall in `[a, b)` along one axis, where
    /// `a` and `b` are already in pixel units.
    fn covered(a: f64, b: f64) -> std::ops::Range<usize> {
        let lo = (a - 0.5).ceil().max(0.0);
        let hi = (b - 0.5).ceil().clamp(0.0, RASTER_SIZE as f64);
        (lo as usize).min(RASTER_SIZE)..(hi as usize).max(lo as usize).min(RASTER_SIZE)
    }
}

/// Channel values in `[0, 1]`, stored pixel-major as `(row, col, channel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondStreamRaster {
    data: Vec<f64>,
    pub transform: RasterTransform,
}

impl SecondStreamRaster {
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * RASTER_SIZE + col) * 3 + channel]
    }

    fn set(&mut self, row: usize, col: usize, channel: usize, v: f64) {
        self.data[(row * RASTER_SIZE + col) * 3 + channel] = v;
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (RASTER_SIZE, RASTER_SIZE, 3)
    }

    pub fn channel(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(c).step_by(3).copied()
    }

    /// 8-bit RGB with `round(v * 255)` per channel.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v * 255.0).round() as u8).collect()
    }

    pub fn to_png(&self) -> Result<Vec<u8>, FeatureError> {
        let mut buf = Cursor::new(Vec::new());
        PngEncoder::new(&mut buf)
            .write_image(&self.to_rgb8(), RASTER_SIZE as u32, RASTER_SIZE as u32, ExtendedColorType::Rgb8)
            .map_err(|e| FeatureError::Encode(e.to_string()))?;
        Ok(buf.into_inner())
    }

    pub fn sidecar_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.transform).expect("transform serializes");
        s.push('\n');
        s
    }
}

fn glyph(ch: char) -> &'static [u8; 8] {
    let code = if ch.is_ascii() { ch as usize } else { '?' as usize };
    &BASIC_LEGACY[code]
}

pub fn render_second_stream(trial: &Trial) -> SecondStreamRaster {
    let (mut x0, mut y0, mut x1, mut y1) = trial.stimulus.extent();
    for f in &trial.fixations {
        x0 = x0.min(f.x);
        y0 = y0.min(f.y);
        x1 = x1.max(f.x);
        y1 = y1.max(f.y);
    }
    let (w, h) = (x1 - x0, y1 - y0);
    let size = RASTER_SIZE as f64;
    let scale = if w.max(h) > 0.0 { size / w.max(h) } else { 1.0 };
    let transform = RasterTransform {
        width: RASTER_SIZE,
        height: RASTER_SIZE,
        scale,
        offset_x: (size - w * scale) / 2.0 - x0 * scale,
        offset_y: (size - h * scale) / 2.0 - y0 * scale,
        marker_size: MARKER_SIZE,
        extent: [x0, y0, x1, y1],
    };
    let mut r = SecondStreamRaster {
        data: vec![0.0; RASTER_SIZE * RASTER_SIZE * 3],
        transform,
    };
    let t = r.transform.clone();

    for b in trial.stimulus.boxes() {
        let (px0, py0) = t.to_pixel(b.x0, b.y0);
        let (px1, py1) = t.to_pixel(b.x1, b.y1);
        let bits = glyph(b.ch);
        for row in RasterTransform::covered(py0, py1) {
            let v = ((row as f64 + 0.5 - py0) / (py1 - py0) * 8.0).floor().clamp(0.0, 7.0) as usize;
            for col in RasterTransform::covered(px0, px1) {
                r.set(row, col, 1, 1.0);
                let u = ((col as f64 + 0.5 - px0) / (px1 - px0) * 8.0).floor().clamp(0.0, 7.0) as usize;
                if bits[v] >> u & 1 == 1 {
                    r.set(row, col, 0, 1.0);
                }
            }
        }
    }

    let starts = trial.fixations.iter().map(|f| f.start);
    let (smin, smax) = (starts.clone().min().unwrap_or(0), starts.max().unwrap_or(0));
    let half = (MARKER_SIZE / 2) as i64;
    for f in &trial.fixations {
        let level = if smax > smin {
            0.25 + 0.75 * (f.start - smin) as f64 / (smax - smin) as f64
        } else {
            1.0
        };
        let (px, py) = t.to_pixel(f.x, f.y);
        let (cc, cr) = ((px.floor() as i64).min(RASTER_SIZE as i64 - 1), (py.floor() as i64).min(RASTER_SIZE as i64 - 1));
        for row in cr - half..=cr + half {
            for col in cc - half..=cc + half {
                if (0..RASTER_SIZE as i64).contains(&row) && (0..RASTER_SIZE as i64).contains(&col) {
                    r.set(row as usize, col as usize, 2, level);
                }
            }
        }
    }
    r
}
