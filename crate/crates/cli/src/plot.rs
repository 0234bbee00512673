//! Minimal PNG rendering: line plots with optional bands and heat maps.
//! Plots carry no text; axis ranges go into the summary.

use std::path::Path;

use image::{Rgb, RgbImage};

const W: u32 = 800;
const H: u32 = 500;
const MARGIN: u32 = 40;

pub const PALETTE: [[u8; 3]; 6] =
    [[31, 119, 180], [214, 39, 40], [44, 160, 44], [255, 127, 14], [148, 103, 189], [23, 190, 207]];

pub struct Series {
    pub points: Vec<(f64, f64)>,
    /// Optional `(lower, upper)` per point, drawn as a translucent band.
    pub band: Option<Vec<(f64, f64)>>,
    pub color: [u8; 3],
}

impl Series {
    pub fn line(points: Vec<(f64, f64)>, color: [u8; 3]) -> Self {
        Series { points, band: None, color }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Range {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

struct Frame {
    range: Range,
}

impl Frame {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let (x0, x1) = self.range.x;
        let (y0, y1) = self.range.y;
        let u = MARGIN as f64 + (x - x0) / (x1 - x0) * (W - 2 * MARGIN) as f64;
        let v = (H - MARGIN) as f64 - (y - y0) / (y1 - y0) * (H - 2 * MARGIN) as f64;
        (u, v)
    }
}

fn blend(img: &mut RgbImage, x: i64, y: i64, c: [u8; 3], alpha: f64) {
    if x < 0 || y < 0 || x >= W as i64 || y >= H as i64 {
        return;
    }
    let p = img.get_pixel_mut(x as u32, y as u32);
    for k in 0..3 {
        p.0[k] = (p.0[k] as f64 * (1.0 - alpha) + c[k] as f64 * alpha).round() as u8;
    }
}

fn segment(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: [u8; 3]) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for k in 0..=steps {
        let s = k as f64 / steps as f64;
        let (x, y) = (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1));
        for (dx, dy) in [(0, 0), (1, 0), (0, 1)] {
            blend(img, x.round() as i64 + dx, y.round() as i64 + dy, c, 1.0);
        }
    }
}

fn data_range(series: &[Series]) -> Range {
    let mut r = Range { x: (f64::INFINITY, f64::NEG_INFINITY), y: (f64::INFINITY, f64::NEG_INFINITY) };
    for s in series {
        let ys = s.points.iter().map(|p| p.1).chain(s.band.iter().flatten().flat_map(|b| [b.0, b.1]));
        for y in ys.filter(|y| y.is_finite()) {
            r.y = (r.y.0.min(y), r.y.1.max(y));
        }
        for x in s.points.iter().map(|p| p.0).filter(|x| x.is_finite()) {
            r.x = (r.x.0.min(x), r.x.1.max(x));
        }
    }
    for a in [&mut r.x, &mut r.y] {
        if !a.0.is_finite() {
            *a = (0.0, 1.0);
        } else if a.1 - a.0 <= 0.0 {
            *a = (a.0 - 0.5, a.1 + 0.5);
        } else {
            let pad = 0.05 * (a.1 - a.0);
            *a = (a.0 - pad, a.1 + pad);
        }
    }
    r
}

/// Renders the series on a white canvas with a frame and returns the data range used.
pub fn line_plot(path: &Path, series: &[Series]) -> anyhow::Result<Range> {
    let range = data_range(series);
    let frame = Frame { range };
    let mut img = RgbImage::from_pixel(W, H, Rgb([255, 255, 255]));
    for s in series {
        if let Some(band) = &s.band {
            for (p, b) in s.points.iter().zip(band) {
                let (u, lo) = frame.px(p.0, b.0);
                let (_, hi) = frame.px(p.0, b.1);
                for v in hi.round() as i64..=lo.round() as i64 {
                    blend(&mut img, u.round() as i64, v, s.color, 0.25);
                }
            }
        }
    }
    for s in series {
        let pts: Vec<(f64, f64)> =
            s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).map(|p| frame.px(p.0, p.1)).collect();
        for w in pts.windows(2) {
            segment(&mut img, w[0], w[1], s.color);
        }
        if pts.len() <= 32 {
            for p in &pts {
                for dx in -2..=2 {
                    for dy in -2..=2 {
                        blend(&mut img, p.0.round() as i64 + dx, p.1.round() as i64 + dy, s.color, 1.0);
                    }
                }
            }
        }
    }
    draw_frame(&mut img);
    img.save(path)?;
    Ok(range)
}

fn draw_frame(img: &mut RgbImage) {
    let black = [0, 0, 0];
    let (l, r, t, b) = (MARGIN as f64, (W - MARGIN) as f64, MARGIN as f64, (H - MARGIN) as f64);
    segment(img, (l, b), (r, b), black);
    segment(img, (l, t), (l, b), black);
}

fn colormap(s: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] =
        [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];
    let s = if s.is_finite() { s.clamp(0.0, 1.0) } else { 0.0 };
    let x = s * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let mut c = [0u8; 3];
    for i in 0..3 {
        c[i] = (STOPS[k][i] * (1.0 - f) + STOPS[k + 1][i] * f).round() as u8;
    }
    c
}

/// Row-major `rows × cols` values as an image scaled to `[min, max]`; row 0 at the bottom.
pub fn heat_map(path: &Path, values: &[f64], rows: usize, cols: usize, cell: u32) -> anyhow::Result<(f64, f64)> {
    let (lo, hi) = values.iter().filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| (a.0.min(v), a.1.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut img = RgbImage::new(cols as u32 * cell, rows as u32 * cell);
    for r in 0..rows {
        for c in 0..cols {
            let col = colormap((values[r * cols + c] - lo) / span);
            for dy in 0..cell {
                for dx in 0..cell {
                    img.put_pixel(c as u32 * cell + dx, (rows - 1 - r) as u32 * cell + dy, Rgb(col));
                }
            }
        }
    }
    img.save(path)?;
    Ok((lo, hi))
}
