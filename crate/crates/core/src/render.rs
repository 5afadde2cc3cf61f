//! Image output shared by the chart, diagram, LMP and separatrix commands:
//! lossless RGB rasters written as PNG and point scatters written as SVG.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// Axis-aligned rectangle in the `(A, C)` parameter plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub a_min: f64,
    pub a_max: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl Window {
    pub fn new(a_min: f64, a_max: f64, c_min: f64, c_max: f64) -> Self {
        Self {
            a_min,
            a_max,
            c_min,
            c_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.a_min, self.a_max, self.c_min, self.c_max]
            .iter()
            .all(|v| v.is_finite())
            && self.a_min < self.a_max
            && self.c_min < self.c_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid window {self:?}")))
        }
    }

    pub fn contains(&self, a: f64, c: f64) -> bool {
        (self.a_min..=self.a_max).contains(&a) && (self.c_min..=self.c_max).contains(&c)
    }

    /// Center of pixel `(col, row)` in a `width × height` raster; row 0 is the top (`c_max`).
    pub fn pixel_center(&self, col: usize, row: usize, width: usize, height: usize) -> (f64, f64) {
        let a = self.a_min + (col as f64 + 0.5) / width as f64 * (self.a_max - self.a_min);
        let c = self.c_max - (row as f64 + 0.5) / height as f64 * (self.c_max - self.c_min);
        (a, c)
    }

    /// Pixel containing `(a, c)`, if inside the window.
    pub fn pixel_of(&self, a: f64, c: f64, width: usize, height: usize) -> Option<(usize, usize)> {
        if !self.contains(a, c) {
            return None;
        }
        let col = ((a - self.a_min) / (self.a_max - self.a_min) * width as f64) as usize;
        let row = ((self.c_max - c) / (self.c_max - self.c_min) * height as f64) as usize;
        Some((col.min(width - 1), row.min(height - 1)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&fill);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, c: Rgb) {
        if x < self.width && y < self.height {
            let i = 3 * (y * self.width + x);
            self.data[i..i + 3].copy_from_slice(&c);
        }
    }

    pub fn fill_rect(&mut self, x0: usize, y0: usize, w: usize, h: usize, c: Rgb) {
        for y in y0..(y0 + h).min(self.height) {
            for x in x0..(x0 + w).min(self.width) {
                self.put(x, y, c);
            }
        }
    }

    /// Draws the segment between two points given in continuous pixel
    /// coordinates (pixel `(i, j)` covers `[i, i+1) × [j, j+1)`).
    pub fn draw_line(&mut self, p: (f64, f64), q: (f64, f64), c: Rgb) {
        if ![p.0, p.1, q.0, q.1].iter().all(|v| v.is_finite()) {
            return;
        }
        let steps = ((q.0 - p.0).abs().max((q.1 - p.1).abs()) * 2.0).ceil().max(1.0) as usize;
        // Skip segments that are wildly outside the canvas.
        let limit = 4.0 * (self.width + self.height) as f64;
        if steps as f64 > 8.0 * limit {
            return;
        }
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = p.0 + t * (q.0 - p.0);
            let y = p.1 + t * (q.1 - p.1);
            if x >= 0.0 && y >= 0.0 {
                self.put(x as usize, y as usize, c);
            }
        }
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        let mut enc = png::Encoder::new(file, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        writer
            .write_image_data(&self.data)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Png,
    Svg,
}

/// A 2D scatter plot with labelled axes, written as SVG or rasterized to PNG.
#[derive(Clone, Debug)]
pub struct Scatter {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// `(x, y, color)` triples.
    pub points: Vec<(f64, f64, Rgb)>,
}

const PLOT_W: f64 = 800.0;
const PLOT_H: f64 = 600.0;
const MARGIN: f64 = 60.0;

impl Scatter {
    fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let px = MARGIN + (x - x0) / (x1 - x0) * (PLOT_W - 2.0 * MARGIN);
        let py = PLOT_H - MARGIN - (y - y0) / (y1 - y0) * (PLOT_H - 2.0 * MARGIN);
        (px, py)
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (l, r, t, b) = (MARGIN, PLOT_W - MARGIN, MARGIN, PLOT_H - MARGIN);
        let _ = writeln!(
            s,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="30" font-size="16" text-anchor="middle">{}</text>"#,
            PLOT_W / 2.0,
            xml_escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
            PLOT_W / 2.0,
            PLOT_H - 15.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            PLOT_H / 2.0,
            PLOT_H / 2.0,
            xml_escape(&self.y_label)
        );
        for (v, anchor, (px, py)) in [
            (self.x_range.0, "start", (l, b + 18.0)),
            (self.x_range.1, "end", (r, b + 18.0)),
        ] {
            let _ = writeln!(
                s,
                r#"<text x="{px}" y="{py}" font-size="11" text-anchor="{anchor}">{v:.4}</text>"#
            );
        }
        for (v, py) in [(self.y_range.0, b), (self.y_range.1, t + 10.0)] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{py}" font-size="11" text-anchor="end">{v:.4}</text>"#,
                l - 4.0
            );
        }
        let _ = writeln!(s, r#"<g stroke="none">"#);
        for &(x, y, c) in &self.points {
            let (px, py) = self.project(x, y);
            if px.is_finite() && py.is_finite() {
                let _ = writeln!(
                    s,
                    r##"<circle cx="{px:.2}" cy="{py:.2}" r="1" fill="#{:02x}{:02x}{:02x}"/>"##,
                    c[0], c[1], c[2]
                );
            }
        }
        let _ = writeln!(s, "</g>\n</svg>");
        s
    }

    pub fn to_raster(&self) -> RgbImage {
        let mut img = RgbImage::new(PLOT_W as usize, PLOT_H as usize, [255, 255, 255]);
        let (l, r, t, b) = (MARGIN, PLOT_W - MARGIN, MARGIN, PLOT_H - MARGIN);
        img.draw_line((l, t), (r, t), [0, 0, 0]);
        img.draw_line((l, b), (r, b), [0, 0, 0]);
        img.draw_line((l, t), (l, b), [0, 0, 0]);
        img.draw_line((r, t), (r, b), [0, 0, 0]);
        for &(x, y, c) in &self.points {
            let (px, py) = self.project(x, y);
            if px >= 0.0 && py >= 0.0 {
                img.put(px as usize, py as usize, c);
            }
        }
        img
    }

    pub fn write(&self, path: &Path, format: ImageFormat) -> Result<()> {
        match format {
            ImageFormat::Svg => {
                let mut f = BufWriter::new(File::create(path)?);
                f.write_all(self.to_svg().as_bytes())?;
                f.flush()?;
                Ok(())
            }
            ImageFormat::Png => self.to_raster().write_png(path),
        }
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Range of `values` padded by 2 %, never degenerate.
pub fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.02).max(1e-12);
    (lo - pad, hi + pad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_lookup_round_trips() {
        let w = Window::new(-2.0, 0.0, 0.0, 1.2);
        let (col, row) = w.pixel_of(-1.1, 0.85, 200, 120).unwrap();
        let (a, c) = w.pixel_center(col, row, 200, 120);
        assert!((a + 1.1).abs() <= 0.5 * 2.0 / 200.0 + 1e-12);
        assert!((c - 0.85).abs() <= 0.5 * 1.2 / 120.0 + 1e-12);
        assert!(w.pixel_of(0.5, 0.5, 10, 10).is_none());
        assert!(Window::new(1.0, 0.0, 0.0, 1.0).validate().is_err());
    }

    #[test]
    fn png_roundtrip_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let mut img = RgbImage::new(20, 10, [1, 2, 3]);
        img.draw_line((0.0, 0.0), (19.5, 9.5), [255, 0, 0]);
        img.write_png(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[1..4], b"PNG");
        let decoder = png::Decoder::new(std::io::BufReader::new(File::open(&path).unwrap()));
        let reader = decoder.read_info().unwrap();
        assert_eq!(reader.info().width, 20);
        assert_eq!(reader.info().height, 10);
    }

    #[test]
    fn svg_contains_points() {
        let s = Scatter {
            title: "t".into(),
            x_label: "dx".into(),
            y_label: "dphi".into(),
            x_range: (0.0, 1.0),
            y_range: (0.0, 3.2),
            points: vec![(0.5, 1.0, [0, 0, 255]); 3],
        };
        let svg = s.to_svg();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
