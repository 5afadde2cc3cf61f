//! Lyapunov diagrams of the generalized Hénon map over the `(A, C)` plane.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{benettin, LyapunovSettings};
use crate::manifold::attractor_seed;
use crate::render::{Rgb, RgbImage, Window};
use crate::saddlechart::{overlay_curves, CurveId, CurveSet};
use crate::systems::{to_fixed, GhmParams, PolyNonlinearity, Vector};

/// Escape / unbounded orbit.
pub const ESCAPE: u8 = 0;
pub const STABLE: u8 = 1;
pub const QUASI_PERIODIC: u8 = 2;
pub const CHAOTIC: u8 = 3;
pub const CHAOTIC_NEUTRAL: u8 = 4;
pub const HYPERCHAOTIC: u8 = 5;
pub const HOMOCLINIC: u8 = 6;

pub const CLASS_NAMES: [&str; 7] = [
    "escape",
    "stable periodic",
    "quasi-periodic",
    "chaotic",
    "chaotic, L2 ~ 0",
    "hyperchaotic",
    "homoclinic attractor",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagramSettings {
    /// Zero band for the largest exponent.
    pub eps1: f64,
    /// Zero band for the second exponent.
    pub eps2: f64,
    /// Chaotic orbits whose measured iterates come closer than this to `O`
    /// are homoclinic.
    pub homoclinic_eps: f64,
    pub transient: usize,
    pub measure: usize,
    pub nonlinearity: PolyNonlinearity,
}

impl Default for DiagramSettings {
    fn default() -> Self {
        Self {
            eps1: 1e-3,
            eps2: 1e-4,
            homoclinic_eps: 1e-2,
            transient: 5_000,
            measure: 50_000,
            nonlinearity: PolyNonlinearity::minus_z_squared(),
        }
    }
}

impl DiagramSettings {
    fn validate(&self) -> Result<()> {
        if !(self.eps1 >= 0.0 && self.eps2 >= 0.0 && self.homoclinic_eps >= 0.0) {
            return Err(Error::InvalidArgument("diagram thresholds must be non-negative".into()));
        }
        if self.transient == 0 || self.measure == 0 {
            return Err(Error::InvalidArgument("diagram budgets must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PixelResult {
    pub class: u8,
    /// Descending; `NaN` for escaping orbits.
    pub exponents: [f64; 3],
    /// Smallest distance from a measured iterate to `O`.
    pub min_dist: f64,
}

/// Class code of an exponent triple (before the homoclinic override).
pub fn exponent_class(l: &[f64; 3], eps1: f64, eps2: f64) -> u8 {
    if l[0] < -eps1 {
        STABLE
    } else if l[0] <= eps1 {
        QUASI_PERIODIC
    } else if l[1] < -eps2 {
        CHAOTIC
    } else if l[1] <= eps2 {
        CHAOTIC_NEUTRAL
    } else {
        HYPERCHAOTIC
    }
}

/// Runs the pixel's orbit from `O + 10⁻³·e_u` and classifies it.
pub fn classify_pixel(a: f64, c: f64, b: f64, settings: &DiagramSettings) -> PixelResult {
    let params = GhmParams::new(a, b, c, settings.nonlinearity);
    let run_settings = LyapunovSettings {
        transient: settings.transient,
        measure: settings.measure,
        storage_cap: 2,
        dt: 1.0,
        reorth_every: 1,
        sample_every: 1,
        history_points: 1,
    };
    let x0: Vector<3> = to_fixed(&attractor_seed(&params)).expect("seed is three-dimensional");
    let mut min_dist = f64::INFINITY;
    match benettin(&params, x0, &run_settings, false, |x| min_dist = min_dist.min(x.norm())) {
        Ok(run) => {
            let mut l = run.exponents;
            l.sort_by(|p, q| q.total_cmp(p));
            let mut class = exponent_class(&l, settings.eps1, settings.eps2);
            if (CHAOTIC..=HYPERCHAOTIC).contains(&class) && min_dist < settings.homoclinic_eps {
                class = HOMOCLINIC;
            }
            PixelResult {
                class,
                exponents: l,
                min_dist,
            }
        }
        Err(_) => PixelResult {
            class: ESCAPE,
            exponents: [f64::NAN; 3],
            min_dist,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagramRaster {
    pub window: Window,
    pub b: f64,
    /// Grid nodes along `A`.
    pub width: usize,
    /// Grid nodes along `C`.
    pub height: usize,
    /// Row-major, row 0 at `C = c_max`.
    pub pixels: Vec<PixelResult>,
}

impl DiagramRaster {
    /// `(A, C)` of grid node `(col, row)`; the window corners are nodes.
    pub fn node(&self, col: usize, row: usize) -> (f64, f64) {
        let w = &self.window;
        let a = w.a_min + (w.a_max - w.a_min) * col as f64 / (self.width - 1) as f64;
        let c = w.c_max - (w.c_max - w.c_min) * row as f64 / (self.height - 1) as f64;
        (a, c)
    }

    pub fn get(&self, col: usize, row: usize) -> &PixelResult {
        &self.pixels[row * self.width + col]
    }

    pub fn class_counts(&self) -> [usize; 7] {
        let mut counts = [0; 7];
        for p in &self.pixels {
            counts[p.class as usize] += 1;
        }
        counts
    }

    /// CSV with columns `A, C, class, lambda1, lambda2, lambda3, min_dist_O`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("A,C,class,lambda1,lambda2,lambda3,min_dist_O\n");
        for row in 0..self.height {
            for col in 0..self.width {
                let (a, c) = self.node(col, row);
                let p = self.get(col, row);
                out.push_str(&crate::io::csv_row(&[
                    crate::io::num(a),
                    crate::io::num(c),
                    p.class.to_string(),
                    crate::io::num(p.exponents[0]),
                    crate::io::num(p.exponents[1]),
                    crate::io::num(p.exponents[2]),
                    crate::io::num(p.min_dist),
                ]));
            }
        }
        out
    }
}

/// Classifies every node of an `n_a × n_c` grid spanning `window`.
pub fn sweep_diagram(
    window: Window,
    grid: (usize, usize),
    b: f64,
    settings: &DiagramSettings,
    parallel: bool,
) -> Result<DiagramRaster> {
    window.validate()?;
    settings.validate()?;
    let (width, height) = grid;
    if width < 2 || height < 2 {
        return Err(Error::InvalidArgument(format!(
            "diagram grid must be at least 2x2 (got {width}x{height})"
        )));
    }
    if b == 0.0 || !b.is_finite() {
        return Err(Error::NonInvertible);
    }
    let mut raster = DiagramRaster {
        window,
        b,
        width,
        height,
        pixels: Vec::new(),
    };
    let nodes: Vec<(f64, f64)> = (0..width * height).map(|i| raster.node(i % width, i / width)).collect();
    raster.pixels = if parallel {
        nodes.par_iter().map(|&(a, c)| classify_pixel(a, c, b, settings)).collect()
    } else {
        nodes.iter().map(|&(a, c)| classify_pixel(a, c, b, settings)).collect()
    };
    Ok(raster)
}

/// Colors for class codes 0–6.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Palette(pub BTreeMap<u8, Rgb>);

impl Default for Palette {
    fn default() -> Self {
        Self(BTreeMap::from([
            (ESCAPE, [255, 255, 255]),
            (STABLE, [0, 153, 0]),
            (QUASI_PERIODIC, [135, 206, 250]),
            (CHAOTIC, [255, 215, 0]),
            (CHAOTIC_NEUTRAL, [220, 20, 60]),
            (HYPERCHAOTIC, [0, 0, 205]),
            (HOMOCLINIC, [96, 96, 96]),
        ]))
    }
}

impl Palette {
    /// Default colors with the given codes replaced.
    pub fn with_overrides(overrides: &BTreeMap<u8, Rgb>) -> Self {
        let mut p = Self::default();
        p.0.extend(overrides);
        p
    }

    pub fn color(&self, code: u8) -> Result<Rgb> {
        self.0
            .get(&code)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("palette has no color for class {code}")))
    }
}

const SWATCH: usize = 10;
const SWATCH_GAP: usize = 4;
pub const LEGEND_HEIGHT: usize = SWATCH + 2 * SWATCH_GAP;

/// Continuous pixel coordinates of `(A, C)` in a diagram image, where pixel
/// `(col, row)` is centered on grid node `(col, row)`.
pub fn diagram_pixel(raster: &DiagramRaster, a: f64, c: f64) -> (f64, f64) {
    let w = &raster.window;
    (
        (a - w.a_min) / (w.a_max - w.a_min) * (raster.width - 1) as f64 + 0.5,
        (w.c_max - c) / (w.c_max - w.c_min) * (raster.height - 1) as f64 + 0.5,
    )
}

/// One pixel per grid node, optional chart overlay, and a legend strip of
/// class swatches (codes 0–6, left to right) below the grid.
pub fn render_diagram(raster: &DiagramRaster, palette: &Palette, overlay: Option<&CurveSet>) -> Result<RgbImage> {
    let colors: Vec<Rgb> = (0..=HOMOCLINIC).map(|c| palette.color(c)).collect::<Result<_>>()?;
    let legend_width = 7 * (SWATCH + SWATCH_GAP) + SWATCH_GAP;
    let width = raster.width.max(legend_width);
    let mut grid = RgbImage::new(raster.width, raster.height, [255, 255, 255]);
    for row in 0..raster.height {
        for col in 0..raster.width {
            grid.put(col, row, colors[raster.get(col, row).class as usize]);
        }
    }
    if let Some(curves) = overlay {
        overlay_curves(&mut grid, curves, |a, c| diagram_pixel(raster, a, c), &CurveId::ALL);
    }
    let mut img = RgbImage::new(width, raster.height + LEGEND_HEIGHT, [255, 255, 255]);
    for row in 0..raster.height {
        for col in 0..raster.width {
            img.put(col, row, grid.get(col, row));
        }
    }
    let y0 = raster.height + SWATCH_GAP;
    for (k, color) in colors.iter().enumerate() {
        let x0 = SWATCH_GAP + k * (SWATCH + SWATCH_GAP);
        img.fill_rect(x0, y0, SWATCH, SWATCH, [0, 0, 0]);
        img.fill_rect(x0 + 1, y0 + 1, SWATCH - 2, SWATCH - 2, *color);
    }
    Ok(img)
}
