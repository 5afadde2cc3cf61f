//! Eigenvalue structure of the fixed point `O` of the generalized Hénon map,
//! the analytic saddle-chart curves in the `(A, C)` plane and the rasterized
//! chart.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::render::{RgbImage, Rgb, Window};

/// `χ(λ) = λ³ − Aλ² − Cλ − B`.
#[inline]
pub fn char_poly(a: f64, b: f64, c: f64, lambda: f64) -> f64 {
    ((lambda - a) * lambda - c) * lambda - b
}

#[inline]
pub fn char_poly_derivative(a: f64, c: f64, lambda: f64) -> f64 {
    (3.0 * lambda - 2.0 * a) * lambda - c
}

/// Largest-magnitude real root of the characteristic polynomial.
fn dominant_real_root(a: f64, b: f64, c: f64) -> f64 {
    // depressed cubic t³ + pt + q with λ = t + A/3
    let shift = a / 3.0;
    let p = -c - a * a / 3.0;
    let q = -2.0 * a * a * a / 27.0 - a * c / 3.0 - b;
    let half_q = 0.5 * q;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let t = if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-half_q - half_q.signum() * sq).cbrt();
        if u == 0.0 {
            0.0
        } else {
            u - third_p / u
        }
    } else if p == 0.0 {
        0.0
    } else {
        let m = 2.0 * (-third_p).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let tau = std::f64::consts::TAU / 3.0;
        (0..3)
            .map(|k| m * (theta - tau * k as f64).cos())
            .map(|t| t + shift)
            .max_by(|x, y| x.abs().total_cmp(&y.abs()))
            .expect("three candidates")
            - shift
    };
    polish(a, b, c, t + shift)
}

fn polish(a: f64, b: f64, c: f64, mut x: f64) -> f64 {
    let mut best = (char_poly(a, b, c, x).abs(), x);
    for _ in 0..8 {
        let d = char_poly_derivative(a, c, x);
        if d == 0.0 {
            break;
        }
        let next = x - char_poly(a, b, c, x) / d;
        if !next.is_finite() {
            break;
        }
        x = next;
        let r = char_poly(a, b, c, x).abs();
        if r < best.0 {
            best = (r, x);
        }
        if r == 0.0 {
            break;
        }
    }
    best.1
}

/// Roots of `λ² + αλ + β`; real roots carry an exactly zero imaginary part.
fn quadratic_roots(alpha: f64, beta: f64) -> [Complex64; 2] {
    let disc = alpha * alpha - 4.0 * beta;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let q = -0.5 * (alpha + if alpha >= 0.0 { sq } else { -sq });
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q, 0.0), Complex64::new(beta / q, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [
            Complex64::new(-0.5 * alpha, im),
            Complex64::new(-0.5 * alpha, -im),
        ]
    }
}

/// Roots of `λ³ − Aλ² − Cλ − B = 0`, sorted by descending modulus
/// (a conjugate pair lists the positive imaginary part first).
pub fn char_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let r1 = dominant_real_root(a, b, c);
    // χ(λ) = (λ − r1)(λ² + αλ + β)
    let alpha = r1 - a;
    let beta = if r1 != 0.0 { b / r1 } else { -c };
    let [r2, r3] = quadratic_roots(alpha, beta);
    let mut roots = [Complex64::new(r1, 0.0), r2, r3];
    roots.sort_by(|p, q| {
        q.norm()
            .total_cmp(&p.norm())
            .then(q.im.total_cmp(&p.im))
            .then(q.re.total_cmp(&p.re))
    });
    roots
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    StableNode,
    StableFocus,
    #[serde(rename = "saddle_1u")]
    Saddle1U,
    #[serde(rename = "saddle_focus_1u")]
    SaddleFocus1U,
    #[serde(rename = "saddle_2u")]
    Saddle2U,
    #[serde(rename = "saddle_focus_2u")]
    SaddleFocus2U,
    Unstable,
    OnBifurcation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    /// Stability triangle: all multipliers inside the unit circle.
    IV,
    D1,
    D2,
    D3,
    D4,
    Other,
}

impl Region {
    /// Homoclinic attractor type usually associated with the region.
    ///
    /// The names for `λ₁ > 1` are provisional: three attractor types share
    /// two sign patterns.
    pub fn attractor_name(&self) -> Option<&'static str> {
        match self {
            Region::D1 => Some("discrete Lorenz"),
            Region::D2 => Some("discrete figure-eight"),
            Region::D3 => Some("double figure-eight (provisional)"),
            Region::D4 => Some("super figure-eight / super Lorenz (provisional)"),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenClassification {
    /// Sorted by descending modulus.
    #[serde(serialize_with = "serialize_complex")]
    pub eigenvalues: [Complex64; 3],
    pub structure: Structure,
    /// Saddle value `|λ₁|·max(|λ₂|, |λ₃|)`, defined for real saddles with
    /// one-dimensional unstable manifold.
    pub sigma: Option<f64>,
    pub region: Region,
    /// Signs of the eigenvalues when all are real.
    pub signs: Option<[i8; 3]>,
}

fn serialize_complex<S: serde::Serializer>(v: &[Complex64; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(3))?;
    for z in v {
        seq.serialize_element(&(z.re, z.im))?;
    }
    seq.end()
}

impl EigenClassification {
    pub fn all_real(&self) -> bool {
        self.eigenvalues.iter().all(|z| z.im == 0.0)
    }

    /// Eigenvalue of smallest modulus (the strong-stable multiplier for a saddle).
    pub fn strong_stable(&self) -> Complex64 {
        self.eigenvalues[2]
    }

    /// `(λ₁, λ₂, λ₃)` with `λ₁` the unstable multiplier and, for opposite
    /// signs of the stable pair, `λ₂ > 0 > λ₃`.
    pub fn labelled_real(&self) -> Option<(f64, f64, f64)> {
        if !self.all_real() {
            return None;
        }
        let l1 = self.eigenvalues[0].re;
        let (s, t) = (self.eigenvalues[1].re, self.eigenvalues[2].re);
        Some(if s >= t { (l1, s, t) } else { (l1, t, s) })
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub const DEFAULT_BIFURCATION_TOL: f64 = 1e-9;

/// Classifies `O` by the moduli of its multipliers relative to the band
/// `1 ± tol`, and assigns the saddle-chart region.
pub fn classify_fixed_point(a: f64, b: f64, c: f64, tol: f64) -> EigenClassification {
    let eigenvalues = char_roots(a, b, c);
    let real = eigenvalues.iter().all(|z| z.im == 0.0);
    let moduli = eigenvalues.map(|z| z.norm());
    let outside = moduli.iter().filter(|&&m| m > 1.0 + tol).count();
    let inside = moduli.iter().filter(|&&m| m < 1.0 - tol).count();
    let structure = if outside + inside < 3 {
        Structure::OnBifurcation
    } else {
        match (outside, real) {
            (0, true) => Structure::StableNode,
            (0, false) => Structure::StableFocus,
            (1, true) => Structure::Saddle1U,
            (1, false) => Structure::SaddleFocus1U,
            (2, true) => Structure::Saddle2U,
            (2, false) => Structure::SaddleFocus2U,
            _ => Structure::Unstable,
        }
    };
    let sigma = (structure == Structure::Saddle1U).then(|| moduli[0] * moduli[1].max(moduli[2]));
    let signs = real.then(|| eigenvalues.map(|z| sign(z.re)));

    let mut region = match structure {
        Structure::StableNode | Structure::StableFocus => Region::IV,
        _ => Region::Other,
    };
    if let Some(s) = sigma.filter(|&s| s > 1.0) {
        debug_assert!(s > 1.0);
        let l1 = eigenvalues[0].re;
        let (p, q) = (eigenvalues[1].re, eigenvalues[2].re);
        let (pos, neg) = if p >= q { (p, q) } else { (q, p) };
        region = if l1 < -1.0 && pos > 0.0 && neg < 0.0 {
            if pos.abs() > neg.abs() {
                Region::D1
            } else if pos.abs() < neg.abs() {
                Region::D2
            } else {
                Region::Other
            }
        } else if l1 > 1.0 && pos < 0.0 && neg < 0.0 {
            Region::D3
        } else if l1 > 1.0 && pos > 0.0 && neg > 0.0 {
            Region::D4
        } else {
            Region::Other
        };
    }
    EigenClassification {
        eigenvalues,
        structure,
        sigma,
        region,
        signs,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CurveId {
    LPlus,
    LMinus,
    LPhi,
    Resonance,
    Sigma1,
    SPlus,
    SMinus,
}

impl CurveId {
    pub const ALL: [CurveId; 7] = [
        CurveId::LPlus,
        CurveId::LMinus,
        CurveId::LPhi,
        CurveId::Resonance,
        CurveId::Sigma1,
        CurveId::SPlus,
        CurveId::SMinus,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CurveId::LPlus => "L+",
            CurveId::LMinus => "L-",
            CurveId::LPhi => "Lphi",
            CurveId::Resonance => "resonance",
            CurveId::Sigma1 => "sigma=1",
            CurveId::SPlus => "S+",
            CurveId::SMinus => "S-",
        }
    }

    pub fn color(&self) -> Rgb {
        match self {
            CurveId::LPlus | CurveId::LMinus => [0, 0, 0],
            CurveId::LPhi => [0, 0, 140],
            CurveId::Resonance => [150, 0, 0],
            CurveId::Sigma1 => [120, 0, 160],
            CurveId::SPlus | CurveId::SMinus => [110, 70, 20],
        }
    }

    /// Residual of the curve's defining equation at `(a, c)`.
    ///
    /// For `S±` the double root is recovered from the critical points of `χ`.
    pub fn residual(&self, b: f64, a: f64, c: f64) -> f64 {
        match self {
            CurveId::LPlus => c - (1.0 - b - a),
            CurveId::LMinus => c - (1.0 + b + a),
            CurveId::LPhi => c - (b * b - 1.0 - b * a),
            CurveId::Resonance => a * c + b,
            CurveId::Sigma1 => c - (1.0 + b * b + a * b),
            CurveId::SPlus | CurveId::SMinus => {
                let disc = (a * a + 3.0 * c).max(0.0).sqrt();
                [(a + disc) / 3.0, (a - disc) / 3.0]
                    .iter()
                    .map(|&l| {
                        char_poly(a, b, c, l)
                            .abs()
                            .max(char_poly_derivative(a, c, l).abs())
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub id: CurveId,
    /// Polylines of `[A, C]` points; a curve may be split where it is not a
    /// single graph over `A`.
    pub segments: Vec<Vec<[f64; 2]>>,
}

impl Curve {
    pub fn points(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.segments.iter().flatten()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveSet {
    pub b: f64,
    pub curves: Vec<Curve>,
    /// `A`-interval `(B − 2, B + 2)` on which `Lφ` is a bifurcation curve.
    pub lphi_interval: (f64, f64),
}

impl CurveSet {
    pub fn get(&self, id: CurveId) -> &Curve {
        self.curves
            .iter()
            .find(|c| c.id == id)
            .expect("every curve id is present")
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

fn graph(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<Vec<[f64; 2]>> {
    if !(lo <= hi) {
        return vec![];
    }
    vec![linspace(lo, hi, n).map(|a| [a, f(a)]).collect()]
}

/// Double-root curves: `χ(λ) = χ′(λ) = 0` ⇔ `2λ³ − Aλ² + B = 0`, `C = 3λ² − 2Aλ`.
/// Returns `(S+, S−)` split by the sign of the double root.
fn double_root_curves(b: f64, lo: f64, hi: f64, n: usize) -> (Vec<Vec<[f64; 2]>>, Vec<Vec<[f64; 2]>>) {
    let mut plus: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut minus: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut open_plus: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut open_minus: Vec<Vec<[f64; 2]>> = Vec::new();
    for a in linspace(lo, hi, n) {
        // 2λ³ − Aλ² + B = 0  ⇔  λ³ − (A/2)λ² − 0·λ − (−B/2) = 0
        let mut roots: Vec<f64> = char_roots(a / 2.0, -b / 2.0, 0.0)
            .iter()
            .filter(|z| z.im == 0.0)
            .map(|z| polish(a / 2.0, -b / 2.0, 0.0, z.re))
            .collect();
        roots.sort_by(f64::total_cmp);
        roots.dedup();
        for (open, closed, want_positive) in [
            (&mut open_plus, &mut plus, true),
            (&mut open_minus, &mut minus, false),
        ] {
            let here: Vec<f64> = roots
                .iter()
                .copied()
                .filter(|&l| if want_positive { l > 0.0 } else { l < 0.0 })
                .collect();
            if here.len() != open.len() {
                closed.extend(open.drain(..).filter(|s| s.len() > 1));
                open.extend(here.iter().map(|_| Vec::new()));
            }
            for (seg, &l) in open.iter_mut().zip(&here) {
                seg.push([a, 3.0 * l * l - 2.0 * a * l]);
            }
        }
    }
    plus.extend(open_plus.into_iter().filter(|s| s.len() > 1));
    minus.extend(open_minus.into_iter().filter(|s| s.len() > 1));
    (plus, minus)
}

/// Samples the seven saddle-chart curves for fixed `B` over `a_range`.
pub fn chart_curves(b: f64, a_range: (f64, f64), samples: usize) -> Result<CurveSet> {
    let (lo, hi) = a_range;
    if samples < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(
            "chart curves need samples >= 2 and a finite, non-empty A range".into(),
        ));
    }
    let lphi = (b - 2.0, b + 2.0);
    let resonance_hi = hi.min(0.0);
    let resonance = if lo < resonance_hi {
        vec![linspace(lo, resonance_hi, samples)
            .filter(|&a| a < 0.0)
            .map(|a| [a, -b / a])
            .collect::<Vec<_>>()]
        .into_iter()
        .filter(|s| s.len() > 1)
        .collect()
    } else {
        vec![]
    };
    let (s_plus, s_minus) = double_root_curves(b, lo, hi, samples);
    let curves = vec![
        Curve {
            id: CurveId::LPlus,
            segments: graph(lo, hi, samples, |a| 1.0 - b - a),
        },
        Curve {
            id: CurveId::LMinus,
            segments: graph(lo, hi, samples, |a| 1.0 + b + a),
        },
        Curve {
            id: CurveId::LPhi,
            segments: graph(lo.max(lphi.0), hi.min(lphi.1), samples, |a| b * b - 1.0 - b * a),
        },
        Curve {
            id: CurveId::Resonance,
            segments: resonance,
        },
        Curve {
            id: CurveId::Sigma1,
            segments: graph(lo, hi, samples, |a| 1.0 + b * b + a * b),
        },
        Curve {
            id: CurveId::SPlus,
            segments: s_plus,
        },
        Curve {
            id: CurveId::SMinus,
            segments: s_minus,
        },
    ];
    Ok(CurveSet {
        b,
        curves,
        lphi_interval: lphi,
    })
}

/// Pixel category of the saddle chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ChartCategory {
    Region(Region),
    /// Not one of the named regions; carries the structure.
    Structure(Structure),
}

impl ChartCategory {
    pub fn of(cls: &EigenClassification) -> Self {
        match cls.region {
            Region::Other => ChartCategory::Structure(cls.structure),
            r => ChartCategory::Region(r),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ChartCategory::Region(r) => format!("{r:?}"),
            ChartCategory::Structure(Structure::Saddle1U) => "saddle_1u (sigma<1 or other signs)".into(),
            ChartCategory::Structure(s) => format!("{s:?}"),
        }
    }

    pub fn color(&self) -> Rgb {
        match self {
            ChartCategory::Region(Region::IV) => [170, 230, 170],
            ChartCategory::Region(Region::D1) => [255, 140, 0],
            ChartCategory::Region(Region::D2) => [255, 205, 120],
            ChartCategory::Region(Region::D3) => [110, 160, 255],
            ChartCategory::Region(Region::D4) => [50, 80, 200],
            ChartCategory::Region(Region::Other) => [240, 240, 240],
            ChartCategory::Structure(Structure::Saddle1U) => [225, 225, 225],
            ChartCategory::Structure(Structure::SaddleFocus1U) => [215, 215, 160],
            ChartCategory::Structure(Structure::Saddle2U) => [235, 185, 225],
            ChartCategory::Structure(Structure::SaddleFocus2U) => [190, 140, 190],
            ChartCategory::Structure(Structure::Unstable) => [160, 160, 160],
            ChartCategory::Structure(Structure::OnBifurcation) => [60, 60, 60],
            ChartCategory::Structure(Structure::StableNode | Structure::StableFocus) => [170, 230, 170],
        }
    }
}

#[derive(Clone, Debug)]
pub struct SaddleChart {
    pub window: Window,
    pub image: RgbImage,
    /// Row-major per-pixel category before the curve overlay (row 0 = top).
    pub categories: Vec<ChartCategory>,
    /// Categories present in the raster with their colors, in first-seen order.
    pub legend: Vec<(ChartCategory, Rgb)>,
    pub curves: CurveSet,
}

impl SaddleChart {
    pub fn category(&self, col: usize, row: usize) -> ChartCategory {
        self.categories[row * self.image.width + col]
    }
}

/// Maps `(A, C)` to continuous pixel coordinates of a `width × height` raster.
pub(crate) fn to_pixel(window: &Window, width: usize, height: usize, a: f64, c: f64) -> (f64, f64) {
    (
        (a - window.a_min) / (window.a_max - window.a_min) * width as f64,
        (window.c_max - c) / (window.c_max - window.c_min) * height as f64,
    )
}

pub(crate) fn overlay_curves(
    img: &mut RgbImage,
    curves: &CurveSet,
    project: impl Fn(f64, f64) -> (f64, f64),
    ids: &[CurveId],
) {
    for curve in curves.curves.iter().filter(|c| ids.contains(&c.id)) {
        for seg in &curve.segments {
            for w in seg.windows(2) {
                img.draw_line(project(w[0][0], w[0][1]), project(w[1][0], w[1][1]), curve.id.color());
            }
        }
    }
}

/// Rasterizes the saddle chart for fixed `B` (bifurcation band `tol = 0`) and
/// overlays the analytic curves.
pub fn render_saddle_chart(b: f64, window: Window, width: usize, height: usize) -> Result<SaddleChart> {
    window.validate()?;
    if width < 16 || height < 16 {
        return Err(Error::InvalidArgument(format!(
            "chart resolution must be at least 16x16 (got {width}x{height})"
        )));
    }
    use rayon::prelude::*;
    let categories: Vec<ChartCategory> = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let (a, c) = window.pixel_center(i % width, i / width, width, height);
            ChartCategory::of(&classify_fixed_point(a, b, c, 0.0))
        })
        .collect();
    let mut image = RgbImage::new(width, height, [255, 255, 255]);
    let mut legend: Vec<(ChartCategory, Rgb)> = Vec::new();
    for (i, cat) in categories.iter().enumerate() {
        image.put(i % width, i / width, cat.color());
        if !legend.iter().any(|(c, _)| c == cat) {
            legend.push((*cat, cat.color()));
        }
    }
    let curves = chart_curves(b, (window.a_min, window.a_max), 4 * width.max(height))?;
    overlay_curves(
        &mut image,
        &curves,
        |a, c| to_pixel(&window, width, height, a, c),
        &CurveId::ALL,
    );
    Ok(SaddleChart {
        window,
        image,
        categories,
        legend,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;
    use proptest::prelude::*;

    /// Independent route: eigenvalues of the companion matrix.
    fn companion_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
        let m = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, b, c, a);
        let mut r: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
        r.sort_by(|p, q| q.norm().total_cmp(&p.norm()));
        r
    }

    fn vieta(a: f64, b: f64, c: f64, r: &[Complex64; 3]) -> f64 {
        let sum = r[0] + r[1] + r[2];
        let pairs = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
        let prod = r[0] * r[1] * r[2];
        (sum - a).norm().max((pairs + c).norm()).max((prod - b).norm())
    }

    #[test]
    fn cube_roots_of_b() {
        let r = char_roots(0.0, 0.7, 0.0);
        let m = 0.7f64.cbrt();
        let expected = [
            Complex64::new(m, 0.0),
            Complex64::new(-0.4439, 0.7689),
            Complex64::new(-0.4439, -0.7689),
        ];
        for z in expected {
            assert!(r.iter().any(|x| (x - z).norm() < 1e-4));
        }
        assert!(r.iter().all(|x| (x.norm() - m).abs() < 1e-12));
    }

    #[test]
    fn unit_root_on_l_plus() {
        let r = char_roots(0.3, 0.5, 0.2);
        assert!(r.iter().any(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn d1_roots_match_companion_oracle() {
        let r = char_roots(-1.1, 0.7, 0.85);
        let oracle = companion_roots(-1.1, 0.7, 0.85);
        for (x, y) in r.iter().zip(&oracle) {
            assert!((x - y).norm() < 1e-10);
        }
        assert!((r[0].re + 1.345).abs() < 1e-3);
        assert!((r[1].re - 0.854).abs() < 1e-3);
        assert!((r[2].re + 0.609).abs() < 1e-3);
        for z in r {
            assert!(char_poly(-1.1, 0.7, 0.85, z.re).abs() < 1e-13);
        }
    }

    #[test]
    fn region_labels_of_example_attractors() {
        let d1 = classify_fixed_point(-1.1, 0.7, 0.85, DEFAULT_BIFURCATION_TOL);
        assert_eq!(d1.region, Region::D1);
        assert_eq!(d1.structure, Structure::Saddle1U);
        assert!((d1.sigma.unwrap() - 1.149).abs() < 1e-3);
        assert_eq!(d1.signs, Some([-1, 1, -1]));
        assert_eq!(classify_fixed_point(-1.86, 0.72, 0.03, 1e-9).region, Region::D2);
        assert_eq!(classify_fixed_point(0.82, 0.5, 2.06, 1e-9).region, Region::D3);
        assert_eq!(classify_fixed_point(3.702, 0.05, -2.749, 1e-9).region, Region::D4);
    }

    #[test]
    fn stable_origin_in_triangle() {
        let cls = classify_fixed_point(0.0, 0.5, 0.0, 1e-9);
        assert_eq!(cls.region, Region::IV);
        assert_eq!(cls.structure, Structure::StableFocus);
        for z in cls.eigenvalues {
            assert!((z.norm() - 0.7937).abs() < 1e-4);
        }
        assert!(cls.sigma.is_none());
    }

    #[test]
    fn bifurcation_band() {
        // λ = 1 exactly on L+
        let cls = classify_fixed_point(0.3, 0.5, 0.2, 1e-9);
        assert_eq!(cls.structure, Structure::OnBifurcation);
        assert_eq!(cls.region, Region::Other);
    }

    #[test]
    fn curve_examples() {
        let set = chart_curves(0.5, (-3.0, 3.0), 601).unwrap();
        let lp = set.get(CurveId::LPlus);
        assert!(lp.points().any(|p| (p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.2).abs() < 1e-12));
        let lphi = set.get(CurveId::LPhi);
        let first = lphi.segments[0].first().unwrap()[0];
        let last = lphi.segments[0].last().unwrap()[0];
        assert!((first + 1.5).abs() < 1e-12 && (last - 2.5).abs() < 1e-12);
        assert_eq!(set.lphi_interval, (-1.5, 2.5));
        assert!(set.get(CurveId::Resonance).points().all(|p| p[0] < 0.0));
        assert!(!set.get(CurveId::SPlus).segments.is_empty());
        assert!(!set.get(CurveId::SMinus).segments.is_empty());
        for curve in &set.curves {
            for p in curve.points() {
                assert!(curve.id.residual(0.5, p[0], p[1]).abs() < 1e-9, "{:?} at {p:?}", curve.id);
            }
        }
    }

    #[test]
    fn curves_reject_bad_arguments() {
        assert!(chart_curves(0.5, (0.0, 1.0), 1).is_err());
        assert!(chart_curves(0.5, (1.0, 0.0), 10).is_err());
    }

    #[test]
    fn chart_has_requested_size_and_d1_pixel() {
        let win = Window::new(-2.0, 0.0, 0.0, 1.2);
        let chart = render_saddle_chart(0.7, win, 200, 120).unwrap();
        assert_eq!((chart.image.width, chart.image.height), (200, 120));
        let (col, row) = win.pixel_of(-1.1, 0.85, 200, 120).unwrap();
        let d1 = ChartCategory::Region(Region::D1);
        assert_eq!(chart.category(col, row), d1);
        assert_eq!(chart.image.get(col, row), d1.color());
        assert!(render_saddle_chart(0.7, win, 8, 8).is_err());
        assert!(render_saddle_chart(0.7, Window::new(0.0, -1.0, 0.0, 1.0), 32, 32).is_err());
    }

    proptest! {
        #[test]
        fn vieta_and_oracle(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let r = char_roots(a, b, c);
            prop_assert!(vieta(a, b, c, &r) < 1e-9);
            prop_assert!(r[0].norm() >= r[1].norm() && r[1].norm() >= r[2].norm());
        }

        #[test]
        fn d_regions_are_real_saddles(a in -3.0f64..4.0, b in 0.01f64..1.0, c in -3.0f64..3.0) {
            let cls = classify_fixed_point(a, b, c, 1e-9);
            if matches!(cls.region, Region::D1 | Region::D2 | Region::D3 | Region::D4) {
                prop_assert_eq!(cls.structure, Structure::Saddle1U);
                prop_assert!(cls.all_real());
                prop_assert!(cls.sigma.unwrap() > 1.0);
            }
            if let Some(s) = cls.sigma {
                let m = cls.eigenvalues.map(|z| z.norm());
                prop_assert!((s - m[0] * m[1].max(m[2])).abs() < 1e-15);
            }
        }
    }
}
