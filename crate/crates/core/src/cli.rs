//! Command-line frontend: configuration documents, command execution and
//! artifact writing.
//!
//! A run is configured by a TOML document with the sections `system`,
//! `lyapunov`, `lmp`, `diagram`, `chart`, `separatrix`, `poincare`,
//! `output` and `runtime`. Every key is optional; unknown keys are rejected.
//! Resolution fills every omitted key with its default so the manifest
//! written next to the artifacts reproduces the run on its own.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::diagram::{render_diagram, sweep_diagram, DiagramSettings, Palette, CLASS_NAMES};
use crate::error::{Error, Result};
use crate::io::{csv_row, num, write_text};
use crate::lmp::{analyze, natural_stride, LmpSettings, VerdictThresholds};
use crate::lyapunov::{check_necessary_conditions, lyapunov_spectrum, LyapunovReport, LyapunovSettings};
use crate::manifold::{
    attractor_seed, branch_swap_distance, find_fixed_point, fixed_point_spectrum, unstable_separatrix, BranchSide,
};
use crate::render::{padded_range, ImageFormat, Rgb, Scatter, Window};
use crate::saddlechart::{chart_curves, render_saddle_chart, CurveId, Structure};
use crate::systems::{
    poincare_section, CrossingDirection, ExtendedLorenz, FlowModel, GhmParams, Lorenz, PolyNonlinearity, SectionPlane,
    State, SystemSpec,
};

/// Environment variable that overrides `output.directory`.
pub const OUT_ENV: &str = "ATTRACTOR_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SystemName {
    #[default]
    Ghm,
    Lorenz,
    ExtendedLorenz,
}

/// Generalized Hénon map parameters `a, b, c` (with `nonlinearity`), or flow
/// parameters `sigma, r, beta` (and `mu` for the extended Lorenz system).
///
/// Defaults: ghm (−1.1, 0.7, 0.85) with f = −z²; lorenz (10, 28, 8/3);
/// extended_lorenz (10, 25, 8/3, 7). `initial` defaults to the attractor
/// seed near `O` for maps and to all ones for flows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub kind: SystemName,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub sigma: Option<f64>,
    pub r: Option<f64>,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    pub nonlinearity: Option<PolyNonlinearity>,
    pub initial: Option<Vec<f64>>,
}

/// Step counts are map iterations or integration steps. Map defaults:
/// 10⁴ transient, 10⁶ measured, 2×10⁴ stored. Flow defaults: dt = 10⁻³,
/// 100 time units transient, 10⁴ measured, reorthonormalization and
/// sampling every 10 steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSection {
    pub transient: Option<usize>,
    pub measure: Option<usize>,
    pub storage_cap: Option<usize>,
    pub dt: Option<f64>,
    pub reorth_every: Option<usize>,
    pub sample_every: Option<usize>,
}

/// `stride` defaults to 2 when the strong-stable multiplier of `O` is real
/// and negative, 1 otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmpSection {
    pub stride: Option<usize>,
    pub pair_budget: usize,
    pub seed: u64,
    pub warmup: usize,
    pub theta: f64,
    pub gap_min_rel: f64,
    pub collision_rel: f64,
}

impl Default for LmpSection {
    fn default() -> Self {
        let d = LmpSettings::default();
        Self {
            stride: None,
            pair_budget: d.pair_budget,
            seed: d.seed,
            warmup: d.warmup,
            theta: d.thresholds.theta,
            gap_min_rel: d.thresholds.gap_min_rel,
            collision_rel: d.thresholds.collision_rel,
        }
    }
}

/// Sweep of the `(A, C)` plane at the system's `B` and nonlinearity.
/// `palette` maps class codes ("0"–"6") to RGB triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagramSection {
    pub a_min: f64,
    pub a_max: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub grid: [usize; 2],
    pub eps1: f64,
    pub eps2: f64,
    pub homoclinic_eps: f64,
    pub transient: usize,
    pub measure: usize,
    pub overlay: bool,
    pub palette: BTreeMap<String, Rgb>,
}

impl Default for DiagramSection {
    fn default() -> Self {
        let d = DiagramSettings::default();
        Self {
            a_min: -2.0,
            a_max: 0.0,
            c_min: 0.0,
            c_max: 1.2,
            grid: [100, 100],
            eps1: d.eps1,
            eps2: d.eps2,
            homoclinic_eps: d.homoclinic_eps,
            transient: d.transient,
            measure: d.measure,
            overlay: true,
            palette: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartSection {
    pub a_min: f64,
    pub a_max: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub width: usize,
    pub height: usize,
    /// Samples per curve along `A`.
    pub samples: usize,
}

impl Default for ChartSection {
    fn default() -> Self {
        Self {
            a_min: -4.0,
            a_max: 4.0,
            c_min: -4.0,
            c_max: 4.0,
            width: 600,
            height: 600,
            samples: 2000,
        }
    }
}

/// Seeds on `O ± δ·t·e_u`; seeds stop beyond `bound_factor` times the
/// diagonal of the attractor's bounding box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparatrixSection {
    pub delta: f64,
    pub seeds: usize,
    pub iterations: usize,
    pub bound_factor: f64,
}

impl Default for SeparatrixSection {
    fn default() -> Self {
        Self {
            delta: 1e-4,
            seeds: 1000,
            iterations: 30,
            bound_factor: 10.0,
        }
    }
}

/// Plane `normal · x = offset`; defaults to `z = r − 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareSection {
    pub normal: Option<Vec<f64>>,
    pub offset: Option<f64>,
    pub direction: CrossingDirection,
    pub crossings: usize,
    pub max_steps: usize,
}

impl Default for PoincareSection {
    fn default() -> Self {
        Self {
            normal: None,
            offset: None,
            direction: CrossingDirection::Positive,
            crossings: 1000,
            max_steps: 1_000_000,
        }
    }
}

/// `format` applies to scatter plots (LMP graph, orbit, separatrix, section);
/// charts and diagrams are always PNG.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub format: ImageFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("attractor-out"),
            format: ImageFormat::Svg,
        }
    }
}

/// `threads = 0` uses every available core.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RuntimeSection {
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub lyapunov: LyapunovSection,
    pub lmp: LmpSection,
    pub diagram: DiagramSection,
    pub chart: ChartSection,
    pub separatrix: SeparatrixSection,
    pub poincare: PoincareSection,
    pub output: OutputSection,
    pub runtime: RuntimeSection,
}

/// Parses a configuration document and resolves every default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_with_overrides(text, &[])
}

/// Like [`parse_config`], with `section.key=value` assignments applied on top
/// of the document. Values are read as TOML and fall back to plain strings.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut doc: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    for item in overrides {
        apply_override(&mut doc, item)?;
    }
    let merged = toml::to_string(&doc).map_err(|e| Error::config("<document>", e.to_string()))?;
    let raw: RunConfig = toml::from_str(&merged).map_err(|e| toml_error(&merged, &e))?;
    raw.resolve()
}

fn apply_override(doc: &mut toml::Table, item: &str) -> Result<()> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::config(item, "expected key=value"))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config(path, "empty key segment"));
    }
    let mut table = doc;
    for k in &keys[..keys.len() - 1] {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(path, format!("`{k}` is not a section")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Turns a TOML error into a config error naming the offending key.
fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let message = e.message().trim().to_string();
    let key = e
        .span()
        .map(|span| key_at(text, span.start))
        .filter(|k| !k.is_empty())
        .or_else(|| quoted(&message))
        .unwrap_or_else(|| "<document>".into());
    Error::config(key, message)
}

/// `section.key` of the line containing byte `pos`.
fn key_at(text: &str, pos: usize) -> String {
    let pos = pos.min(text.len());
    let line_start = text[..pos].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("").trim();
    let section = text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    if line.starts_with('[') {
        return line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
    }
    let key = line.split('=').next().unwrap_or("").trim().trim_matches('"');
    match (section, key.is_empty()) {
        (Some(s), false) => format!("{s}.{key}"),
        (None, false) => key.to_string(),
        (Some(s), true) => s,
        (None, true) => String::new(),
    }
}

fn quoted(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let end = start + message[start..].find('`')?;
    Some(message[start..end].to_string())
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, "must be finite"))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(Error::config(key, format!("must be at least {min}, got {v}")));
    }
    Ok(())
}

fn forbid(key: &str, present: bool, kind: SystemName) -> Result<()> {
    if present {
        return Err(Error::config(key, format!("not a parameter of {kind:?} systems")));
    }
    Ok(())
}

impl RunConfig {
    /// Fills system-dependent defaults and checks ranges.
    pub fn resolve(mut self) -> Result<Self> {
        let s = &mut self.system;
        match s.kind {
            SystemName::Ghm => {
                forbid("system.sigma", s.sigma.is_some(), s.kind)?;
                forbid("system.r", s.r.is_some(), s.kind)?;
                forbid("system.beta", s.beta.is_some(), s.kind)?;
                forbid("system.mu", s.mu.is_some(), s.kind)?;
                let a = finite("system.a", *s.a.get_or_insert(-1.1))?;
                let b = finite("system.b", *s.b.get_or_insert(0.7))?;
                let c = finite("system.c", *s.c.get_or_insert(0.85))?;
                if b == 0.0 {
                    return Err(Error::config("system.b", "B = 0 makes the map non-invertible"));
                }
                let nl = *s.nonlinearity.get_or_insert(PolyNonlinearity::minus_z_squared());
                if s.initial.is_none() {
                    let p = GhmParams::new(a, b, c, nl);
                    s.initial = Some(attractor_seed(&p).as_slice().to_vec());
                }
            }
            SystemName::Lorenz | SystemName::ExtendedLorenz => {
                forbid("system.a", s.a.is_some(), s.kind)?;
                forbid("system.b", s.b.is_some(), s.kind)?;
                forbid("system.c", s.c.is_some(), s.kind)?;
                forbid("system.nonlinearity", s.nonlinearity.is_some(), s.kind)?;
                let extended = s.kind == SystemName::ExtendedLorenz;
                if !extended {
                    forbid("system.mu", s.mu.is_some(), s.kind)?;
                }
                finite("system.sigma", *s.sigma.get_or_insert(10.0))?;
                finite("system.r", *s.r.get_or_insert(if extended { 25.0 } else { 28.0 }))?;
                finite("system.beta", *s.beta.get_or_insert(8.0 / 3.0))?;
                if extended {
                    finite("system.mu", *s.mu.get_or_insert(7.0))?;
                }
                let dim = if extended { 4 } else { 3 };
                s.initial.get_or_insert_with(|| vec![1.0; dim]);
            }
        }
        let system = self.system_spec()?;
        let dim = system.dimension();
        let initial = self.system.initial.as_ref().expect("resolved above");
        if initial.len() != dim {
            return Err(Error::config(
                "system.initial",
                format!("expected {dim} coordinates, got {}", initial.len()),
            ));
        }
        for v in initial {
            finite("system.initial", *v)?;
        }

        let l = &mut self.lyapunov;
        let dt = *l.dt.get_or_insert(if system.is_flow() { crate::lyapunov::DEFAULT_DT } else { 1.0 });
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config("lyapunov.dt", "must be positive"));
        }
        let d = if system.is_flow() {
            LyapunovSettings::flow_defaults(dt)
        } else {
            LyapunovSettings::map_defaults()
        };
        at_least("lyapunov.transient", *l.transient.get_or_insert(d.transient), 1)?;
        at_least("lyapunov.measure", *l.measure.get_or_insert(d.measure), 1)?;
        at_least("lyapunov.storage_cap", *l.storage_cap.get_or_insert(d.storage_cap), 2)?;
        at_least("lyapunov.reorth_every", *l.reorth_every.get_or_insert(d.reorth_every), 1)?;
        at_least("lyapunov.sample_every", *l.sample_every.get_or_insert(d.sample_every), 1)?;

        let m = &mut self.lmp;
        let stride = *m.stride.get_or_insert_with(|| natural_stride(&system));
        if !(1..=2).contains(&stride) {
            return Err(Error::config("lmp.stride", format!("must be 1 or 2, got {stride}")));
        }
        at_least("lmp.pair_budget", m.pair_budget, 1)?;
        if !(m.theta > 0.0 && m.theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("lmp.theta", "must lie in (0, pi/2)"));
        }
        if !(m.gap_min_rel > 0.0 && m.gap_min_rel.is_finite()) {
            return Err(Error::config("lmp.gap_min_rel", "must be positive"));
        }
        if !(m.collision_rel > 0.0 && m.collision_rel <= m.gap_min_rel) {
            return Err(Error::config("lmp.collision_rel", "must lie in (0, gap_min_rel]"));
        }
        if m.warmup >= self.lyapunov.storage_cap.expect("resolved above") {
            return Err(Error::config("lmp.warmup", "must be smaller than lyapunov.storage_cap"));
        }

        let g = &self.diagram;
        if !(g.a_min < g.a_max) || !g.a_min.is_finite() || !g.a_max.is_finite() {
            return Err(Error::config("diagram.a_min", "window needs finite a_min < a_max"));
        }
        if !(g.c_min < g.c_max) || !g.c_min.is_finite() || !g.c_max.is_finite() {
            return Err(Error::config("diagram.c_min", "window needs finite c_min < c_max"));
        }
        at_least("diagram.grid", g.grid[0].min(g.grid[1]), 2)?;
        for (key, v) in [("diagram.eps1", g.eps1), ("diagram.eps2", g.eps2), ("diagram.homoclinic_eps", g.homoclinic_eps)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be non-negative"));
            }
        }
        at_least("diagram.transient", g.transient, 1)?;
        at_least("diagram.measure", g.measure, 1)?;
        self.palette()?;

        let ch = &self.chart;
        if !(ch.a_min < ch.a_max) || !(ch.c_min < ch.c_max) {
            return Err(Error::config("chart.a_min", "window needs a_min < a_max and c_min < c_max"));
        }
        at_least("chart.width", ch.width, 16)?;
        at_least("chart.height", ch.height, 16)?;
        at_least("chart.samples", ch.samples, 2)?;

        let sp = &self.separatrix;
        if !(sp.delta > 0.0 && sp.delta.is_finite()) {
            return Err(Error::config("separatrix.delta", "must be positive"));
        }
        at_least("separatrix.seeds", sp.seeds, 1)?;
        at_least("separatrix.iterations", sp.iterations, 1)?;
        if !(sp.bound_factor > 0.0 && sp.bound_factor.is_finite()) {
            return Err(Error::config("separatrix.bound_factor", "must be positive"));
        }

        let pc = &mut self.poincare;
        if system.is_flow() {
            let normal = pc.normal.get_or_insert_with(|| {
                let mut n = vec![0.0; dim];
                n[2] = 1.0;
                n
            });
            if normal.len() != dim {
                return Err(Error::config(
                    "poincare.normal",
                    format!("expected {dim} components, got {}", normal.len()),
                ));
            }
            let r = self.system.r.expect("resolved above");
            finite("poincare.offset", *pc.offset.get_or_insert(r - 1.0))?;
        }
        at_least("poincare.crossings", pc.crossings, 1)?;
        at_least("poincare.max_steps", pc.max_steps, 1)?;
        Ok(self)
    }

    /// The configured system; requires a resolved config.
    pub fn system_spec(&self) -> Result<SystemSpec> {
        let s = &self.system;
        let need = |key: &str, v: Option<f64>| v.ok_or_else(|| Error::config(key, "unresolved"));
        Ok(match s.kind {
            SystemName::Ghm => SystemSpec::Ghm(GhmParams::new(
                need("system.a", s.a)?,
                need("system.b", s.b)?,
                need("system.c", s.c)?,
                s.nonlinearity.unwrap_or_else(PolyNonlinearity::minus_z_squared),
            )),
            SystemName::Lorenz => SystemSpec::Flow(FlowModel::Lorenz(Lorenz {
                sigma: need("system.sigma", s.sigma)?,
                r: need("system.r", s.r)?,
                b: need("system.beta", s.beta)?,
            })),
            SystemName::ExtendedLorenz => SystemSpec::Flow(FlowModel::ExtendedLorenz(ExtendedLorenz {
                sigma: need("system.sigma", s.sigma)?,
                r: need("system.r", s.r)?,
                b: need("system.beta", s.beta)?,
                mu: need("system.mu", s.mu)?,
            })),
        })
    }

    pub fn initial_state(&self) -> Result<State> {
        self.system
            .initial
            .as_ref()
            .map(|v| State::from_column_slice(v))
            .ok_or_else(|| Error::config("system.initial", "unresolved"))
    }

    pub fn lyapunov_settings(&self) -> Result<LyapunovSettings> {
        let l = &self.lyapunov;
        let need = |key: &str, v: Option<usize>| v.ok_or_else(|| Error::config(key, "unresolved"));
        Ok(LyapunovSettings {
            transient: need("lyapunov.transient", l.transient)?,
            measure: need("lyapunov.measure", l.measure)?,
            storage_cap: need("lyapunov.storage_cap", l.storage_cap)?,
            dt: l.dt.ok_or_else(|| Error::config("lyapunov.dt", "unresolved"))?,
            reorth_every: need("lyapunov.reorth_every", l.reorth_every)?,
            sample_every: need("lyapunov.sample_every", l.sample_every)?,
            history_points: 200,
        })
    }

    pub fn lmp_settings(&self) -> LmpSettings {
        let m = &self.lmp;
        LmpSettings {
            stride: m.stride,
            pair_budget: m.pair_budget,
            seed: m.seed,
            warmup: m.warmup,
            thresholds: VerdictThresholds {
                theta: m.theta,
                gap_min_rel: m.gap_min_rel,
                collision_rel: m.collision_rel,
            },
        }
    }

    pub fn palette(&self) -> Result<Palette> {
        let mut overrides = BTreeMap::new();
        for (k, rgb) in &self.diagram.palette {
            let code: u8 = k
                .parse()
                .ok()
                .filter(|c| *c <= 6)
                .ok_or_else(|| Error::config(format!("diagram.palette.{k}"), "class codes are 0 to 6"))?;
            overrides.insert(code, *rgb);
        }
        Ok(Palette::with_overrides(&overrides))
    }

    /// The resolved config as a TOML document.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    fn ghm_params(&self, command: Command) -> Result<GhmParams> {
        match self.system_spec()? {
            SystemSpec::Ghm(p) => Ok(p),
            SystemSpec::Flow(_) => Err(Error::config(
                "system.kind",
                format!("`{}` needs kind = \"ghm\"", command.name()),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Lyapunov spectrum and necessary pseudohyperbolicity conditions.
    Lyapunov,
    /// Spectrum, backward strong-stable field, LMP graph and verdict.
    Lmp,
    /// Saddle chart of the fixed point O over the (A, C) plane.
    Chart,
    /// Lyapunov diagram over the (A, C) plane.
    Diagram,
    /// Stored attractor orbit.
    Orbit,
    /// Unstable separatrices of the saddle O.
    Separatrix,
    /// Poincaré section of a flow.
    Poincare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lyapunov => "lyapunov",
            Command::Lmp => "lmp",
            Command::Chart => "chart",
            Command::Diagram => "diagram",
            Command::Orbit => "orbit",
            Command::Separatrix => "separatrix",
            Command::Poincare => "poincare",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "attractor", version, about = "Pseudohyperbolicity toolkit for 3D maps and 3D/4D flows")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set system.a=-1.11` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory (takes precedence over ATTRACTOR_OUT and the file).
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
}

/// Text report and files written by one command.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub report: String,
    pub artifacts: Vec<PathBuf>,
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        write_text(&p, contents)
    }

    fn scatter(&mut self, stem: &str, plot: &Scatter, format: ImageFormat) -> Result<()> {
        let ext = match format {
            ImageFormat::Svg => "svg",
            ImageFormat::Png => "png",
        };
        let p = self.path(&format!("{stem}.{ext}"));
        plot.write(&p, format)
    }
}

/// Runs `command` with a resolved config, writing artifacts and the manifest
/// into `config.output.directory`.
pub fn execute(command: Command, config: &RunConfig) -> Result<RunSummary> {
    let dir = config.output.directory.clone();
    std::fs::create_dir_all(&dir)?;
    let mut out = Artifacts {
        dir,
        written: Vec::new(),
    };
    let manifest = format!("# attractor {}\n{}", command.name(), config.to_toml()?);
    out.text("manifest.toml", &manifest)?;
    let mut report = String::new();
    writeln!(report, "command: {}", command.name()).ok();
    describe_system(&mut report, config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.runtime.threads)
        .build()
        .map_err(|e| Error::config("runtime.threads", e.to_string()))?;
    pool.install(|| match command {
        Command::Lyapunov => run_lyapunov(config, &mut out, &mut report),
        Command::Lmp => run_lmp(config, &mut out, &mut report),
        Command::Chart => run_chart(config, &mut out, &mut report),
        Command::Diagram => run_diagram(config, &mut out, &mut report),
        Command::Orbit => run_orbit(config, &mut out, &mut report),
        Command::Separatrix => run_separatrix(config, &mut out, &mut report),
        Command::Poincare => run_poincare(config, &mut out, &mut report),
    })?;
    out.text("report.txt", &report)?;
    Ok(RunSummary {
        report,
        artifacts: out.written,
    })
}

fn describe_system(report: &mut String, config: &RunConfig) -> Result<()> {
    match config.system_spec()? {
        SystemSpec::Ghm(p) => {
            writeln!(report, "system: generalized Henon map A = {}, B = {}, C = {}", p.a, p.b, p.c).ok();
            let spec = fixed_point_spectrum(&p, &State::zeros(3))?;
            let cls = &spec.classification;
            let ev: Vec<String> = cls.eigenvalues.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
            let sigma = cls.sigma.map_or("n/a".to_string(), |v| format!("{v:.6}"));
            writeln!(report, "fixed point O: {:?}, region {:?}, sigma = {sigma}", cls.structure, cls.region).ok();
            writeln!(report, "eigenvalues: {}", ev.join(", ")).ok();
        }
        SystemSpec::Flow(FlowModel::Lorenz(m)) => {
            writeln!(report, "system: Lorenz sigma = {}, r = {}, b = {}", m.sigma, m.r, m.b).ok();
        }
        SystemSpec::Flow(FlowModel::ExtendedLorenz(m)) => {
            writeln!(report, "system: extended Lorenz sigma = {}, r = {}, b = {}, mu = {}", m.sigma, m.r, m.b, m.mu).ok();
        }
        SystemSpec::Flow(FlowModel::LinearTest(_)) => {}
    }
    Ok(())
}

fn spectrum_csv(report: &LyapunovReport) -> String {
    let n = report.exponents.len();
    let mut header = vec!["iteration".to_string()];
    header.extend((1..=n).map(|i| format!("lambda{i}")));
    let mut s = csv_row(&header);
    for (step, est) in &report.history {
        let mut row = vec![step.to_string()];
        row.extend(est.iter().map(|v| num(*v)));
        s.push_str(&csv_row(&row));
    }
    s
}

fn describe_spectrum(report: &mut String, r: &LyapunovReport) -> Result<()> {
    let ex: Vec<String> = r.exponents.iter().map(|v| format!("{v:.6}")).collect();
    let er: Vec<String> = r.convergence_error.iter().map(|v| format!("{v:.1e}")).collect();
    writeln!(report, "exponents: {}", ex.join(", ")).ok();
    writeln!(report, "convergence errors: {}", er.join(", ")).ok();
    writeln!(report, "sum: {:.6} over {} steps", r.sum(), r.iterations_used).ok();
    let check = check_necessary_conditions(r)?;
    for c in &check.conditions {
        writeln!(report, "  {:<24} {:>12.6}  {}", c.label, c.value, if c.holds { "holds" } else { "fails" }).ok();
    }
    writeln!(report, "necessary conditions: {}", if check.overall { "hold" } else { "fail" }).ok();
    Ok(())
}

fn run_lyapunov(config: &RunConfig, out: &mut Artifacts, report: &mut String) -> Result<()> {
    let system = config.system_spec()?;
    let (r, _) = lyapunov_spectrum(&system, &config.initial_state()?, &config.lyapunov_settings()?, false)?;
    describe_spectrum(report, &r)?;
    out.text("spectrum.csv", &spectrum_csv(&r))
}

fn run_lmp(config: &RunConfig, out: &mut Artifacts, report: &mut String) -> Result<()> {
    let system = config.system_spec()?;
    let a = analyze(
        &system,
        &config.initial_state()?,
        &config.lyapunov_settings()?,
        &config.lmp_settings(),
    )?;
    describe_spectrum(report, &a.report)?;
    writeln!(
        report,
        "backward exponent: {:.6} (minus the smallest forward exponent: {:.6})",
        a.field.backward_exponent,
        -a.report.min_exponent()
    )
    .ok();
    writeln!(
        report,
        "rates: contraction {:.6}, volume {:.6}, separation margin {:.6}",
        a.rates.contraction_rate_n1, a.rates.volume_rate_n2, a.rates.separation_margin
    )
    .ok();
    for (g, v) in a.graphs.iter().zip(&a.verdicts) {
        writeln!(
            report,
            "stride {}: {} pairs, gap {:.3e} ({:.3e} x diameter), {}",
            g.stride,
            g.len(),
            v.gap,
            v.gap / v.diameter,
            v.outcome
        )
        .ok();
    }
    let v = a.verdict();
    writeln!(report, "verdict: {} (stride {})", v.outcome, v.stride).ok();
    let g = a.graph();
    let mut csv = String::from("dx,dphi\n");
    for &(dx, dphi) in &g.pairs {
        csv.push_str(&csv_row(&[num(dx), num(dphi)]));
    }
    out.text("lmp.csv", &csv)?;
    out.text("spectrum.csv", &spectrum_csv(&a.report))?;
    let plot = g.scatter(&format!("LMP graph, stride {}: {}", g.stride, v.outcome), 20_000);
    out.scatter("lmp", &plot, config.output.format)
}

fn run_chart(config: &RunConfig, out: &mut Artifacts, report: &mut String) -> Result<()> {
    let p = config.ghm_params(Command::Chart)?;
    let ch = &config.chart;
    let window = Window::new(ch.a_min, ch.a_max, ch.c_min, ch.c_max);
    let chart = render_saddle_chart(p.b, window, ch.width, ch.height)?;
    chart.image.write_png(&out.path("chart.png"))?;
    let curves = chart_curves(p.b, (ch.a_min, ch.a_max), ch.samples)?;
    let mut csv = String::from("curve_id,A,C\n");
    for curve in &curves.curves {
        for pt in curve.points() {
            csv.push_str(&csv_row(&[curve.id.name().to_string(), num(pt[0]), num(pt[1])]));
        }
    }
    out.text("curves.csv", &csv)?;
    writeln!(report, "chart: B = {}, {}x{} pixels", p.b, ch.width, ch.height).ok();
    for (cat, _) in &chart.legend {
        let n = chart.categories.iter().filter(|c| *c == cat).count();
        writeln!(report, "  {:<28} {n}", cat.label()).ok();
    }
    for id in CurveId::ALL {
        writeln!(report, "curve {}: {} samples", id.name(), curves.get(id).points().count()).ok();
    }
    Ok(())
}

fn run_diagram(config: &RunConfig, out: &mut Artifacts, report: &mut String) -> Result<()> {
    let p = config.ghm_params(Command::Diagram)?;
    let g = &config.diagram;
    let window = Window::new(g.a_min, g.a_max, g.c_min, g.c_max);
    let settings = DiagramSettings {
        eps1: g.eps1,
        eps2: g.eps2,
        homoclinic_eps: g.homoclinic_eps,
        transient: g.transient,
        measure: g.measure,
        nonlinearity: p.nonlinearity,
    };
    let raster = sweep_diagram(window, (g.grid[0], g.grid[1]), p.b, &settings, true)?;
    out.text("diagram.csv", &raster.to_csv())?;
    let overlay = if g.overlay {
        Some(chart_curves(p.b, (g.a_min, g.a_max), 4 * g.grid[0].max(g.grid[1]))?)
    } else {
        None
    };
    render_diagram(&raster, &config.palette()?, overlay.as_ref())?.write_png(&out.path("diagram.png"))?;
    writeln!(report, "diagram: B = {}, {}x{} nodes", p.b, g.grid[0], g.grid[1]).ok();
    for (code, n) in raster.class_counts().iter().enumerate() {
        writeln!(report, "  class {code} {:<26} {n}", CLASS_NAMES[code]).ok();
    }
    Ok(())
}

fn coordinate_csv(points: &[State]) -> String {
    let dim = points.first().map_or(0, |p| p.len());
    let mut header = vec!["index".to_string()];
    header.extend((0..dim).map(|i| format!("x{}", i + 1)));
    let mut s = csv_row(&header);
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.iter().map(|v| num(*v)));
        s.push_str(&csv_row(&row));
    }
    s
}

fn projection(title: &str, points: &[State], x: usize, y: usize, color: Rgb) -> Scatter {
    Scatter {
        title: title.to_string(),
        x_label: format!("x{}", x + 1),
        y_label: format!("x{}", y + 1),
        x_range: padded_range(points.iter().map(|p| p[x])),
        y_range: padded_range(points.iter().map(|p| p[y])),
        points: points.iter().map(|p| (p[x], p[y], color)).collect(),
    }
}

fn run_orbit(config: &RunConfig, out: &mut Artifacts, report: &mut String) -> Result<()> {
    let system = config.system_spec()?;
    let (r, orbit) = lyapunov_spectrum(&system, &config.initial_state()?, &config.lyapunov_settings()?, true)?;
    let orbit = orbit.expect("orbit is stored on request");
    describe_spectrum(report, &r)?;
    writeln!(
        report,
        "orbit: {} stored points, stride {}, diameter {:.6}",
        orbit.len(),
        orbit.stride,
        orbit.diameter(orbit.len())
    )
    .ok();
    out.text("orbit.csv", &coordinate_csv(&orbit.points))?;
    let (x, y) = if system.is_flow() { (0, 2) } else { (0, 1) };
    out.scatter("orbit", &projection("attractor orbit", &orbit.points, x, y, [20, 60, 200]), config.output.format)
}

fn run_separatrix(config: &RunConfig, out: &mut Artifacts, report: &mut String) -> Result<()> {
    let p = config.ghm_params(Command::Separatrix)?;
    let system = SystemSpec::Ghm(p);
    let o = find_fixed_point(&system, &State::zeros(3), 50)?;
    if fixed_point_spectrum(&p, &o)?.classification.structure != Structure::Saddle1U {
        return Err(Error::NotSaddle);
    }
    let (_, orbit) = lyapunov_spectrum(&system, &config.initial_state()?, &config.lyapunov_settings()?, true)?;
    let orbit = orbit.expect("orbit is stored on request");
    let sp = &config.separatrix;
    let bound = sp.bound_factor * orbit.diameter(orbit.len());
    let pair = unstable_separatrix(&p, &o, sp.delta, sp.seeds, sp.iterations, bound)?;
    let mut csv = String::from("branch,seed_index,iterate_index,x,y,z\n");
    let mut plot_points = Vec::new();
    for (side, name, color) in [
        (BranchSide::Plus, "plus", [200, 30, 30]),
        (BranchSide::Minus, "minus", [20, 60, 200]),
    ] {
        let b = pair.branch(side);
        for ((pt, s), k) in b.points.iter().zip(&b.seed_index).zip(&b.iterate) {
            csv.push_str(&csv_row(&[
                name.to_string(),
                s.to_string(),
                k.to_string(),
                num(pt[0]),
                num(pt[1]),
                num(pt[2]),
            ]));
            plot_points.push((pt[0], pt[1], color));
        }
    }
    out.text("separatrix.csv", &csv)?;
    let all: Vec<&State> = pair.plus_branch.points.iter().chain(&pair.minus_branch.points).collect();
    let plot = Scatter {
        title: "unstable separatrices of O".into(),
        x_label: "x".into(),
        y_label: "y".into(),
        x_range: padded_range(all.iter().map(|p| p[0])),
        y_range: padded_range(all.iter().map(|p| p[1])),
        points: plot_points,
    };
    out.scatter("separatrix", &plot, config.output.format)?;
    writeln!(
        report,
        "separatrix: multiplier {:.6}, {} + {} points, bound {:.3}",
        pair.multiplier,
        pair.plus_branch.len(),
        pair.minus_branch.len(),
        bound
    )
    .ok();
    if pair.multiplier < 0.0 {
        let d = branch_swap_distance(&p, &pair);
        writeln!(report, "branch swap distance: {d:.3e} (10 delta = {:.1e})", 10.0 * sp.delta).ok();
    }
    Ok(())
}

fn run_poincare(config: &RunConfig, out: &mut Artifacts, report: &mut String) -> Result<()> {
    let model = match config.system_spec()? {
        SystemSpec::Flow(m) => m,
        SystemSpec::Ghm(_) => {
            return Err(Error::config("system.kind", "`poincare` needs a flow"));
        }
    };
    let pc = &config.poincare;
    let normal = pc.normal.clone().ok_or_else(|| Error::config("poincare.normal", "unresolved"))?;
    let offset = pc.offset.ok_or_else(|| Error::config("poincare.offset", "unresolved"))?;
    let plane = SectionPlane::new(normal, offset, pc.direction)?;
    let dt = config.lyapunov_settings()?.dt;
    let points = poincare_section(&model, &plane, &config.initial_state()?, pc.crossings, dt, pc.max_steps)?;
    out.text("poincare.csv", &coordinate_csv(&points))?;
    out.scatter("poincare", &projection("Poincare section", &points, 0, 1, [20, 60, 200]), config.output.format)?;
    writeln!(report, "poincare: {} crossings", points.len()).ok();
    Ok(())
}

fn load(args: &Args) -> Result<RunConfig> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut overrides = args.overrides.clone();
    if let Ok(dir) = std::env::var(OUT_ENV) {
        overrides.push(format!("output.directory={}", toml_string(&dir)));
    }
    if let Some(dir) = &args.out {
        overrides.push(format!("output.directory={}", toml_string(&dir.to_string_lossy())));
    }
    parse_with_overrides(&text, &overrides)
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Entry point of the `attractor` binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match load(&args).and_then(|config| execute(args.command, &config)) {
        Ok(summary) => {
            print!("{}", summary.report);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_resolves_all_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.system.kind, SystemName::Ghm);
        assert_eq!((c.system.a, c.system.b, c.system.c), (Some(-1.1), Some(0.7), Some(0.85)));
        assert_eq!(c.lyapunov.measure, Some(1_000_000));
        assert_eq!(c.lmp.stride, Some(2));
        assert_eq!(c.diagram.grid, [100, 100]);
        assert_eq!(c.system.initial.as_ref().map(Vec::len), Some(3));
    }

    #[test]
    fn manifest_round_trips() {
        let c = parse_config("[system]\nkind = \"lorenz\"\nr = 35.0\n").unwrap();
        let again = parse_config(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.lyapunov.transient, Some(100_000));
        assert_eq!(c.poincare.offset, Some(34.0));
    }

    fn config_key(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn zero_jacobian_is_rejected() {
        assert_eq!(config_key("[system]\nb = 0.0\n"), "system.b");
    }

    #[test]
    fn stride_outside_one_two_is_rejected() {
        assert_eq!(config_key("[lmp]\nstride = 3\n"), "lmp.stride");
    }

    #[test]
    fn errors_name_the_offending_key() {
        assert_eq!(config_key("[lmp]\nsede = 3\n"), "lmp.sede");
        assert_eq!(config_key("[diagram]\neps1 = \"small\"\n"), "diagram.eps1");
        assert_eq!(config_key("[sytem]\n"), "sytem");
        assert_eq!(config_key("[system]\nkind = \"ghm\"\nsigma = 10.0\n"), "system.sigma");
        assert_eq!(config_key("[diagram.palette]\n9 = [0, 0, 0]\n"), "diagram.palette.9");
    }

    #[test]
    fn overrides_take_precedence() {
        let c = parse_with_overrides(
            "[system]\na = -1.0\n",
            &["system.a=-1.11".into(), "system.c=0.77".into(), "output.format=png".into()],
        )
        .unwrap();
        assert_eq!(c.system.a, Some(-1.11));
        assert_eq!(c.system.c, Some(0.77));
        assert_eq!(c.output.format, ImageFormat::Png);
        let c = parse_with_overrides("", &["system.kind=extended_lorenz".into()]).unwrap();
        assert_eq!(c.system.mu, Some(7.0));
        assert_eq!(c.lmp.stride, Some(1));
    }

    #[test]
    fn malformed_override_is_a_config_error() {
        let e = parse_with_overrides("", &["system.a".into()]).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
