//! Forward Lyapunov spectra (with orbit storage), the backward strong-stable
//! direction field attached to a stored orbit, and the exponent conditions
//! necessary for pseudohyperbolicity.

use nalgebra::Vector4;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::systems::{
    dispatch_stepper, is_escaped, to_dynamic, to_fixed, Matrix, State, Stepper, SystemSpec, Vector,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Map,
    Flow,
}

impl From<&SystemSpec> for SystemKind {
    fn from(s: &SystemSpec) -> Self {
        if s.is_flow() {
            SystemKind::Flow
        } else {
            SystemKind::Map
        }
    }
}

/// Step counts are map iterations or integration steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovSettings {
    pub transient: usize,
    pub measure: usize,
    /// Maximum number of stored orbit points; longer runs are thinned uniformly.
    pub storage_cap: usize,
    /// Integration step (ignored for maps).
    pub dt: f64,
    pub reorth_every: usize,
    /// Minimum number of steps between stored samples.
    pub sample_every: usize,
    /// Number of running-estimate checkpoints kept in the report.
    pub history_points: usize,
}

pub const DEFAULT_DT: f64 = 1e-3;

impl LyapunovSettings {
    pub fn map_defaults() -> Self {
        Self {
            transient: 10_000,
            measure: 1_000_000,
            storage_cap: 20_000,
            dt: 1.0,
            reorth_every: 1,
            sample_every: 1,
            history_points: 200,
        }
    }

    /// 100 time units of transient, 10⁴ of measurement.
    pub fn flow_defaults(dt: f64) -> Self {
        Self {
            transient: (100.0 / dt).round() as usize,
            measure: (1e4 / dt).round() as usize,
            storage_cap: 20_000,
            dt,
            reorth_every: 10,
            sample_every: 10,
            history_points: 200,
        }
    }

    pub fn defaults_for(system: &SystemSpec) -> Self {
        if system.is_flow() {
            Self::flow_defaults(DEFAULT_DT)
        } else {
            Self::map_defaults()
        }
    }

    fn validate(&self, system: &SystemSpec) -> Result<()> {
        if self.transient == 0 || self.measure == 0 {
            return Err(Error::InvalidArgument(
                "transient and measure must be at least 1".into(),
            ));
        }
        if self.reorth_every == 0 || self.sample_every == 0 || self.storage_cap < 2 {
            return Err(Error::InvalidArgument(
                "reorth_every, sample_every >= 1 and storage_cap >= 2 required".into(),
            ));
        }
        if system.is_flow() && !(self.dt > 0.0) {
            return Err(Error::InvalidArgument("flow step dt must be positive".into()));
        }
        Ok(())
    }

    fn storage_stride(&self) -> usize {
        self.sample_every
            .max(self.measure.div_ceil(self.storage_cap - 1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovReport {
    /// Sorted descending.
    pub exponents: Vec<f64>,
    pub iterations_used: usize,
    /// `|full-run estimate − last-half estimate|`, aligned with `exponents`.
    pub convergence_error: Vec<f64>,
    pub kind: SystemKind,
    /// Running estimates `(step, exponents)` at evenly spaced checkpoints.
    pub history: Vec<(usize, Vec<f64>)>,
}

impl LyapunovReport {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }

    pub fn max_error(&self) -> f64 {
        self.convergence_error.iter().fold(0.0, |m, &e| m.max(e))
    }

    pub fn min_exponent(&self) -> f64 {
        *self.exponents.last().expect("report has exponents")
    }
}

/// Post-transient orbit samples shared by the forward and backward passes.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub system: SystemSpec,
    pub points: Vec<State>,
    /// Steps between consecutive stored samples.
    pub stride: usize,
    /// Integration step for flows.
    pub dt: Option<f64>,
    pub transient_discarded: usize,
}

impl OrbitRecord {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn step_dt(&self) -> f64 {
        self.dt.unwrap_or(crate::lyapunov::DEFAULT_DT)
    }

    /// Diagonal of the coordinate-wise bounding box of the first `count` points.
    pub fn diameter(&self, count: usize) -> f64 {
        bounding_diagonal(&self.points[..count.min(self.points.len())])
    }
}

pub(crate) fn bounding_diagonal(points: &[State]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in points {
        for k in 0..p.len() {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi - lo).norm()
}

/// Raw output of the Benettin loop before sorting.
pub(crate) struct BenettinRun<const D: usize> {
    pub exponents: [f64; D],
    pub errors: [f64; D],
    pub history: Vec<(usize, [f64; D])>,
    pub stored: Vec<Vector<D>>,
    pub stride: usize,
}

/// Gram–Schmidt in place; returns the log-norms of the orthogonalized columns.
#[inline]
fn reorthonormalize<const D: usize>(frame: &mut Matrix<D>) -> Option<[f64; D]> {
    let mut logs = [0.0; D];
    for i in 0..D {
        for j in 0..i {
            let proj = frame.column(i).dot(&frame.column(j));
            let cj = frame.column(j).clone_owned();
            frame.column_mut(i).axpy(-proj, &cj, 1.0);
        }
        let norm = frame.column(i).norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        frame.column_mut(i).unscale_mut(norm);
        logs[i] = norm.ln();
    }
    Some(logs)
}

/// Benettin co-evolution of an orthonormal frame. `observe` sees every
/// post-transient state, including the first.
pub(crate) fn benettin<const D: usize, S: Stepper<D>>(
    stepper: &S,
    x0: Vector<D>,
    settings: &LyapunovSettings,
    store: bool,
    mut observe: impl FnMut(&Vector<D>),
) -> Result<BenettinRun<D>> {
    let escape = |index: usize, x: &Vector<D>| Error::Escape {
        index,
        state: x.as_slice().to_vec(),
    };
    let mut x = x0;
    if is_escaped(&x) {
        return Err(escape(0, &x));
    }
    for k in 1..=settings.transient {
        x = stepper.advance(&x);
        if is_escaped(&x) {
            return Err(escape(k, &x));
        }
    }

    let tau = stepper.step_time();
    let stride = settings.storage_stride();
    let mut stored = Vec::new();
    if store {
        stored.reserve(settings.measure / stride + 1);
        stored.push(x);
    }
    observe(&x);

    let half_at = settings.measure / 2;
    let mut half: Option<(usize, [f64; D])> = None;
    let hist_n = settings.history_points.max(1);
    let mut next_hist = 1usize;
    let mut history = Vec::with_capacity(hist_n);

    let mut frame = Matrix::<D>::identity();
    let mut sums = [0.0; D];
    for k in 1..=settings.measure {
        let (nx, nf) = stepper.advance_tangent(&x, &frame);
        x = nx;
        frame = nf;
        if is_escaped(&x) {
            return Err(escape(settings.transient + k, &x));
        }
        observe(&x);
        if store && k % stride == 0 {
            stored.push(x);
        }
        if k % settings.reorth_every == 0 || k == settings.measure {
            let logs = reorthonormalize(&mut frame).ok_or_else(|| escape(settings.transient + k, &x))?;
            for (s, l) in sums.iter_mut().zip(logs) {
                *s += l;
            }
            if half.is_none() && k >= half_at {
                half = Some((k, sums));
            }
            if next_hist <= hist_n && k * hist_n >= next_hist * settings.measure {
                let t = k as f64 * tau;
                history.push((k, sums.map(|s| s / t)));
                while next_hist <= hist_n && k * hist_n >= next_hist * settings.measure {
                    next_hist += 1;
                }
            }
        }
    }

    let total_time = settings.measure as f64 * tau;
    let exponents = sums.map(|s| s / total_time);
    let mut errors = [0.0; D];
    if let Some((k_half, half_sums)) = half {
        let rest = (settings.measure - k_half) as f64 * tau;
        if rest > 0.0 {
            for i in 0..D {
                let late = (sums[i] - half_sums[i]) / rest;
                errors[i] = (exponents[i] - late).abs();
            }
        }
    }
    Ok(BenettinRun {
        exponents,
        errors,
        history,
        stored,
        stride,
    })
}

/// Descending permutation of `values`.
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

impl<const D: usize> BenettinRun<D> {
    pub(crate) fn into_report(self, kind: SystemKind, measure: usize) -> LyapunovReport {
        let order = descending_order(&self.exponents);
        let pick = |v: &[f64; D]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        LyapunovReport {
            exponents: pick(&self.exponents),
            iterations_used: measure,
            convergence_error: pick(&self.errors),
            kind,
            history: self.history.iter().map(|(k, v)| (*k, pick(v))).collect(),
        }
    }
}

/// Forward Lyapunov spectrum from `x0`. With `store`, the post-transient
/// orbit is recorded (uniformly thinned to at most `storage_cap` points).
///
/// Non-convergence is not an error; see [`LyapunovReport::convergence_error`].
pub fn lyapunov_spectrum(
    system: &SystemSpec,
    x0: &State,
    settings: &LyapunovSettings,
    store: bool,
) -> Result<(LyapunovReport, Option<OrbitRecord>)> {
    settings.validate(system)?;
    let kind = SystemKind::from(system);
    dispatch_stepper!(system, settings.dt, |stepper, DIM| {
        let x = to_fixed::<DIM>(x0)?;
        let run = benettin(stepper, x, settings, store, |_| {})?;
        let orbit = store.then(|| OrbitRecord {
            system: *system,
            points: run.stored.iter().map(to_dynamic).collect(),
            stride: run.stride,
            dt: system.is_flow().then_some(settings.dt),
            transient_discarded: settings.transient,
        });
        Ok((run.into_report(kind, settings.measure), orbit))
    })
}

/// Unit strong-stable directions `N₁` attached to stored orbit points.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionField {
    /// `vectors[i]` belongs to `orbit.points[i]`.
    pub vectors: Vec<State>,
    /// Mean log growth rate of the backward propagation, per unit time.
    pub backward_exponent: f64,
    pub warmup_discarded: usize,
}

impl DirectionField {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub const DEFAULT_FIELD_WARMUP: usize = 1_000;

/// Propagates a tangent vector backward along the stored orbit by solving the
/// forward one-step linearizations, renormalizing after every step.
///
/// Intermediate states between stored samples are regenerated forward from
/// each sample, reproducing the original orbit exactly; the state itself is
/// never evolved backward. The `warmup` latest samples are dropped while the
/// vector aligns with the dominant backward direction.
pub fn backward_strong_direction_field(orbit: &OrbitRecord, warmup: usize) -> Result<DirectionField> {
    let n = orbit.len();
    if n < warmup + 2 {
        return Err(Error::InvalidArgument(format!(
            "orbit of {n} points is too short for a warmup of {warmup}"
        )));
    }
    dispatch_stepper!(&orbit.system, orbit.step_dt(), |stepper, DIM| {
        let points = orbit
            .points
            .iter()
            .map(to_fixed::<DIM>)
            .collect::<Result<Vec<_>>>()?;
        let (vectors, rate) = backward_kernel(stepper, &points, orbit.stride, warmup)?;
        Ok(DirectionField {
            vectors: vectors.iter().map(to_dynamic).collect(),
            backward_exponent: rate / stepper.step_time(),
            warmup_discarded: warmup,
        })
    })
}

fn seed_vector<const D: usize>() -> Vector<D> {
    let all = Vector4::new(1.0, 0.5, 0.25, 0.125);
    Vector::<D>::from_iterator(all.iter().copied().take(D)).normalize()
}

fn backward_kernel<const D: usize, S: Stepper<D>>(
    stepper: &S,
    points: &[Vector<D>],
    stride: usize,
    warmup: usize,
) -> Result<(Vec<Vector<D>>, f64)> {
    let n = points.len();
    let retained = n - warmup;
    let mut out = vec![Vector::<D>::zeros(); n];
    let mut v = seed_vector::<D>();
    out[n - 1] = v;
    let mut steps: Vec<Matrix<D>> = Vec::with_capacity(stride);
    let mut log_growth = 0.0;
    let mut counted = 0usize;
    for i in (0..n - 1).rev() {
        steps.clear();
        let mut y = points[i];
        for _ in 0..stride {
            let (ny, m) = stepper.advance_tangent(&y, &Matrix::<D>::identity());
            steps.push(m);
            y = ny;
        }
        let mut seg = 0.0;
        for m in steps.iter().rev() {
            let w = solve_pivoted(m, &v).ok_or(Error::Singular { index: i })?;
            let norm = w.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::Singular { index: i });
            }
            v = w / norm;
            seg += norm.ln();
        }
        out[i] = v;
        if i + 1 < retained {
            log_growth += seg;
            counted += stride;
        }
    }
    out.truncate(retained);
    let rate = if counted > 0 {
        log_growth / counted as f64
    } else {
        f64::NAN
    };
    Ok((out, rate))
}

/// Gaussian elimination with partial pivoting for small fixed-size systems.
fn solve_pivoted<const D: usize>(m: &Matrix<D>, rhs: &Vector<D>) -> Option<Vector<D>> {
    let mut a = *m;
    let mut b = *rhs;
    for k in 0..D {
        let p = (k..D).max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))?;
        if a[(p, k)] == 0.0 {
            return None;
        }
        a.swap_rows(k, p);
        b.swap_rows(k, p);
        for i in k + 1..D {
            let f = a[(i, k)] / a[(k, k)];
            for j in k..D {
                a[(i, j)] -= f * a[(k, j)];
            }
            b[i] -= f * b[k];
        }
    }
    for k in (0..D).rev() {
        let mut s = b[k];
        for j in k + 1..D {
            s -= a[(k, j)] * b[j];
        }
        b[k] = s / a[(k, k)];
    }
    b.iter().all(|v| v.is_finite()).then_some(b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub label: &'static str,
    /// The exponent combination being tested.
    pub value: f64,
    /// Positive exactly when the inequality holds.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub conditions: Vec<Condition>,
    pub overall: bool,
}

fn positive(label: &'static str, value: f64) -> Condition {
    Condition {
        label,
        value,
        margin: value,
        holds: value > 0.0,
    }
}

fn negative(label: &'static str, value: f64) -> Condition {
    Condition {
        label,
        value,
        margin: -value,
        holds: value < 0.0,
    }
}

/// `Λ₁ > 0, Λ₁+Λ₂ > 0, ΣΛ < 0` for three exponents; for a four-dimensional
/// flow with one strongly contracting direction, `Λ₁ > 0, Λ₁+Λ₂+Λ₃ > 0, ΣΛ < 0`.
pub fn check_necessary_conditions(report: &LyapunovReport) -> Result<ConditionCheck> {
    let l = &report.exponents;
    let conditions = match (l.len(), report.kind) {
        (3, _) => vec![
            positive("L1 > 0", l[0]),
            positive("L1 + L2 > 0", l[0] + l[1]),
            negative("L1 + L2 + L3 < 0", l[0] + l[1] + l[2]),
        ],
        (4, SystemKind::Flow) => vec![
            positive("L1 > 0", l[0]),
            positive("L1 + L2 + L3 > 0", l[0] + l[1] + l[2]),
            negative("L1 + L2 + L3 + L4 < 0", l.iter().sum()),
        ],
        (n, _) => return Err(Error::UnsupportedDimension(n)),
    };
    let overall = conditions.iter().all(|c| c.holds);
    Ok(ConditionCheck {
        conditions,
        overall,
    })
}
