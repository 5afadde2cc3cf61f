use super::{is_escaped, rk4_step, to_dynamic, to_fixed, FlowModel, State, Vector, VectorField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingDirection {
    /// Signed distance goes from negative to non-negative.
    Positive,
    Negative,
    Both,
}

/// The hyperplane `n·x = offset` with unit normal `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionPlane {
    normal: Vec<f64>,
    offset: f64,
    direction: CrossingDirection,
}

impl SectionPlane {
    /// Normalizes `normal` (rescaling `offset` with it).
    pub fn new(normal: Vec<f64>, offset: f64, direction: CrossingDirection) -> Result<Self> {
        let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(len > 0.0) || !len.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidArgument(
                "section normal must be finite and nonzero".into(),
            ));
        }
        Ok(Self {
            normal: normal.iter().map(|v| v / len).collect(),
            offset: offset / len,
            direction,
        })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn direction(&self) -> CrossingDirection {
        self.direction
    }

    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(n, v)| n * v).sum::<f64>() - self.offset
    }

    fn accepts(&self, before: f64, after: f64) -> bool {
        let up = before < 0.0 && after >= 0.0;
        let down = before > 0.0 && after <= 0.0;
        match self.direction {
            CrossingDirection::Positive => up,
            CrossingDirection::Negative => down,
            CrossingDirection::Both => up || down,
        }
    }
}

const LOCALIZATION_TOL: f64 = 1e-10;

/// Integrates from `state0` and returns the first `crossings` intersections
/// with `plane`, each localized by bisection on the step length.
///
/// `max_steps` bounds the number of integration steps between consecutive
/// crossings.
pub fn poincare_section(
    model: &FlowModel,
    plane: &SectionPlane,
    state0: &State,
    crossings: usize,
    dt: f64,
    max_steps: usize,
) -> Result<Vec<State>> {
    if crossings == 0 || !(dt > 0.0) {
        return Err(Error::InvalidArgument(
            "poincare section needs crossings >= 1 and dt > 0".into(),
        ));
    }
    if plane.normal.len() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: plane.normal.len(),
        });
    }
    match model {
        FlowModel::Lorenz(m) => run(m, plane, state0, crossings, dt, max_steps),
        FlowModel::ExtendedLorenz(m) => run(m, plane, state0, crossings, dt, max_steps),
        FlowModel::LinearTest(m) => run(m, plane, state0, crossings, dt, max_steps),
    }
}

fn run<const D: usize, F: VectorField<D>>(
    f: &F,
    plane: &SectionPlane,
    state0: &State,
    crossings: usize,
    dt: f64,
    max_steps: usize,
) -> Result<Vec<State>> {
    let mut x = to_fixed::<D>(state0)?;
    let mut d = plane.signed_distance(x.as_slice());
    let mut out = Vec::with_capacity(crossings);
    let mut since_last = 0usize;
    let mut total = 0usize;
    while out.len() < crossings {
        if since_last >= max_steps {
            return Err(Error::SectionTimeout { steps: max_steps });
        }
        let next = rk4_step(f, &x, dt);
        total += 1;
        since_last += 1;
        if is_escaped(&next) {
            return Err(Error::Escape {
                index: total,
                state: next.as_slice().to_vec(),
            });
        }
        let d_next = plane.signed_distance(next.as_slice());
        if plane.accepts(d, d_next) {
            out.push(to_dynamic(&localize(f, plane, &x, d, dt)));
            since_last = 0;
        }
        x = next;
        d = d_next;
    }
    Ok(out)
}

/// Bisection on the sub-step `τ ∈ [0, dt]` for a sign change of the plane distance.
fn localize<const D: usize, F: VectorField<D>>(
    f: &F,
    plane: &SectionPlane,
    x: &Vector<D>,
    d0: f64,
    dt: f64,
) -> Vector<D> {
    if d0 == 0.0 {
        return *x;
    }
    let (mut lo, mut hi) = (0.0, dt);
    let mut best = *x;
    let mut best_abs = d0.abs();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let y = rk4_step(f, x, mid);
        let dm = plane.signed_distance(y.as_slice());
        if dm.abs() < best_abs {
            best = y;
            best_abs = dm.abs();
        }
        if best_abs < LOCALIZATION_TOL || mid == lo || mid == hi {
            break;
        }
        if dm.signum() == d0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}
