//! Concrete dynamical systems: generalized Hénon maps, the classical and
//! extended Lorenz flows and a diagonal linear test flow, together with
//! fixed-step integration and Poincaré sections.

mod flows;
mod section;

pub use flows::{
    extended_lorenz_eigen, flow_eval, integrate, rk4_step, ExtendedLorenz, FlowModel, LinearTest,
    Lorenz, Rk4, Trajectory, VectorField,
};
pub use section::{poincare_section, CrossingDirection, SectionPlane};

use nalgebra::{DVector, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vector<const D: usize> = SVector<f64, D>;
pub type Matrix<const D: usize> = SMatrix<f64, D, D>;

/// A point in phase space, sized to the owning system's dimension.
pub type State = DVector<f64>;

/// Coordinate norm beyond which an orbit counts as escaped.
pub const ESCAPE_RADIUS: f64 = 1e6;

#[inline]
pub fn is_escaped<const D: usize>(x: &Vector<D>) -> bool {
    let n2 = x.norm_squared();
    !n2.is_finite() || n2 > ESCAPE_RADIUS * ESCAPE_RADIUS
}

pub(crate) fn to_fixed<const D: usize>(x: &State) -> Result<Vector<D>> {
    if x.len() != D {
        return Err(Error::DimensionMismatch {
            expected: D,
            got: x.len(),
        });
    }
    Ok(Vector::<D>::from_column_slice(x.as_slice()))
}

pub(crate) fn to_dynamic<const D: usize>(x: &Vector<D>) -> State {
    State::from_column_slice(x.as_slice())
}

/// One unit of evolution (a map iteration or one integration step) together
/// with its tangent propagation.
pub trait Stepper<const D: usize>: Sync {
    fn advance(&self, x: &Vector<D>) -> Vector<D>;

    /// Advance the state and push `frame` through the linearization.
    /// The returned state is bit-identical to [`Stepper::advance`].
    fn advance_tangent(&self, x: &Vector<D>, frame: &Matrix<D>) -> (Vector<D>, Matrix<D>);

    /// Time elapsed per step: 1 for maps, `dt` for flows.
    fn step_time(&self) -> f64;
}

/// Quadratic plus cubic nonlinearity `f(y, z)` of the generalized Hénon map.
///
/// No constant or linear terms are representable, so `f(0,0) = 0` and
/// `∇f(0,0) = 0` always hold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolyNonlinearity {
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
    pub yyy: f64,
    pub yyz: f64,
    pub yzz: f64,
    pub zzz: f64,
}

impl PolyNonlinearity {
    /// `f = -z²`, the nonlinearity of the reduced three-dimensional Hénon map.
    pub fn minus_z_squared() -> Self {
        Self {
            zz: -1.0,
            ..Self::default()
        }
    }

    #[inline]
    pub fn eval(&self, y: f64, z: f64) -> f64 {
        let (y2, z2) = (y * y, z * z);
        self.yy * y2
            + self.yz * y * z
            + self.zz * z2
            + self.yyy * y2 * y
            + self.yyz * y2 * z
            + self.yzz * y * z2
            + self.zzz * z2 * z
    }

    /// Partial derivatives `(∂f/∂y, ∂f/∂z)`.
    #[inline]
    pub fn gradient(&self, y: f64, z: f64) -> (f64, f64) {
        let (y2, z2) = (y * y, z * z);
        let fy = 2.0 * self.yy * y
            + self.yz * z
            + 3.0 * self.yyy * y2
            + 2.0 * self.yyz * y * z
            + self.yzz * z2;
        let fz = self.yz * y
            + 2.0 * self.zz * z
            + self.yyz * y2
            + 2.0 * self.yzz * y * z
            + 3.0 * self.zzz * z2;
        (fy, fz)
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

/// Parameters of `x̄ = y, ȳ = z, z̄ = Bx + Az + Cy + f(y, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhmParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub nonlinearity: PolyNonlinearity,
}

impl GhmParams {
    pub fn new(a: f64, b: f64, c: f64, nonlinearity: PolyNonlinearity) -> Self {
        Self {
            a,
            b,
            c,
            nonlinearity,
        }
    }

    /// `0 < B < 1`: orientable and volume contracting.
    pub fn is_orientable_contracting(&self) -> bool {
        self.b > 0.0 && self.b < 1.0
    }

    #[inline]
    pub fn step(&self, x: &Vector<3>) -> Vector<3> {
        let (x0, y, z) = (x[0], x[1], x[2]);
        Vector::<3>::new(
            y,
            z,
            self.b * x0 + self.a * z + self.c * y + self.nonlinearity.eval(y, z),
        )
    }

    #[inline]
    pub fn jacobian(&self, x: &Vector<3>) -> Matrix<3> {
        let (fy, fz) = self.nonlinearity.gradient(x[1], x[2]);
        Matrix::<3>::new(
            0.0,
            1.0,
            0.0,
            0.0,
            0.0,
            1.0,
            self.b,
            self.c + fy,
            self.a + fz,
        )
    }

    pub fn inverse(&self, x: &Vector<3>) -> Result<Vector<3>> {
        if self.b == 0.0 {
            return Err(Error::NonInvertible);
        }
        let (xb, yb, zb) = (x[0], x[1], x[2]);
        let prev_x = (zb - self.a * yb - self.c * xb - self.nonlinearity.eval(xb, yb)) / self.b;
        Ok(Vector::<3>::new(prev_x, xb, yb))
    }
}

impl Stepper<3> for GhmParams {
    #[inline]
    fn advance(&self, x: &Vector<3>) -> Vector<3> {
        self.step(x)
    }

    #[inline]
    fn advance_tangent(&self, x: &Vector<3>, frame: &Matrix<3>) -> (Vector<3>, Matrix<3>) {
        (self.step(x), self.jacobian(x) * frame)
    }

    fn step_time(&self) -> f64 {
        1.0
    }
}

/// Image of `state` under the generalized Hénon map.
pub fn ghm_step(state: &State, params: &GhmParams) -> Result<State> {
    let x = to_fixed::<3>(state)?;
    let next = params.step(&x);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Escape {
            index: 1,
            state: next.as_slice().to_vec(),
        });
    }
    Ok(to_dynamic(&next))
}

pub fn ghm_jacobian(state: &State, params: &GhmParams) -> Result<Matrix<3>> {
    Ok(params.jacobian(&to_fixed::<3>(state)?))
}

pub fn ghm_inverse(state: &State, params: &GhmParams) -> Result<State> {
    Ok(to_dynamic(&params.inverse(&to_fixed::<3>(state)?)?))
}

/// Parameters of the three-dimensional Hénon map
/// `x̄ = y, ȳ = z, z̄ = M1 + Bx + M2·y − z²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Henon3DParams {
    pub m1: f64,
    pub m2: f64,
    pub b: f64,
}

impl Henon3DParams {
    pub fn step(&self, x: &Vector<3>) -> Vector<3> {
        Vector::<3>::new(
            x[1],
            x[2],
            self.m1 + self.b * x[0] + self.m2 * x[1] - x[2] * x[2],
        )
    }

    /// Discriminant of `ξ² + (1 − B − M2)ξ − M1 = 0`.
    pub fn fixed_point_discriminant(&self) -> f64 {
        let p = 1.0 - self.b - self.m2;
        p * p + 4.0 * self.m1
    }
}

/// Moves each fixed point `(ξ, ξ, ξ)` of the Hénon map to the origin.
///
/// Returns one `(ξ, reduced)` entry per real root, ascending in `ξ`; the
/// reduced map has `A = −2ξ`, `C = M2`, unchanged `B` and `f = −z²`.
pub fn henon3d_to_reduced(params: &Henon3DParams) -> Result<Vec<(f64, GhmParams)>> {
    let disc = params.fixed_point_discriminant();
    if disc < 0.0 || !disc.is_finite() {
        return Err(Error::NoFixedPoint { discriminant: disc });
    }
    let p = 1.0 - params.b - params.m2;
    let sq = disc.sqrt();
    let mut roots = vec![(-p - sq) / 2.0, (-p + sq) / 2.0];
    roots.dedup();
    Ok(roots
        .into_iter()
        .map(|xi| {
            (
                xi,
                GhmParams::new(
                    -2.0 * xi,
                    params.b,
                    params.m2,
                    PolyNonlinearity::minus_z_squared(),
                ),
            )
        })
        .collect())
}

/// A discrete map or continuous flow known to the toolkit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SystemSpec {
    Ghm(GhmParams),
    Flow(FlowModel),
}

impl SystemSpec {
    pub fn dimension(&self) -> usize {
        match self {
            SystemSpec::Ghm(_) => 3,
            SystemSpec::Flow(m) => m.dimension(),
        }
    }

    pub fn is_flow(&self) -> bool {
        matches!(self, SystemSpec::Flow(_))
    }
}

/// Runs `$body` with `$stepper` bound to a concrete [`Stepper`] and `$dim`
/// to its dimension as a `const`.
macro_rules! dispatch_stepper {
    ($system:expr, $dt:expr, |$stepper:ident, $dim:ident| $body:expr) => {{
        use $crate::systems::{FlowModel, Rk4, SystemSpec};
        match $system {
            SystemSpec::Ghm(params) => {
                const $dim: usize = 3;
                let $stepper = params;
                $body
            }
            SystemSpec::Flow(FlowModel::Lorenz(model)) => {
                const $dim: usize = 3;
                let $stepper = &Rk4::new(model, $dt);
                $body
            }
            SystemSpec::Flow(FlowModel::ExtendedLorenz(model)) => {
                const $dim: usize = 4;
                let $stepper = &Rk4::new(model, $dt);
                $body
            }
            SystemSpec::Flow(FlowModel::LinearTest(model)) => {
                const $dim: usize = 3;
                let $stepper = &Rk4::new(model, $dt);
                $body
            }
        }
    }};
}
pub(crate) use dispatch_stepper;
