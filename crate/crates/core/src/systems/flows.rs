use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{is_escaped, to_dynamic, to_fixed, Matrix, State, Stepper, Vector};
use crate::error::{Error, Result};

/// Autonomous vector field with an analytic Jacobian.
pub trait VectorField<const D: usize>: Sync {
    fn eval(&self, x: &Vector<D>) -> Vector<D>;
    fn jacobian(&self, x: &Vector<D>) -> Matrix<D>;
}

/// `ẋ = σ(y − x), ẏ = x(r − z) − y, ż = xy − bz`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lorenz {
    pub sigma: f64,
    pub r: f64,
    pub b: f64,
}

impl Lorenz {
    pub fn classic() -> Self {
        Self {
            sigma: 10.0,
            r: 28.0,
            b: 8.0 / 3.0,
        }
    }
}

impl VectorField<3> for Lorenz {
    #[inline]
    fn eval(&self, v: &Vector<3>) -> Vector<3> {
        let (x, y, z) = (v[0], v[1], v[2]);
        Vector::<3>::new(
            self.sigma * (y - x),
            x * (self.r - z) - y,
            x * y - self.b * z,
        )
    }

    #[inline]
    fn jacobian(&self, v: &Vector<3>) -> Matrix<3> {
        let (x, y, z) = (v[0], v[1], v[2]);
        Matrix::<3>::new(
            -self.sigma,
            self.sigma,
            0.0,
            self.r - z,
            -1.0,
            -x,
            y,
            x,
            -self.b,
        )
    }
}

/// Lorenz system coupled to a fourth variable `w` through the rotation rate `μ`:
/// `ż = xy − bz + μw`, `ẇ = −bw − μz`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedLorenz {
    pub sigma: f64,
    pub r: f64,
    pub b: f64,
    pub mu: f64,
}

impl ExtendedLorenz {
    /// The wild spiral attractor parameters `σ = 10, r = 25, b = 8/3, μ = 7`.
    pub fn spiral() -> Self {
        Self {
            sigma: 10.0,
            r: 25.0,
            b: 8.0 / 3.0,
            mu: 7.0,
        }
    }
}

impl VectorField<4> for ExtendedLorenz {
    #[inline]
    fn eval(&self, v: &Vector<4>) -> Vector<4> {
        let (x, y, z, w) = (v[0], v[1], v[2], v[3]);
        Vector::<4>::new(
            self.sigma * (y - x),
            x * (self.r - z) - y,
            x * y - self.b * z + self.mu * w,
            -self.b * w - self.mu * z,
        )
    }

    #[inline]
    fn jacobian(&self, v: &Vector<4>) -> Matrix<4> {
        let (x, y, z) = (v[0], v[1], v[2]);
        Matrix::<4>::new(
            -self.sigma,
            self.sigma,
            0.0,
            0.0,
            self.r - z,
            -1.0,
            -x,
            0.0,
            y,
            x,
            -self.b,
            self.mu,
            0.0,
            0.0,
            -self.mu,
            -self.b,
        )
    }
}

/// `ẋᵢ = rateᵢ · xᵢ`; analytic solutions make it a reference for the integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearTest {
    pub rates: [f64; 3],
}

impl VectorField<3> for LinearTest {
    fn eval(&self, v: &Vector<3>) -> Vector<3> {
        Vector::<3>::new(
            self.rates[0] * v[0],
            self.rates[1] * v[1],
            self.rates[2] * v[2],
        )
    }

    fn jacobian(&self, _v: &Vector<3>) -> Matrix<3> {
        Matrix::<3>::from_diagonal(&Vector::<3>::from(self.rates))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowModel {
    Lorenz(Lorenz),
    ExtendedLorenz(ExtendedLorenz),
    LinearTest(LinearTest),
}

impl FlowModel {
    pub fn dimension(&self) -> usize {
        match self {
            FlowModel::Lorenz(_) | FlowModel::LinearTest(_) => 3,
            FlowModel::ExtendedLorenz(_) => 4,
        }
    }

    /// Trace of the Jacobian; constant for every model here.
    pub fn divergence(&self) -> f64 {
        match self {
            FlowModel::Lorenz(m) => -(m.sigma + 1.0 + m.b),
            FlowModel::ExtendedLorenz(m) => -(m.sigma + 1.0 + 2.0 * m.b),
            FlowModel::LinearTest(m) => m.rates.iter().sum(),
        }
    }
}

/// Right-hand side and Jacobian of `model` at `state`.
pub fn flow_eval(model: &FlowModel, state: &State) -> Result<(State, DMatrix<f64>)> {
    fn both<const D: usize, F: VectorField<D>>(f: &F, s: &State) -> Result<(State, DMatrix<f64>)> {
        let x = to_fixed::<D>(s)?;
        let j = f.jacobian(&x);
        Ok((
            to_dynamic(&f.eval(&x)),
            DMatrix::from_column_slice(D, D, j.as_slice()),
        ))
    }
    match model {
        FlowModel::Lorenz(m) => both(m, state),
        FlowModel::ExtendedLorenz(m) => both(m, state),
        FlowModel::LinearTest(m) => both(m, state),
    }
}

/// Eigenvalues of the extended Lorenz system at the origin, sorted by
/// descending real part (ties by descending imaginary part).
pub fn extended_lorenz_eigen(sigma: f64, r: f64, b: f64, mu: f64) -> [Complex64; 4] {
    let radicand = (sigma - 1.0).powi(2) + 4.0 * sigma * r;
    let root = Complex64::new(radicand, 0.0).sqrt();
    let base = Complex64::new(-sigma - 1.0, 0.0);
    let mut eig = [
        (root + base) * 0.5,
        Complex64::new(-b, mu),
        Complex64::new(-b, -mu),
        (-root + base) * 0.5,
    ];
    eig.sort_by(|p, q| q.re.total_cmp(&p.re).then(q.im.total_cmp(&p.im)));
    eig
}

/// Classical fourth-order Runge–Kutta with a fixed step.
#[derive(Clone, Copy, Debug)]
pub struct Rk4<'a, F> {
    pub field: &'a F,
    pub dt: f64,
}

impl<'a, F> Rk4<'a, F> {
    pub fn new(field: &'a F, dt: f64) -> Self {
        Self { field, dt }
    }
}

#[inline]
pub fn rk4_step<const D: usize, F: VectorField<D>>(f: &F, x: &Vector<D>, dt: f64) -> Vector<D> {
    let h = 0.5 * dt;
    let k1 = f.eval(x);
    let k2 = f.eval(&(x + k1 * h));
    let k3 = f.eval(&(x + k2 * h));
    let k4 = f.eval(&(x + k3 * dt));
    x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0)
}

impl<const D: usize, F: VectorField<D>> Stepper<D> for Rk4<'_, F> {
    #[inline]
    fn advance(&self, x: &Vector<D>) -> Vector<D> {
        rk4_step(self.field, x, self.dt)
    }

    /// The variational equation `V̇ = J(x(t))·V` is integrated with the same
    /// stages as the state.
    #[inline]
    fn advance_tangent(&self, x: &Vector<D>, v: &Matrix<D>) -> (Vector<D>, Matrix<D>) {
        let (f, dt) = (self.field, self.dt);
        let h = 0.5 * dt;
        let k1 = f.eval(x);
        let l1 = f.jacobian(x) * v;
        let x2 = x + k1 * h;
        let k2 = f.eval(&x2);
        let l2 = f.jacobian(&x2) * (v + l1 * h);
        let x3 = x + k2 * h;
        let k3 = f.eval(&x3);
        let l3 = f.jacobian(&x3) * (v + l2 * h);
        let x4 = x + k3 * dt;
        let k4 = f.eval(&x4);
        let l4 = f.jacobian(&x4) * (v + l3 * dt);
        (
            x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0),
            v + (l1 + (l2 + l3) * 2.0 + l4) * (dt / 6.0),
        )
    }

    fn step_time(&self) -> f64 {
        self.dt
    }
}

/// Stored samples of a fixed-step integration.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `steps + 1` states; index 0 is the initial condition.
    pub states: Vec<State>,
    /// Tangent matrix evolved alongside, when one was supplied.
    pub tangent: Option<DMatrix<f64>>,
}

/// Integrates `steps` fixed RK4 steps of size `dt`, optionally co-evolving a
/// square tangent matrix through the variational equations.
pub fn integrate(
    model: &FlowModel,
    state: &State,
    dt: f64,
    steps: usize,
    with_tangent: Option<&DMatrix<f64>>,
) -> Result<Trajectory> {
    if !(dt > 0.0) || steps == 0 {
        return Err(Error::InvalidArgument(format!(
            "integration needs dt > 0 and steps >= 1 (got dt = {dt}, steps = {steps})"
        )));
    }
    fn run<const D: usize, F: VectorField<D>>(
        f: &F,
        state: &State,
        dt: f64,
        steps: usize,
        tangent: Option<&DMatrix<f64>>,
    ) -> Result<Trajectory> {
        let stepper = Rk4::new(f, dt);
        let mut x = to_fixed::<D>(state)?;
        let mut v = match tangent {
            Some(m) if m.nrows() != D || m.ncols() != D => {
                return Err(Error::DimensionMismatch {
                    expected: D,
                    got: m.nrows().max(m.ncols()),
                })
            }
            Some(m) => Some(Matrix::<D>::from_column_slice(m.as_slice())),
            None => None,
        };
        let mut states = Vec::with_capacity(steps + 1);
        states.push(to_dynamic(&x));
        for k in 1..=steps {
            x = match v.as_mut() {
                Some(v) => {
                    let (nx, nv) = stepper.advance_tangent(&x, v);
                    *v = nv;
                    nx
                }
                None => stepper.advance(&x),
            };
            if is_escaped(&x) {
                return Err(Error::Escape {
                    index: k,
                    state: x.as_slice().to_vec(),
                });
            }
            states.push(to_dynamic(&x));
        }
        Ok(Trajectory {
            states,
            tangent: v.map(|v| DMatrix::from_column_slice(D, D, v.as_slice())),
        })
    }
    match model {
        FlowModel::Lorenz(m) => run(m, state, dt, steps, with_tangent),
        FlowModel::ExtendedLorenz(m) => run(m, state, dt, steps, with_tangent),
        FlowModel::LinearTest(m) => run(m, state, dt, steps, with_tangent),
    }
}
