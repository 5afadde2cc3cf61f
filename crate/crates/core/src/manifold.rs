//! Fixed points, unstable separatrices of saddle fixed points of the
//! generalized Hénon map, and homoclinic proximity of stored orbits.

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::OrbitRecord;
use crate::saddlechart::{classify_fixed_point, Structure};
use crate::systems::{flow_eval, ghm_jacobian, ghm_step, is_escaped, to_fixed, GhmParams, State, SystemSpec};

pub const FIXED_POINT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointSolution {
    pub state: Vec<f64>,
    /// `‖F‖` at the initial guess and after every Newton step.
    pub residuals: Vec<f64>,
}

/// `F(x) = f(x) − x` for maps, the vector field for flows, with its Jacobian.
fn residual_map(system: &SystemSpec, x: &State) -> Result<(State, DMatrix<f64>)> {
    match system {
        SystemSpec::Ghm(p) => {
            let fx = ghm_step(x, p)?;
            let j = ghm_jacobian(x, p)?;
            let n = x.len();
            let jm = DMatrix::from_iterator(n, n, j.iter().copied()) - DMatrix::identity(n, n);
            Ok((fx - x, jm))
        }
        SystemSpec::Flow(model) => flow_eval(model, x),
    }
}

/// Newton iteration on the fixed-point (or equilibrium) equation, returning
/// the residual history.
pub fn find_fixed_point_traced(system: &SystemSpec, guess: &State, max_newton: usize) -> Result<FixedPointSolution> {
    if guess.len() != system.dimension() {
        return Err(Error::DimensionMismatch {
            expected: system.dimension(),
            got: guess.len(),
        });
    }
    let mut x = guess.clone();
    let (mut f, mut j) = residual_map(system, &x)?;
    let mut residuals = vec![f.norm()];
    for step in 0..max_newton {
        if residuals[step] < FIXED_POINT_TOL {
            break;
        }
        let dx = j.clone().lu().solve(&(-&f)).ok_or(Error::Singular { index: step })?;
        if !dx.iter().all(|v| v.is_finite()) {
            return Err(Error::Singular { index: step });
        }
        x += dx;
        (f, j) = residual_map(system, &x)?;
        residuals.push(f.norm());
    }
    let last = *residuals.last().expect("initial residual");
    if !(last < FIXED_POINT_TOL) {
        return Err(Error::NoConvergence {
            iterations: residuals.len() - 1,
            residual: last,
        });
    }
    Ok(FixedPointSolution {
        state: x.as_slice().to_vec(),
        residuals,
    })
}

pub fn find_fixed_point(system: &SystemSpec, guess: &State, max_newton: usize) -> Result<State> {
    find_fixed_point_traced(system, guess, max_newton).map(|s| State::from_vec(s.state))
}

/// Multiplier data of a fixed point `O` of the generalized Hénon map: the
/// Jacobian at `O` is a companion matrix with effective coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointSpectrum {
    pub classification: crate::saddlechart::EigenClassification,
    /// Unit eigenvector `(1, λ₁, λ₁²)/‖·‖` of the leading multiplier (real part
    /// when the multiplier is complex).
    pub leading_direction: State,
}

pub fn fixed_point_spectrum(params: &GhmParams, fixed_point: &State) -> Result<FixedPointSpectrum> {
    let j = ghm_jacobian(fixed_point, params)?;
    let (b, c, a) = (j[(2, 0)], j[(2, 1)], j[(2, 2)]);
    let classification = classify_fixed_point(a, b, c, 0.0);
    let l = classification.eigenvalues[0];
    let v = [
        num_complex::Complex64::new(1.0, 0.0),
        l,
        l * l,
    ];
    let re = State::from_iterator(3, v.iter().map(|z| z.re));
    let leading_direction = re.normalize();
    Ok(FixedPointSpectrum {
        classification,
        leading_direction,
    })
}

/// Default starting point for attractor runs of the generalized Hénon map:
/// `O + 10⁻³·e_u` when `O` is a saddle, `(0.01, 0.01, 0.01)` otherwise.
pub fn attractor_seed(params: &GhmParams) -> State {
    let origin = State::zeros(3);
    match fixed_point_spectrum(params, &origin) {
        Ok(spec)
            if !matches!(
                spec.classification.structure,
                Structure::StableNode | Structure::StableFocus | Structure::OnBifurcation
            ) =>
        {
            origin + spec.leading_direction * 1e-3
        }
        _ => State::from_element(3, 0.01),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSide {
    Plus,
    Minus,
}

/// Images of one seed segment, in iteration order (iterate-major, seed-minor).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SeparatrixBranch {
    pub points: Vec<State>,
    pub seed_index: Vec<usize>,
    pub iterate: Vec<usize>,
}

impl SeparatrixBranch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Consecutive-seed polylines, one per iterate.
    pub fn polylines(&self) -> Vec<Vec<&State>> {
        let mut out: Vec<Vec<&State>> = Vec::new();
        let mut current_iter = usize::MAX;
        for (p, &k) in self.points.iter().zip(&self.iterate) {
            if k != current_iter {
                out.push(Vec::new());
                current_iter = k;
            }
            out.last_mut().expect("pushed above").push(p);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparatrixPair {
    pub plus_branch: SeparatrixBranch,
    pub minus_branch: SeparatrixBranch,
    pub delta: f64,
    pub iterations: usize,
    pub fixed_point: State,
    pub unstable_direction: State,
    /// Leading multiplier of the fixed point.
    pub multiplier: f64,
    /// Iterates kept per branch: 2 when the multiplier is negative (the map
    /// swaps the branches), 1 otherwise.
    pub iterate_step: usize,
}

impl SeparatrixPair {
    pub fn branch(&self, side: BranchSide) -> &SeparatrixBranch {
        match side {
            BranchSide::Plus => &self.plus_branch,
            BranchSide::Minus => &self.minus_branch,
        }
    }
}

/// Traces `W^{u±}` by iterating `seeds` points on `O ± δ·t·e_u`, `t ∈ (0, 1]`.
///
/// When the unstable multiplier is negative the map swaps the two
/// separatrices, so each branch keeps only the even iterates of its own
/// seeds. A seed stops once it leaves the ball of radius `bound` around `O`.
pub fn unstable_separatrix(
    params: &GhmParams,
    fixed_point: &State,
    delta: f64,
    seeds: usize,
    iters: usize,
    bound: f64,
) -> Result<SeparatrixPair> {
    if !(delta > 0.0) || seeds == 0 || !(bound > 0.0) {
        return Err(Error::InvalidArgument(
            "separatrix needs delta > 0, seeds >= 1 and bound > 0".into(),
        ));
    }
    let o = to_fixed::<3>(fixed_point)?;
    let spec = fixed_point_spectrum(params, fixed_point)?;
    if spec.classification.structure != Structure::Saddle1U {
        return Err(Error::NotSaddle);
    }
    let multiplier = spec.classification.eigenvalues[0].re;
    let iterate_step = if multiplier < 0.0 { 2 } else { 1 };
    let e_u = to_fixed::<3>(&spec.leading_direction)?;

    let trace = |sign: f64| -> SeparatrixBranch {
        let orbits: Vec<Vec<(usize, State)>> = (1..=seeds)
            .into_par_iter()
            .map(|s| {
                let t = s as f64 / seeds as f64;
                let mut x = o + e_u * (sign * delta * t);
                let mut kept = Vec::new();
                for k in 0..=iters {
                    if k > 0 {
                        x = params.step(&x);
                    }
                    if is_escaped(&x) || (x - o).norm() > bound {
                        break;
                    }
                    if k % iterate_step == 0 {
                        kept.push((k, State::from_column_slice(x.as_slice())));
                    }
                }
                kept
            })
            .collect();
        let mut branch = SeparatrixBranch::default();
        for k in (0..=iters).step_by(iterate_step) {
            for (s, orbit) in orbits.iter().enumerate() {
                if let Some((_, p)) = orbit.get(k / iterate_step) {
                    branch.points.push(p.clone());
                    branch.seed_index.push(s);
                    branch.iterate.push(k);
                }
            }
        }
        branch
    };
    Ok(SeparatrixPair {
        plus_branch: trace(1.0),
        minus_branch: trace(-1.0),
        delta,
        iterations: iters,
        fixed_point: fixed_point.clone(),
        unstable_direction: spec.leading_direction,
        multiplier,
        iterate_step,
    })
}

fn point_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn fixed3(p: &State) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

/// Largest distance from a point of `from` to the polylines of `to`
/// (three-dimensional states).
pub fn directed_hausdorff(from: &[State], to: &[Vec<&State>]) -> f64 {
    let lines: Vec<Vec<Vector3<f64>>> = to.iter().map(|l| l.iter().map(|p| fixed3(p)).collect()).collect();
    from.par_iter()
        .map(|p| {
            let p = fixed3(p);
            let mut best = f64::INFINITY;
            for line in &lines {
                if line.len() == 1 {
                    best = best.min((p - line[0]).norm());
                }
                for w in line.windows(2) {
                    best = best.min(point_segment_distance(&p, &w[0], &w[1]));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Symmetric discrete Hausdorff distance between `f(W^{u+})` and `W^{u−}`,
/// both truncated to the iterates the image can reach.
pub fn branch_swap_distance(params: &GhmParams, pair: &SeparatrixPair) -> f64 {
    let last = pair.iterations.saturating_sub(pair.iterate_step);
    let image = SeparatrixBranch {
        points: pair
            .plus_branch
            .points
            .iter()
            .zip(&pair.plus_branch.iterate)
            .filter(|(_, &k)| k <= last)
            .map(|(p, _)| {
                let x = to_fixed::<3>(p).expect("separatrix points are three-dimensional");
                State::from_column_slice(params.step(&x).as_slice())
            })
            .collect(),
        seed_index: pair
            .plus_branch
            .seed_index
            .iter()
            .zip(&pair.plus_branch.iterate)
            .filter(|(_, &k)| k <= last)
            .map(|(s, _)| *s)
            .collect(),
        iterate: pair
            .plus_branch
            .iterate
            .iter()
            .filter(|&&k| k <= last)
            .map(|k| k + 1)
            .collect(),
    };
    let minus_trunc: Vec<State> = pair
        .minus_branch
        .points
        .iter()
        .zip(&pair.minus_branch.iterate)
        .filter(|(_, &k)| k <= last)
        .map(|(p, _)| p.clone())
        .collect();
    let forward = directed_hausdorff(&image.points, &pair.minus_branch.polylines());
    let backward = directed_hausdorff(&minus_trunc, &image.polylines());
    forward.max(backward)
}

/// Smallest distance from a stored orbit point to `fixed_point`.
pub fn homoclinic_proximity(orbit: &OrbitRecord, fixed_point: &State) -> f64 {
    orbit
        .points
        .iter()
        .map(|p| (p - fixed_point).norm())
        .fold(f64::INFINITY, f64::min)
}
