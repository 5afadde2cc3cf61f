//! The LMP pseudohyperbolicity test: the `(dx, dφ)` graph of orbit-point
//! distances against angles between their strong-stable directions.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{
    backward_strong_direction_field, lyapunov_spectrum, DirectionField, LyapunovReport, LyapunovSettings,
    OrbitRecord, DEFAULT_FIELD_WARMUP,
};
use crate::render::{padded_range, Rgb, Scatter};
use crate::saddlechart::classify_fixed_point;
use crate::systems::{State, SystemSpec};

/// Nearest neighbours added per point when the graph is subsampled.
pub const NEIGHBORS: usize = 4;

const BLOCK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSource {
    /// Every admissible pair is present.
    Exhaustive,
    Random,
    Neighbor,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LmpGraph {
    /// `(dx, dphi)` pairs.
    pub pairs: Vec<(f64, f64)>,
    /// Origin of each pair, aligned with `pairs`.
    pub sources: Vec<PairSource>,
    pub stride: usize,
    pub seed: u64,
    pub pair_budget: usize,
    /// Bounding-box diagonal of the points that entered the graph.
    pub diameter: f64,
    /// The directions carry a consistent orientation (flows), so nearly
    /// opposite directions at close points count as a discontinuity.
    pub oriented: bool,
}

impl LmpGraph {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn neighbor_pairs(&self) -> usize {
        self.sources.iter().filter(|s| **s == PairSource::Neighbor).count()
    }

    /// Fraction of pairs with `dx < dx_max` whose angle exceeds `π/2`
    /// (`None` when no pair is that close).
    pub fn obtuse_fraction_below(&self, dx_max: f64) -> Option<f64> {
        let close: Vec<f64> = self
            .pairs
            .iter()
            .filter(|p| p.0 < dx_max)
            .map(|p| p.1)
            .collect();
        (!close.is_empty()).then(|| {
            close.iter().filter(|&&a| a > std::f64::consts::FRAC_PI_2).count() as f64 / close.len() as f64
        })
    }

    /// Scatter plot keeping every neighbour pair and a uniform thinning of the
    /// remaining pairs, at most `max_points` in total.
    pub fn scatter(&self, title: &str, max_points: usize) -> Scatter {
        const NEAR: Rgb = [200, 30, 30];
        const FAR: Rgb = [20, 60, 200];
        let neighbors = self.neighbor_pairs();
        let others = self.len() - neighbors;
        let room = max_points.saturating_sub(neighbors).max(1);
        let step = others.div_ceil(room).max(1);
        let mut points = Vec::with_capacity(max_points.min(self.len()));
        let mut seen_other = 0usize;
        for (p, s) in self.pairs.iter().zip(&self.sources) {
            if *s == PairSource::Neighbor {
                points.push((p.0, p.1, NEAR));
            } else {
                if seen_other % step == 0 {
                    points.push((p.0, p.1, FAR));
                }
                seen_other += 1;
            }
        }
        Scatter {
            title: title.to_string(),
            x_label: "dx".into(),
            y_label: "dphi".into(),
            x_range: padded_range(self.pairs.iter().map(|p| p.0).chain([0.0])),
            y_range: (0.0, std::f64::consts::PI),
            points,
        }
    }
}

fn angle(u: &State, v: &State) -> f64 {
    u.dot(v).clamp(-1.0, 1.0).acos()
}

fn pair_of(points: &[State], field: &[State], i: usize, j: usize) -> (f64, f64) {
    ((&points[i] - &points[j]).norm(), angle(&field[i], &field[j]))
}

/// Builds the LMP graph over pairs of stored points whose indices agree
/// modulo `stride`.
pub fn lmp_graph(
    orbit: &OrbitRecord,
    field: &DirectionField,
    stride: usize,
    pair_budget: usize,
    seed: u64,
) -> Result<LmpGraph> {
    if field.len() + field.warmup_discarded != orbit.len() || field.is_empty() {
        return Err(Error::LengthMismatch {
            orbit: orbit.len(),
            field: field.len(),
            warmup: field.warmup_discarded,
        });
    }
    if !(1..=2).contains(&stride) || pair_budget == 0 {
        return Err(Error::InvalidArgument(format!(
            "lmp needs stride in {{1, 2}} and pair_budget >= 1 (got {stride}, {pair_budget})"
        )));
    }
    let n = field.len();
    let points = &orbit.points[..n];
    let dirs = &field.vectors;
    let classes: Vec<Vec<usize>> = (0..stride).map(|r| (r..n).step_by(stride).collect()).collect();
    let total: usize = classes.iter().map(|c| c.len() * c.len().saturating_sub(1) / 2).sum();
    let diameter = crate::lyapunov::bounding_diagonal(points);

    let (pairs, sources) = if total <= pair_budget {
        let index_pairs: Vec<(usize, usize)> = classes
            .iter()
            .flat_map(|c| (0..c.len()).flat_map(move |a| (a + 1..c.len()).map(move |b| (c[a], c[b]))))
            .collect();
        let pairs: Vec<(f64, f64)> = index_pairs
            .par_iter()
            .map(|&(i, j)| pair_of(points, dirs, i, j))
            .collect();
        let sources = vec![PairSource::Exhaustive; pairs.len()];
        (pairs, sources)
    } else {
        let usable: Vec<&Vec<usize>> = classes.iter().filter(|c| c.len() >= 2).collect();
        if usable.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let blocks = pair_budget.div_ceil(BLOCK);
        let mut random: Vec<(f64, f64)> = (0..blocks)
            .into_par_iter()
            .flat_map_iter(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let count = BLOCK.min(pair_budget - b * BLOCK);
                let usable = &usable;
                (0..count)
                    .map(move |_| {
                        let class = usable[rng.random_range(0..usable.len())];
                        let a = rng.random_range(0..class.len());
                        let mut c = rng.random_range(0..class.len() - 1);
                        if c >= a {
                            c += 1;
                        }
                        pair_of(points, dirs, class[a], class[c])
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut neighbor_index: Vec<(usize, usize)> = classes
            .iter()
            .flat_map(|c| nearest_neighbor_pairs(points, c, NEIGHBORS))
            .collect();
        neighbor_index.sort_unstable();
        neighbor_index.dedup();
        let neighbors: Vec<(f64, f64)> = neighbor_index
            .par_iter()
            .map(|&(i, j)| pair_of(points, dirs, i, j))
            .collect();
        let mut sources = vec![PairSource::Random; random.len()];
        sources.extend(std::iter::repeat_n(PairSource::Neighbor, neighbors.len()));
        random.extend(neighbors);
        (random, sources)
    };
    if pairs.is_empty() {
        return Err(Error::EmptyGraph);
    }
    Ok(LmpGraph {
        pairs,
        sources,
        stride,
        seed,
        pair_budget,
        diameter,
        oriented: orbit.system.is_flow(),
    })
}

/// Uniform grid over the bounding box of `members`, for `k`-nearest-neighbour
/// queries. Returns pairs `(i, j)` with `i < j` in global indices.
fn nearest_neighbor_pairs(points: &[State], members: &[usize], k: usize) -> Vec<(usize, usize)> {
    let m = members.len();
    if m < 2 {
        return vec![];
    }
    let d = points[members[0]].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &i in members {
        for (k, v) in points[i].iter().enumerate() {
            lo[k] = lo[k].min(*v);
            hi[k] = hi[k].max(*v);
        }
    }
    let per_dim = ((m as f64 / 2.0).powf(1.0 / d as f64).floor() as usize).clamp(1, 64);
    let width: Vec<f64> = (0..d)
        .map(|k| {
            let w = (hi[k] - lo[k]) / per_dim as f64;
            if w > 0.0 {
                w
            } else {
                1.0
            }
        })
        .collect();
    let min_width = width.iter().copied().fold(f64::INFINITY, f64::min);
    let cell_coords = |p: &State| -> Vec<usize> {
        (0..d)
            .map(|k| (((p[k] - lo[k]) / width[k]) as usize).min(per_dim - 1))
            .collect()
    };
    let flat = |c: &[usize]| c.iter().fold(0usize, |acc, &v| acc * per_dim + v);
    let cells = per_dim.pow(d as u32);
    let mut start = vec![0usize; cells + 1];
    let member_cells: Vec<usize> = members.iter().map(|&i| flat(&cell_coords(&points[i]))).collect();
    for &c in &member_cells {
        start[c + 1] += 1;
    }
    for c in 0..cells {
        start[c + 1] += start[c];
    }
    let mut fill = start.clone();
    let mut sorted = vec![0usize; m];
    for (slot, &c) in member_cells.iter().enumerate() {
        sorted[fill[c]] = members[slot];
        fill[c] += 1;
    }
    let k = k.min(m - 1);

    let per_point: Vec<Vec<(usize, usize)>> = members
        .par_iter()
        .map(|&q| {
            let home = cell_coords(&points[q]);
            let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
            let mut ring = 0usize;
            loop {
                visit_ring(&home, ring, per_dim, &mut |cell| {
                    let c = flat(cell);
                    for &j in &sorted[start[c]..start[c + 1]] {
                        if j == q {
                            continue;
                        }
                        let dist = (&points[q] - &points[j]).norm();
                        if best.len() < k || dist < best[best.len() - 1].0 {
                            let pos = best.partition_point(|b| (b.0, b.1) < (dist, j));
                            best.insert(pos, (dist, j));
                            best.truncate(k);
                        }
                    }
                });
                let done = best.len() == k && best[k - 1].0 <= ring as f64 * min_width;
                if done || ring >= per_dim {
                    break;
                }
                ring += 1;
            }
            best.into_iter().map(|(_, j)| (q.min(j), q.max(j))).collect()
        })
        .collect();
    per_point.into_iter().flatten().collect()
}

/// Calls `visit` for every cell at Chebyshev distance exactly `ring` from `home`.
fn visit_ring(home: &[usize], ring: usize, per_dim: usize, visit: &mut impl FnMut(&[usize])) {
    let d = home.len();
    let lo: Vec<isize> = home.iter().map(|&h| h as isize - ring as isize).collect();
    let span = 2 * ring + 1;
    let mut offset = vec![0usize; d];
    let mut cell = vec![0usize; d];
    loop {
        let on_shell = ring == 0 || offset.iter().any(|&o| o == 0 || o == span - 1);
        if on_shell {
            let mut inside = true;
            for k in 0..d {
                let v = lo[k] + offset[k] as isize;
                if v < 0 || v >= per_dim as isize {
                    inside = false;
                    break;
                }
                cell[k] = v as usize;
            }
            if inside {
                visit(&cell);
            }
        }
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            offset[k] += 1;
            if offset[k] < span {
                break;
            }
            offset[k] = 0;
            k += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pseudohyperbolic,
    Quasiattractor,
    Inconclusive,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Pseudohyperbolic => "pseudohyperbolic",
            Outcome::Quasiattractor => "quasiattractor",
            Outcome::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictThresholds {
    /// Half-width of the excluded neighbourhoods of `dφ = 0` and `dφ = π`.
    pub theta: f64,
    /// Minimal gap, relative to the diameter, accepted as continuity.
    pub gap_min_rel: f64,
    /// Forbidden-band pairs closer than this (relative) signal a collision.
    pub collision_rel: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            theta: 0.2,
            gap_min_rel: 1e-2,
            collision_rel: 5e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LmpVerdict {
    pub outcome: Outcome,
    /// Minimal `dx` over forbidden-band pairs; infinite if none.
    pub gap: f64,
    pub thresholds: VerdictThresholds,
    pub diameter: f64,
    pub stride: usize,
    pub band_pairs: usize,
    /// Upper end of the forbidden band: `π − θ`, or `π` for oriented fields.
    pub band_upper: f64,
    /// No pair closer than the gap threshold has nearly opposite directions.
    pub orientable_field: bool,
}

/// Judges continuity of the direction field from the graph near `dx = 0`.
///
/// The forbidden band is `[θ, π − θ]`; for oriented fields it extends to `π`.
pub fn lmp_verdict(graph: &LmpGraph, thresholds: VerdictThresholds) -> Result<LmpVerdict> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let VerdictThresholds {
        theta,
        gap_min_rel,
        collision_rel,
    } = thresholds;
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, pi/2), got {theta}")));
    }
    let flipped = std::f64::consts::PI - theta;
    let upper = if graph.oriented {
        std::f64::consts::PI
    } else {
        flipped
    };
    let mut gap = f64::INFINITY;
    let mut band_pairs = 0usize;
    let mut flipped_close = false;
    let near = gap_min_rel * graph.diameter;
    for &(dx, dphi) in &graph.pairs {
        if dphi >= theta && dphi <= upper {
            band_pairs += 1;
            gap = gap.min(dx);
        }
        if dphi > flipped && dx < near {
            flipped_close = true;
        }
    }
    let outcome = if gap >= gap_min_rel * graph.diameter {
        Outcome::Pseudohyperbolic
    } else if gap < collision_rel * graph.diameter {
        Outcome::Quasiattractor
    } else {
        Outcome::Inconclusive
    };
    Ok(LmpVerdict {
        outcome,
        gap,
        thresholds,
        diameter: graph.diameter,
        stride: graph.stride,
        band_pairs,
        band_upper: upper,
        orientable_field: !flipped_close,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatesReport {
    /// Finite-time contraction rate along the strong-stable direction.
    pub contraction_rate_n1: f64,
    /// Exponential volume expansion rate of the complementary subspace.
    pub volume_rate_n2: f64,
    /// Smallest exponent of the complementary subspace minus the contraction rate.
    pub separation_margin: f64,
    /// Convergence errors carried over from the spectrum, aligned with the three rates.
    pub errors: [f64; 3],
}

pub fn finite_time_pseudohyp_rates(report: &LyapunovReport) -> Result<RatesReport> {
    let l = &report.exponents;
    let e = &report.convergence_error;
    let n = l.len();
    if !(3..=4).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let last = n - 1;
    Ok(RatesReport {
        contraction_rate_n1: l[last],
        volume_rate_n2: l[..last].iter().sum(),
        separation_margin: l[last - 1] - l[last],
        errors: [e[last], e[..last].iter().sum(), e[last - 1] + e[last]],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmpSettings {
    /// `None` chooses by the sign of the strong-stable multiplier of `O`.
    pub stride: Option<usize>,
    pub pair_budget: usize,
    pub seed: u64,
    pub warmup: usize,
    pub thresholds: VerdictThresholds,
}

impl Default for LmpSettings {
    fn default() -> Self {
        Self {
            stride: None,
            pair_budget: 1_000_000,
            seed: 1,
            warmup: DEFAULT_FIELD_WARMUP,
            thresholds: VerdictThresholds::default(),
        }
    }
}

/// Stride 2 when `O` of a map has a negative real strong-stable multiplier.
pub fn natural_stride(system: &SystemSpec) -> usize {
    match system {
        SystemSpec::Ghm(p) => {
            let ev = classify_fixed_point(p.a, p.b, p.c, 0.0).strong_stable();
            if ev.im == 0.0 && ev.re < 0.0 {
                2
            } else {
                1
            }
        }
        SystemSpec::Flow(_) => 1,
    }
}

#[derive(Clone, Debug)]
pub struct LmpAnalysis {
    pub report: LyapunovReport,
    pub orbit: OrbitRecord,
    pub field: DirectionField,
    /// One graph per stride evaluated, stride 1 first.
    pub graphs: Vec<LmpGraph>,
    /// Verdicts aligned with `graphs`.
    pub verdicts: Vec<LmpVerdict>,
    /// Index into `graphs` of the graph that decides.
    pub chosen: usize,
    pub rates: RatesReport,
}

impl LmpAnalysis {
    pub fn verdict(&self) -> &LmpVerdict {
        &self.verdicts[self.chosen]
    }

    pub fn graph(&self) -> &LmpGraph {
        &self.graphs[self.chosen]
    }
}

/// Spectrum, backward direction field, LMP graphs and verdict in one pass.
///
/// Maps are evaluated at strides 1 and 2; the decisive stride is the
/// configured one or [`natural_stride`].
pub fn analyze(
    system: &SystemSpec,
    x0: &State,
    lyapunov: &LyapunovSettings,
    settings: &LmpSettings,
) -> Result<LmpAnalysis> {
    let (report, orbit) = lyapunov_spectrum(system, x0, lyapunov, true)?;
    let orbit = orbit.expect("orbit is stored on request");
    let field = backward_strong_direction_field(&orbit, settings.warmup)?;
    let chosen_stride = settings.stride.unwrap_or_else(|| natural_stride(system));
    let strides: Vec<usize> = if system.is_flow() && chosen_stride == 1 {
        vec![1]
    } else {
        vec![1, 2]
    };
    let graphs = strides
        .iter()
        .map(|&s| lmp_graph(&orbit, &field, s, settings.pair_budget, settings.seed))
        .collect::<Result<Vec<_>>>()?;
    let verdicts = graphs
        .iter()
        .map(|g| lmp_verdict(g, settings.thresholds))
        .collect::<Result<Vec<_>>>()?;
    let chosen = strides.iter().position(|&s| s == chosen_stride).unwrap_or(0);
    let rates = finite_time_pseudohyp_rates(&report)?;
    Ok(LmpAnalysis {
        report,
        orbit,
        field,
        graphs,
        verdicts,
        chosen,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::SystemKind;
    use crate::systems::{GhmParams, PolyNonlinearity};
    use proptest::prelude::*;

    fn orbit_of(points: Vec<State>) -> OrbitRecord {
        OrbitRecord {
            system: SystemSpec::Ghm(GhmParams::new(0.0, 0.5, 0.0, PolyNonlinearity::default())),
            points,
            stride: 1,
            dt: None,
            transient_discarded: 0,
        }
    }

    fn field_of(vectors: Vec<State>, warmup: usize) -> DirectionField {
        DirectionField {
            vectors,
            backward_exponent: 0.0,
            warmup_discarded: warmup,
        }
    }

    fn v3(x: f64, y: f64, z: f64) -> State {
        State::from_column_slice(&[x, y, z])
    }

    #[test]
    fn angle_extremes() {
        let pts = vec![v3(0.0, 0.0, 0.0), v3(1.0, 0.0, 0.0), v3(2.0, 0.0, 0.0)];
        let dirs = vec![v3(1.0, 0.0, 0.0), v3(1.0, 0.0, 0.0), v3(-1.0, 0.0, 0.0)];
        let g = lmp_graph(&orbit_of(pts), &field_of(dirs, 0), 1, 100, 0).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.pairs[0], (1.0, 0.0));
        assert_eq!(g.pairs[1], (2.0, std::f64::consts::PI));
        assert!(g.sources.iter().all(|s| *s == PairSource::Exhaustive));
    }

    #[test]
    fn stride_two_pairs_stay_in_class() {
        let pts: Vec<State> = (0..6).map(|i| v3(i as f64, 0.0, 0.0)).collect();
        let dirs = vec![v3(0.0, 0.0, 1.0); 6];
        let g = lmp_graph(&orbit_of(pts), &field_of(dirs, 0), 2, 100, 0).unwrap();
        // 3 + 3 pairs, all at even index distance
        assert_eq!(g.len(), 6);
        assert!(g.pairs.iter().all(|p| (p.0 as usize) % 2 == 0));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let pts = vec![v3(0.0, 0.0, 0.0); 4];
        let dirs = vec![v3(1.0, 0.0, 0.0); 3];
        assert!(matches!(
            lmp_graph(&orbit_of(pts.clone()), &field_of(dirs.clone(), 0), 1, 10, 0),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(lmp_graph(&orbit_of(pts), &field_of(dirs, 1), 3, 10, 0).is_err());
    }

    fn helix(n: usize) -> (Vec<State>, Vec<State>) {
        let pts = (0..n)
            .map(|i| {
                let t = i as f64 * 0.37;
                v3(t.cos(), t.sin(), 0.01 * i as f64)
            })
            .collect();
        let dirs = (0..n)
            .map(|i| {
                let t = i as f64 * 0.37;
                v3(-t.sin(), t.cos(), 0.0)
            })
            .collect();
        (pts, dirs)
    }

    #[test]
    fn subsampled_graph_is_bounded_and_deterministic() {
        let (pts, dirs) = helix(400);
        let orbit = orbit_of(pts);
        let field = field_of(dirs, 0);
        let g = lmp_graph(&orbit, &field, 1, 500, 7).unwrap();
        let h = lmp_graph(&orbit, &field, 1, 500, 7).unwrap();
        assert_eq!(g, h);
        assert!(g.len() <= 500 + g.neighbor_pairs());
        assert!(g.neighbor_pairs() >= 400 * NEIGHBORS / 2);
        assert_ne!(g, lmp_graph(&orbit, &field, 1, 500, 8).unwrap());
    }

    #[test]
    fn grid_neighbors_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<State> = (0..300)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..6.0);
                v3(t.cos(), t.sin(), rng.random_range(0.0..0.2))
            })
            .collect();
        let members: Vec<usize> = (0..300).collect();
        let mut fast = nearest_neighbor_pairs(&pts, &members, 3);
        fast.sort_unstable();
        fast.dedup();
        let mut slow = Vec::new();
        for i in 0..300 {
            let mut d: Vec<(f64, usize)> = (0..300)
                .filter(|&j| j != i)
                .map(|j| ((&pts[i] - &pts[j]).norm(), j))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for &(_, j) in &d[..3] {
                slow.push((i.min(j), i.max(j)));
            }
        }
        slow.sort_unstable();
        slow.dedup();
        assert_eq!(fast, slow);
    }

    fn graph(pairs: Vec<(f64, f64)>, diameter: f64) -> LmpGraph {
        LmpGraph {
            sources: vec![PairSource::Exhaustive; pairs.len()],
            pairs,
            stride: 1,
            seed: 0,
            pair_budget: 10,
            diameter,
            oriented: false,
        }
    }

    #[test]
    fn verdict_outcomes() {
        let t = VerdictThresholds::default();
        let v = lmp_verdict(&graph(vec![(0.0, 0.0), (0.5, 1.0), (0.001, 3.1)], 10.0), t).unwrap();
        assert_eq!(v.outcome, Outcome::Pseudohyperbolic);
        assert_eq!(v.gap, 0.5);
        assert!(!v.orientable_field);
        let v = lmp_verdict(&graph(vec![(0.04, 1.0)], 10.0), t).unwrap();
        assert_eq!(v.outcome, Outcome::Quasiattractor);
        let v = lmp_verdict(&graph(vec![(0.07, 1.0)], 10.0), t).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        let v = lmp_verdict(&graph(vec![(0.0, 0.0)], 10.0), t).unwrap();
        assert_eq!(v.gap, f64::INFINITY);
        assert_eq!(v.outcome, Outcome::Pseudohyperbolic);
        assert!(v.orientable_field);
        assert!(matches!(lmp_verdict(&graph(vec![], 1.0), t), Err(Error::EmptyGraph)));
        let flipped = vec![(0.0, 0.0), (0.001, 3.1)];
        assert_eq!(lmp_verdict(&graph(flipped.clone(), 10.0), t).unwrap().outcome, Outcome::Pseudohyperbolic);
        let oriented = LmpGraph {
            oriented: true,
            ..graph(flipped, 10.0)
        };
        let v = lmp_verdict(&oriented, t).unwrap();
        assert_eq!(v.outcome, Outcome::Quasiattractor);
        assert_eq!(v.band_upper, std::f64::consts::PI);
        let bad = VerdictThresholds { theta: 2.0, ..t };
        assert!(lmp_verdict(&graph(vec![(0.0, 0.0)], 1.0), bad).is_err());
    }

    #[test]
    fn rate_examples() {
        let rep = |l: &[f64], kind| LyapunovReport {
            exponents: l.to_vec(),
            iterations_used: 1,
            convergence_error: vec![0.0; l.len()],
            kind,
            history: vec![],
        };
        let r = finite_time_pseudohyp_rates(&rep(&[2.19, 0.0, -1.96, -16.56], SystemKind::Flow)).unwrap();
        assert!((r.volume_rate_n2 - 0.23).abs() < 1e-12);
        assert_eq!(r.contraction_rate_n1, -16.56);
        let r = finite_time_pseudohyp_rates(&rep(&[-0.1, -0.2, -0.3], SystemKind::Map)).unwrap();
        assert!((r.volume_rate_n2 + 0.3).abs() < 1e-12);
        assert!((r.separation_margin - 0.1).abs() < 1e-12);
        assert!(finite_time_pseudohyp_rates(&rep(&[0.1, 0.2], SystemKind::Map)).is_err());
    }

    #[test]
    fn natural_stride_follows_strong_stable_sign() {
        let z2 = PolyNonlinearity::minus_z_squared();
        assert_eq!(natural_stride(&SystemSpec::Ghm(GhmParams::new(-1.11, 0.7, 0.77, z2))), 2);
        assert_eq!(natural_stride(&SystemSpec::Ghm(GhmParams::new(3.702, 0.05, -2.749, z2))), 1);
    }

    proptest! {
        #[test]
        fn angles_are_symmetric_and_in_range(
            a in prop::array::uniform3(-1.0f64..1.0),
            b in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let u = State::from_column_slice(&a);
            let v = State::from_column_slice(&b);
            prop_assume!(u.norm() > 1e-3 && v.norm() > 1e-3);
            let (u, v) = (u.normalize(), v.normalize());
            let x = angle(&u, &v);
            prop_assert_eq!(x, angle(&v, &u));
            prop_assert!((0.0..=std::f64::consts::PI).contains(&x));
        }

        #[test]
        fn more_pairs_never_widen_the_gap(seed in 0u64..50) {
            let (pts, dirs) = helix(200);
            let orbit = orbit_of(pts);
            let field = field_of(dirs, 0);
            let small = lmp_graph(&orbit, &field, 1, 100, seed).unwrap();
            let mut large = small.clone();
            let extra = lmp_graph(&orbit, &field, 1, 150, seed + 1000).unwrap();
            large.pairs.extend(extra.pairs);
            large.sources.extend(extra.sources);
            let t = VerdictThresholds::default();
            prop_assert!(lmp_verdict(&large, t).unwrap().gap <= lmp_verdict(&small, t).unwrap().gap);
        }
    }
}
