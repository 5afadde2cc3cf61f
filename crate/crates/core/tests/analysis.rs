mod common;

use attractor_core::diagram::{classify_pixel, exponent_class, sweep_diagram, DiagramSettings, HOMOCLINIC};
use attractor_core::lmp::{analyze, lmp_graph, lmp_verdict, LmpSettings, Outcome, VerdictThresholds};
use attractor_core::lyapunov::{backward_strong_direction_field, lyapunov_spectrum, LyapunovSettings, OrbitRecord};
use attractor_core::manifold::homoclinic_proximity;
use attractor_core::render::Window;
use attractor_core::systems::{GhmParams, State};

use common::*;

fn d1() -> GhmParams {
    GhmParams::new(-1.1, 0.7, 0.85, minus_z2())
}

#[test]
fn exponents_do_not_depend_on_the_starting_point() {
    let (sys, x0) = ghm(d1());
    let settings = LyapunovSettings::map_defaults();
    let (r1, orbit) = lyapunov_spectrum(&sys, &x0, &settings, true).unwrap();
    let other = orbit.unwrap().points[12_345].clone();
    let (r2, _) = lyapunov_spectrum(&sys, &other, &settings, false).unwrap();
    for k in 0..3 {
        let tol = 2.0 * (r1.convergence_error[k] + r2.convergence_error[k]) + 1e-4;
        assert!(
            (r1.exponents[k] - r2.exponents[k]).abs() < tol,
            "exponent {k}: {} vs {}",
            r1.exponents[k],
            r2.exponents[k]
        );
    }
}

#[test]
fn lorenz_has_a_zero_exponent() {
    let (sys, x0) = lorenz(28.0);
    let (r, _) = lyapunov_spectrum(&sys, &x0, &LyapunovSettings::defaults_for(&sys), false).unwrap();
    assert!(r.exponents.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min) < 1e-3);
    assert!((r.sum() + 41.0 / 3.0).abs() < 1e-2);
}

#[test]
fn strong_stable_field_is_continuous_on_the_lorenz_attractor() {
    let (sys, x0) = lorenz(28.0);
    let a = analyze(&sys, &x0, &LyapunovSettings::defaults_for(&sys), &LmpSettings::default()).unwrap();
    let g = a.graph();
    let near = 1e-3 * g.diameter;
    let close: Vec<f64> = g.pairs.iter().filter(|p| p.0 < near).map(|p| p.1).collect();
    assert!(!close.is_empty());
    assert!(close.iter().all(|&phi| phi < 0.1 || phi > std::f64::consts::PI - 0.1));
    assert_eq!(a.verdict().outcome, Outcome::Pseudohyperbolic);
}

#[test]
fn proximity_shrinks_as_storage_grows() {
    let (sys, x0) = ghm(d1());
    let mut s = LyapunovSettings::map_defaults();
    s.measure = 200_000;
    let orbit = lyapunov_spectrum(&sys, &x0, &s, true).unwrap().1.unwrap();
    let o = State::zeros(3);
    let mut last = f64::INFINITY;
    for n in [100, 1000, 5000, orbit.len()] {
        let sub = OrbitRecord {
            points: orbit.points[..n].to_vec(),
            ..orbit.clone()
        };
        let d = homoclinic_proximity(&sub, &o);
        assert!(d <= last);
        last = d;
    }
    assert!(last < DiagramSettings::default().homoclinic_eps);
}

#[test]
fn larger_pair_budget_never_widens_the_gap() {
    let (sys, x0) = ghm(d1());
    let orbit = lyapunov_spectrum(&sys, &x0, &LyapunovSettings::map_defaults(), true)
        .unwrap()
        .1
        .unwrap();
    let field = backward_strong_direction_field(&orbit, 1000).unwrap();
    let t = VerdictThresholds::default();
    let small = lmp_verdict(&lmp_graph(&orbit, &field, 2, 2 << 16, 7).unwrap(), t).unwrap();
    let large = lmp_verdict(&lmp_graph(&orbit, &field, 2, 8 << 16, 7).unwrap(), t).unwrap();
    assert!(large.gap <= small.gap);
    if small.outcome == Outcome::Quasiattractor {
        assert_eq!(large.outcome, Outcome::Quasiattractor);
    }
    let again = lmp_verdict(&lmp_graph(&orbit, &field, 2, 2 << 16, 7).unwrap(), t).unwrap();
    assert_eq!(again, small);
}

#[test]
fn diagram_is_order_free_and_override_only_upgrades_chaos() {
    let settings = DiagramSettings {
        transient: 1000,
        measure: 20_000,
        ..Default::default()
    };
    let window = Window::new(-1.4, -0.8, 0.6, 1.0);
    let par = sweep_diagram(window, (12, 9), 0.7, &settings, true).unwrap();
    let ser = sweep_diagram(window, (12, 9), 0.7, &settings, false).unwrap();
    assert_eq!(par.to_csv(), ser.to_csv());
    for p in &par.pixels {
        let base = exponent_class(&p.exponents, settings.eps1, settings.eps2);
        if p.class == HOMOCLINIC {
            assert!((3..=5).contains(&base));
            assert!(p.min_dist < settings.homoclinic_eps);
        } else if p.class != 0 {
            assert_eq!(p.class, base);
        }
    }
}

#[test]
fn pixel_at_the_d1_example_is_homoclinic() {
    let p = classify_pixel(-1.1, 0.85, 0.7, &DiagramSettings::default());
    assert_eq!(p.class, HOMOCLINIC);
    assert!((p.exponents.iter().sum::<f64>() - 0.7f64.ln()).abs() < 1e-9);
}
