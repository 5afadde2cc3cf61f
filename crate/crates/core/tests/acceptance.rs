//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Run alone with `cargo test -p attractor-core --test acceptance`.

mod common;

use std::time::Instant;

use attractor_core::diagram::{sweep_diagram, DiagramSettings, HOMOCLINIC};
use attractor_core::lmp::{analyze, LmpAnalysis, LmpSettings, Outcome};
use attractor_core::lyapunov::{check_necessary_conditions, lyapunov_spectrum, LyapunovSettings};
use attractor_core::manifold::{branch_swap_distance, unstable_separatrix};
use attractor_core::render::Window;
use attractor_core::saddlechart::{char_roots, chart_curves, classify_fixed_point, Region};
use attractor_core::systems::{
    extended_lorenz_eigen, ghm_inverse, ghm_step, integrate, FlowModel, GhmParams, Lorenz, State, SystemSpec,
};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

struct Line {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn check(id: u8, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Line {
    let t = Instant::now();
    let (pass, detail) = f();
    let line = Line {
        id,
        title,
        pass,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    };
    println!(
        "[{}] {:>2}. {} ({:.1} s): {}",
        if line.pass { "PASS" } else { "FAIL" },
        line.id,
        line.title,
        line.seconds,
        line.detail
    );
    line
}

fn trunc2(v: f64) -> f64 {
    (v * 100.0).trunc() / 100.0
}

fn lmp_run(system: &SystemSpec, x0: &State, stride: Option<usize>) -> LmpAnalysis {
    let lmp = LmpSettings {
        stride,
        ..LmpSettings::default()
    };
    analyze(system, x0, &LyapunovSettings::defaults_for(system), &lmp).expect("LMP analysis")
}

fn fmt_exps(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", s.join(", "))
}

fn main() {
    let positional: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !positional.is_empty() && !positional.iter().any(|p| "acceptance".contains(p.as_str())) {
        return;
    }
    let mut lines = Vec::new();

    lines.push(check(1, "extended Lorenz eigenvalues", || {
        let e = extended_lorenz_eigen(10.0, 25.0, 8.0 / 3.0, 7.0);
        let pair = [e[1], e[2]];
        let ok = trunc2(e[0].re) == 10.93
            && trunc2(e[3].re) == -21.93
            && e[0].im == 0.0
            && e[3].im == 0.0
            && pair.iter().all(|z| (z.re + 8.0 / 3.0).abs() < 5e-3 && (z.im.abs() - 7.0).abs() < 5e-3)
            && pair[0].im * pair[1].im < 0.0;
        (ok, format!("{:.4}, {:.4}{:+.4}i, {:.4}", e[0].re, e[1].re, e[1].im, e[3].re))
    }));

    let (ext_sys, ext_x0) = extended_lorenz();
    let mut ext_lmp = None;
    lines.push(check(2, "extended Lorenz spectrum", || {
        let a = lmp_run(&ext_sys, &ext_x0, None);
        let l = a.report.exponents.clone();
        let target = [2.19, 0.0, -1.96, -16.56];
        let ok = l.iter().zip(target).all(|(x, t)| (x - t).abs() <= 0.1)
            && l[1].abs() < 0.01
            && (a.report.sum() + 16.0 + 1.0 / 3.0).abs() < 1e-2;
        let detail = format!("{} sum {:.5}", fmt_exps(&l), a.report.sum());
        ext_lmp = Some(a);
        (ok, detail)
    }));

    let cases = ghm_cases();
    let mut spectra = Vec::new();
    lines.push(check(3, "necessary conditions on five GHM attractors", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (name, p) in &cases {
            let t = Instant::now();
            let (sys, x0) = ghm(*p);
            let r = lyapunov_spectrum(&sys, &x0, &LyapunovSettings::map_defaults(), false).map(|(r, _)| r);
            ok &= t.elapsed().as_secs_f64() < 60.0;
            spectra.push((*name, *p, r));
        }
        for (name, _, r) in &spectra {
            match r {
                Ok(r) => {
                    let c = check_necessary_conditions(r).expect("three exponents");
                    ok &= c.overall;
                    parts.push(format!("{name}: {} {}", fmt_exps(&r.exponents), if c.overall { "ok" } else { "violated" }));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("{name}: {e}"));
                }
            }
        }
        (ok, parts.join("; "))
    }));

    let (l28_sys, l28_x0) = lorenz(28.0);
    let l28 = lmp_run(&l28_sys, &l28_x0, None);
    lines.push(check(4, "constant-Jacobian sum rule", || {
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for (_, p, r) in &spectra {
            match r {
                Ok(r) => {
                    let d = (r.sum() - p.b.ln()).abs();
                    worst = worst.max(d);
                    ok &= d < 1e-3;
                }
                Err(_) => ok = false,
            }
        }
        let dl = (l28.report.sum() + 13.667).abs();
        ok &= dl < 1e-2;
        (ok, format!("max GHM |sum - ln B| = {worst:.2e}; Lorenz |sum + 13.667| = {dl:.2e}"))
    }));

    lines.push(check(5, "saddle-chart region labels", || {
        let expected = [Region::D1, Region::D1, Region::D2, Region::D3, Region::D4];
        let mut ok = true;
        let mut labels = Vec::new();
        for ((_, p), want) in cases.iter().zip(expected) {
            let cls = classify_fixed_point(p.a, p.b, p.c, 1e-9);
            ok &= cls.region == want;
            labels.push(format!("{:?}", cls.region));
        }
        let d1 = classify_fixed_point(-1.1, 0.7, 0.85, 1e-9);
        let roots = char_roots(-1.1, 0.7, 0.85);
        let signs_ok = match d1.labelled_real() {
            Some((l1, l2, l3)) => l1 < -1.0 && l2 > 0.0 && l3 < 0.0 && l2.abs() > l3.abs(),
            None => false,
        };
        let oracle = roots
            .iter()
            .zip(&d1.eigenvalues)
            .all(|(r, e)| (r - e).norm() < 1e-12 && e.im == 0.0);
        let sigma = d1.sigma.unwrap_or(f64::NAN);
        ok &= sigma > 1.0 && signs_ok && oracle;
        (ok, format!("{}; D1 sigma = {sigma:.4}, eigenvalues {:?}", labels.join(", "), d1.eigenvalues.map(|z: Complex64| z.re)))
    }));

    let d1 = GhmParams::new(-1.1, 0.7, 0.85, minus_z2());
    let d1b = GhmParams::new(-1.11, 0.7, 0.77, minus_z2());
    let (d1_sys, d1_x0) = ghm(d1);
    let (d1b_sys, d1b_x0) = ghm(d1b);
    let (l35_sys, l35_x0) = lorenz(35.0);
    let d1_lmp = lmp_run(&d1_sys, &d1_x0, None);
    lines.push(check(6, "LMP verdicts", || {
        let t = Instant::now();
        let d1b_lmp = lmp_run(&d1b_sys, &d1b_x0, Some(2));
        let l35 = lmp_run(&l35_sys, &l35_x0, None);
        let ext = ext_lmp.as_ref().expect("computed for criterion 2");
        let runs = [
            ("GHM (-1.1, 0.85)", &d1_lmp, Outcome::Quasiattractor),
            ("GHM (-1.11, 0.77) stride 2", &d1b_lmp, Outcome::Pseudohyperbolic),
            ("Lorenz r=28", &l28, Outcome::Pseudohyperbolic),
            ("Lorenz r=35", &l35, Outcome::Quasiattractor),
            ("extended Lorenz", ext, Outcome::Pseudohyperbolic),
        ];
        let mut ok = t.elapsed().as_secs_f64() < 600.0;
        let mut parts = Vec::new();
        for (name, a, want) in runs {
            let v = a.verdict();
            ok &= v.outcome == want;
            parts.push(format!("{name}: {} (gap {:.2e} x diam)", v.outcome, v.gap / v.diameter));
        }
        (ok, parts.join("; "))
    }));

    lines.push(check(7, "backward/forward exponent duality", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (name, a) in [("GHM D1", &d1_lmp), ("Lorenz r=28", &l28)] {
            let want = -a.report.min_exponent();
            let rel = (a.field.backward_exponent - want).abs() / want.abs();
            ok &= rel < 1e-2;
            parts.push(format!("{name}: {:.5} vs {want:.5} (rel {rel:.1e})", a.field.backward_exponent));
        }
        (ok, parts.join("; "))
    }));

    lines.push(check(8, "Lyapunov diagram smoke test", || {
        let settings = DiagramSettings::default();
        let window = Window::new(-2.0, 0.0, 0.0, 1.2);
        let par = sweep_diagram(window, (100, 100), 0.7, &settings, true).expect("sweep");
        let ser = sweep_diagram(window, (100, 100), 0.7, &settings, false).expect("sweep");
        let identical = par.to_csv() == ser.to_csv();
        let mut in_d1 = 0;
        for row in 0..par.height {
            for col in 0..par.width {
                let (a, c) = par.node(col, row);
                if par.get(col, row).class == HOMOCLINIC && classify_fixed_point(a, 0.7, c, 0.0).region == Region::D1 {
                    in_d1 += 1;
                }
            }
        }
        (
            identical && in_d1 > 0,
            format!(
                "class counts {:?}, class-6 pixels in D1: {in_d1}, homoclinic_eps {:e}, serial == parallel: {identical}",
                par.class_counts(),
                settings.homoclinic_eps
            ),
        )
    }));

    lines.push(check(9, "separatrix branch swap", || {
        let delta = 1e-4;
        let orbit = lyapunov_spectrum(&d1_sys, &d1_x0, &LyapunovSettings::map_defaults(), true)
            .expect("D1 orbit")
            .1
            .expect("stored");
        let bound = 10.0 * orbit.diameter(orbit.len());
        let pair = unstable_separatrix(&d1, &State::zeros(3), delta, 1000, 30, bound).expect("saddle");
        let d = branch_swap_distance(&d1, &pair);
        (
            pair.multiplier < -1.0 && d < 10.0 * delta,
            format!("multiplier {:.4}, Hausdorff {d:.2e} < {:.0e}", pair.multiplier, 10.0 * delta),
        )
    }));

    lines.push(check(10, "property suites", || {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut vieta: f64 = 0.0;
        for _ in 0..100_000 {
            let (a, b, c) = (
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let r = char_roots(a, b, c);
            let sum = r[0] + r[1] + r[2];
            let pairs = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
            let prod = r[0] * r[1] * r[2];
            vieta = vieta.max((sum - a).norm().max((pairs + c).norm()).max((prod - b).norm()));
        }

        let mut round_trip: f64 = 0.0;
        for _ in 0..1000 {
            let p = GhmParams::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(0.05..1.0),
                rng.random_range(-3.0..3.0),
                minus_z2(),
            );
            let x = State::from_fn(3, |_, _| rng.random_range(-1.5..1.5));
            let back = ghm_inverse(&ghm_step(&x, &p).expect("step"), &p).expect("inverse");
            round_trip = round_trip.max((back - x).amax());
        }

        let model = FlowModel::Lorenz(Lorenz::classic());
        let x0 = State::from_element(3, 1.0);
        let end = |dt: f64| {
            let steps = (0.5 / dt).round() as usize;
            integrate(&model, &x0, dt, steps, None).expect("integrate").states.pop().expect("states")
        };
        let (h1, h2, h3) = (end(0.01), end(0.005), end(0.0025));
        let order = ((&h1 - &h2).norm() / (&h2 - &h3).norm()).log2();

        let mut curves: f64 = 0.0;
        for b in [0.05, 0.5, 0.7, 0.72] {
            let set = chart_curves(b, (-4.0, 4.0), 2000).expect("curves");
            for curve in &set.curves {
                for pt in curve.points() {
                    curves = curves.max(curve.id.residual(b, pt[0], pt[1]).abs());
                }
            }
        }
        (
            vieta < 1e-9 && round_trip < 1e-10 && (order - 4.0).abs() < 0.2 && curves < 1e-9,
            format!(
                "Vieta {vieta:.1e}, round trip {round_trip:.1e}, RK4 order {order:.3}, curve residual {curves:.1e}"
            ),
        )
    }));

    let failed: Vec<u8> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!(
        "acceptance: {}/{} criteria passed, {:.0} s total",
        lines.len() - failed.len(),
        lines.len(),
        lines.iter().map(|l| l.seconds).sum::<f64>()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
