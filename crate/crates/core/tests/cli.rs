use std::path::Path;
use std::process::{Command, Output};

use attractor_core::cli::parse_config;

fn attractor(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attractor"))
        .current_dir(dir)
        .env_remove("ATTRACTOR_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lmp_reports_pseudohyperbolic_discrete_lorenz() {
    let tmp = tempfile::tempdir().unwrap();
    let o = attractor(tmp.path(), &["lmp", "--set", "system.a=-1.11", "--set", "system.c=0.77", "--out", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("verdict: pseudohyperbolic"));
    for f in ["lmp.csv", "lmp.svg", "spectrum.csv", "manifest.toml", "report.txt"] {
        assert!(tmp.path().join("run").join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(tmp.path().join("run/lmp.csv")).unwrap();
    assert!(csv.starts_with("dx,dphi\n"));
}

#[test]
fn chart_writes_all_seven_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let o = attractor(tmp.path(), &["chart", "--set", "system.b=0.5", "--set", "chart.width=64", "--set", "chart.height=64", "-o", "c"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("c/curves.csv")).unwrap();
    let mut ids: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids, ["L+", "L-", "Lphi", "S+", "S-", "resonance", "sigma=1"]);
    let png = std::fs::read(tmp.path().join("c/chart.png")).unwrap();
    assert_eq!(&png[1..4], b"PNG");
}

#[test]
fn diagram_is_reproducible_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("d.toml"),
        "[diagram]\ngrid = [8, 6]\ntransient = 500\nmeasure = 5000\n\n[diagram.palette]\n6 = [0, 0, 0]\n",
    )
    .unwrap();
    for out in ["one", "two"] {
        let o = attractor(tmp.path(), &["diagram", "--config", "d.toml", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(tmp.path().join("one/diagram.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("two/diagram.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8_lossy(&a).lines().next(), Some("A,C,class,lambda1,lambda2,lambda3,min_dist_O"));
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 1 + 8 * 6);
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = attractor(tmp.path(), &["lyapunov", "--set", "lyapunov.measure=20000", "-o", "first"]);
    assert!(o.status.success());
    let manifest = std::fs::read_to_string(tmp.path().join("first/manifest.toml")).unwrap();
    let resolved = parse_config(&manifest).unwrap();
    assert_eq!(resolved.lyapunov.measure, Some(20_000));
    assert_eq!(resolved.lyapunov.transient, Some(10_000));
    std::fs::copy(tmp.path().join("first/manifest.toml"), tmp.path().join("again.toml")).unwrap();
    let o = attractor(tmp.path(), &["lyapunov", "--config", "again.toml", "-o", "second"]);
    assert!(o.status.success());
    let a = std::fs::read(tmp.path().join("first/spectrum.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("second/spectrum.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn environment_variable_sets_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_attractor"))
        .current_dir(tmp.path())
        .env("ATTRACTOR_OUT", "from-env")
        .args(["poincare", "--set", "system.kind=lorenz", "--set", "poincare.crossings=20"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("from-env/poincare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn exit_codes_partition_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| attractor(tmp.path(), args).status.code();
    assert_eq!(code(&["lyapunov", "--set", "system.b=0"]), Some(1));
    assert_eq!(code(&["lmp", "--set", "lmp.stride=3"]), Some(1));
    assert_eq!(code(&["lyapunov", "--set", "lyapunov.tranzient=5"]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["lyapunov", "--set", "system.a=3", "--set", "system.c=3", "-o", "x"]), Some(2));
    // O is a stable node here, so it has no one-dimensional unstable manifold.
    assert_eq!(
        code(&["separatrix", "--set", "system.a=0", "--set", "system.c=0", "--set", "lyapunov.measure=1000", "-o", "y"]),
        Some(3)
    );
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn unknown_key_error_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let o = attractor(tmp.path(), &["orbit", "--set", "diagram.homoclinic=1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diagram.homoclinic"));
}
