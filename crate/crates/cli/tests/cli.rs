use std::path::{Path, PathBuf};
use std::process::Command;

use affinedim_cli::report::{CommandKind, DrawKind};
use affinedim_cli::{analyze, pressure, simulate, RunOptions, RunReport, SystemSpec};
use affinedim_core::{Entropy, ExtendedReal, SInfinity};

fn spec_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn opts() -> RunOptions {
    RunOptions { seed: None, threads: 1 }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_affinedim"))
}

#[test]
fn bundled_specs_all_resolve() {
    for name in ["example_5_1a", "example_5_1b", "example_5_2", "example_5_3", "cantor", "diagonal_pair"] {
        SystemSpec::load(&spec_path(&format!("{name}.toml"))).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn spec_errors_carry_field_and_line() {
    let text = "schema = 1\ndim = 2\n\n[[maps.map]]\nmatrix = [[0.5, 0.0], [0.0, 0.5]]\n\n[measure]\nkind = \"bernoulli\"\nweights = [0.3, 0.3, 0.4]\n";
    let err = SystemSpec::load_str(text).unwrap_err();
    assert_eq!(err.field, "measure.weights");
    assert_eq!(err.line, Some(9));

    let err = SystemSpec::load_str("schema = 2\ndim = 1\n").unwrap_err();
    assert_eq!((err.field.as_str(), err.line), ("schema", Some(1)));

    let err = SystemSpec::load_str("schema = 1\ndim = 1\n[maps]\nfamily = \"example_9\"\n").unwrap_err();
    assert_eq!((err.field.as_str(), err.line), ("maps.family", Some(4)));

    // a non-contraction
    let err = SystemSpec::load_str("schema = 1\ndim = 1\n[[maps.map]]\nmatrix = [[1.5]]\n").unwrap_err();
    assert_eq!(err.field, "maps");

    let err = SystemSpec::load_str("schema = 1\ndim = 1\n[[maps.map]]\nmatrix = [[0.5]]\ntranslation = [0.7]\n").unwrap_err();
    assert_eq!((err.field.as_str(), err.line), ("maps.map.translation", Some(5)));
}

#[test]
fn analyze_example_5_2() {
    let sys = SystemSpec::load(&spec_path("example_5_2.toml")).unwrap();
    let out = analyze(&sys, &opts()).unwrap();
    let a = out.report.analyze.as_ref().unwrap();
    let ex = a.spectrum.as_ref().unwrap().exponents();
    assert_eq!(ex[1], ExtendedReal::MinusInfinity);
    let dim = a.lyapunov_dimension.unwrap();
    assert_eq!(dim.value, 1.0);
    assert!(dim.discontinuity_hit);
    // the maps' top singular value 2c/4 exceeds 1/2
    assert_eq!(a.theorem_applicable, Some(false));
    let trunc = out.report.inputs.as_ref().unwrap().truncation.unwrap();
    assert!(trunc.deficit > 0.0 && trunc.deficit < 2e-6);
    assert!(matches!(a.s_infinity, Some(SInfinity::Bracketed { .. })));
}

#[test]
fn analyze_similarity_gives_moran_dimension() {
    let sys = SystemSpec::load(&spec_path("cantor.toml")).unwrap();
    let a = analyze(&sys, &opts()).unwrap().report.analyze.unwrap();
    let moran = 2f64.ln() / 3f64.ln();
    assert!((a.lyapunov_dimension.unwrap().value - moran).abs() < 1e-12);
    assert_eq!(a.predicted_local_dimension, Some(a.lyapunov_dimension.unwrap().value));
    assert_eq!(a.theorem_applicable, Some(true));
}

#[test]
fn single_map_has_dimension_and_entropy_zero() {
    let text = "schema = 1\ndim = 2\n[[maps.map]]\nmatrix = [[0.5, 0.1], [0.0, 0.3]]\n[measure]\nkind = \"uniform\"\n";
    let sys = SystemSpec::load_str(text).unwrap();
    let a = analyze(&sys, &opts()).unwrap().report.analyze.unwrap();
    assert_eq!(a.entropy.value(), Some(0.0));
    assert_eq!(a.lyapunov_dimension.unwrap().value, 0.0);
}

#[test]
fn analyze_measure_only_spec_reports_infinite_entropy() {
    let sys = SystemSpec::load(&spec_path("example_5_1b.toml")).unwrap();
    let out = analyze(&sys, &opts()).unwrap();
    assert!(matches!(out.report.analyze.unwrap().entropy, Entropy::Infinite(_)));
    assert!(out.tables.is_empty());
}

#[test]
fn pressure_on_the_lattice_family() {
    let sys = SystemSpec::load(&spec_path("example_5_3.toml")).unwrap();
    let out = pressure(&sys, &opts()).unwrap();
    let p = out.report.pressure.as_ref().unwrap();
    for (s, v) in p.curve.s_grid.iter().zip(&p.curve.values) {
        if *s < 1.5 {
            assert_eq!(*v, ExtendedReal::PlusInfinity, "s = {s}");
        } else {
            assert!(*v < ExtendedReal::ZERO, "s = {s}: {v}");
        }
    }
    assert!(p.zero.jump);
    let csv = String::from_utf8(out.tables[0].to_csv().unwrap()).unwrap();
    assert!(csv.starts_with("s,level,value,running_infimum\n"));
    assert!(csv.contains("\n1.2,1,inf,inf\n"));
}

#[test]
fn pressure_root_and_zero_row() {
    let sys = SystemSpec::load(&spec_path("cantor.toml")).unwrap();
    let out = pressure(&sys, &opts()).unwrap();
    let p = out.report.pressure.as_ref().unwrap();
    assert!((p.zero.root - 2f64.ln() / 3f64.ln()).abs() <= 1e-8);
    // s = 0 counts words: P(0) = ln |I| at every level
    let i0 = p.curve.s_grid.iter().position(|&s| s == 0.0).unwrap();
    for v in &p.curve.per_level[i0] {
        assert!((v.finite().unwrap() - 2f64.ln()).abs() < 1e-14);
    }
}

#[test]
fn simulate_is_deterministic_and_flags_the_zero_draw() {
    let sys = SystemSpec::load(&spec_path("diagonal_pair.toml")).unwrap();
    let mut small = sys.clone();
    let block = small.spec.simulate.as_mut().unwrap();
    block.draws = 2;
    block.points = 20_000;
    let a = simulate(&small, &opts()).unwrap();
    let b = simulate(&small, &RunOptions { seed: None, threads: 4 }).unwrap();
    assert_eq!(a.report.without_timings(), b.report.without_timings());
    assert_eq!(a.report.without_timings().to_json().unwrap(), b.report.without_timings().to_json().unwrap());
    for (x, y) in a.tables.iter().zip(&b.tables) {
        assert_eq!(x.to_csv().unwrap(), y.to_csv().unwrap());
    }
    let s = a.report.simulate.unwrap();
    let zero = s.draws.iter().find(|d| d.kind == DrawKind::Zero).unwrap();
    assert!(zero.collapsed && zero.exceptional);

    let c = simulate(&small, &RunOptions { seed: Some(99), threads: 1 }).unwrap();
    assert_ne!(c.report.simulate.unwrap().draws[0].seed, s.draws[0].seed);
}

#[test]
fn report_round_trips_through_json() {
    for (name, run) in [
        ("example_5_2.toml", analyze as fn(&_, &_) -> _),
        ("example_5_3.toml", pressure),
        ("cantor.toml", analyze),
    ] {
        let sys = SystemSpec::load(&spec_path(name)).unwrap();
        let report = run(&sys, &opts()).unwrap().report;
        let back: RunReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report, "{name}");
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema = 1\ndim = 1\nnope = 1\n").unwrap();
    let out = bin().args(["analyze", "--spec"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = bin().arg("analyze").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // a degenerate projection-entropy request has no certificate
    let sparse = dir.path().join("sparse.toml");
    std::fs::write(
        &sparse,
        "schema = 1\ndim = 1\n[[maps.map]]\nmatrix = [[0.3]]\n[[maps.map]]\nmatrix = [[0.3]]\n[measure]\nkind = \"uniform\"\n\
         [simulate]\ndraws = 1\npoints = 5000\n[simulate.projection_entropy]\nwidths = [1e-6]\nsamples = 100\n",
    )
    .unwrap();
    let out = bin().args(["simulate", "--threads", "2", "--spec"]).arg(&sparse).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let out_dir = dir.path().join("run");
    let out = bin().args(["pressure", "--json", "--spec"]).arg(spec_path("cantor.toml")).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let printed: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed.command, CommandKind::Pressure);
    assert!(printed.timings.threads >= 1);
    assert!(out_dir.join("report.json").exists() && out_dir.join("pressure_curve.csv").exists());

    let out = bin().arg("examples").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn threads_come_from_the_environment() {
    let out = bin()
        .args(["pressure", "--json", "--spec"])
        .arg(spec_path("cantor.toml"))
        .env("AFFINEDIM_THREADS", "3")
        .output()
        .unwrap();
    let r: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.timings.threads, 3);
}
