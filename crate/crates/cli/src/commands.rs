use std::time::Instant;

use affinedim_core::geometry::default_radii;
use affinedim_core::pressure::{is_multiplicative, pressure_estimate, ENUMERATION_CAP};
use affinedim_core::rng::{derive_seed, Purpose};
use affinedim_core::{
    energy, entropy, exponents_exact_diagonal, exponents_monte_carlo, feng_bounds, generate_cloud, local_dimension,
    lyapunov_dimension, measure_pressure, pressure_curve, pressure_zero, projection_entropy_estimate, s_infinity,
    sample_translations, AffineIFS, Entropy, Error, ExtendedReal, KdTree, LyapunovDimension, LyapunovSpectrum,
    MeasureSpec, MonteCarloConfig, SInfinity, TranslationDraw,
};

use crate::error::{CliError, SpecError};
use crate::output::{num, Outcome, Table};
use crate::report::*;
use crate::spec::{ResolvedSystem, SimulateBlock, SystemSpec};

/// Allowed gap between a median slope and `min{d, dim_LY}`.
pub const SLOPE_TOLERANCE: f64 = 0.1;
/// Deepest default level for enumerated pressure sums.
const MAX_DEFAULT_LEVEL: usize = 8;
const DEFAULT_LEVEL_WORDS: f64 = 1e6;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides the spec's seed.
    pub seed: Option<u64>,
    /// Worker count recorded in the report.
    pub threads: usize,
}

fn start(kind: CommandKind, sys: &ResolvedSystem, opts: &RunOptions) -> RunReport {
    let mut report = RunReport::new(kind, opts.seed.unwrap_or(sys.spec.seed));
    report.inputs = Some(echo(sys));
    report
}

fn finish(mut report: RunReport, began: Instant, opts: &RunOptions, tables: Vec<Table>) -> Outcome {
    report.timings = Timings { wall_seconds: began.elapsed().as_secs_f64(), threads: opts.threads };
    Outcome { report, tables }
}

fn echo(sys: &ResolvedSystem) -> InputsEcho {
    InputsEcho {
        spec: sys.spec.clone(),
        dim: sys.spec.dim,
        map_count: sys.ifs.as_ref().map(AffineIFS::len),
        map_family: sys.ifs.as_ref().and_then(AffineIFS::family).map(|f| f.to_string()),
        norm_sup: sys.ifs.as_ref().map(AffineIFS::norm_sup),
        measure_symbols: sys.mu.as_ref().map(|mu| mu.symbols().len()),
        measure_family: sys.mu.as_ref().and_then(MeasureSpec::family).map(|f| f.to_string()),
        truncation: sys.mu.as_ref().and_then(|mu| mu.alphabet().truncation().copied()),
    }
}

fn need_measure(sys: &ResolvedSystem) -> Result<&MeasureSpec, CliError> {
    sys.mu.as_ref().ok_or_else(|| SpecError::new("measure", "this command needs a [measure] block").into())
}

fn need_maps(sys: &ResolvedSystem) -> Result<&AffineIFS, CliError> {
    sys.ifs.as_ref().ok_or_else(|| SpecError::new("maps", "this command needs a [maps] block").into())
}

fn step_grid(top: f64, step: f64) -> Vec<f64> {
    let n = (top / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// Exact exponents for diagonal Bernoulli systems, Monte Carlo otherwise.
pub fn lyapunov_spectrum(
    ifs: &AffineIFS,
    mu: &MeasureSpec,
    spec: &SystemSpec,
    seed: u64,
) -> Result<LyapunovSpectrum, CliError> {
    if ifs.is_diagonal() {
        match exponents_exact_diagonal(ifs, mu) {
            Ok(s) => return Ok(s),
            Err(Error::NotBernoulli | Error::NotDiagonal(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let cfg = MonteCarloConfig::new(spec.analyze.monte_carlo_steps, spec.analyze.monte_carlo_replicas, seed);
    Ok(exponents_monte_carlo(ifs, mu, &cfg)?)
}

pub fn analyze(sys: &ResolvedSystem, opts: &RunOptions) -> Result<Outcome, CliError> {
    let began = Instant::now();
    let mut report = start(CommandKind::Analyze, sys, opts);
    let seed = report.provenance.seed;
    let mu = need_measure(sys)?;
    let h = entropy(mu);
    let mut results = AnalyzeResults {
        entropy: h.clone(),
        spectrum: None,
        measure_pressure: Vec::new(),
        lyapunov_dimension: None,
        predicted_local_dimension: None,
        theorem_applicable: None,
        s_infinity: None,
    };
    let mut table = Table::new("measure_pressure.csv", &["s", "energy", "measure_pressure"]);

    match &sys.ifs {
        None => report.notes.push("no maps given: only the entropy is computed".into()),
        Some(ifs) => {
            let spectrum = lyapunov_spectrum(ifs, mu, &sys.spec, seed)?;
            results.theorem_applicable = Some(ifs.half_norm());
            match h.value() {
                Some(hv) => {
                    let grid = sys.spec.analyze.s_grid.clone().unwrap_or_else(|| step_grid(sys.spec.dim as f64, 0.25));
                    for &s in &grid {
                        let e = energy(&spectrum, s)?.value;
                        let p = measure_pressure(hv, &spectrum, s)?;
                        table.push(vec![num(s), num(e), num(p)]);
                        results.measure_pressure.push(MeasurePressurePoint { s, energy: e, measure_pressure: p });
                    }
                    let dim = lyapunov_dimension(hv, &spectrum)?;
                    results.predicted_local_dimension = Some(dim.value.min(sys.spec.dim as f64));
                    results.lyapunov_dimension = Some(dim);
                }
                None => report.notes.push("entropy is infinite: measure pressure and dim_LY are undefined".into()),
            }
            if ifs.is_countable() {
                match s_infinity(ifs) {
                    Ok(s) => results.s_infinity = Some(s),
                    Err(e) => report.notes.push(format!("s_infinity not certified: {e}")),
                }
            }
            results.spectrum = Some(spectrum);
        }
    }
    report.analyze = Some(results);
    let tables = if table.rows.is_empty() { Vec::new() } else { vec![table] };
    Ok(finish(report, began, opts, tables))
}

/// Deepest level `≤ 8` whose enumeration stays under 10^6 words; multiplicative
/// systems are level independent, so a few levels suffice as a check.
pub fn default_max_level(ifs: &AffineIFS) -> usize {
    if is_multiplicative(ifs) {
        return 3;
    }
    let m = ifs.len() as f64;
    (1..=MAX_DEFAULT_LEVEL).take_while(|&n| m.powi(n as i32) <= DEFAULT_LEVEL_WORDS).last().unwrap_or(1)
}

pub fn pressure(sys: &ResolvedSystem, opts: &RunOptions) -> Result<Outcome, CliError> {
    let began = Instant::now();
    let mut report = start(CommandKind::Pressure, sys, opts);
    let ifs = need_maps(sys)?;
    let max_level = match sys.spec.pressure.max_level {
        Some(0) => return Err(SpecError::new("pressure.max_level", "levels start at 1").into()),
        Some(l) => l,
        None => default_max_level(ifs),
    };
    if !is_multiplicative(ifs) && (ifs.len() as f64).powi(max_level as i32) > ENUMERATION_CAP {
        return Err(SpecError::new(
            "pressure.max_level",
            format!("{} maps at level {max_level} exceed the enumeration cap of {ENUMERATION_CAP:e} words", ifs.len()),
        )
        .into());
    }
    let grid = sys.spec.pressure.s_grid.clone().unwrap_or_else(|| step_grid(sys.spec.dim as f64, 0.1));
    let curve = pressure_curve(ifs, &grid, max_level)?;
    let zero = pressure_zero(ifs, max_level)?;
    let s_inf = s_infinity(ifs)?;

    let mut table = Table::new("pressure_curve.csv", &["s", "level", "value", "running_infimum"]);
    for (i, &s) in curve.s_grid.iter().enumerate() {
        let mut inf = ExtendedReal::PlusInfinity;
        for (l, &v) in curve.per_level[i].iter().enumerate() {
            if v < inf {
                inf = v;
            }
            table.push(vec![num(s), num(l + 1), num(v), num(inf)]);
        }
    }
    report.pressure = Some(PressureResults { max_level, curve, zero, s_infinity: s_inf });
    Ok(finish(report, began, opts, vec![table]))
}

fn simulate_block(spec: &SystemSpec) -> Result<&SimulateBlock, CliError> {
    spec.simulate.as_ref().ok_or_else(|| SpecError::new("simulate", "this command needs a [simulate] block").into())
}

/// Entropy, spectrum and dim_LY, or `None` with a reason.
fn lyapunov_target(
    ifs: &AffineIFS,
    mu: &MeasureSpec,
    spec: &SystemSpec,
    seed: u64,
) -> Result<Result<LyapunovDimension, String>, CliError> {
    let Entropy::Finite { value: h, .. } = entropy(mu) else {
        return Ok(Err("entropy is infinite: no dim_LY target".into()));
    };
    let spectrum = lyapunov_spectrum(ifs, mu, spec, seed)?;
    Ok(Ok(lyapunov_dimension(h, &spectrum)?))
}

pub fn simulate(sys: &ResolvedSystem, opts: &RunOptions) -> Result<Outcome, CliError> {
    let began = Instant::now();
    let mut report = start(CommandKind::Simulate, sys, opts);
    let seed = report.provenance.seed;
    let ifs = need_maps(sys)?;
    let mu = need_measure(sys)?;
    let block = simulate_block(&sys.spec)?;
    if block.points == 0 || block.depth == 0 || block.centers == 0 {
        return Err(SpecError::new("simulate", "points, depth and centers must be positive").into());
    }

    let dim_ly = match lyapunov_target(ifs, mu, &sys.spec, seed)? {
        Ok(d) => Some(d),
        Err(note) => {
            report.notes.push(note);
            None
        }
    };
    let target = dim_ly.map(|d| d.value.min(sys.spec.dim as f64));

    let mut draws: Vec<(DrawKind, u64, TranslationDraw)> = (0..block.draws)
        .map(|k| {
            let s = derive_seed(seed, Purpose::Draw, k as u64);
            (DrawKind::Random, s, sample_translations(ifs, s))
        })
        .collect();
    if block.zero_draw {
        draws.push((DrawKind::Zero, derive_seed(seed, Purpose::Draw, draws.len() as u64), TranslationDraw::zero(ifs)));
    }
    if let Some(t) = &sys.translations {
        draws.push((DrawKind::Spec, derive_seed(seed, Purpose::Draw, draws.len() as u64), t.clone()));
    }
    if draws.is_empty() {
        return Err(SpecError::new("simulate.draws", "no translation draws requested").into());
    }

    let mut per_center = Table::new("local_dimension.csv", &["draw", "center", "slope", "intercept", "residual"]);
    let mut summaries = Vec::with_capacity(draws.len());
    for (index, (kind, draw_seed, draw)) in draws.iter().enumerate() {
        let cloud = generate_cloud(ifs, mu, draw, block.points, block.depth, *draw_seed)?;
        let diameter = cloud.diameter();
        let mut summary = DrawSummary {
            index,
            kind: *kind,
            seed: *draw_seed,
            n_points: cloud.len(),
            depth: cloud.depth,
            truncation_error: cloud.truncation_error,
            diameter,
            radii: Vec::new(),
            centers: 0,
            median: 0.0,
            iqr: 0.0,
            mean: 0.0,
            collapsed: diameter <= 2.0 * cloud.truncation_error,
            exceptional: false,
            within_tolerance: None,
        };
        if !summary.collapsed {
            let tree = KdTree::build(cloud.dim, &cloud.points);
            let radii = match &block.radii {
                Some(r) => r.clone(),
                None => default_radii(&cloud, &tree, *draw_seed)?,
            };
            let est = local_dimension(&cloud, &tree, &radii, block.centers, *draw_seed)?;
            for fit in &est.per_center {
                per_center.push(vec![
                    num(index),
                    num(fit.center),
                    num(fit.slope),
                    num(fit.intercept),
                    num(fit.residual),
                ]);
            }
            summary.radii = est.radii;
            summary.centers = est.per_center.len();
            summary.median = est.median;
            summary.iqr = est.iqr;
            summary.mean = est.mean;
        }
        if let Some(t) = target {
            summary.exceptional = summary.collapsed || summary.median < t - SLOPE_TOLERANCE;
            summary.within_tolerance = Some((summary.median - t).abs() <= SLOPE_TOLERANCE);
        }
        if summary.exceptional {
            report.notes.push(format!("draw {index}: exceptional translation (median slope {})", summary.median));
        }
        summaries.push(summary);
    }

    let mut draws_table = Table::new(
        "draws.csv",
        &["draw", "kind", "seed", "median", "iqr", "mean", "diameter", "r_min", "r_max", "collapsed", "exceptional"],
    );
    for s in &summaries {
        let kind = serde_json::to_value(s.kind)?.as_str().unwrap_or_default().to_string();
        draws_table.push(vec![
            num(s.index),
            kind,
            num(s.seed),
            num(s.median),
            num(s.iqr),
            num(s.mean),
            num(s.diameter),
            s.radii.first().map_or(String::new(), num),
            s.radii.last().map_or(String::new(), num),
            num(s.collapsed),
            num(s.exceptional),
        ]);
    }

    let (projection_entropy, feng) = match &block.projection_entropy {
        None => (None, None),
        Some(pe) => {
            // the spec's own translations if given, else the first random draw
            let draw = sys.translations.clone().unwrap_or_else(|| draws[0].2.clone());
            let est = projection_entropy_estimate(ifs, mu, &draw, pe.m, &pe.widths, pe.samples, seed)?;
            let bounds = feng_bounds(ifs, mu, est.estimate)?;
            (Some(est), Some(bounds))
        }
    };

    report.simulate = Some(SimulateResults {
        lyapunov_dimension: dim_ly,
        target,
        tolerance: SLOPE_TOLERANCE,
        draws: summaries,
        projection_entropy,
        feng_bounds: feng,
    });
    Ok(finish(report, began, opts, vec![draws_table, per_center]))
}

pub const EXAMPLE_SPECS: [(&str, &str); 4] = [
    ("example_5_1a", include_str!("../../../specs/example_5_1a.toml")),
    ("example_5_1b", include_str!("../../../specs/example_5_1b.toml")),
    ("example_5_2", include_str!("../../../specs/example_5_2.toml")),
    ("example_5_3", include_str!("../../../specs/example_5_3.toml")),
];

struct Checks(Vec<ExampleCheck>);

impl Checks {
    fn add(&mut self, example: &str, check: &str, expected: &str, observed: impl ToString, passed: bool) {
        self.0.push(ExampleCheck {
            example: example.into(),
            check: check.into(),
            expected: expected.into(),
            observed: observed.to_string(),
            passed,
            informational: false,
        });
    }

    fn info(&mut self, example: &str, check: &str, expected: &str, observed: impl ToString, passed: bool) {
        self.add(example, check, expected, observed, passed);
        self.0.last_mut().unwrap().informational = true;
    }
}

/// The worked examples end to end against their known values.
pub fn examples(opts: &RunOptions) -> Result<Outcome, CliError> {
    let began = Instant::now();
    let mut report = RunReport::new(CommandKind::Examples, opts.seed.unwrap_or(0));
    let mut c = Checks(Vec::new());
    let ln2 = std::f64::consts::LN_2;
    let load = |i: usize| SystemSpec::load_str(EXAMPLE_SPECS[i].1);

    let a = load(0)?;
    let h = entropy(need_measure(&a)?);
    let ok = h.value().is_some_and(|v| (v - 2.0 * ln2).abs() <= 1e-6);
    c.add("example_5_1a", "entropy", "2 ln 2 ± 1e-6", h.value().map_or("inf".into(), num), ok);

    let b = load(1)?;
    let h = entropy(need_measure(&b)?);
    let observed = match &h {
        Entropy::Infinite(cert) => format!("infinite (last term {})", cert.last_term),
        Entropy::Finite { value, .. } => num(value),
    };
    let ok = matches!(&h, Entropy::Infinite(cert) if cert.last_term > 0.0);
    c.add("example_5_1b", "entropy", "infinite, positive tail", observed, ok);

    let sys = load(2)?;
    let (ifs, mu) = (need_maps(&sys)?, need_measure(&sys)?);
    let hv = entropy(mu).value().ok_or_else(|| CliError::Usage("example_5_2 entropy is not finite".into()))?;
    let spectrum = exponents_exact_diagonal(ifs, mu)?;
    let ex = spectrum.exponents();
    let l1 = ex[0].finite();
    c.add(
        "example_5_2",
        "lambda_1",
        "ln 2 - h ± 1e-6",
        ex[0],
        l1.is_some_and(|l| (l - (ln2 - hv)).abs() <= 1e-6),
    );
    c.add("example_5_2", "lambda_2", "-inf", ex[1], ex[1].is_minus_infinity());
    let p1 = measure_pressure(hv, &spectrum, 1.0)?;
    c.add("example_5_2", "P_mu(1)", ">= ln 2 - 1e-6", p1, p1 >= ExtendedReal::Finite(ln2 - 1e-6));
    let p11 = measure_pressure(hv, &spectrum, 1.1)?;
    c.add("example_5_2", "P_mu(1.1)", "-inf", p11, p11.is_minus_infinity());
    let dim = lyapunov_dimension(hv, &spectrum)?;
    c.add(
        "example_5_2",
        "dim_LY",
        "1, at the jump",
        format!("{} (jump: {})", dim.value, dim.discontinuity_hit),
        dim.value == 1.0 && dim.discontinuity_hit,
    );
    c.info("example_5_2", "sup norm < 1/2", "true", format!("{} (sup norm {})", ifs.half_norm(), ifs.norm_sup()), ifs.half_norm());

    let sys = load(3)?;
    let ifs = need_maps(&sys)?;
    for s in [1.2, 1.3, 1.4] {
        let p = pressure_estimate(ifs, s, 1)?.upper;
        c.add("example_5_3", &format!("P({s})"), "inf", p, p.is_plus_infinity());
    }
    let p = pressure_estimate(ifs, 1.5, 1)?.upper;
    c.add("example_5_3", "P(1.5)", "< 0", p, p < ExtendedReal::ZERO);
    match s_infinity(ifs)? {
        SInfinity::Bracketed { s_below, s_above, .. } => c.add(
            "example_5_3",
            "s_infinity",
            "bracket contains 1.5, width <= 1e-3",
            format!("[{s_below}, {s_above}]"),
            s_below <= 1.5 && 1.5 <= s_above && s_above - s_below <= 1e-3,
        ),
        SInfinity::Zero => c.add("example_5_3", "s_infinity", "bracket contains 1.5", "0", false),
    }

    let failures = c.0.iter().filter(|x| !x.passed && !x.informational).count();
    let mut table = Table::new("examples.csv", &["example", "check", "expected", "observed", "passed", "informational"]);
    for x in &c.0 {
        table.push(vec![
            x.example.clone(),
            x.check.clone(),
            x.expected.clone(),
            x.observed.clone(),
            num(x.passed),
            num(x.informational),
        ]);
    }
    report.examples = Some(ExamplesResults { checks: c.0, failures });
    Ok(finish(report, began, opts, vec![table]))
}
