//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::{LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use affinedim_cli::report::{DrawKind, SimulateResults};
use affinedim_cli::{analyze, pressure, simulate, Outcome, RunOptions, SystemSpec};
use affinedim_core::spectrum::SpectrumMethod;
use affinedim_core::{
    energy, entropy, exponents_exact_diagonal, exponents_monte_carlo, level_sum, measure_pressure, pressure_curve,
    product_spectrum, singular_spectrum, svf, AffineIFS, Entropy, ExtendedReal, LyapunovSpectrum, Matrix, MeasureSpec,
    MonteCarloConfig, SInfinity, Symbol,
};
use common::{brute_force_level_sum, dd_log_singular_values, dd_product, Dd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Slope tolerance for the local-dimension criteria.
const SLOPE_TOL: f64 = 0.1;

type Verdict = Result<String, String>;

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn opts() -> RunOptions {
    RunOptions { seed: None, threads: rayon_threads() }
}

fn rayon_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Collects sub-checks; the criterion passes when all of them do.
struct Checks {
    parts: Vec<String>,
    failed: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { parts: Vec::new(), failed: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.parts.push(what);
        } else {
            self.failed.push(what);
        }
    }

    fn verdict(self) -> Verdict {
        if self.failed.is_empty() {
            Ok(self.parts.join("; "))
        } else {
            Err(format!("failed: {} | passed: {}", self.failed.join("; "), self.parts.join("; ")))
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn c1() -> Verdict {
    let (h, took) = timed(|| {
        let sys = SystemSpec::load(&spec("example_5_1a.toml")).unwrap();
        entropy(sys.mu.as_ref().unwrap())
    });
    let mut c = Checks::new();
    let v = h.value().unwrap_or(f64::INFINITY);
    c.check((v - 2.0 * LN_2).abs() <= 1e-6, format!("h = {v}, |h - 2 ln 2| = {:.2e} <= 1e-6", (v - 2.0 * LN_2).abs()));
    c.check(took < Duration::from_secs(1), format!("runtime {took:.2?} < 1 s"));
    c.verdict()
}

fn c2() -> Verdict {
    let (h, took) = timed(|| {
        let sys = SystemSpec::load(&spec("example_5_1b.toml")).unwrap();
        entropy(sys.mu.as_ref().unwrap())
    });
    let mut c = Checks::new();
    match h {
        Entropy::Infinite(cert) => c.check(
            cert.last_term > 0.0,
            format!("InfiniteEntropy after {} terms, last term {:e} > 0 ({:?})", cert.terms, cert.last_term, cert.reason),
        ),
        Entropy::Finite { value, .. } => c.check(false, format!("finite entropy {value}")),
    }
    c.check(took < Duration::from_secs(5), format!("runtime {took:.2?} < 5 s"));
    c.verdict()
}

/// `Σ_{n ≤ N} p_n ln(2 p_n)` and `−Σ p_n ln p_n` for `p_n ∝ (n+1)^{−2}` renormalized
/// over the first `N` symbols, in double-double.
fn inverse_square_reference(n: usize) -> (f64, f64) {
    let c = 1.0 / (PI * PI / 6.0 - 1.0);
    let w = |k: usize| c / ((k + 1) as f64).powi(2);
    let mut mass = Dd::new(0.0);
    for k in (1..=n).rev() {
        mass = mass + Dd::new(w(k));
    }
    let mass = mass.to_f64();
    let (mut lambda, mut h) = (Dd::new(0.0), Dd::new(0.0));
    for k in (1..=n).rev() {
        let p = w(k) / mass;
        lambda = lambda + Dd::new(p) * Dd::new((2.0 * p).ln());
        h = h - Dd::new(p) * Dd::new(p.ln());
    }
    (lambda.to_f64(), h.to_f64())
}

fn c3() -> Verdict {
    let sys = SystemSpec::load(&spec("example_5_2.toml")).unwrap();
    let out = analyze(&sys, &opts()).map_err(|e| e.to_string())?;
    let a = out.report.analyze.unwrap();
    let ex = a.spectrum.as_ref().unwrap().exponents().to_vec();
    let h = a.entropy.value().unwrap();
    let retained = sys.mu.as_ref().unwrap().symbols().len();
    let (lambda_ref, h_ref) = inverse_square_reference(retained);
    let l1 = ex[0].to_f64();

    let mut c = Checks::new();
    c.check(retained == 1_000_000, format!("{retained} retained symbols"));
    c.check((l1 - lambda_ref).abs() <= 1e-6, format!("lambda_1 = {l1} vs reference sum {lambda_ref}"));
    c.check(
        (l1 - (LN_2 - h)).abs() <= 1e-6 && (h - h_ref).abs() <= 1e-6,
        format!("lambda_1 = ln 2 - h (h = {h}, reference {h_ref})"),
    );
    c.check(ex[1].is_minus_infinity(), format!("lambda_2 = {}", ex[1]));
    let at = |s: f64| a.measure_pressure.iter().find(|p| p.s == s).map(|p| p.measure_pressure);
    let p1 = at(1.0).ok_or("no P_mu(1) in grid")?;
    let p11 = at(1.1).ok_or("no P_mu(1.1) in grid")?;
    c.check(p1 >= ExtendedReal::Finite(LN_2 - 1e-6), format!("P_mu(1) = {p1} >= ln 2 - 1e-6"));
    c.check(p11.is_minus_infinity(), format!("P_mu(1.1) = {p11}"));
    let dim = a.lyapunov_dimension.unwrap();
    c.check(dim.value == 1.0 && dim.discontinuity_hit, format!("dim_LY = {} (jump: {})", dim.value, dim.discontinuity_hit));
    let norm = out.report.inputs.as_ref().unwrap().norm_sup.unwrap();
    c.check(a.theorem_applicable == Some(true), format!("theorem flag = {:?} (sup norm {norm})", a.theorem_applicable));
    c.verdict()
}

/// `Σ_{n ≥ n0} 1/⌊n ln² n⌋`: direct sum to `N` plus `∫_N^∞ dx / (x ln² x − 1)`
/// bounded by `(1/ln N) · N ln²N / (N ln²N − 1)`.
fn lattice_series_upper(n0: u64, n: u64) -> f64 {
    let mut sum = Dd::new(0.0);
    for k in (n0..=n).rev() {
        let x = k as f64;
        let j = (x * x.ln() * x.ln()).floor();
        sum = sum + Dd::new(1.0 / j);
    }
    let l = (n as f64).ln();
    let g = n as f64 * l * l;
    sum.to_f64() + (1.0 / l) * g / (g - 1.0)
}

fn c4() -> Verdict {
    let mut c = Checks::new();
    let upper = lattice_series_upper(100, 20_000_000);
    c.check(upper < 1.0, format!("oracle: level-1 sum at 3/2 <= {upper:.6} < 1 for n0 = 100"));

    let sys = SystemSpec::load(&spec("example_5_3.toml")).unwrap();
    c.check(sys.spec.maps.as_ref().and_then(|m| m.family.clone()).as_deref() == Some("example_5_3(100)"), "spec uses n0 = 100".into());
    let p = pressure(&sys, &opts()).map_err(|e| e.to_string())?.report.pressure.unwrap();
    for (s, v) in p.curve.s_grid.iter().zip(&p.curve.values) {
        if [1.2, 1.3, 1.4].contains(s) {
            c.check(v.is_plus_infinity(), format!("P({s}) = {v}"));
        }
        if *s == 1.5 {
            c.check(*v < ExtendedReal::ZERO, format!("P(1.5) = {v} < 0"));
        }
    }
    match p.s_infinity {
        SInfinity::Bracketed { s_below, s_above, .. } => c.check(
            s_below <= 1.5 && 1.5 <= s_above && s_above - s_below <= 1e-3,
            format!("s_inf in [{s_below}, {s_above}]"),
        ),
        SInfinity::Zero => c.check(false, "s_inf reported as 0".into()),
    }
    c.verdict()
}

/// `h + Λ(s)` for a spectrum with finite exponents, from the definition.
fn measure_pressure_oracle(h: f64, lambdas: &[f64], s: f64) -> f64 {
    let d = lambdas.len();
    if s >= d as f64 {
        return h + s / d as f64 * lambdas.iter().sum::<f64>();
    }
    let k = s.floor() as usize;
    h + lambdas[..k].iter().sum::<f64>() + (s - k as f64) * lambdas[k]
}

fn bisect_dimension(h: f64, lambdas: &[f64]) -> f64 {
    let (mut lo, mut hi) = (0.0, 64.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if measure_pressure_oracle(h, lambdas, mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

struct Runs {
    similarity: SimulateResults,
    diagonal: SimulateResults,
    took: Duration,
}

fn run_simulations() -> Result<Runs, String> {
    let t = Instant::now();
    let a = SystemSpec::load(&spec("cantor.toml")).map_err(|e| e.to_string())?;
    let b = SystemSpec::load(&spec("diagonal_pair.toml")).map_err(|e| e.to_string())?;
    let similarity = simulate(&a, &opts()).map_err(|e| e.to_string())?.report.simulate.unwrap();
    let diagonal = simulate(&b, &opts()).map_err(|e| e.to_string())?.report.simulate.unwrap();
    Ok(Runs { similarity, diagonal, took: t.elapsed() })
}

fn c5(runs: &Runs) -> Verdict {
    let mut c = Checks::new();
    let d = 1.0;
    let moran = LN_2 / 3f64.ln();
    let lambda = 0.5 * (0.45f64.ln() + 0.2f64.ln());
    let bisected = bisect_dimension(LN_2, &[lambda, lambda]);
    let segment = runs.diagonal.lyapunov_dimension.ok_or("no dim_LY for (b)")?.value;
    c.check(
        (segment - bisected).abs() <= 1e-10,
        format!("(b) dim_LY segment {segment} vs bisection {bisected}"),
    );
    let sim_target = runs.similarity.target.ok_or("no target for (a)")?;
    c.check((sim_target - moran.min(d)).abs() < 1e-12, format!("(a) target {sim_target}"));

    for (label, res, target) in [("(a)", &runs.similarity, moran.min(d)), ("(b)", &runs.diagonal, bisected.min(2.0))] {
        let draws: Vec<_> = res.draws.iter().filter(|x| x.kind != DrawKind::Zero).collect();
        let random = draws.iter().filter(|x| x.kind == DrawKind::Random).count();
        c.check(random >= 5, format!("{label} {random} random draws"));
        for x in &draws {
            c.check(
                (x.median - target).abs() <= SLOPE_TOL && x.n_points == 100_000 && x.depth == 60,
                format!("{label} draw {} median {:.4} vs {:.4}", x.index, x.median, target),
            );
        }
    }
    c.check(runs.took < Duration::from_secs(600), format!("runtime {:.1?}", runs.took));
    c.verdict()
}

fn c6() -> Verdict {
    let mut sys = SystemSpec::load(&spec("diagonal_pair.toml")).map_err(|e| e.to_string())?;
    let block = sys.spec.simulate.as_mut().unwrap();
    block.draws = 9;
    block.zero_draw = true;
    let res = simulate(&sys, &opts()).map_err(|e| e.to_string())?.report.simulate.unwrap();
    let target = res.target.ok_or("no target")?;
    let mut c = Checks::new();
    c.check(res.draws.len() == 10 && res.draws.iter().any(|x| x.kind == DrawKind::Zero), format!("{} draws incl. zero", res.draws.len()));
    let worst = res.draws.iter().map(|x| x.median).fold(f64::NEG_INFINITY, f64::max);
    c.check(
        res.draws.iter().all(|x| x.median <= target + SLOPE_TOL),
        format!("max median {worst:.4} <= {:.4} + {SLOPE_TOL}", target),
    );
    c.verdict()
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let c = rng.random_range(0.3..0.9);
    let data = (0..d * d)
        .map(|k| c * ((k % (d + 1) == 0) as u8 as f64 + 0.3 * rng.random_range(-1.0..1.0)))
        .collect();
    Matrix::new(d, data).unwrap()
}

fn c7() -> Verdict {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7001);
    let mut worst = 0f64;
    for _ in 0..500 {
        let d = rng.random_range(1..=4);
        let len = rng.random_range(1..=30);
        let word: Vec<Matrix> = (0..len).map(|_| random_matrix(&mut rng, d)).collect();
        let got = product_spectrum(&word).map_err(|e| e.to_string())?;
        let slices: Vec<&[f64]> = word.iter().map(Matrix::as_slice).collect();
        let want = dd_log_singular_values(d, &dd_product(d, &slices));
        for (g, w) in got.log_alphas().iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    c.check(worst <= 1e-9, format!("product_spectrum: max |d ln alpha| {worst:.1e} <= 1e-9 over 500 words"));

    let ifs = AffineIFS::new(vec![
        Matrix::diagonal(&[0.5, 0.2, 0.1]).unwrap(),
        Matrix::diagonal(&[0.3, 0.25, 0.05]).unwrap(),
        Matrix::diagonal(&[0.6, 0.15, 0.12]).unwrap(),
    ])
    .unwrap();
    let mu = MeasureSpec::bernoulli((0..3).map(Symbol).collect(), vec![0.5, 0.3, 0.2]).unwrap();
    let exact = exponents_exact_diagonal(&ifs, &mu).unwrap();
    let mut outliers = 0;
    for seed in 0..20 {
        let mc = exponents_monte_carlo(&ifs, &mu, &MonteCarloConfig::new(20_000, 8, 100 + seed)).unwrap();
        let SpectrumMethod::MonteCarlo { stderr, .. } = mc.method() else { unreachable!() };
        for ((e, m), se) in exact.exponents().iter().zip(mc.exponents()).zip(stderr) {
            outliers += ((e.to_f64() - m.to_f64()).abs() > 3.0 * se) as usize;
        }
    }
    c.check(outliers <= 2, format!("Monte Carlo: {outliers} of 60 exponents outside 3 se (<= 2)"));

    let maps: Vec<Vec<f64>> = (0..2)
        .map(|_| {
            let s = rng.random_range(0.3..0.6);
            (0..4).map(|k| s * ((k % 3 == 0) as u8 as f64 + 0.4 * rng.random_range(-1.0..1.0))).collect()
        })
        .collect();
    let pair = AffineIFS::new(maps.iter().map(|m| Matrix::new(2, m.clone()).unwrap()).collect()).unwrap();
    let mut worst = 0f64;
    for _ in 0..20 {
        let s = rng.random_range(0.0..2.5);
        for n in 1..=12 {
            let got = level_sum(&pair, s, n).map_err(|e| e.to_string())?.to_f64();
            worst = worst.max((got - brute_force_level_sum(2, &maps, s, n)).abs());
        }
    }
    c.check(worst <= 1e-12, format!("level_sum: max error {worst:.1e} <= 1e-12 (20 s, n <= 12)"));
    c.verdict()
}

fn random_contraction(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    loop {
        let data: Vec<f64> = (0..d * d).map(|_| rng.random_range(-0.45..0.45)).collect();
        if let Ok(m) = Matrix::new(d, data) {
            if m.determinant().abs() > 1e-3 && m.norm() < 1.0 {
                return m;
            }
        }
    }
}

fn c8() -> Verdict {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8008);

    let mut bad = 0;
    for _ in 0..10_000 {
        let d = rng.random_range(1..=3);
        let (a, b) = (random_matrix(&mut rng, d), random_matrix(&mut rng, d));
        let s = rng.random_range(0.0..4.0);
        let lhs = svf(&product_spectrum([&a, &b]).unwrap(), s).unwrap().log_phi;
        let rhs = svf(&singular_spectrum(&a).unwrap(), s).unwrap().log_phi
            + svf(&singular_spectrum(&b).unwrap(), s).unwrap().log_phi;
        bad += (lhs > rhs + 1e-10) as usize;
    }
    c.check(bad == 0, format!("submultiplicativity: {bad} violations in 10^4 pairs"));

    let mut bad = 0;
    for _ in 0..200 {
        let d = rng.random_range(1..=2);
        let m = rng.random_range(2..=3);
        let ifs = AffineIFS::new((0..m).map(|_| random_contraction(&mut rng, d)).collect()).unwrap();
        let (s, ds, n) = (rng.random_range(0.0..2.5), rng.random_range(0.01..1.0), rng.random_range(1..=5));
        let p0 = level_sum(&ifs, s, n).unwrap().to_f64();
        let p1 = level_sum(&ifs, s + ds, n).unwrap().to_f64();
        bad += !(p1 <= p0 + ds * ifs.norm_sup().ln() + 1e-12 && p1 < p0) as usize;
    }
    c.check(bad == 0, format!("strict decrease with gap inequality: {bad} violations in 200 systems"));

    let mut bad = 0;
    for _ in 0..500 {
        let d = rng.random_range(1..=4);
        let finite = rng.random_range(0..=d);
        let mut values: Vec<ExtendedReal> =
            (0..d).map(|l| if l < finite { ExtendedReal::Finite(rng.random_range(-5.0..0.0)) } else { ExtendedReal::MinusInfinity }).collect();
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let spec = LyapunovSpectrum::from_values(values.clone()).unwrap();
        for k in 1..=d {
            let at = energy(&spec, k as f64).unwrap().value;
            let head = values[..k].iter().fold(ExtendedReal::ZERO, |a, &b| a + b);
            let left = energy(&spec, k as f64 - 1e-9).unwrap().value;
            let continuous = match (at, left) {
                (ExtendedReal::Finite(x), ExtendedReal::Finite(y)) => (x - y).abs() < 1e-8,
                _ => at == left,
            };
            bad += !(at == head && continuous) as usize;
        }
    }
    c.check(bad == 0, format!("energy left-continuity and 0 * (-inf) = 0: {bad} violations"));

    let grid = [0.0, 0.4, 0.9, 1.0, 1.5, 2.0, 2.6];
    let mut bad = 0;
    for _ in 0..50 {
        let m = rng.random_range(2..=3);
        let d = rng.random_range(1..=2);
        let maps: Vec<Matrix> = (0..m)
            .map(|_| Matrix::diagonal(&(0..d).map(|_| rng.random_range(0.05..0.7)).collect::<Vec<_>>()).unwrap())
            .collect();
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        let mu = MeasureSpec::bernoulli((0..m as u64).map(Symbol).collect(), w.iter().map(|x| x / total).collect()).unwrap();
        let ifs = AffineIFS::new(maps).unwrap();
        let h = entropy(&mu).value().unwrap();
        let spec = exponents_exact_diagonal(&ifs, &mu).unwrap();
        let curve = pressure_curve(&ifs, &grid, 8).unwrap();
        for (&s, p) in grid.iter().zip(&curve.values) {
            bad += (measure_pressure(h, &spec, s).unwrap().to_f64() > p.to_f64() + 1e-12) as usize;
        }
    }
    c.check(bad == 0, format!("P_mu <= P on 50 random systems: {bad} violations"));
    c.verdict()
}

fn c9(runs: &Runs) -> Verdict {
    let mut c = Checks::new();
    let res = &runs.similarity;
    let pe = res.projection_entropy.as_ref().ok_or("no projection entropy")?;
    c.check((pe.estimate - LN_2).abs() <= 0.05, format!("h_pi = {:.4} vs h = {LN_2:.4} (N = {})", pe.estimate, pe.samples));
    c.check(pe.samples == 100_000, "N = 10^5".into());
    let f = res.feng_bounds.ok_or("no bounds")?;
    let collapsed = pe.estimate / 3f64.ln();
    c.check(
        f.similarity && f.lower == f.upper && (f.lower - collapsed).abs() <= 1e-12,
        format!("bounds [{}, {}] = h_pi / ln 3", f.lower, f.upper),
    );
    for x in &res.draws {
        c.check(
            (x.median - f.lower).abs() <= SLOPE_TOL,
            format!("draw {} median {:.4} vs {:.4}", x.index, x.median, f.lower),
        );
    }
    c.verdict()
}

fn csv_files(out: &Outcome, dir: &Path) -> Vec<(String, Vec<u8>)> {
    out.write_to(dir).unwrap();
    out.tables.iter().map(|t| (t.file_name.to_string(), std::fs::read(dir.join(t.file_name)).unwrap())).collect()
}

fn c10() -> Verdict {
    let sys = SystemSpec::load(&spec("cantor.toml")).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = simulate(&sys, &opts()).map_err(|e| e.to_string())?;
    let b = simulate(&sys, &opts()).map_err(|e| e.to_string())?;
    let (fa, fb) = (csv_files(&a, &tmp.path().join("a")), csv_files(&b, &tmp.path().join("b")));
    let mut c = Checks::new();
    for ((name, x), (_, y)) in fa.iter().zip(&fb) {
        c.check(x == y, format!("{name}: {} bytes identical", x.len()));
    }
    let ja = a.report.without_timings().to_json().unwrap();
    let jb = b.report.without_timings().to_json().unwrap();
    c.check(ja == jb, "report JSON identical apart from timings".into());
    c.verdict()
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    })
}

fn main() {
    let runs = run_simulations();
    let with_runs = |f: fn(&Runs) -> Verdict| -> Verdict {
        match &runs {
            Ok(r) => guarded(|| f(r)),
            Err(e) => Err(format!("simulation failed: {e}")),
        }
    };
    let results: Vec<(usize, Verdict)> = vec![
        (1, guarded(c1)),
        (2, guarded(c2)),
        (3, guarded(c3)),
        (4, guarded(c4)),
        (5, with_runs(c5)),
        (6, guarded(c6)),
        (7, guarded(c7)),
        (8, guarded(c8)),
        (9, with_runs(c9)),
        (10, guarded(c10)),
    ];
    let mut failures = 0;
    for (n, v) in &results {
        match v {
            Ok(detail) => println!("criterion {n:>2}: PASS  {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n:>2}: FAIL  {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", results.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
