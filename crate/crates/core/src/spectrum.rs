//! Lyapunov exponents, the energy `Λ_μ(s)`, the measure-theoretic pressure
//! `P_μ(s) = h_μ + Λ_μ(s)` and the Lyapunov dimension.
//!
//! `Λ_μ` is piecewise linear with breakpoints at the integers, so the
//! Lyapunov dimension is found by walking segments and solving one linear
//! equation. An exponent equal to `−∞` makes `Λ_μ` jump to `−∞` just after
//! the integer where it first enters; the convention `0 · (−∞) = 0` keeps the
//! value at that integer finite, which makes `Λ_μ` continuous from the left.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtendedReal;
use crate::ifs::AffineIFS;
use crate::linalg::ProductAccumulator;
use crate::rng::{self, Purpose};
use crate::series::{sum_series, DivergenceRule, NeumaierSum, SeriesOutcome, TailEnvelope};
use crate::symbolic::{MeasureSpec, ENTROPY_DIVERGENCE_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpectrumMethod {
    Exact {
        /// Bound on the omitted tail of each exponent's series, in output order.
        tail_bounds: Vec<Option<f64>>,
        terms: usize,
    },
    MonteCarlo {
        steps: usize,
        replicas: usize,
        stderr: Vec<f64>,
        /// Estimates below the configured floor; simulation cannot prove `−∞`.
        possibly_minus_infinity: Vec<bool>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    exponents: Vec<ExtendedReal>,
    method: SpectrumMethod,
}

impl LyapunovSpectrum {
    /// Exponents are sorted decreasingly; `PlusInfinity` and NaN-free input
    /// is required.
    pub fn new(mut exponents: Vec<ExtendedReal>, method: SpectrumMethod) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidInput("a spectrum needs at least one exponent".into()));
        }
        if exponents.iter().any(|e| e.is_plus_infinity()) {
            return Err(Error::InvalidInput("Lyapunov exponents cannot be +inf".into()));
        }
        exponents.sort_by(|a, b| b.partial_cmp(a).expect("extended reals are totally ordered"));
        Ok(LyapunovSpectrum { exponents, method })
    }

    /// Spectrum given directly, e.g. from a closed form.
    pub fn from_values(exponents: Vec<ExtendedReal>) -> Result<Self> {
        let d = exponents.len();
        Self::new(exponents, SpectrumMethod::Exact { tail_bounds: vec![Some(0.0); d], terms: 0 })
    }

    pub fn exponents(&self) -> &[ExtendedReal] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn method(&self) -> &SpectrumMethod {
        &self.method
    }
}

/// Exponents of a Bernoulli measure on diagonal maps:
/// `Σ_i p_i ln |(A_i)_{ll}|` per slot, sorted.
///
/// For countable families the retained prefix is summed and the family's tail
/// envelope is attached; a slot whose series is certified divergent gives `−∞`.
pub fn exponents_exact_diagonal(ifs: &AffineIFS, mu: &MeasureSpec) -> Result<LyapunovSpectrum> {
    let probs = mu.bernoulli_probs()?;
    let positions = ifs.positions_for(mu)?;
    let d = ifs.dim();
    let logs: Vec<Vec<f64>> = positions.iter().map(|&k| ifs.log_diagonal(k)).collect::<Result<_>>()?;

    let family_pair = match (ifs.family(), mu.family()) {
        (Some(maps), Some(weights)) => Some((maps.exponent_envelopes(&weights), weights)),
        _ => None,
    };
    let mut values = Vec::with_capacity(d);
    for slot in 0..d {
        let outcome = match &family_pair {
            Some((envelopes, weights)) => {
                let first = weights.first_index();
                let terms = probs.iter().zip(&logs).enumerate().map(|(k, (p, l))| ((first + k as u64) as f64, p * l[slot]));
                let env: Option<TailEnvelope> = envelopes.as_ref().map(|e| e[slot]);
                let rule = DivergenceRule { threshold: ENTROPY_DIVERGENCE_THRESHOLD, term_floor: f64::MIN_POSITIVE };
                sum_series(terms, env, Some(rule))
            }
            None => {
                let s: NeumaierSum = probs.iter().zip(&logs).map(|(p, l)| p * l[slot]).collect();
                SeriesOutcome::Converged { partial_sum: -s.value(), terms: probs.len(), tail_bound: Some(0.0) }
            }
        };
        values.push(outcome);
    }
    // every log entry is negative, so each series sums magnitudes of negative terms
    let mut pairs: Vec<(ExtendedReal, Option<f64>)> = values
        .iter()
        .map(|o| match o {
            SeriesOutcome::Converged { partial_sum, tail_bound, .. } => (ExtendedReal::Finite(-partial_sum), *tail_bound),
            SeriesOutcome::Diverged(_) => (ExtendedReal::MinusInfinity, None),
        })
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let (exponents, tail_bounds) = pairs.into_iter().unzip();
    LyapunovSpectrum::new(exponents, SpectrumMethod::Exact { tail_bounds, terms: probs.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub steps: usize,
    pub replicas: usize,
    pub seed: u64,
    /// Per-step exponent below which `possibly_minus_infinity` is raised.
    pub floor: f64,
}

impl MonteCarloConfig {
    pub fn new(steps: usize, replicas: usize, seed: u64) -> Self {
        MonteCarloConfig { steps, replicas, seed, floor: -50.0 }
    }
}

/// Exponents estimated as `ln α_l(A_{i|n}) / n` along sampled words, averaged
/// over independent replicas.
pub fn exponents_monte_carlo(ifs: &AffineIFS, mu: &MeasureSpec, cfg: &MonteCarloConfig) -> Result<LyapunovSpectrum> {
    if cfg.steps < 1000 {
        return Err(Error::InvalidInput(format!("Monte Carlo needs at least 1000 steps, got {}", cfg.steps)));
    }
    if cfg.replicas == 0 {
        return Err(Error::InvalidInput("at least one replica is required".into()));
    }
    let positions = ifs.positions_for(mu)?;
    let sampler = mu.sampler()?;
    let d = ifs.dim();
    let small_alphabet = positions.len() <= 4096;
    let cached: Vec<_> = if small_alphabet {
        positions.iter().map(|&k| ifs.matrix(k)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let estimates: Vec<Vec<f64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let mut rng = rng::stream(cfg.seed, Purpose::Replica, r as u64);
            let mut acc = ProductAccumulator::new(d);
            let mut buf = Vec::with_capacity(4096);
            let mut done = 0;
            while done < cfg.steps {
                let chunk = (cfg.steps - done).min(4096);
                buf.clear();
                sampler.fill(&mut rng, chunk, &mut buf);
                for &p in &buf {
                    if small_alphabet {
                        acc.push(&cached[p])?;
                    } else {
                        acc.push(&ifs.matrix(positions[p])?)?;
                    }
                }
                done += chunk;
            }
            Ok(acc.spectrum().log_alphas().iter().map(|l| l / cfg.steps as f64).collect())
        })
        .collect::<Result<_>>()?;

    let n = cfg.replicas as f64;
    let mut means = Vec::with_capacity(d);
    let mut stderr = Vec::with_capacity(d);
    for l in 0..d {
        let mean = estimates.iter().map(|e| e[l]).sum::<f64>() / n;
        let var = if cfg.replicas > 1 {
            estimates.iter().map(|e| (e[l] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        means.push(mean);
        stderr.push((var / n).sqrt());
    }
    let possibly_minus_infinity = means.iter().map(|&m| m < cfg.floor).collect();
    LyapunovSpectrum::new(
        means.into_iter().map(ExtendedReal::Finite).collect(),
        SpectrumMethod::MonteCarlo { steps: cfg.steps, replicas: cfg.replicas, stderr, possibly_minus_infinity },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub s: f64,
    pub value: ExtendedReal,
}

/// `Λ_μ(s) = λ_1 + … + λ_k + (s − k) λ_{k+1}` for `s < d`, and
/// `(s/d)(λ_1 + … + λ_d)` for `s ≥ d`, with `0 · (−∞) = 0`.
pub fn energy(spec: &LyapunovSpectrum, s: f64) -> Result<EnergyValue> {
    if !(s >= 0.0) {
        return Err(Error::NegativeExponent(s));
    }
    let lambdas = spec.exponents();
    let d = lambdas.len();
    let value = if s >= d as f64 {
        let total = lambdas.iter().fold(ExtendedReal::ZERO, |a, &b| a + b);
        total.scale(s / d as f64)
    } else {
        let k = s.floor() as usize;
        let head = lambdas[..k].iter().fold(ExtendedReal::ZERO, |a, &b| a + b);
        head + lambdas[k].scale(s - k as f64)
    };
    Ok(EnergyValue { s, value })
}

/// `P_μ(s) = h + Λ_μ(s)`.
pub fn measure_pressure(h: f64, spec: &LyapunovSpectrum, s: f64) -> Result<ExtendedReal> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::InvalidInput(format!("entropy must be finite and non-negative, got {h}")));
    }
    Ok(ExtendedReal::Finite(h) + energy(spec, s)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovDimension {
    pub value: f64,
    /// `(s_low, s_high)` around the zero; both equal `value` for a closed-form root.
    pub bracket: (f64, f64),
    /// The zero is the jump of `Λ_μ` to `−∞`, not a sign change through zero.
    pub discontinuity_hit: bool,
}

/// Infimum of `s` with `P_μ(s) < 0`, by walking the linear pieces of `P_μ`.
pub fn lyapunov_dimension(h: f64, spec: &LyapunovSpectrum) -> Result<LyapunovDimension> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::InvalidInput(format!("entropy must be finite and non-negative, got {h}")));
    }
    let exact = |v: f64| LyapunovDimension { value: v, bracket: (v, v), discontinuity_hit: false };
    if h == 0.0 {
        return Ok(exact(0.0));
    }
    let lambdas = spec.exponents();
    let d = lambdas.len();
    // p = P_μ(k) > 0 at the start of each segment [k, k+1)
    let mut p = h;
    let mut partial = 0.0;
    for (k, lambda) in lambdas.iter().enumerate() {
        match *lambda {
            ExtendedReal::MinusInfinity => {
                return Ok(LyapunovDimension { value: k as f64, bracket: (k as f64, k as f64), discontinuity_hit: true })
            }
            ExtendedReal::Finite(l) => {
                if p + l <= 0.0 {
                    return Ok(exact(k as f64 + p / -l));
                }
                p += l;
                partial += l;
            }
            ExtendedReal::PlusInfinity => unreachable!("rejected by LyapunovSpectrum::new"),
        }
    }
    // s ≥ d: P_μ(s) = h + (s/d) Σλ
    if partial < 0.0 {
        Ok(exact(-h * d as f64 / partial))
    } else {
        Err(Error::NoRoot(format!("P_mu(s) = {h} + (s/{d}) * {partial} never becomes negative")))
    }
}
