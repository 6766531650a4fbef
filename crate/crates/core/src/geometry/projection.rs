//! Bounds on local dimension through the projection entropy `h_μ^π`.
//!
//! The estimator here is a heuristic: it replaces the conditional information
//! terms by plug-in conditional entropies of the first `m` symbols given the
//! half-open grid cell containing `π(i)` or `π(σi)`. Nothing guarantees that
//! the binned quantities converge to `h_μ^π`, so every width is reported.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cloud::ResolvedMaps;
use super::TranslationDraw;
use crate::error::{Error, Result};
use crate::ext::ExtendedReal;
use crate::families::MapFamily;
use crate::ifs::AffineIFS;
use crate::rng::{self, Purpose};
use crate::series::NeumaierSum;
use crate::spectrum::exponents_exact_diagonal;
use crate::symbolic::MeasureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FengBounds {
    /// `h / (−Σ μ[i] ln α_d(i))`.
    pub lower: f64,
    /// `h / (−Σ μ[i] ln α_1(i))`.
    pub upper: f64,
    pub mean_log_alpha_1: f64,
    pub mean_log_alpha_d: f64,
    /// Every map is a similarity, so the bounds coincide.
    pub similarity: bool,
}

/// Local-dimension bounds from a projection entropy `hpi`.
pub fn feng_bounds(ifs: &AffineIFS, mu: &MeasureSpec, hpi: f64) -> Result<FengBounds> {
    if !(hpi >= 0.0 && hpi.is_finite()) {
        return Err(Error::InvalidInput(format!("projection entropy must be finite and ≥ 0, got {hpi}")));
    }
    let (top, bottom, similarity) = match ifs.family() {
        Some(family) => {
            let spec = exponents_exact_diagonal(ifs, mu)?;
            let ex = spec.exponents();
            let bottom = match ex[ex.len() - 1] {
                ExtendedReal::Finite(v) => v,
                _ => return Err(Error::IntegrabilityFailure),
            };
            let top = ex[0].finite().ok_or(Error::IntegrabilityFailure)?;
            (top, bottom, matches!(family, MapFamily::GeometricSimilarity { .. }))
        }
        None => {
            let positions = ifs.positions_for(mu)?;
            let mut top = NeumaierSum::default();
            let mut bottom = NeumaierSum::default();
            let mut similarity = true;
            for (&k, &p) in positions.iter().zip(mu.marginals()) {
                let logs = ifs.log_singular_values(k)?;
                let (a1, ad) = (logs[0], logs[logs.len() - 1]);
                similarity &= (a1 - ad).abs() <= 1e-12 * a1.abs().max(1.0);
                top.add(p * a1);
                bottom.add(p * ad);
            }
            (top.value(), bottom.value(), similarity)
        }
    };
    let (lower, upper) = if similarity { (hpi / -top, hpi / -top) } else { (hpi / -bottom, hpi / -top) };
    Ok(FengBounds { lower, upper, mean_log_alpha_1: top, mean_log_alpha_d: bottom, similarity })
}

/// Plug-in entropies at one bin width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinTrace {
    pub width: f64,
    /// `H(first m symbols | bin of π(σi))`.
    pub h_shifted: f64,
    /// `H(first m symbols | bin of π(i))`.
    pub h_full: f64,
    pub estimate: f64,
    /// Smaller of the two fractions of samples sitting in bins with at least
    /// `MIN_BIN_COUNT` samples.
    pub well_sampled_fraction: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionEntropy {
    /// Value at the finest passing width.
    pub estimate: f64,
    pub width: f64,
    pub trace: Vec<BinTrace>,
    pub m: usize,
    pub samples: usize,
    pub depth: usize,
}

pub const MIN_BIN_COUNT: usize = 10;
pub const WELL_SAMPLED_FRACTION: f64 = 0.99;
const CHUNK: usize = 4096;
const MAX_DEPTH: usize = 400;

/// Binned estimate of `h_μ^π` over decreasing `bin_widths`.
pub fn projection_entropy_estimate(
    ifs: &AffineIFS,
    mu: &MeasureSpec,
    draw: &TranslationDraw,
    m: usize,
    bin_widths: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ProjectionEntropy> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    if bin_widths.is_empty() || !bin_widths.windows(2).all(|w| w[0] > w[1]) || bin_widths.iter().any(|w| *w <= 0.0) {
        return Err(Error::InvalidInput("bin widths must be positive and strictly decreasing".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let alphabet = mu.symbols().len() as u64;
    alphabet
        .checked_pow(m as u32)
        .ok_or_else(|| Error::InvalidInput(format!("{alphabet}^{m} cylinders do not fit a 64-bit code")))?;

    let maps = ResolvedMaps::new(ifs, mu, draw)?;
    let finest = bin_widths[bin_widths.len() - 1];
    let depth = projection_depth(maps.radius, ifs.norm_sup(), finest / 10.0);
    let sampler = mu.sampler()?;
    let d = maps.dim;
    let len = depth.max(m) + 1;

    // per sample: cylinder code, π(i), π(σi)
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(Vec<u64>, Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            let mut rng = rng::stream(seed, Purpose::EntropySample, c as u64);
            let (mut codes, mut full, mut shifted) =
                (Vec::with_capacity(count), Vec::with_capacity(count * d), Vec::with_capacity(count * d));
            let mut word = Vec::with_capacity(len);
            let (mut x, mut scratch) = (vec![0.0; d], vec![0.0; d]);
            for _ in 0..count {
                word.clear();
                sampler.fill(&mut rng, len, &mut word);
                codes.push(word[..m].iter().fold(0u64, |acc, &k| acc * alphabet + k as u64));
                maps.fold(&word[1..], &mut x, &mut scratch);
                shifted.extend_from_slice(&x);
                maps.apply(word[0], &x, &mut scratch);
                full.extend_from_slice(&scratch);
            }
            (codes, full, shifted)
        })
        .collect();
    let codes: Vec<u64> = parts.iter().flat_map(|p| p.0.iter().copied()).collect();
    let full: Vec<f64> = parts.iter().flat_map(|p| p.1.iter().copied()).collect();
    let shifted: Vec<f64> = parts.iter().flat_map(|p| p.2.iter().copied()).collect();

    let trace: Vec<BinTrace> = bin_widths
        .par_iter()
        .map(|&w| {
            let (h_shifted, f_shifted) = conditional_entropy(&codes, &shifted, d, w);
            let (h_full, f_full) = conditional_entropy(&codes, &full, d, w);
            let well = f_shifted.min(f_full);
            BinTrace {
                width: w,
                h_shifted,
                h_full,
                estimate: h_shifted - h_full,
                well_sampled_fraction: well,
                passes: well >= WELL_SAMPLED_FRACTION,
            }
        })
        .collect();
    let (estimate, width) = trace.iter().rev().find(|t| t.passes).map(|t| (t.estimate, t.width)).ok_or_else(|| {
        Error::InsufficientSamples(format!(
            "no bin width has {:.0}% of {samples} samples in bins of at least {MIN_BIN_COUNT}",
            100.0 * WELL_SAMPLED_FRACTION
        ))
    })?;
    Ok(ProjectionEntropy { estimate, width, trace, m, samples, depth })
}

/// Depth with `radius · ratio^depth ≤ tol`.
fn projection_depth(radius: f64, ratio: f64, tol: f64) -> usize {
    if radius <= tol || ratio <= 0.0 {
        return 1;
    }
    let n = ((tol / radius).ln() / ratio.ln()).ceil() as usize;
    n.clamp(1, MAX_DEPTH)
}

/// Plug-in `H(code | bin)` in nats and the fraction of samples in bins
/// holding at least `MIN_BIN_COUNT` samples.
fn conditional_entropy(codes: &[u64], points: &[f64], d: usize, width: f64) -> (f64, f64) {
    let n = codes.len();
    let mut keys: Vec<(Vec<i64>, u64)> = codes
        .iter()
        .zip(points.chunks_exact(d))
        .map(|(&c, p)| (p.iter().map(|x| (x / width).floor() as i64).collect(), c))
        .collect();
    keys.sort_unstable();
    let plogp = |k: usize| {
        let q = k as f64 / n as f64;
        q * q.ln()
    };
    let (mut h_joint, mut h_bin) = (NeumaierSum::default(), NeumaierSum::default());
    let mut well = 0usize;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && keys[j].0 == keys[i].0 {
            j += 1;
        }
        h_bin.add(-plogp(j - i));
        if j - i >= MIN_BIN_COUNT {
            well += j - i;
        }
        let mut a = i;
        while a < j {
            let mut b = a;
            while b < j && keys[b].1 == keys[a].1 {
                b += 1;
            }
            h_joint.add(-plogp(b - a));
            a = b;
        }
        i = j;
    }
    ((h_joint.value() - h_bin.value()).max(0.0), well as f64 / n as f64)
}
