//! System pressure `P(s) = lim (1/n) ln Σ_{|w|=n} φ^s(A_w)`, its finiteness
//! threshold `s_∞`, and the zero of pressure.
//!
//! Per-level values `(1/n) ln Σ φ^s` are upper bounds on `P(s)` by
//! submultiplicativity, so curves report their running infimum. When all maps
//! are diagonal with a common ordering of their entries, `φ^s` is
//! multiplicative along words and every level equals level one exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtendedReal;
use crate::ifs::AffineIFS;
use crate::linalg::{log_svf, Matrix, ProductAccumulator};
use crate::series::{LogSumExp, TailEnvelope};

/// Largest number of words enumerated for one level.
pub const ENUMERATION_CAP: f64 = 1e7;

/// Width to which `s_∞` brackets are tightened.
pub const S_INFINITY_TOLERANCE: f64 = 1e-6;

/// Width to which the zero of pressure is bracketed.
pub const ZERO_TOLERANCE: f64 = 1e-8;

/// The level-one series `Σ_i φ^s(A_i)` over the retained alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelOne {
    pub s: f64,
    /// `ln` of the sum over the retained maps.
    pub log_partial: f64,
    pub terms: usize,
    /// Bound on the omitted tail; `Some(0)` for finite alphabets.
    pub tail_bound: Option<f64>,
    /// The family's lower envelope is not summable at `s`.
    pub divergent: bool,
}

impl LevelOne {
    /// `ln(Σ + tail)`, `+∞` when divergent. `None` when no certificate either way.
    pub fn upper(&self) -> Option<ExtendedReal> {
        if self.divergent {
            return Some(ExtendedReal::PlusInfinity);
        }
        let tail = self.tail_bound?;
        let v = if tail > 0.0 { self.log_partial + (tail * (-self.log_partial).exp()).ln_1p() } else { self.log_partial };
        Some(ExtendedReal::Finite(v))
    }
}

/// Classifies and sums `Σ_i φ^s(A_i)`.
pub fn level_one(ifs: &AffineIFS, s: f64) -> Result<LevelOne> {
    check_s(s)?;
    let mut lse = LogSumExp::default();
    for k in 0..ifs.len() {
        lse.push(log_svf(&ifs.log_singular_values(k)?, s)?);
    }
    let terms = ifs.len();
    let Some(family) = ifs.family() else {
        return Ok(LevelOne { s, log_partial: lse.value(), terms, tail_bound: Some(0.0), divergent: false });
    };
    let last = (family.first_index() + terms as u64 - 1) as f64;
    let (tail_bound, divergent) = match family.level_one_envelope(s) {
        TailEnvelope::Dominates(env) => (env.tail_bound(last), false),
        TailEnvelope::Minorizes(env) => (None, !env.is_summable()),
    };
    Ok(LevelOne { s, log_partial: lse.value(), terms, tail_bound, divergent })
}

fn check_s(s: f64) -> Result<()> {
    if s >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeExponent(s))
    }
}

/// Whether every level sum equals the level-one sum (diagonal maps sharing
/// one ordering of their entries).
pub fn is_multiplicative(ifs: &AffineIFS) -> bool {
    ifs.common_diagonal_order().is_some()
}

/// `(1/n) ln Σ_{|w|=n} φ^s(A_w)`.
///
/// Multiplicative systems return the level-one value for every `n` (with the
/// family tail folded in, `+∞` for a divergent family); other systems are
/// enumerated exactly and refuse more than [`ENUMERATION_CAP`] words.
pub fn level_sum(ifs: &AffineIFS, s: f64, n: usize) -> Result<ExtendedReal> {
    let levels = level_sums(ifs, &[s], n)?;
    Ok(levels[0][n - 1])
}

/// Per-level values for every `s` and every level `1..=max_level`, indexed
/// `[s][level − 1]`.
pub fn level_sums(ifs: &AffineIFS, s_values: &[f64], max_level: usize) -> Result<Vec<Vec<ExtendedReal>>> {
    if max_level == 0 {
        return Err(Error::InvalidInput("levels start at 1".into()));
    }
    for &s in s_values {
        check_s(s)?;
    }
    if is_multiplicative(ifs) {
        return s_values
            .iter()
            .map(|&s| {
                let v = level_one(ifs, s)?
                    .upper()
                    .ok_or_else(|| Error::NoCertificate(format!("level-one series at s = {s} has no tail bound")))?;
                Ok(vec![v; max_level])
            })
            .collect();
    }
    let m = ifs.len();
    let words = (m as f64).powi(max_level as i32);
    if words > ENUMERATION_CAP {
        return Err(Error::TooLarge { words, cap: ENUMERATION_CAP });
    }
    let matrices: Vec<Matrix> = (0..m).map(|k| ifs.matrix(k)).collect::<Result<_>>()?;
    let table = enumerate(&matrices, ifs.dim(), s_values, max_level)?;
    Ok(table
        .into_iter()
        .map(|row| row.into_iter().enumerate().map(|(l, lse)| ExtendedReal::Finite(lse.value() / (l + 1) as f64)).collect())
        .collect())
}

type Table = Vec<Vec<LogSumExp>>;

fn empty_table(ns: usize, levels: usize) -> Table {
    vec![vec![LogSumExp::default(); levels]; ns]
}

fn record(table: &mut Table, acc: &ProductAccumulator, s_values: &[f64]) -> Result<()> {
    let spec = acc.spectrum();
    let level = acc.len() - 1;
    for (row, &s) in table.iter_mut().zip(s_values) {
        row[level].push(log_svf(spec.log_alphas(), s)?);
    }
    Ok(())
}

/// Depth-first enumeration of all words up to `max_level`, split into
/// independent subtrees below a short prefix level so the result does not
/// depend on scheduling.
fn enumerate(matrices: &[Matrix], dim: usize, s_values: &[f64], max_level: usize) -> Result<Table> {
    let m = matrices.len();
    let mut split = 1;
    while split < max_level && m.pow(split as u32) < 256 {
        split += 1;
    }
    // levels 1..=split, keeping the split-level prefixes as roots
    let mut table = empty_table(s_values.len(), max_level);
    let mut frontier = vec![ProductAccumulator::new(dim)];
    for _ in 0..split {
        let mut next = Vec::with_capacity(frontier.len() * m);
        for acc in &frontier {
            for a in matrices {
                let mut child = acc.clone();
                child.push(a)?;
                record(&mut table, &child, s_values)?;
                next.push(child);
            }
        }
        frontier = next;
    }
    if split < max_level {
        let parts: Vec<Table> = frontier
            .par_iter()
            .map(|root| {
                let mut t = empty_table(s_values.len(), max_level);
                descend(root, matrices, s_values, max_level, &mut t)?;
                Ok(t)
            })
            .collect::<Result<_>>()?;
        for part in &parts {
            for (row, prow) in table.iter_mut().zip(part) {
                for (cell, pcell) in row.iter_mut().zip(prow) {
                    cell.merge(pcell);
                }
            }
        }
    }
    Ok(table)
}

fn descend(acc: &ProductAccumulator, matrices: &[Matrix], s_values: &[f64], max_level: usize, table: &mut Table) -> Result<()> {
    for a in matrices {
        let mut child = acc.clone();
        child.push(a)?;
        record(table, &child, s_values)?;
        if child.len() < max_level {
            descend(&child, matrices, s_values, max_level, table)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub s: f64,
    /// Running infimum of the per-level values: an upper bound on `P(s)`.
    pub upper: ExtendedReal,
    pub per_level: Vec<ExtendedReal>,
    /// Levels are provably equal, so `upper` is the level-one value.
    pub level_independent: bool,
}

pub fn pressure_estimate(ifs: &AffineIFS, s: f64, max_level: usize) -> Result<PressureEstimate> {
    let per_level = level_sums(ifs, &[s], max_level)?.pop().expect("one row per s");
    Ok(estimate_from_levels(s, per_level, is_multiplicative(ifs)))
}

fn estimate_from_levels(s: f64, per_level: Vec<ExtendedReal>, level_independent: bool) -> PressureEstimate {
    let upper = per_level.iter().copied().fold(ExtendedReal::PlusInfinity, |a, b| if b < a { b } else { a });
    PressureEstimate { s, upper, per_level, level_independent }
}

/// Pressure upper bounds on a grid of `s` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub s_grid: Vec<f64>,
    pub values: Vec<ExtendedReal>,
    pub levels: Vec<usize>,
    /// `[s][level − 1]`.
    pub per_level: Vec<Vec<ExtendedReal>>,
    pub level_independent: bool,
}

pub fn pressure_curve(ifs: &AffineIFS, s_grid: &[f64], max_level: usize) -> Result<PressureCurve> {
    if s_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("s grid must be strictly increasing".into()));
    }
    let table = level_sums(ifs, s_grid, max_level)?;
    let independent = is_multiplicative(ifs);
    let estimates: Vec<PressureEstimate> =
        s_grid.iter().zip(table).map(|(&s, row)| estimate_from_levels(s, row, independent)).collect();
    Ok(PressureCurve {
        s_grid: s_grid.to_vec(),
        values: estimates.iter().map(|e| e.upper).collect(),
        levels: (1..=max_level).collect(),
        per_level: estimates.into_iter().map(|e| e.per_level).collect(),
        level_independent: independent,
    })
}

/// Threshold `s_∞ = inf{s : P(s) < ∞}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SInfinity {
    /// Finite alphabet: `P(s)` is finite for every `s ≥ 0`.
    Zero,
    Bracketed {
        /// Upper end of the bracket, where convergence is certified.
        value: f64,
        /// The level-one series diverges here (comparison certificate).
        s_below: f64,
        s_above: f64,
        /// Partial sum over the retained maps at `s_below`.
        partial_below: f64,
        /// Tail bound at `s_above`.
        tail_above: f64,
    },
}

impl SInfinity {
    pub fn value(&self) -> f64 {
        match self {
            SInfinity::Zero => 0.0,
            SInfinity::Bracketed { value, .. } => *value,
        }
    }
}

enum Verdict {
    Diverges,
    Converges(f64),
    Unknown,
}

fn classify(ifs: &AffineIFS, s: f64) -> Verdict {
    let family = ifs.family().expect("classification needs a family");
    let last = (family.first_index() + ifs.len() as u64 - 1) as f64;
    match family.level_one_envelope(s) {
        TailEnvelope::Minorizes(env) if !env.is_summable() => Verdict::Diverges,
        TailEnvelope::Dominates(env) => env.tail_bound(last).map_or(Verdict::Unknown, Verdict::Converges),
        TailEnvelope::Minorizes(_) => Verdict::Unknown,
    }
}

/// Bisection on the classification of the level-one series.
pub fn s_infinity(ifs: &AffineIFS) -> Result<SInfinity> {
    if !ifs.is_countable() {
        return Ok(SInfinity::Zero);
    }
    let mut lo = 0.0;
    if !matches!(classify(ifs, lo), Verdict::Diverges) {
        // the family converges already at s = 0, which no infinite family does
        return Err(Error::NoCertificate("level-one series is not certified divergent at s = 0".into()));
    }
    let mut hi = 1.0;
    let mut tail = loop {
        match classify(ifs, hi) {
            Verdict::Converges(t) => break t,
            Verdict::Diverges if hi < 1024.0 => {
                lo = hi;
                hi *= 2.0;
            }
            _ => return Err(Error::NoCertificate(format!("no convergence certificate up to s = {hi}"))),
        }
    };
    while hi - lo > S_INFINITY_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        match classify(ifs, mid) {
            Verdict::Diverges => lo = mid,
            Verdict::Converges(t) => {
                hi = mid;
                tail = t;
            }
            Verdict::Unknown => {
                return Err(Error::NoCertificate(format!("tail test inconclusive at s = {mid} (bracket [{lo}, {hi}])")))
            }
        }
    }
    let below = level_one(ifs, lo)?;
    Ok(SInfinity::Bracketed { value: hi, s_below: lo, s_above: hi, partial_below: below.log_partial.exp(), tail_above: tail })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureZero {
    pub root: f64,
    pub bracket: (f64, f64),
    pub max_level: usize,
    /// The upper bound jumps from `+∞` to a negative value at `s_∞`, so the
    /// sign change is a jump rather than a zero.
    pub jump: bool,
}

/// Zero of `s ↦ upper bound on P(s)` at level `max_level`, by bisection.
pub fn pressure_zero(ifs: &AffineIFS, max_level: usize) -> Result<PressureZero> {
    let upper = |s: f64| -> Result<ExtendedReal> { Ok(pressure_estimate(ifs, s, max_level)?.upper) };
    let (mut lo, floor_bracket) = match s_infinity(ifs)? {
        SInfinity::Zero => (0.0, None),
        SInfinity::Bracketed { s_below, s_above, .. } => (s_above, Some((s_below, s_above))),
    };
    let p_lo = upper(lo)?;
    if p_lo <= ExtendedReal::ZERO {
        return Ok(match floor_bracket {
            Some(bracket) if p_lo < ExtendedReal::ZERO => PressureZero { root: lo, bracket, max_level, jump: true },
            _ => PressureZero { root: lo, bracket: (lo, lo), max_level, jump: false },
        });
    }
    let mut hi = lo.max(0.0) + 1.0;
    while upper(hi)? >= ExtendedReal::ZERO {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NoSignChange { low: lo, high: hi });
        }
    }
    while hi - lo > ZERO_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if upper(mid)? > ExtendedReal::ZERO {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PressureZero { root: 0.5 * (lo + hi), bracket: (lo, hi), max_level, jump: false })
}
