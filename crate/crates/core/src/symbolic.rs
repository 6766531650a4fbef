//! Symbol space at finite resolution: alphabets, words, Bernoulli and Markov
//! measures, entropy, and seeded samplers.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::WeightFamily;
use crate::rng::{self, Purpose};
use crate::series::{sum_series, DivergenceCertificate, DivergenceRule, NeumaierSum, SeriesOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub u64);

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<u64>> for Word {
    fn from(v: Vec<u64>) -> Self {
        Word(v.into_iter().map(Symbol).collect())
    }
}

impl From<&[u64]> for Word {
    fn from(v: &[u64]) -> Self {
        Word(v.iter().copied().map(Symbol).collect())
    }
}

/// Policy for cutting a countable weight family down to a finite prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Retained mass must reach `1 − eps`.
    pub eps: f64,
    /// Hard cap on the number of retained symbols.
    pub max_symbols: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { eps: 1e-10, max_symbols: 1_000_000 }
    }
}

/// What a truncation kept and what it dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub eps: f64,
    pub max_symbols: usize,
    pub retained: usize,
    /// Mass of the discarded tail before renormalization.
    pub deficit: f64,
    /// True when the cap stopped the prefix before the mass target.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Alphabet {
    Finite(Vec<Symbol>),
    CountableTruncated { family: WeightFamily, report: TruncationReport, symbols: Vec<Symbol> },
}

impl Alphabet {
    pub fn symbols(&self) -> &[Symbol] {
        match self {
            Alphabet::Finite(s) => s,
            Alphabet::CountableTruncated { symbols, .. } => symbols,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols().len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols().is_empty()
    }

    pub fn truncation(&self) -> Option<&TruncationReport> {
        match self {
            Alphabet::Finite(_) => None,
            Alphabet::CountableTruncated { report, .. } => Some(report),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    Bernoulli { probs: Vec<f64> },
    Markov { initial: Vec<f64>, transition: Vec<Vec<f64>> },
}

/// A shift-invariant measure on the symbol space.
///
/// Probability vectors are indexed by position in the alphabet.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    alphabet: Alphabet,
    kind: MeasureKind,
    index: HashMap<Symbol, usize>,
}

const SUM_TOLERANCE: f64 = 1e-12;
const STATIONARITY_TOLERANCE: f64 = 1e-10;

impl MeasureSpec {
    /// Bernoulli measure on an explicit finite alphabet. Zero-weight symbols
    /// are dropped.
    pub fn bernoulli(symbols: Vec<Symbol>, probs: Vec<f64>) -> Result<Self> {
        if symbols.len() != probs.len() {
            return Err(Error::DimensionMismatch { expected: symbols.len(), found: probs.len() });
        }
        check_distribution(&probs, "Bernoulli weights")?;
        let (symbols, probs): (Vec<_>, Vec<_>) = symbols.into_iter().zip(probs).filter(|(_, p)| *p > 0.0).unzip();
        Self::build(Alphabet::Finite(symbols), MeasureKind::Bernoulli { probs })
    }

    /// Uniform Bernoulli measure on symbols `0..m`.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::bernoulli((0..m as u64).map(Symbol).collect(), vec![1.0 / m as f64; m])
    }

    /// Markov measure with a stationary initial distribution.
    pub fn markov(symbols: Vec<Symbol>, initial: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let m = symbols.len();
        if initial.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: initial.len() });
        }
        if transition.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: transition.len() });
        }
        check_distribution(&initial, "initial distribution")?;
        for (i, row) in transition.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: row.len() });
            }
            check_distribution(row, &format!("transition row {i}"))?;
        }
        for j in 0..m {
            let pj: f64 = (0..m).map(|i| initial[i] * transition[i][j]).sum();
            if (pj - initial[j]).abs() > STATIONARITY_TOLERANCE {
                return Err(Error::InvalidMeasure(format!(
                    "initial distribution is not stationary at state {j}: (πP)_j = {pj}, π_j = {}",
                    initial[j]
                )));
            }
        }
        Self::build(Alphabet::Finite(symbols), MeasureKind::Markov { initial, transition })
    }

    /// Bernoulli measure from a weight family, truncated to the smallest
    /// prefix with mass `≥ 1 − eps` (or the symbol cap) and renormalized.
    pub fn from_family(family: WeightFamily, truncation: Truncation) -> Result<Self> {
        family.validate()?;
        if !(truncation.eps > 0.0 && truncation.eps < 1.0) || truncation.max_symbols == 0 {
            return Err(Error::InvalidInput(format!("invalid truncation {truncation:?}")));
        }
        let mut mass = NeumaierSum::default();
        let mut symbols = Vec::new();
        let mut weights = Vec::new();
        let mut n = family.first_index();
        while symbols.len() < truncation.max_symbols && mass.value() < 1.0 - truncation.eps {
            let w = family.weight(n);
            mass.add(w);
            symbols.push(family.symbol(n));
            weights.push(w);
            n += 1;
        }
        let kept = mass.value();
        let report = TruncationReport {
            eps: truncation.eps,
            max_symbols: truncation.max_symbols,
            retained: symbols.len(),
            deficit: (1.0 - kept).max(0.0),
            capped: kept < 1.0 - truncation.eps,
        };
        let probs = weights.into_iter().map(|w| w / kept).collect();
        Self::build(Alphabet::CountableTruncated { family, report, symbols }, MeasureKind::Bernoulli { probs })
    }

    fn build(alphabet: Alphabet, kind: MeasureKind) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidMeasure("empty alphabet".into()));
        }
        let mut index = HashMap::with_capacity(alphabet.len());
        for (i, &s) in alphabet.symbols().iter().enumerate() {
            if index.insert(s, i).is_some() {
                return Err(Error::InvalidMeasure(format!("duplicate symbol {s}")));
            }
        }
        Ok(MeasureSpec { alphabet, kind, index })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn symbols(&self) -> &[Symbol] {
        self.alphabet.symbols()
    }

    pub fn family(&self) -> Option<WeightFamily> {
        match self.alphabet {
            Alphabet::CountableTruncated { family, .. } => Some(family),
            Alphabet::Finite(_) => None,
        }
    }

    pub fn position(&self, s: Symbol) -> Result<usize> {
        self.index.get(&s).copied().ok_or(Error::UnknownSymbol(s))
    }

    /// One-symbol marginals `μ[i]` in alphabet order.
    pub fn marginals(&self) -> &[f64] {
        match &self.kind {
            MeasureKind::Bernoulli { probs } => probs,
            MeasureKind::Markov { initial, .. } => initial,
        }
    }

    pub fn bernoulli_probs(&self) -> Result<&[f64]> {
        match &self.kind {
            MeasureKind::Bernoulli { probs } => Ok(probs),
            MeasureKind::Markov { .. } => Err(Error::NotBernoulli),
        }
    }

    pub fn sampler(&self) -> Result<SymbolSampler> {
        SymbolSampler::new(self)
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidMeasure(format!("{what} is empty")));
    }
    if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidMeasure(format!("{what} has invalid entry {x}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidMeasure(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// `ln μ[w]`.
pub fn cylinder_mass(mu: &MeasureSpec, w: &Word) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::InvalidInput("cylinder of the empty word".into()));
    }
    let pos: Vec<usize> = w.symbols().iter().map(|&s| mu.position(s)).collect::<Result<_>>()?;
    Ok(match &mu.kind {
        MeasureKind::Bernoulli { probs } => pos.iter().map(|&i| probs[i].ln()).sum(),
        MeasureKind::Markov { initial, transition } => {
            initial[pos[0]].ln() + pos.windows(2).map(|p| transition[p[0]][p[1]].ln()).sum::<f64>()
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Entropy {
    Finite {
        value: f64,
        /// Bound on the omitted tail; zero for finite alphabets.
        tail_bound: Option<f64>,
        terms: usize,
    },
    Infinite(DivergenceCertificate),
}

impl Entropy {
    pub fn value(&self) -> Option<f64> {
        match self {
            Entropy::Finite { value, .. } => Some(*value),
            Entropy::Infinite(_) => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Entropy::Infinite(_))
    }
}

/// Partial entropy beyond which, with terms still positive, the series is
/// declared divergent even without a comparison envelope.
pub const ENTROPY_DIVERGENCE_THRESHOLD: f64 = 50.0;

/// Entropy (rate) of the measure.
///
/// Family-backed measures sum `−p_n ln p_n` over the retained (renormalized)
/// prefix and attach the family's tail envelope.
pub fn entropy(mu: &MeasureSpec) -> Entropy {
    match (&mu.alphabet, &mu.kind) {
        (Alphabet::CountableTruncated { family, .. }, MeasureKind::Bernoulli { probs }) => {
            let first = family.first_index();
            let terms = probs.iter().enumerate().map(|(k, &p)| ((first + k as u64) as f64, plogp(p)));
            let rule = DivergenceRule { threshold: ENTROPY_DIVERGENCE_THRESHOLD, term_floor: f64::MIN_POSITIVE };
            match sum_series(terms, Some(family.entropy_envelope()), Some(rule)) {
                SeriesOutcome::Converged { partial_sum, terms, tail_bound } => {
                    Entropy::Finite { value: partial_sum, tail_bound, terms }
                }
                SeriesOutcome::Diverged(cert) => Entropy::Infinite(cert),
            }
        }
        (_, MeasureKind::Bernoulli { probs }) => {
            let s: NeumaierSum = probs.iter().map(|&p| plogp(p)).collect();
            Entropy::Finite { value: s.value(), tail_bound: Some(0.0), terms: probs.len() }
        }
        (_, MeasureKind::Markov { initial, transition }) => {
            let s: NeumaierSum = initial
                .iter()
                .zip(transition)
                .map(|(&pi, row)| pi * row.iter().map(|&p| plogp(p)).sum::<f64>())
                .collect();
            Entropy::Finite { value: s.value(), tail_bound: Some(0.0), terms: initial.len() }
        }
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Draws alphabet positions from a measure.
#[derive(Debug, Clone)]
pub struct SymbolSampler {
    initial: WeightedAliasIndex<f64>,
    rows: Option<Vec<WeightedAliasIndex<f64>>>,
}

impl SymbolSampler {
    fn new(mu: &MeasureSpec) -> Result<Self> {
        let alias = |w: &[f64]| {
            WeightedAliasIndex::new(w.to_vec()).map_err(|e| Error::InvalidMeasure(format!("cannot build sampler: {e}")))
        };
        Ok(match &mu.kind {
            MeasureKind::Bernoulli { probs } => SymbolSampler { initial: alias(probs)?, rows: None },
            MeasureKind::Markov { initial, transition } => SymbolSampler {
                initial: alias(initial)?,
                rows: Some(transition.iter().map(|r| alias(r)).collect::<Result<_>>()?),
            },
        })
    }

    /// Appends `depth` alphabet positions to `out`.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, depth: usize, out: &mut Vec<usize>) {
        match &self.rows {
            None => out.extend((0..depth).map(|_| self.initial.sample(rng))),
            Some(rows) => {
                if depth == 0 {
                    return;
                }
                let mut state = self.initial.sample(rng);
                out.push(state);
                for _ in 1..depth {
                    state = rows[state].sample(rng);
                    out.push(state);
                }
            }
        }
    }
}

/// A `μ`-distributed word of length `depth`, deterministic in `seed`.
pub fn sample_sequence(mu: &MeasureSpec, depth: usize, seed: u64) -> Result<Word> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let sampler = mu.sampler()?;
    let mut rng = rng::stream(seed, Purpose::Sequence, 0);
    let mut pos = Vec::with_capacity(depth);
    sampler.fill(&mut rng, depth, &mut pos);
    let symbols = mu.symbols();
    Ok(Word(pos.into_iter().map(|i| symbols[i]).collect()))
}

/// `−(1/n) ln μ[w]`.
pub fn empirical_local_entropy(mu: &MeasureSpec, w: &Word) -> Result<f64> {
    Ok(-cylinder_mass(mu, w)? / w.len() as f64)
}
