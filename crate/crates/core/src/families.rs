//! Parametric countable families: Bernoulli weight sequences and diagonal map
//! families indexed by a generating integer `n`.
//!
//! Each family enumerates its symbols in a fixed order and declares
//! [`TailEnvelope`]s for the series built from it, so truncated sums can be
//! completed with a tail bound or certified divergent.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Envelope, NeumaierSum, TailEnvelope};
use crate::symbolic::{MeasureSpec, Symbol};

/// Bernoulli weight sequences on a countable alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightFamily {
    /// `p_n = 2^{−n}`, `n ≥ 1`, symbol `n`.
    Dyadic,
    /// `p_{n−1} = c / (n (ln n)²)`, `n ≥ 2`, symbol `n − 1`; infinite entropy.
    LogSquared,
    /// `p_n = c (n + 1)^{−2}`, `n ≥ 1`, symbol `n`, `c = (π²/6 − 1)^{−1}`.
    InverseSquare,
    /// `p_n = (1 − q) q^{n−1}`, `n ≥ 1`, symbol `n`.
    Geometric { q: f64 },
}

impl WeightFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightFamily::Geometric { q } if !(q > 0.0 && q < 1.0) => {
                Err(Error::InvalidMeasure(format!("geometric ratio must lie in (0, 1), got {q}")))
            }
            _ => Ok(()),
        }
    }

    pub fn first_index(&self) -> u64 {
        match self {
            WeightFamily::Dyadic | WeightFamily::InverseSquare | WeightFamily::Geometric { .. } => 1,
            WeightFamily::LogSquared => 2,
        }
    }

    pub fn symbol(&self, n: u64) -> Symbol {
        match self {
            WeightFamily::LogSquared => Symbol(n - 1),
            _ => Symbol(n),
        }
    }

    pub fn log_weight(&self, n: u64) -> f64 {
        let x = n as f64;
        match *self {
            WeightFamily::Dyadic => -x * LN_2,
            WeightFamily::LogSquared => log_squared_constant().ln() - x.ln() - 2.0 * x.ln().ln(),
            WeightFamily::InverseSquare => inverse_square_constant().ln() - 2.0 * (x + 1.0).ln(),
            WeightFamily::Geometric { q } => (1.0 - q).ln() + (x - 1.0) * q.ln(),
        }
    }

    pub fn weight(&self, n: u64) -> f64 {
        self.log_weight(n).exp()
    }

    /// Envelope for the entropy terms `−p_n ln p_n`.
    pub fn entropy_envelope(&self) -> TailEnvelope {
        match *self {
            WeightFamily::Dyadic => TailEnvelope::Dominates(Envelope::geometric(LN_2, 0.5, 1.0)),
            // −p ln p = c (ln n + 2 ln ln n − ln c) / (n ln² n) ≥ c / (n ln n) since c < 1
            WeightFamily::LogSquared => {
                TailEnvelope::Minorizes(Envelope::power(log_squared_constant(), 1.0, 1.0))
            }
            // c (n+1)^{−2} (2 ln(n+1) − ln c) ≤ 2c (n+1)^{−2} ln(n+1) ≤ 3.2 c n^{−2} ln n for n ≥ 2
            WeightFamily::InverseSquare => {
                TailEnvelope::Dominates(Envelope::power(3.2 * inverse_square_constant(), 2.0, -1.0))
            }
            // (1−q) q^{n−1} (−ln(1−q) − (n−1) ln q) ≤ (1−q)/q · (−ln(1−q) − ln q) · n q^n
            WeightFamily::Geometric { q } => {
                TailEnvelope::Dominates(Envelope::geometric((1.0 - q) / q * (-(1.0 - q).ln() - q.ln()), q, 1.0))
            }
        }
    }

    /// Mass of all indices beyond `last`, when known in closed form or by a bound.
    pub fn tail_mass_bound(&self, last: u64) -> f64 {
        let x = last as f64;
        match *self {
            WeightFamily::Dyadic => 2f64.powf(-x),
            WeightFamily::LogSquared => log_squared_constant() / x.ln(),
            WeightFamily::InverseSquare => inverse_square_constant() / (x + 1.0),
            WeightFamily::Geometric { q } => q.powf(x),
        }
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFamily::Dyadic => f.write_str("example_5_1a"),
            WeightFamily::LogSquared => f.write_str("example_5_1b"),
            WeightFamily::InverseSquare => f.write_str("example_5_2"),
            WeightFamily::Geometric { q } => write!(f, "geometric_bernoulli({q})"),
        }
    }
}

/// `c = (π²/6 − 1)^{−1}`, normalizing `Σ_{n≥1} c (n+1)^{−2} = 1`.
pub fn inverse_square_constant() -> f64 {
    1.0 / (PI * PI / 6.0 - 1.0)
}

/// `c = (Σ_{n≥2} 1/(n ln² n))^{−1}`.
pub fn log_squared_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        // direct sum plus an Euler–Maclaurin remainder for f(x) = 1/(x ln² x)
        let n = 1_000_000u64;
        let mut s: NeumaierSum = (2..=n).map(|i| {
            let x = i as f64;
            1.0 / (x * x.ln().powi(2))
        }).collect();
        let x = n as f64;
        let l = x.ln();
        let f = 1.0 / (x * l * l);
        let df = -(l + 2.0) / (x * x * l * l * l);
        s.add(1.0 / l - f / 2.0 - df / 12.0);
        1.0 / s.value()
    })
}

/// Diagonal map families on countable alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MapFamily {
    /// `A_n = diag(2 p_n, c 4^{−n})` with `p_n = c (n+1)^{−2} / mass`, `n ≥ 1`.
    ///
    /// `mass` is the retained mass of the truncated weight family the maps are
    /// paired with (1 for the untruncated family), so that `p_n` is exactly
    /// the measure in use.
    InverseSquareDiagonal { mass: f64 },
    /// Symbols `j = ⌊n (ln n)²⌋` for `n ≥ n0`, `A_j = diag(j^{−1/2}, j^{−1})`.
    LogSquaredLattice { n0: u64 },
    /// `A_n = ratio^n · I`, `n ≥ 1`.
    GeometricSimilarity { ratio: f64, dim: usize },
}

impl MapFamily {
    /// Inverse-square maps built on the measure actually in use: the retained
    /// mass of a truncated inverse-square measure, or 1 otherwise.
    pub fn inverse_square_for(mu: &MeasureSpec) -> MapFamily {
        let mass = match (mu.family(), mu.alphabet().truncation()) {
            (Some(WeightFamily::InverseSquare), Some(report)) => 1.0 - report.deficit,
            _ => 1.0,
        };
        MapFamily::InverseSquareDiagonal { mass }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MapFamily::LogSquaredLattice { n0 } if n0 < 3 => {
                Err(Error::InvalidInput(format!("lattice family needs n0 ≥ 3, got {n0}")))
            }
            MapFamily::InverseSquareDiagonal { mass } if !(mass > 0.0 && mass <= 1.0) => {
                Err(Error::InvalidInput(format!("retained mass must lie in (0, 1], got {mass}")))
            }
            MapFamily::GeometricSimilarity { ratio, dim } if !(ratio > 0.0 && ratio < 1.0) || dim == 0 => {
                Err(Error::InvalidInput(format!("geometric similarity needs 0 < ratio < 1 and dim ≥ 1 (ratio {ratio}, dim {dim})")))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            MapFamily::GeometricSimilarity { dim, .. } => dim,
            _ => 2,
        }
    }

    pub fn first_index(&self) -> u64 {
        match *self {
            MapFamily::LogSquaredLattice { n0 } => n0,
            _ => 1,
        }
    }

    pub fn symbol(&self, n: u64) -> Symbol {
        match self {
            MapFamily::LogSquaredLattice { .. } => Symbol(lattice_symbol(n)),
            _ => Symbol(n),
        }
    }

    /// Generating index of a symbol, if the symbol belongs to the family.
    pub fn index_of(&self, symbol: Symbol) -> Option<u64> {
        let first = self.first_index();
        match *self {
            MapFamily::LogSquaredLattice { .. } => {
                let j = symbol.0;
                if j < lattice_symbol(first) {
                    return None;
                }
                // the lattice is strictly increasing in n, and j ≥ n for n ≥ 3
                let (mut lo, mut hi) = (first, j.max(first));
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if lattice_symbol(mid) < j {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                (lattice_symbol(lo) == j).then_some(lo)
            }
            _ => (symbol.0 >= first).then_some(symbol.0),
        }
    }

    /// Natural logs of the (positive) diagonal entries of `A_n`.
    pub fn log_diagonal(&self, n: u64) -> Vec<f64> {
        let x = n as f64;
        match *self {
            MapFamily::InverseSquareDiagonal { mass } => {
                let c = inverse_square_constant();
                vec![LN_2 + WeightFamily::InverseSquare.log_weight(n) - mass.ln(), c.ln() - x * 4f64.ln()]
            }
            MapFamily::LogSquaredLattice { .. } => {
                let lj = (lattice_symbol(n) as f64).ln();
                vec![-0.5 * lj, -lj]
            }
            MapFamily::GeometricSimilarity { ratio, dim } => vec![x * ratio.ln(); dim],
        }
    }

    /// `sup_n ‖A_n‖`, attained at the first index for every family here.
    pub fn norm_sup(&self) -> f64 {
        self.log_diagonal(self.first_index()).into_iter().fold(f64::NEG_INFINITY, f64::max).exp()
    }

    /// Slot permutation sorting every `A_n`'s diagonal decreasingly.
    pub fn common_order(&self) -> Vec<usize> {
        (0..self.dim()).collect()
    }

    /// Envelope for the level-one series `Σ_n φ^s(A_n)`.
    pub fn level_one_envelope(&self, s: f64) -> TailEnvelope {
        match *self {
            MapFamily::InverseSquareDiagonal { mass } => {
                // φ^s ≤ α_1^s ≤ (2c)^s (n+1)^{−2s}; summable iff s > 1/2 for s ≤ 1
                let c = inverse_square_constant() / mass;
                let e = if s <= 1.0 { 2.0 * s } else { 2.0 };
                if e > 1.0 {
                    TailEnvelope::Dominates(Envelope::power((2.0 * c).powf(s.min(1.0)), e, 0.0))
                } else {
                    // α_1^s ≥ (2c)^s (2n)^{−2s}
                    TailEnvelope::Minorizes(Envelope::power((2.0 * c).powf(s) * 4f64.powf(-s), e, 0.0))
                }
            }
            MapFamily::LogSquaredLattice { n0 } => {
                let e = lattice_exponent(s);
                let env = Envelope::power(1.0, e, 2.0 * e);
                if env.is_summable() {
                    let n = n0 as f64;
                    let delta = 1.0 / (n * n.ln().powi(2));
                    TailEnvelope::Dominates(Envelope::power((1.0 - delta).powf(-e), e, 2.0 * e))
                } else {
                    TailEnvelope::Minorizes(env)
                }
            }
            MapFamily::GeometricSimilarity { ratio, .. } => {
                let env = Envelope::geometric(1.0, ratio.powf(s), 0.0);
                if env.is_summable() {
                    TailEnvelope::Dominates(env)
                } else {
                    TailEnvelope::Minorizes(env)
                }
            }
        }
    }

    /// Envelopes for `Σ_n p_n ln(A_n)_{ll}` per diagonal slot, for the
    /// weight family this map family is paired with.
    pub fn exponent_envelopes(&self, weights: &WeightFamily) -> Option<Vec<TailEnvelope>> {
        match (self, weights) {
            (MapFamily::InverseSquareDiagonal { mass }, WeightFamily::InverseSquare) => {
                // with q_n = p_n / mass the terms scale by at most 1/mass
                let c = inverse_square_constant() / mass;
                Some(vec![
                    // c (n+1)^{−2} (2 ln(n+1) − ln 2c) ≤ 3.2 c n^{−2} ln n
                    TailEnvelope::Dominates(Envelope::power(3.2 * c, 2.0, -1.0)),
                    // c (n+1)^{−2} (n ln 4 − ln c) ≥ 0.23 c / n
                    TailEnvelope::Minorizes(Envelope::power(0.23 * c, 1.0, 0.0)),
                ])
            }
            _ => None,
        }
    }
}

impl fmt::Display for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapFamily::InverseSquareDiagonal { .. } => f.write_str("example_5_2"),
            MapFamily::LogSquaredLattice { n0 } => write!(f, "example_5_3({n0})"),
            MapFamily::GeometricSimilarity { ratio, dim } => write!(f, "geometric_similarity({ratio}, {dim})"),
        }
    }
}

fn lattice_symbol(n: u64) -> u64 {
    let x = n as f64;
    (x * x.ln().powi(2)).floor() as u64
}

/// `e(s)` with `φ^s(A_j) = j^{−e(s)}` for `A_j = diag(j^{−1/2}, j^{−1})`.
fn lattice_exponent(s: f64) -> f64 {
    if s < 1.0 {
        s / 2.0
    } else if s < 2.0 {
        s - 0.5
    } else {
        0.75 * s
    }
}
