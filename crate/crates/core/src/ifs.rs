//! Affine iterated function systems `f_i(x) = A_i x + a_i`.
//!
//! Linear parts live here; translations are supplied separately by a
//! [`TranslationDraw`](crate::geometry::TranslationDraw) because the
//! dimension results hold for almost every choice of them.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::families::MapFamily;
use crate::linalg::{singular_spectrum, Matrix};
use crate::symbolic::{MeasureSpec, Symbol};

/// Default number of family members kept when a map family is truncated.
pub const DEFAULT_FAMILY_SIZE: usize = 1_000_000;

#[derive(Debug, Clone)]
enum Maps {
    Explicit { symbols: Vec<Symbol>, matrices: Vec<Matrix>, index: HashMap<Symbol, usize> },
    Family { family: MapFamily, count: usize },
}

/// Linear parts of an IFS over a finite or truncated countable alphabet.
///
/// Maps are addressed by position `0..len()`; [`AffineIFS::symbol`] and
/// [`AffineIFS::position`] translate between positions and symbols.
#[derive(Debug, Clone)]
pub struct AffineIFS {
    dim: usize,
    maps: Maps,
    norm_sup: f64,
}

impl AffineIFS {
    /// Maps labelled `0..m`.
    pub fn new(matrices: Vec<Matrix>) -> Result<Self> {
        let symbols = (0..matrices.len() as u64).map(Symbol).collect();
        Self::with_symbols(symbols, matrices)
    }

    pub fn with_symbols(symbols: Vec<Symbol>, matrices: Vec<Matrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidInput("an IFS needs at least one map".into()));
        }
        if symbols.len() != matrices.len() {
            return Err(Error::DimensionMismatch { expected: matrices.len(), found: symbols.len() });
        }
        let dim = matrices[0].dim();
        if let Some(m) = matrices.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (k, &s) in symbols.iter().enumerate() {
            if index.insert(s, k).is_some() {
                return Err(Error::InvalidInput(format!("duplicate symbol {s}")));
            }
        }
        let norm_sup = matrices.iter().map(Matrix::norm).fold(0.0, f64::max);
        check_contractive(norm_sup)?;
        Ok(AffineIFS { dim, maps: Maps::Explicit { symbols, matrices, index }, norm_sup })
    }

    /// The first `count` members of a map family.
    pub fn from_family(family: MapFamily, count: usize) -> Result<Self> {
        family.validate()?;
        if count == 0 {
            return Err(Error::InvalidInput("family truncation must keep at least one map".into()));
        }
        let norm_sup = family.norm_sup();
        check_contractive(norm_sup)?;
        Ok(AffineIFS { dim: family.dim(), maps: Maps::Family { family, count }, norm_sup })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        match &self.maps {
            Maps::Explicit { symbols, .. } => symbols.len(),
            Maps::Family { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn family(&self) -> Option<MapFamily> {
        match self.maps {
            Maps::Family { family, .. } => Some(family),
            Maps::Explicit { .. } => None,
        }
    }

    pub fn is_countable(&self) -> bool {
        self.family().is_some()
    }

    pub fn symbol(&self, k: usize) -> Symbol {
        match &self.maps {
            Maps::Explicit { symbols, .. } => symbols[k],
            Maps::Family { family, .. } => family.symbol(family.first_index() + k as u64),
        }
    }

    pub fn position(&self, s: Symbol) -> Result<usize> {
        match &self.maps {
            Maps::Explicit { index, .. } => index.get(&s).copied(),
            Maps::Family { family, count } => family
                .index_of(s)
                .map(|n| (n - family.first_index()) as usize)
                .filter(|k| k < count),
        }
        .ok_or(Error::UnknownSymbol(s))
    }

    /// `A_k`; family members whose entries underflow are reported singular.
    pub fn matrix(&self, k: usize) -> Result<Matrix> {
        match &self.maps {
            Maps::Explicit { matrices, .. } => Ok(matrices[k].clone()),
            Maps::Family { .. } => Matrix::diagonal(&self.raw_diagonal(k)),
        }
    }

    /// Row-major entries of `A_k` without the invertibility check.
    pub fn entries(&self, k: usize) -> Vec<f64> {
        match &self.maps {
            Maps::Explicit { matrices, .. } => matrices[k].as_slice().to_vec(),
            Maps::Family { .. } => {
                let d = self.dim;
                let mut out = vec![0.0; d * d];
                for (l, e) in self.raw_diagonal(k).into_iter().enumerate() {
                    out[l * d + l] = e;
                }
                out
            }
        }
    }

    fn raw_diagonal(&self, k: usize) -> Vec<f64> {
        self.log_diagonal(k).expect("family maps are diagonal").into_iter().map(f64::exp).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        match &self.maps {
            Maps::Explicit { matrices, .. } => matrices.iter().all(Matrix::is_diagonal),
            Maps::Family { .. } => true,
        }
    }

    /// `ln |(A_k)_{ll}|` per slot, for diagonal maps.
    pub fn log_diagonal(&self, k: usize) -> Result<Vec<f64>> {
        match &self.maps {
            Maps::Explicit { symbols, matrices, .. } => {
                let m = &matrices[k];
                if !m.is_diagonal() {
                    return Err(Error::NotDiagonal(symbols[k]));
                }
                Ok(m.diagonal_entries().into_iter().map(|x| x.abs().ln()).collect())
            }
            Maps::Family { family, .. } => Ok(family.log_diagonal(family.first_index() + k as u64)),
        }
    }

    /// `ln α_l(A_k)`, decreasing.
    pub fn log_singular_values(&self, k: usize) -> Result<Vec<f64>> {
        match &self.maps {
            Maps::Explicit { matrices, .. } => Ok(singular_spectrum(&matrices[k])?.log_alphas().to_vec()),
            Maps::Family { .. } => {
                let mut v = self.log_diagonal(k)?;
                v.sort_by(|a, b| b.total_cmp(a));
                Ok(v)
            }
        }
    }

    /// Permutation of diagonal slots that sorts every map's diagonal
    /// decreasingly in absolute value, if one exists.
    pub fn common_diagonal_order(&self) -> Option<Vec<usize>> {
        match &self.maps {
            Maps::Family { family, .. } => Some(family.common_order()),
            Maps::Explicit { matrices, .. } => {
                if !self.is_diagonal() {
                    return None;
                }
                let logs: Vec<Vec<f64>> = (0..matrices.len()).map(|k| self.log_diagonal(k).unwrap()).collect();
                let mut order: Vec<usize> = (0..self.dim).collect();
                let total = |l: usize| logs.iter().map(|v| v[l]).sum::<f64>();
                order.sort_by(|&a, &b| total(b).total_cmp(&total(a)));
                let ok = logs.iter().all(|v| order.windows(2).all(|w| v[w[0]] >= v[w[1]]));
                ok.then_some(order)
            }
        }
    }

    /// `sup_i ‖A_i‖`.
    pub fn norm_sup(&self) -> f64 {
        self.norm_sup
    }

    /// Whether `sup_i ‖A_i‖ < 1/2`.
    pub fn half_norm(&self) -> bool {
        self.norm_sup < 0.5
    }

    /// For each alphabet position of `mu`, the position of the same symbol here.
    pub fn positions_for(&self, mu: &MeasureSpec) -> Result<Vec<usize>> {
        mu.symbols().iter().map(|&s| self.position(s)).collect()
    }
}

fn check_contractive(norm_sup: f64) -> Result<()> {
    if norm_sup < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("maps must be contractions, sup norm is {norm_sup}")))
    }
}
