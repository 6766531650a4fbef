use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::AffineIFS;
use crate::rng::{self, Purpose};
use crate::symbolic::{MeasureSpec, Symbol, Word};

/// Translation vectors `a_i ∈ [−1/2, 1/2]^d`, one per symbol.
///
/// A random draw is a pure function of `(seed, symbol)`, so translations for
/// new symbols can be produced on demand without disturbing earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TranslationDraw {
    Random { dim: usize, seed: u64 },
    Fixed { dim: usize, per_symbol: BTreeMap<Symbol, Vec<f64>> },
}

impl TranslationDraw {
    pub fn fixed(dim: usize, per_symbol: BTreeMap<Symbol, Vec<f64>>) -> Result<Self> {
        for (s, a) in &per_symbol {
            if a.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: a.len() });
            }
            if a.iter().any(|x| !(-0.5..=0.5).contains(x)) {
                return Err(Error::InvalidInput(format!("translation of symbol {s} leaves [-1/2, 1/2]^{dim}: {a:?}")));
            }
        }
        Ok(TranslationDraw::Fixed { dim, per_symbol })
    }

    /// All translations zero, for every map of `ifs`.
    pub fn zero(ifs: &AffineIFS) -> Self {
        let per_symbol = (0..ifs.len()).map(|k| (ifs.symbol(k), vec![0.0; ifs.dim()])).collect();
        TranslationDraw::Fixed { dim: ifs.dim(), per_symbol }
    }

    pub fn dim(&self) -> usize {
        match self {
            TranslationDraw::Random { dim, .. } | TranslationDraw::Fixed { dim, .. } => *dim,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            TranslationDraw::Random { seed, .. } => Some(*seed),
            TranslationDraw::Fixed { .. } => None,
        }
    }

    pub fn translation(&self, s: Symbol) -> Result<Vec<f64>> {
        match self {
            TranslationDraw::Random { dim, seed } => {
                let mut rng = rng::stream(*seed, Purpose::Translation, s.0);
                Ok((0..*dim).map(|_| rng.random::<f64>() - 0.5).collect())
            }
            TranslationDraw::Fixed { per_symbol, .. } => per_symbol.get(&s).cloned().ok_or(Error::UnknownSymbol(s)),
        }
    }
}

/// Uniform translations on the cube, drawn lazily per symbol.
pub fn sample_translations(ifs: &AffineIFS, seed: u64) -> TranslationDraw {
    TranslationDraw::Random { dim: ifs.dim(), seed }
}

/// `f_{w_1} ∘ ⋯ ∘ f_{w_n}(0)`.
pub fn project(ifs: &AffineIFS, draw: &TranslationDraw, w: &Word) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::InvalidInput("cannot project the empty word".into()));
    }
    check_dims(ifs, draw)?;
    let d = ifs.dim();
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    for &s in w.symbols().iter().rev() {
        let k = ifs.position(s)?;
        let a = ifs.entries(k);
        let t = draw.translation(s)?;
        for i in 0..d {
            y[i] = t[i] + (0..d).map(|j| a[i * d + j] * x[j]).sum::<f64>();
        }
        std::mem::swap(&mut x, &mut y);
    }
    Ok(x)
}

fn check_dims(ifs: &AffineIFS, draw: &TranslationDraw) -> Result<()> {
    if draw.dim() != ifs.dim() {
        return Err(Error::DimensionMismatch { expected: ifs.dim(), found: draw.dim() });
    }
    Ok(())
}

/// Affine maps resolved for the alphabet positions of a measure.
pub(crate) struct ResolvedMaps {
    pub dim: usize,
    linear: Vec<f64>,
    shift: Vec<f64>,
    /// `R` with `f_i(B(0, R)) ⊂ B(0, R)` for every resolved map.
    pub radius: f64,
}

impl ResolvedMaps {
    pub fn new(ifs: &AffineIFS, mu: &MeasureSpec, draw: &TranslationDraw) -> Result<Self> {
        check_dims(ifs, draw)?;
        let d = ifs.dim();
        let positions = ifs.positions_for(mu)?;
        let mut linear = Vec::with_capacity(positions.len() * d * d);
        let mut shift = Vec::with_capacity(positions.len() * d);
        let mut max_shift: f64 = 0.0;
        for (&k, &s) in positions.iter().zip(mu.symbols()) {
            linear.extend(ifs.entries(k));
            let t = draw.translation(s)?;
            max_shift = max_shift.max(t.iter().map(|x| x * x).sum::<f64>().sqrt());
            shift.extend(t);
        }
        let radius = max_shift / (1.0 - ifs.norm_sup());
        Ok(ResolvedMaps { dim: d, linear, shift, radius })
    }

    /// `out = f_k(x)`.
    #[inline]
    pub fn apply(&self, k: usize, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let a = &self.linear[k * d * d..(k + 1) * d * d];
        let t = &self.shift[k * d..(k + 1) * d];
        for i in 0..d {
            let mut acc = t[i];
            for j in 0..d {
                acc += a[i * d + j] * x[j];
            }
            out[i] = acc;
        }
    }

    /// Folds `positions` right to left starting from the origin.
    pub fn fold(&self, positions: &[usize], x: &mut [f64], scratch: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for &k in positions.iter().rev() {
            self.apply(k, x, scratch);
            x.copy_from_slice(scratch);
        }
    }
}

/// Sample of `π_a μ`: projections of `μ`-random words of a fixed depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub dim: usize,
    /// Row-major, `len() × dim`.
    pub points: Vec<f64>,
    pub depth: usize,
    /// Every point is within this distance of the projection of any
    /// infinite extension of its word: `R · ᾱ^depth`.
    pub truncation_error: f64,
    pub radius: f64,
    pub draw: TranslationDraw,
    pub seed: u64,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Diagonal of the bounding box.
    pub fn diameter(&self) -> f64 {
        let d = self.dim;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in self.points.chunks_exact(d) {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt()
    }
}

const CHUNK: usize = 4096;

/// `n_points` independent `μ`-random words of length `depth`, projected.
pub fn generate_cloud(
    ifs: &AffineIFS,
    mu: &MeasureSpec,
    draw: &TranslationDraw,
    n_points: usize,
    depth: usize,
    seed: u64,
) -> Result<PointCloud> {
    if n_points == 0 || depth == 0 {
        return Err(Error::InvalidInput("need at least one point and depth ≥ 1".into()));
    }
    let maps = ResolvedMaps::new(ifs, mu, draw)?;
    let sampler = mu.sampler()?;
    let d = ifs.dim();
    let chunks = n_points.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(n_points - c * CHUNK);
            let mut rng = rng::stream(seed, Purpose::CloudChunk, c as u64);
            let mut out = Vec::with_capacity(count * d);
            let mut word = Vec::with_capacity(depth);
            let (mut x, mut scratch) = (vec![0.0; d], vec![0.0; d]);
            for _ in 0..count {
                word.clear();
                sampler.fill(&mut rng, depth, &mut word);
                maps.fold(&word, &mut x, &mut scratch);
                out.extend_from_slice(&x);
            }
            out
        })
        .collect();
    Ok(PointCloud {
        dim: d,
        points: parts.concat(),
        depth,
        truncation_error: maps.radius * ifs.norm_sup().powi(depth as i32),
        radius: maps.radius,
        draw: draw.clone(),
        seed,
    })
}
