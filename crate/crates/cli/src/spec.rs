//! The system spec file: a TOML document with `schema = 1`.
//!
//! ```toml
//! schema = 1
//! dim = 2
//! seed = 7
//!
//! [[maps.map]]                      # or: [maps] family = "example_5_3(100)"
//! matrix = [[0.45, 0.0], [0.0, 0.2]]
//! translation = [0.1, -0.3]         # optional, all maps or none
//!
//! [measure]
//! kind = "bernoulli"                # uniform | bernoulli | markov | family
//! weights = [0.5, 0.5]
//! ```
//!
//! Named families: `example_5_1a`, `example_5_1b`, `example_5_2`,
//! `geometric_bernoulli(q)` for weights; `example_5_2`, `example_5_3(n0)`,
//! `geometric_similarity(ratio, dim)` for maps.

use std::collections::BTreeMap;
use std::path::Path;

use affinedim_core::ifs::DEFAULT_FAMILY_SIZE;
use affinedim_core::{AffineIFS, MapFamily, Matrix, MeasureSpec, Symbol, TranslationDraw, Truncation, WeightFamily};
use serde::{Deserialize, Serialize};

use crate::error::SpecError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub schema: u32,
    pub name: Option<String>,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub alphabet: AlphabetBlock,
    pub maps: Option<MapsBlock>,
    pub measure: Option<MeasureBlock>,
    #[serde(default)]
    pub analyze: AnalyzeBlock,
    #[serde(default)]
    pub pressure: PressureBlock,
    pub simulate: Option<SimulateBlock>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetBlock {
    /// Labels of explicit maps, in order; defaults to `0..m`.
    pub symbols: Option<Vec<u64>>,
    /// Truncation of countable families.
    pub eps: Option<f64>,
    pub max_symbols: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsBlock {
    pub family: Option<String>,
    pub map: Option<Vec<MapEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEntry {
    pub matrix: Vec<Vec<f64>>,
    pub translation: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureBlock {
    Uniform,
    Bernoulli { weights: Vec<f64> },
    Markov { initial: Vec<f64>, transition: Vec<Vec<f64>> },
    Family { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeBlock {
    /// Grid for `P_μ(s)`; defaults to `0, 0.25, …, d`.
    pub s_grid: Option<Vec<f64>>,
    pub monte_carlo_steps: usize,
    pub monte_carlo_replicas: usize,
}

impl Default for AnalyzeBlock {
    fn default() -> Self {
        AnalyzeBlock { s_grid: None, monte_carlo_steps: 100_000, monte_carlo_replicas: 8 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureBlock {
    /// Defaults to `0, 0.1, …, d`.
    pub s_grid: Option<Vec<f64>>,
    /// Defaults to the deepest level (at most 8) with at most 10^6 words.
    pub max_level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub draws: usize,
    pub points: usize,
    pub depth: usize,
    pub centers: usize,
    /// Explicit radius grid; the default grid is derived from each cloud.
    pub radii: Option<Vec<f64>>,
    /// Add the all-zero translation draw.
    pub zero_draw: bool,
    pub projection_entropy: Option<ProjectionEntropyBlock>,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        SimulateBlock {
            draws: 5,
            points: 100_000,
            depth: 60,
            centers: affinedim_core::geometry::DEFAULT_CENTERS,
            radii: None,
            zero_draw: false,
            projection_entropy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionEntropyBlock {
    #[serde(default = "one")]
    pub m: usize,
    pub widths: Vec<f64>,
    pub samples: usize,
}

fn one() -> usize {
    1
}

/// A spec turned into library objects.
#[derive(Debug, Clone)]
pub struct ResolvedSystem {
    pub spec: SystemSpec,
    pub ifs: Option<AffineIFS>,
    pub mu: Option<MeasureSpec>,
    /// Translations given in the spec, if any.
    pub translations: Option<TranslationDraw>,
}

impl SystemSpec {
    /// Reads, parses and resolves a spec file.
    pub fn load(path: &Path) -> Result<ResolvedSystem, SpecError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpecError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::load_str(&text)
    }

    pub fn load_str(text: &str) -> Result<ResolvedSystem, SpecError> {
        Self::parse(text)?.resolve().map_err(|e| e.at(text))
    }

    /// Syntax and schema checks only.
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let spec: SystemSpec = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            SpecError { field: String::new(), line, message: e.message().trim().to_string() }
        })?;
        if spec.schema != SCHEMA_VERSION {
            return Err(SpecError::new("schema", format!("unsupported schema {} (expected {SCHEMA_VERSION})", spec.schema))
                .at(text));
        }
        if spec.dim == 0 {
            return Err(SpecError::new("dim", "dimension must be at least 1").at(text));
        }
        Ok(spec)
    }

    /// Builds the IFS, measure and translations the spec describes.
    pub fn resolve(&self) -> Result<ResolvedSystem, SpecError> {
        let truncation = self.truncation()?;
        let mu_family = match &self.measure {
            Some(MeasureBlock::Family { name }) => Some(
                MeasureSpec::from_family(parse_weight_family(name)?, truncation)
                    .map_err(|e| SpecError::new("measure.name", e.to_string()))?,
            ),
            _ => None,
        };
        let (ifs, translations) = match &self.maps {
            None => (None, None),
            Some(block) => {
                let (ifs, tr) = self.resolve_maps(block, mu_family.as_ref())?;
                (Some(ifs), tr)
            }
        };
        let mu = match (&self.measure, mu_family) {
            (None, _) => None,
            (Some(MeasureBlock::Family { .. }), mu) => mu,
            (Some(block), None) => {
                let ifs = ifs.as_ref().ok_or_else(|| {
                    SpecError::new("measure", "finite measures are defined over the maps; add a maps block")
                })?;
                Some(finite_measure(block, ifs)?)
            }
            (Some(_), Some(_)) => unreachable!("family measures are built above"),
        };
        if let (Some(ifs), Some(mu)) = (&ifs, &mu) {
            ifs.positions_for(mu).map_err(|e| SpecError::new("measure", format!("{e}: every symbol needs a map")))?;
        }
        Ok(ResolvedSystem { spec: self.clone(), ifs, mu, translations })
    }

    fn truncation(&self) -> Result<Truncation, SpecError> {
        let mut t = Truncation::default();
        if let Some(eps) = self.alphabet.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(SpecError::new("alphabet.eps", format!("must lie in (0, 1), got {eps}")));
            }
            t.eps = eps;
        }
        if let Some(m) = self.alphabet.max_symbols {
            if m == 0 {
                return Err(SpecError::new("alphabet.max_symbols", "must be at least 1"));
            }
            t.max_symbols = m;
        }
        Ok(t)
    }

    fn resolve_maps(
        &self,
        block: &MapsBlock,
        mu: Option<&MeasureSpec>,
    ) -> Result<(AffineIFS, Option<TranslationDraw>), SpecError> {
        let (ifs, translations) = match (&block.family, &block.map) {
            (Some(name), None) => {
                let family = parse_map_family(name, mu)?;
                let count = match mu {
                    Some(mu) => mu.symbols().len(),
                    None => self.alphabet.max_symbols.unwrap_or(DEFAULT_FAMILY_SIZE),
                };
                let ifs = AffineIFS::from_family(family, count).map_err(|e| SpecError::new("maps.family", e.to_string()))?;
                (ifs, None)
            }
            (None, Some(entries)) if !entries.is_empty() => self.explicit_maps(entries)?,
            (None, _) => return Err(SpecError::new("maps", "give either `family` or at least one [[maps.map]]")),
            (Some(_), Some(_)) => return Err(SpecError::new("maps", "`family` and [[maps.map]] are exclusive")),
        };
        if ifs.dim() != self.dim {
            return Err(SpecError::new("dim", format!("spec says {} but the maps act on R^{}", self.dim, ifs.dim())));
        }
        Ok((ifs, translations))
    }

    fn explicit_maps(&self, entries: &[MapEntry]) -> Result<(AffineIFS, Option<TranslationDraw>), SpecError> {
        let symbols: Vec<Symbol> = match &self.alphabet.symbols {
            Some(s) if s.len() != entries.len() => {
                return Err(SpecError::new(
                    "alphabet.symbols",
                    format!("{} symbols for {} maps", s.len(), entries.len()),
                ))
            }
            Some(s) => s.iter().copied().map(Symbol).collect(),
            None => (0..entries.len() as u64).map(Symbol).collect(),
        };
        let mut matrices = Vec::with_capacity(entries.len());
        for (k, e) in entries.iter().enumerate() {
            let m = Matrix::from_rows(&e.matrix).map_err(|err| SpecError::new(format!("maps.map[{k}].matrix"), err.to_string()))?;
            if m.dim() != self.dim {
                return Err(SpecError::new(format!("maps.map[{k}].matrix"), format!("expected {0}×{0}", self.dim)));
            }
            matrices.push(m);
        }
        let ifs = AffineIFS::with_symbols(symbols.clone(), matrices).map_err(|e| SpecError::new("maps", e.to_string()))?;
        let given = entries.iter().filter(|e| e.translation.is_some()).count();
        let translations = match given {
            0 => None,
            n if n == entries.len() => {
                let per: BTreeMap<Symbol, Vec<f64>> =
                    symbols.iter().zip(entries).map(|(&s, e)| (s, e.translation.clone().unwrap())).collect();
                Some(
                    TranslationDraw::fixed(self.dim, per)
                        .map_err(|e| SpecError::new("maps.map.translation", e.to_string()))?,
                )
            }
            _ => return Err(SpecError::new("maps.map.translation", "give translations for every map or for none")),
        };
        Ok((ifs, translations))
    }
}

fn finite_measure(block: &MeasureBlock, ifs: &AffineIFS) -> Result<MeasureSpec, SpecError> {
    if ifs.is_countable() {
        return Err(SpecError::new("measure.kind", "countable map families need a named weight family"));
    }
    let symbols: Vec<Symbol> = (0..ifs.len()).map(|k| ifs.symbol(k)).collect();
    let m = symbols.len();
    let built = match block {
        MeasureBlock::Uniform => MeasureSpec::bernoulli(symbols, vec![1.0 / m as f64; m]),
        MeasureBlock::Bernoulli { weights } => {
            if weights.len() != m {
                return Err(SpecError::new("measure.weights", format!("{} weights for {m} maps", weights.len())));
            }
            MeasureSpec::bernoulli(symbols, weights.clone())
        }
        MeasureBlock::Markov { initial, transition } => MeasureSpec::markov(symbols, initial.clone(), transition.clone()),
        MeasureBlock::Family { .. } => unreachable!("handled by the caller"),
    };
    built.map_err(|e| SpecError::new("measure", e.to_string()))
}

/// `name` or `name(a, b, …)`.
fn split_call(text: &str) -> Option<(&str, Vec<&str>)> {
    let text = text.trim();
    match text.find('(') {
        None => Some((text, Vec::new())),
        Some(open) => {
            let inner = text[open + 1..].strip_suffix(')')?;
            Some((text[..open].trim(), inner.split(',').map(str::trim).collect()))
        }
    }
}

fn number<T: std::str::FromStr>(field: &str, s: &str) -> Result<T, SpecError> {
    s.parse().map_err(|_| SpecError::new(field, format!("cannot parse parameter {s:?}")))
}

pub fn parse_weight_family(name: &str) -> Result<WeightFamily, SpecError> {
    const FIELD: &str = "measure.name";
    let family = match split_call(name) {
        Some(("example_5_1a", args)) if args.is_empty() => WeightFamily::Dyadic,
        Some(("example_5_1b", args)) if args.is_empty() => WeightFamily::LogSquared,
        Some(("example_5_2", args)) if args.is_empty() => WeightFamily::InverseSquare,
        Some(("geometric_bernoulli", args)) if args.len() == 1 => WeightFamily::Geometric { q: number(FIELD, args[0])? },
        _ => return Err(SpecError::new(FIELD, format!("unknown weight family {name:?}"))),
    };
    family.validate().map_err(|e| SpecError::new(FIELD, e.to_string()))?;
    Ok(family)
}

pub fn parse_map_family(name: &str, mu: Option<&MeasureSpec>) -> Result<MapFamily, SpecError> {
    const FIELD: &str = "maps.family";
    let family = match split_call(name) {
        Some(("example_5_2", args)) if args.is_empty() => match mu {
            Some(mu) => MapFamily::inverse_square_for(mu),
            None => MapFamily::InverseSquareDiagonal { mass: 1.0 },
        },
        Some(("example_5_3", args)) if args.len() == 1 => MapFamily::LogSquaredLattice { n0: number(FIELD, args[0])? },
        Some(("geometric_similarity", args)) if args.len() == 2 => {
            MapFamily::GeometricSimilarity { ratio: number(FIELD, args[0])?, dim: number(FIELD, args[1])? }
        }
        _ => return Err(SpecError::new(FIELD, format!("unknown map family {name:?}"))),
    };
    family.validate().map_err(|e| SpecError::new(FIELD, e.to_string()))?;
    Ok(family)
}
