//! Symbolic and geometric quantities of affine iterated function systems with
//! finitely or countably many maps: singular value functions, entropy,
//! Lyapunov spectra, pressure, Lyapunov dimension, and Monte Carlo estimates
//! of local dimension for randomly translated attractors.

pub mod error;
pub mod ext;
pub mod families;
pub mod geometry;
pub mod ifs;
pub mod linalg;
pub mod pressure;
pub mod rng;
pub mod series;
pub mod spectrum;
pub mod symbolic;

pub use error::{Error, Result};
pub use ext::ExtendedReal;
pub use families::{MapFamily, WeightFamily};
pub use geometry::{
    feng_bounds, generate_cloud, local_dimension, project, projection_entropy_estimate, sample_translations, FengBounds,
    KdTree, LocalDimEstimate, PointCloud, ProjectionEntropy, TranslationDraw,
};
pub use ifs::AffineIFS;
pub use linalg::{product_spectrum, singular_spectrum, svf, LogSingularSpectrum, Matrix, ProductAccumulator, SvfValue};
pub use pressure::{
    level_sum, pressure_curve, pressure_estimate, pressure_zero, s_infinity, PressureCurve, PressureEstimate, PressureZero,
    SInfinity,
};
pub use spectrum::{
    energy, exponents_exact_diagonal, exponents_monte_carlo, lyapunov_dimension, measure_pressure, EnergyValue,
    LyapunovDimension, LyapunovSpectrum, MonteCarloConfig, SpectrumMethod,
};
pub use symbolic::{
    cylinder_mass, empirical_local_entropy, entropy, sample_sequence, Alphabet, Entropy, MeasureSpec, Symbol, Truncation,
    TruncationReport, Word,
};
