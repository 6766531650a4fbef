//! Canonical projection, random translations, attractor point clouds, ball
//! counting and local-dimension regression, and projection-entropy bounds.

mod cloud;
mod kdtree;
mod local_dim;
mod projection;

pub use cloud::{generate_cloud, project, sample_translations, PointCloud, TranslationDraw};
pub use kdtree::KdTree;
pub use local_dim::{default_radii, local_dimension, CenterFit, LocalDimEstimate, DEFAULT_CENTERS, DEFAULT_RADII};
pub use projection::{feng_bounds, projection_entropy_estimate, BinTrace, FengBounds, ProjectionEntropy};
