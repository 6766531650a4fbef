//! Local dimension `lim log μ(B(x, r)) / log r`, estimated by regressing
//! `ln μ̂(B(x, r))` on `ln r` over a geometric radius grid at sampled centers.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{KdTree, PointCloud};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub const DEFAULT_CENTERS: usize = 256;
pub const DEFAULT_RADII: usize = 12;
const MIN_RADII: usize = 5;
/// Neighbour count defining the lower end of the default fit range.
const MIN_BALL_COUNT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterFit {
    /// Index of the center in the cloud.
    pub center: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual of the fit.
    pub residual: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDimEstimate {
    pub radii: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub per_center: Vec<CenterFit>,
    pub median: f64,
    pub iqr: f64,
    pub mean: f64,
    pub n_points: usize,
}

/// Default grid: `DEFAULT_RADII` geometric radii from
/// `max(10·truncationError, median distance to the 20th neighbour)` to
/// `diameter / 8`.
pub fn default_radii(cloud: &PointCloud, tree: &KdTree, seed: u64) -> Result<Vec<f64>> {
    let diam = cloud.diameter();
    let centers = sample_centers(cloud.len(), DEFAULT_CENTERS, seed);
    let mut knn: Vec<f64> = centers
        .par_iter()
        .map(|&c| tree.kth_nearest(cloud.point(c), MIN_BALL_COUNT.min(cloud.len())).unwrap_or(0.0))
        .collect();
    knn.sort_by(f64::total_cmp);
    let r_min = (10.0 * cloud.truncation_error).max(knn[knn.len() / 2]);
    let r_max = diam / 8.0;
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(Error::InvalidInput(format!(
            "no usable fit range: r_min = {r_min:e}, r_max = {r_max:e} (cloud too small or collapsed)"
        )));
    }
    Ok(geometric_grid(r_min, r_max, DEFAULT_RADII))
}

pub(crate) fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|k| if k + 1 == n { hi } else { lo * (step * k as f64).exp() }).collect()
}

fn sample_centers(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, Purpose::Centers, 0);
    let mut v = index::sample(&mut rng, n, k.min(n)).into_vec();
    v.sort_unstable();
    v
}

/// Per-center least-squares slopes over `radii`.
pub fn local_dimension(
    cloud: &PointCloud,
    tree: &KdTree,
    radii: &[f64],
    centers: usize,
    seed: u64,
) -> Result<LocalDimEstimate> {
    if radii.len() < MIN_RADII {
        return Err(Error::InvalidInput(format!("need at least {MIN_RADII} radii, got {}", radii.len())));
    }
    if !radii.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput("radii must be strictly increasing".into()));
    }
    let (r_min, r_max) = (radii[0], radii[radii.len() - 1]);
    if r_min <= 2.0 * cloud.truncation_error {
        return Err(Error::InvalidInput(format!(
            "r_min = {r_min:e} does not exceed twice the truncation error {:e}",
            cloud.truncation_error
        )));
    }
    let diam = cloud.diameter();
    if r_max >= diam / 4.0 {
        return Err(Error::InvalidInput(format!("r_max = {r_max:e} is not below diameter/4 = {:e}", diam / 4.0)));
    }
    if centers == 0 {
        return Err(Error::InvalidInput("need at least one center".into()));
    }
    let n = cloud.len();
    let log_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let per_center: Vec<CenterFit> = sample_centers(n, centers, seed)
        .into_par_iter()
        .map(|c| {
            let counts = tree.count_within(cloud.point(c), radii);
            if counts.iter().all(|&k| k == n) {
                return Err(Error::DegenerateFit { center: c, reason: "every ball holds the whole cloud".into() });
            }
            if counts.contains(&0) {
                return Err(Error::DegenerateFit { center: c, reason: "empty ball".into() });
            }
            let log_m: Vec<f64> = counts.iter().map(|&k| (k as f64 / n as f64).ln()).collect();
            let (slope, intercept, residual) = least_squares(&log_r, &log_m);
            Ok(CenterFit { center: c, slope, intercept, residual, counts })
        })
        .collect::<Result<_>>()?;

    let mut slopes: Vec<f64> = per_center.iter().map(|f| f.slope).collect();
    slopes.sort_by(f64::total_cmp);
    Ok(LocalDimEstimate {
        radii: radii.to_vec(),
        r_min,
        r_max,
        median: quantile(&slopes, 0.5),
        iqr: quantile(&slopes, 0.75) - quantile(&slopes, 0.25),
        mean: slopes.iter().sum::<f64>() / slopes.len() as f64,
        per_center,
        n_points: n,
    })
}

/// `(slope, intercept, rms residual)` of `y ≈ slope·x + intercept`.
fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TranslationDraw;
    use rand::Rng;

    fn cloud_of(dim: usize, points: Vec<f64>) -> PointCloud {
        PointCloud {
            dim,
            points,
            depth: 1,
            truncation_error: 0.0,
            radius: 1.0,
            draw: TranslationDraw::Random { dim, seed: 0 },
            seed: 0,
        }
    }

    #[test]
    fn exact_line_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, i, r) = least_squares(&x, &y);
        assert!((s - 2.5).abs() < 1e-14 && (i + 1.0).abs() < 1e-14 && r < 1e-14);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn uniform_square_has_slope_two() {
        let mut rng = rng::stream(1, Purpose::Draw, 0);
        let pts: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>()).collect();
        let cloud = cloud_of(2, pts);
        let tree = KdTree::build(2, &cloud.points);
        // centers away from the boundary of the square
        let radii = geometric_grid(0.01, 0.05, 8);
        let est = local_dimension(&cloud, &tree, &radii, 128, 3).unwrap();
        let inner: Vec<f64> = est
            .per_center
            .iter()
            .filter(|f| cloud.point(f.center).iter().all(|x| (0.05..=0.95).contains(x)))
            .map(|f| f.slope)
            .collect();
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!((mean - 2.0).abs() < 0.05, "mean slope {mean}");
    }

    #[test]
    fn rejects_bad_grids() {
        let cloud = cloud_of(1, (0..1000).map(|k| k as f64 / 1000.0).collect());
        let tree = KdTree::build(1, &cloud.points);
        assert!(local_dimension(&cloud, &tree, &[0.01, 0.02, 0.03, 0.04], 10, 0).is_err());
        assert!(local_dimension(&cloud, &tree, &[0.01, 0.02, 0.03, 0.04, 0.3], 10, 0).is_err());
        assert!(local_dimension(&cloud, &tree, &[0.01, 0.03, 0.02, 0.04, 0.05], 10, 0).is_err());
    }

    #[test]
    fn atom_has_slope_zero() {
        let mut pts = vec![0.0; 500];
        pts.extend((0..500).map(|k| 0.5 + k as f64 / 1000.0));
        let cloud = cloud_of(1, pts);
        let tree = KdTree::build(1, &cloud.points);
        let est = local_dimension(&cloud, &tree, &geometric_grid(0.01, 0.2, 6), 1000, 0).unwrap();
        for f in est.per_center.iter().filter(|f| cloud.point(f.center)[0] == 0.0) {
            assert_eq!(f.slope, 0.0);
            assert_eq!(f.counts, vec![500; 6]);
        }
    }
}
