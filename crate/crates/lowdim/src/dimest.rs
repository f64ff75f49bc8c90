//! Covering numbers and box-counting dimension estimation.
//!
//! The covering number `N_delta` of a point cloud is computed by a greedy
//! cover with centers drawn from the cloud itself: repeatedly take the first
//! uncovered point (input order) as a center and mark everything within
//! `delta` of it covered. The count is at least the size of a minimal
//! delta-cover and at most the size of a minimal (delta/2)-cover, which is
//! enough for slope estimation since constants drop out of the log-log fit.
//!
//! The dimension estimate is the least-squares slope of `log N_delta`
//! against `log(1/delta)` over a geometric grid.

use crate::Matrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DimestError {
    #[error("point cloud must be nonempty")]
    Empty,
    #[error("point {index} has dimension {got}, expected {expected}")]
    RaggedPoint {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("delta grid invalid: {0}")]
    BadGrid(String),
}

/// Finite point cloud in R^dim, flat storage.
#[derive(Clone, Debug)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self, DimestError> {
        if points.is_empty() || dim == 0 {
            return Err(DimestError::Empty);
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(DimestError::RaggedPoint {
                    index,
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(DimestError::NonFinite { index });
            }
            coords.extend_from_slice(p);
        }
        Ok(PointCloud { dim, coords })
    }

    /// Matrices vectorized row-major into R^(m n).
    pub fn from_matrices(mats: &[Matrix]) -> Result<Self, DimestError> {
        let points = mats
            .iter()
            .map(|x| {
                (0..x.nrows())
                    .flat_map(|i| (0..x.ncols()).map(move |j| x[(i, j)]))
                    .collect()
            })
            .collect();
        let dim = mats.first().map_or(0, |x| x.nrows() * x.ncols());
        Self::new(dim, points)
    }

    pub fn from_vectors(vecs: &[crate::Vector]) -> Result<Self, DimestError> {
        let dim = vecs.first().map_or(0, |v| v.len());
        Self::new(dim, vecs.iter().map(|v| v.as_slice().to_vec()).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Largest distance from the first point, doubled — a cheap upper bound
    /// on the diameter, used for grid validation.
    pub fn diameter_upper(&self) -> f64 {
        let p0 = self.point(0);
        let mut max_sq: f64 = 0.0;
        for i in 1..self.len() {
            max_sq = max_sq.max(dist_sq(p0, self.point(i)));
        }
        2.0 * max_sq.sqrt()
    }

    pub fn scaled(&self, c: f64) -> PointCloud {
        PointCloud {
            dim: self.dim,
            coords: self.coords.iter().map(|v| v * c).collect(),
        }
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Greedy covering number at scale `delta` (centers in the cloud, first
/// uncovered point in input order becomes the next center). Deterministic
/// for a fixed input order.
pub fn covering_number(cloud: &PointCloud, delta: f64) -> usize {
    assert!(delta > 0.0, "delta must be positive");
    let delta_sq = delta * delta;
    let mut centers: Vec<usize> = Vec::new();
    'points: for i in 0..cloud.len() {
        let p = cloud.point(i);
        // Recently added centers are the likeliest to cover nearby input
        // points; scanning them first only changes speed, not the result.
        for &c in centers.iter().rev() {
            if dist_sq(p, cloud.point(c)) <= delta_sq {
                continue 'points;
            }
        }
        centers.push(i);
    }
    centers.len()
}

/// Box-counting dimension estimate with fit diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// Least-squares slope of log N against log(1/delta): the dimension.
    pub slope: f64,
    pub intercept: f64,
    /// Evaluated scales, ascending.
    pub delta_grid: Vec<f64>,
    /// Covering numbers per scale.
    pub counts: Vec<usize>,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
    /// True when the fit window looks like a scaling regime
    /// (r_squared >= 0.98 on at least two usable grid points).
    pub scaling_regime: bool,
}

/// Estimates the box-counting dimension of a cloud on a geometric delta grid.
///
/// Grid points where the covering number equals the cloud size sit below the
/// resolution floor of the sample and are dropped from the fit. A cloud of
/// identical points yields slope 0 with r_squared = 1 by convention.
pub fn estimate_minkowski(
    cloud: &PointCloud,
    delta_min: f64,
    delta_max: f64,
    grid_size: usize,
) -> Result<DimensionEstimate, DimestError> {
    if grid_size < 4 {
        return Err(DimestError::BadGrid(format!(
            "grid_size {grid_size} must be at least 4"
        )));
    }
    if !(delta_min > 0.0 && delta_min < delta_max) {
        return Err(DimestError::BadGrid(format!(
            "need 0 < delta_min < delta_max, got [{delta_min}, {delta_max}]"
        )));
    }
    let diameter = cloud.diameter_upper();
    if diameter == 0.0 {
        // Degenerate cloud: a single ball of any radius covers it.
        let delta_grid = geometric_grid(delta_min, delta_max, grid_size);
        let counts = vec![1usize; grid_size];
        return Ok(DimensionEstimate {
            slope: 0.0,
            intercept: 0.0,
            delta_grid,
            counts,
            r_squared: 1.0,
            scaling_regime: true,
        });
    }
    if delta_max >= diameter {
        return Err(DimestError::BadGrid(format!(
            "delta_max {delta_max} not below the cloud diameter (<= {diameter})"
        )));
    }

    let delta_grid = geometric_grid(delta_min, delta_max, grid_size);
    let counts: Vec<usize> = delta_grid
        .iter()
        .map(|&d| covering_number(cloud, d))
        .collect();

    // Saturated scales (one center per point) flatten the curve; drop them.
    let usable: Vec<(f64, f64)> = delta_grid
        .iter()
        .zip(&counts)
        .filter(|&(_, &n)| n < cloud.len())
        .map(|(&d, &n)| ((1.0 / d).ln(), (n as f64).ln()))
        .collect();

    let (slope, intercept, r_squared) = fit_line(&usable);
    Ok(DimensionEstimate {
        slope,
        intercept,
        delta_grid,
        counts,
        r_squared,
        scaling_regime: usable.len() >= 2 && r_squared >= 0.98,
    })
}

/// Geometric grid from `lo` to `hi` inclusive, ascending.
pub fn geometric_grid(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    let ratio = (hi / lo).powf(1.0 / (size - 1) as f64);
    (0..size)
        .map(|i| {
            if i == size - 1 {
                hi
            } else {
                lo * ratio.powi(i as i32)
            }
        })
        .collect()
}

/// Least squares of y against x; returns (slope, intercept, r_squared).
fn fit_line(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    if points.len() < 2 {
        return (0.0, points.first().map_or(0.0, |p| p.1), 0.0);
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return (0.0, mean_y, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 {
        1.0 // constant counts perfectly fit a flat line
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r_squared)
}
