//! RANSAC segmentation of an object's dominant horizontal surface and its
//! projection onto the map plane.

use crate::cloud::PointCloud;
use crate::geometry::Point3;
use crate::poly::{convex_hull, dist, Polygon, Vec2};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlaneError {
    #[error("cloud is degenerate: fewer than 3 points or all collinear")]
    DegenerateCloud,
    #[error("best plane hypothesis reached only {achieved:.3} inlier ratio (need {required:.3})")]
    InsufficientConsensus { achieved: f64, required: f64 },
    #[error("point cloud is empty")]
    EmptyCloud,
}

/// A plane n . p + d = 0 with unit normal, canonicalized to n.z >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub d: f64,
}

impl Plane {
    fn from_points(a: &Point3, b: &Point3, c: &Point3) -> Option<Plane> {
        let av = a.to_vector();
        let n = (b.to_vector() - av).cross(&(c.to_vector() - av));
        let norm = n.norm();
        if norm < 1e-12 {
            return None;
        }
        let normal = n / norm;
        Some(Plane {
            normal,
            d: -normal.dot(&av),
        }
        .canonicalized())
    }

    fn canonicalized(mut self) -> Plane {
        let flip = if self.normal.z.abs() > 1e-12 {
            self.normal.z < 0.0
        } else if self.normal.x.abs() > 1e-12 {
            self.normal.x < 0.0
        } else {
            self.normal.y < 0.0
        };
        if flip {
            self.normal = -self.normal;
            self.d = -self.d;
        }
        self
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.to_vector()) + self.d
    }

    /// Angle between this plane's normal and another's, radians.
    pub fn normal_angle_to(&self, other: &Plane) -> f64 {
        self.normal.dot(&other.normal).clamp(-1.0, 1.0).acos()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RansacParams {
    pub iterations: u32,
    /// Inlier residual threshold, meters.
    pub inlier_threshold: f64,
    pub min_inlier_ratio: f64,
    pub seed: u64,
    /// Hypotheses with |normal.z| below this are rejected; 0 disables the
    /// gate. The pipeline sets 0.7 so leg and wall planes never win over
    /// the seat/tabletop.
    pub min_normal_z: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 200,
            inlier_threshold: 0.01,
            min_inlier_ratio: 0.4,
            seed: 0,
            min_normal_z: 0.0,
        }
    }
}

/// Fits the consensus plane: `iterations` seeded 3-point hypotheses scored
/// by inlier count, then a least-squares refit (centroid + smallest
/// covariance eigenvector) on the winning consensus set. Deterministic for
/// a fixed seed. Returns the refit plane and the consensus inlier indices.
/// Hypothesis scoring runs on rayon when the `parallel` feature is on.
pub fn ransac_plane(
    cloud: &PointCloud,
    params: &RansacParams,
) -> Result<(Plane, Vec<usize>), PlaneError> {
    run_ransac(cloud, params, cfg!(feature = "parallel"))
}

/// Sequential scoring path; identical results to [`ransac_plane`].
pub fn ransac_plane_seq(
    cloud: &PointCloud,
    params: &RansacParams,
) -> Result<(Plane, Vec<usize>), PlaneError> {
    run_ransac(cloud, params, false)
}

type ScoredHypothesis = (usize, std::cmp::Reverse<usize>, Plane);

fn run_ransac(
    cloud: &PointCloud,
    params: &RansacParams,
    parallel: bool,
) -> Result<(Plane, Vec<usize>), PlaneError> {
    let n = cloud.len();
    if n < 3 {
        return Err(PlaneError::DegenerateCloud);
    }
    debug_assert!(params.iterations >= 1 && params.inlier_threshold > 0.0);

    // Pre-draw all hypothesis triples so scoring parallelizes without
    // touching the rng order.
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let triples: Vec<[usize; 3]> = (0..params.iterations)
        .map(|_| {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let mut c = rng.random_range(0..n - 2);
            if c >= a.min(b) {
                c += 1;
            }
            if c >= a.max(b) {
                c += 1;
            }
            [a, b, c]
        })
        .collect();

    let score = |(i, triple): (usize, &[usize; 3])| -> Option<ScoredHypothesis> {
        let plane = Plane::from_points(
            &cloud.points[triple[0]],
            &cloud.points[triple[1]],
            &cloud.points[triple[2]],
        )?;
        if params.min_normal_z > 0.0 && plane.normal.z.abs() < params.min_normal_z {
            return None;
        }
        let count = cloud
            .points
            .iter()
            .filter(|p| plane.signed_distance(p).abs() <= params.inlier_threshold)
            .count();
        Some((count, std::cmp::Reverse(i), plane))
    };

    // Best hypothesis by inlier count; earlier iteration wins ties so the
    // sequential and parallel paths agree.
    let best = if parallel {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            triples
                .par_iter()
                .enumerate()
                .filter_map(score)
                .max_by_key(|(count, rev, _)| (*count, *rev))
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!("parallel scoring requested without the parallel feature")
    } else {
        triples
            .iter()
            .enumerate()
            .filter_map(score)
            .max_by_key(|(count, rev, _)| (*count, *rev))
    };

    let Some((count, _, hypothesis)) = best else {
        return if all_collinear(cloud) {
            Err(PlaneError::DegenerateCloud)
        } else {
            Err(PlaneError::InsufficientConsensus {
                achieved: 0.0,
                required: params.min_inlier_ratio,
            })
        };
    };

    let ratio = count as f64 / n as f64;
    if ratio < params.min_inlier_ratio {
        return Err(PlaneError::InsufficientConsensus {
            achieved: ratio,
            required: params.min_inlier_ratio,
        });
    }

    let inliers: Vec<usize> = cloud
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| hypothesis.signed_distance(p).abs() <= params.inlier_threshold)
        .map(|(i, _)| i)
        .collect();
    let plane = least_squares_plane(cloud, &inliers).unwrap_or(hypothesis);
    Ok((plane, inliers))
}

/// Least-squares plane through the indexed points: normal is the smallest
/// eigenvector of the scatter matrix about the centroid. `None` when the
/// points do not span a plane.
pub fn least_squares_plane(cloud: &PointCloud, indices: &[usize]) -> Option<Plane> {
    if indices.len() < 3 {
        return None;
    }
    let mut centroid = Vector3::zeros();
    for &i in indices {
        centroid += cloud.points[i].to_vector();
    }
    centroid /= indices.len() as f64;

    let mut scatter = Matrix3::zeros();
    for &i in indices {
        let d = cloud.points[i].to_vector() - centroid;
        scatter += d * d.transpose();
    }
    let eigen = scatter.symmetric_eigen();
    let (mut min_idx, mut min_val) = (0usize, f64::INFINITY);
    for k in 0..3 {
        if eigen.eigenvalues[k] < min_val {
            min_val = eigen.eigenvalues[k];
            min_idx = k;
        }
    }
    // the two larger eigenvalues must carry actual spread
    let spread: f64 = eigen.eigenvalues.iter().sum::<f64>() - min_val;
    if spread < 1e-18 {
        return None;
    }
    let normal = eigen.eigenvectors.column(min_idx).normalize();
    Some(
        Plane {
            normal,
            d: -normal.dot(&centroid),
        }
        .canonicalized(),
    )
}

fn all_collinear(cloud: &PointCloud) -> bool {
    let p0 = cloud.points[0].to_vector();
    let Some(far) = cloud
        .points
        .iter()
        .max_by(|a, b| {
            (a.to_vector() - p0)
                .norm()
                .total_cmp(&(b.to_vector() - p0).norm())
        })
        .map(|p| p.to_vector())
    else {
        return true;
    };
    let axis = far - p0;
    let len = axis.norm();
    if len < 1e-12 {
        return true; // all coincident
    }
    let dir = axis / len;
    cloud
        .points
        .iter()
        .all(|p| (p.to_vector() - p0).cross(&dir).norm() <= 1e-9 * len.max(1.0))
}

/// Drops z from every map-frame point; count preserved.
pub fn project_inliers_to_map(cloud: &PointCloud) -> Result<Vec<Vec2>, PlaneError> {
    if cloud.is_empty() {
        return Err(PlaneError::EmptyCloud);
    }
    Ok(cloud.points.iter().map(|p| [p.x, p.y]).collect())
}

/// How degenerate footprints are replaced: a disc around the point
/// centroid, polygonized at this many vertices.
pub const DISC_VERTICES: usize = 16;
const DEGENERATE_AREA: f64 = 1e-6;

/// Convex hull of the projected points, counter-clockwise. Inputs whose
/// hull has area below 1e-6 m^2 collapse to a 16-gon disc centered on the
/// point centroid with radius half the maximum pairwise distance.
pub fn footprint_hull(points: &[Vec2]) -> Polygon {
    debug_assert!(!points.is_empty());
    let hull = convex_hull(points);
    let poly = Polygon::from_ccw_vertices(hull.clone());
    if hull.len() >= 3 && poly.area() >= DEGENERATE_AREA {
        return poly;
    }

    let n = points.len() as f64;
    let center = points.iter().fold([0.0, 0.0], |acc, p| {
        [acc[0] + p[0] / n, acc[1] + p[1] / n]
    });
    // hull vertices carry the extremes, so the diameter search stays small
    let mut diameter = 0.0f64;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            diameter = diameter.max(dist(*a, *b));
        }
    }
    let radius = diameter / 2.0;
    let vertices = (0..DISC_VERTICES)
        .map(|k| {
            let angle = k as f64 * std::f64::consts::TAU / DISC_VERTICES as f64;
            [
                center[0] + radius * angle.cos(),
                center[1] + radius * angle.sin(),
            ]
        })
        .collect();
    Polygon::from_ccw_vertices(vertices)
}
