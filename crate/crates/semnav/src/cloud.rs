//! Point-cloud extraction and conditioning: ROI back-projection,
//! histogram-gap background removal, Euclidean clustering on a uniform
//! grid, and the centroid/height summaries fed to the map.

use crate::geometry::{back_project, BoundingBox, CameraModel, Point3, RigidTransform3};
use crate::scene::DepthImage;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CloudError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("no clusters to choose from")]
    NoClusters,
}

/// Which frame a cloud's coordinates live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Camera,
    Map,
}

#[derive(Debug, Clone)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub frame: Frame,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, frame: Frame) -> Self {
        Self { points, frame }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cloud restricted to the given indices.
    pub fn subcloud(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            frame: self.frame,
        }
    }

    /// Applies a camera-to-map transform to every point.
    pub fn to_map_frame(&self, camera_in_map: &RigidTransform3) -> PointCloud {
        debug_assert_eq!(self.frame, Frame::Camera);
        PointCloud {
            points: self
                .points
                .iter()
                .map(|p| crate::geometry::apply_transform(camera_in_map, *p))
                .collect(),
            frame: Frame::Map,
        }
    }

    /// One "x y z" line per point; the --dump-clouds debug format.
    pub fn to_xyz(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 24);
        for p in &self.points {
            out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClusterParams {
    /// Euclidean connectivity threshold, meters.
    pub epsilon: f64,
    pub min_cluster_size: usize,
    /// Pixel subsampling factor for ROI extraction.
    pub stride: u32,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            epsilon: 0.10,
            min_cluster_size: 30,
            stride: 2,
        }
    }
}

/// Back-projects every valid depth pixel inside the bounding box, sampled
/// at the given stride, into a camera-frame cloud.
pub fn extract_roi_cloud(
    depth: &DepthImage,
    bbox: &BoundingBox,
    cam: &CameraModel,
    stride: u32,
) -> Result<PointCloud, CloudError> {
    debug_assert!(stride >= 1);
    let (u0_raw, v0_raw, u1_raw, v1_raw) = bbox.pixel_bounds();
    let u0_clip = u0_raw.max(0);
    let v0_clip = v0_raw.max(0);
    let u1_clip = u1_raw.min(depth.width as i64 - 1);
    let v1_clip = v1_raw.min(depth.height as i64 - 1);
    if u0_clip > u1_clip || v0_clip > v1_clip {
        return Err(CloudError::EmptyCloud); // box lies outside the image
    }
    let (u0, v0, u1, v1) = (
        u0_clip as u32,
        v0_clip as u32,
        u1_clip as u32,
        v1_clip as u32,
    );

    let mut points = Vec::new();
    let mut v = v0;
    while v <= v1 {
        let mut u = u0;
        while u <= u1 {
            if let Some(d) = depth.get(u, v) {
                if let Ok(p) = back_project((u as f64, v as f64), d, cam) {
                    points.push(p);
                }
            }
            u += stride;
        }
        v += stride;
    }
    if points.is_empty() {
        return Err(CloudError::EmptyCloud);
    }
    Ok(PointCloud::new(points, Frame::Camera))
}

pub const BACKGROUND_BIN_WIDTH: f64 = 0.05;
pub const BACKGROUND_GAP_BINS: usize = 2;

/// Keeps the depth-histogram run containing the nearest return and drops
/// everything beyond the first gap of `gap_bins` consecutive empty bins.
/// The nearest point always survives.
pub fn remove_background(cloud: &PointCloud) -> Result<PointCloud, CloudError> {
    remove_background_with(cloud, BACKGROUND_BIN_WIDTH, BACKGROUND_GAP_BINS)
}

pub fn remove_background_with(
    cloud: &PointCloud,
    bin_width: f64,
    gap_bins: usize,
) -> Result<PointCloud, CloudError> {
    if cloud.is_empty() {
        return Err(CloudError::EmptyCloud);
    }
    debug_assert!(bin_width > 0.0 && gap_bins >= 1);

    let bin_of = |z: f64| (z / bin_width).floor() as i64;
    let mut histogram: HashMap<i64, usize> = HashMap::new();
    let mut first_bin = i64::MAX;
    let mut last_bin = i64::MIN;
    for p in &cloud.points {
        let b = bin_of(p.z);
        *histogram.entry(b).or_insert(0) += 1;
        first_bin = first_bin.min(b);
        last_bin = last_bin.max(b);
    }

    // walk up from the nearest occupied bin until a wide-enough empty gap
    let mut cut = last_bin;
    let mut empty_run = 0usize;
    let mut b = first_bin;
    while b <= last_bin {
        if histogram.contains_key(&b) {
            empty_run = 0;
        } else {
            empty_run += 1;
            if empty_run >= gap_bins {
                cut = b - empty_run as i64;
                break;
            }
        }
        b += 1;
    }

    let points: Vec<Point3> = cloud
        .points
        .iter()
        .copied()
        .filter(|p| bin_of(p.z) <= cut)
        .collect();
    debug_assert!(!points.is_empty());
    Ok(PointCloud::new(points, cloud.frame))
}

/// Partitions the cloud into Euclidean clusters: two points share a cluster
/// iff they are connected by a chain of steps no longer than epsilon.
/// Neighbor search runs on a uniform grid of cell size epsilon with a
/// 27-cell neighborhood, which preserves exactness. Clusters smaller than
/// `min_cluster_size` are dropped; each cluster is sorted by point index
/// and clusters are ordered by their first index.
pub fn euclidean_cluster(cloud: &PointCloud, params: &ClusterParams) -> Vec<Vec<usize>> {
    debug_assert!(params.epsilon > 0.0);
    let n = cloud.len();
    if n == 0 {
        return Vec::new();
    }
    let eps = params.epsilon;
    let eps2 = eps * eps;
    let cell_of = |p: &Point3| {
        (
            (p.x / eps).floor() as i64,
            (p.y / eps).floor() as i64,
            (p.z / eps).floor() as i64,
        )
    };

    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        grid.entry(cell_of(p)).or_default().push(i);
    }

    let mut uf = UnionFind::new(n);
    for (i, p) in cloud.points.iter().enumerate() {
        let (cx, cy, cz) = cell_of(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(neighbors) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &j in neighbors {
                        if j <= i {
                            continue;
                        }
                        let q = &cloud.points[j];
                        let d2 = (p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2);
                        if d2 <= eps2 {
                            uf.union(i, j);
                        }
                    }
                }
            }
        }
    }

    collect_clusters(&mut uf, n, params.min_cluster_size)
}

/// Reference O(n^2) clustering used as the oracle for the grid version.
pub fn euclidean_cluster_bruteforce(cloud: &PointCloud, params: &ClusterParams) -> Vec<Vec<usize>> {
    let n = cloud.len();
    let eps2 = params.epsilon * params.epsilon;
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let (p, q) = (&cloud.points[i], &cloud.points[j]);
            let d2 = (p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2);
            if d2 <= eps2 {
                uf.union(i, j);
            }
        }
    }
    collect_clusters(&mut uf, n, params.min_cluster_size)
}

fn collect_clusters(uf: &mut UnionFind, n: usize, min_size: usize) -> Vec<Vec<usize>> {
    let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        by_root.entry(uf.find(i)).or_default().push(i);
    }
    let mut clusters: Vec<Vec<usize>> = by_root
        .into_values()
        .filter(|c| c.len() >= min_size.max(1))
        .collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    clusters
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = i;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// The cluster with the most points; ties broken by the centroid nearest
/// the camera (the cloud's origin), then by first index.
pub fn largest_cluster<'a>(
    cloud: &PointCloud,
    clusters: &'a [Vec<usize>],
) -> Result<&'a [usize], CloudError> {
    if clusters.is_empty() {
        return Err(CloudError::NoClusters);
    }
    let centroid_dist = |c: &[usize]| {
        let sub = cloud.subcloud(c);
        centroid(&sub).map(|p| p.norm()).unwrap_or(f64::INFINITY)
    };
    let best = clusters
        .iter()
        .min_by(|a, b| {
            b.len()
                .cmp(&a.len())
                .then_with(|| centroid_dist(a).total_cmp(&centroid_dist(b)))
                .then_with(|| a[0].cmp(&b[0]))
        })
        .expect("non-empty cluster list");
    Ok(best)
}

/// Arithmetic mean per coordinate.
pub fn centroid(cloud: &PointCloud) -> Result<Point3, CloudError> {
    if cloud.is_empty() {
        return Err(CloudError::EmptyCloud);
    }
    let n = cloud.len() as f64;
    let mut acc = [0.0f64; 3];
    for p in &cloud.points {
        acc[0] += p.x;
        acc[1] += p.y;
        acc[2] += p.z;
    }
    Ok(Point3::new(acc[0] / n, acc[1] / n, acc[2] / n))
}

/// Height of a map-frame cloud above the ground plane: max z, clamped at 0.
pub fn object_height(cloud: &PointCloud) -> Result<f64, CloudError> {
    debug_assert_eq!(cloud.frame, Frame::Map, "height is a map-frame quantity");
    if cloud.is_empty() {
        return Err(CloudError::EmptyCloud);
    }
    let max_z = cloud
        .points
        .iter()
        .map(|p| p.z)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(max_z.max(0.0))
}
