//! Log-odds occupancy grid fed by 2D scans derived from the depth image.

use super::MapError;
use crate::geometry::{back_project, CameraModel, RobotPose2D};
use crate::scene::DepthImage;

/// Grid placement shared by the metric grid, semantic layer and costmap.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    /// Meters per cell.
    pub resolution: f64,
    /// Map-frame coordinates of the lower-left corner of cell (0, 0).
    pub origin: [f64; 2],
    pub width: u32,
    pub height: u32,
}

impl GridGeometry {
    /// Grid covering `[min, max]` at the given resolution.
    pub fn covering(min: [f64; 2], max: [f64; 2], resolution: f64) -> Self {
        debug_assert!(resolution > 0.0 && max[0] > min[0] && max[1] > min[1]);
        Self {
            resolution,
            origin: min,
            width: ((max[0] - min[0]) / resolution).ceil() as u32,
            height: ((max[1] - min[1]) / resolution).ceil() as u32,
        }
    }

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: u32, j: u32) -> usize {
        debug_assert!(i < self.width && j < self.height);
        (j * self.width + i) as usize
    }

    /// Cell containing a map point, or `None` outside the grid.
    pub fn world_to_cell(&self, p: [f64; 2]) -> Option<(u32, u32)> {
        let i = ((p[0] - self.origin[0]) / self.resolution).floor();
        let j = ((p[1] - self.origin[1]) / self.resolution).floor();
        if i < 0.0 || j < 0.0 || i >= self.width as f64 || j >= self.height as f64 {
            return None;
        }
        Some((i as u32, j as u32))
    }

    pub fn cell_center(&self, i: u32, j: u32) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.resolution,
            self.origin[1] + (j as f64 + 0.5) * self.resolution,
        ]
    }
}

/// Log-odds update parameters. The clamp is sized so a saturated cell maps
/// exactly to 0 or 255 through `round(255 * sigmoid(l))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogOddsParams {
    pub l_occ: f64,
    pub l_free: f64,
    pub l_clamp: f64,
}

impl Default for LogOddsParams {
    fn default() -> Self {
        Self {
            l_occ: 0.85,
            l_free: -0.4,
            l_clamp: 6.5,
        }
    }
}

#[inline]
fn sigmoid(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

#[inline]
fn value_of(log_odds: f64) -> u8 {
    (255.0 * sigmoid(log_odds)).round() as u8
}

/// Inverse of the value mapping, clamped; used when a grid is rebuilt from
/// its quantized cells.
pub(super) fn log_odds_of_value(value: u8, clamp: f64) -> f64 {
    let p = value as f64 / 255.0;
    if p <= 0.0 {
        return -clamp;
    }
    if p >= 1.0 {
        return clamp;
    }
    (p / (1.0 - p)).ln().clamp(-clamp, clamp)
}

/// Occupancy grid with 0-255 cell values backed by a clamped log-odds
/// array; the prior (log-odds 0) renders as 128.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    geometry: GridGeometry,
    params: LogOddsParams,
    log_odds: Vec<f64>,
    values: Vec<u8>,
}

impl OccupancyGrid {
    pub fn new(geometry: GridGeometry, params: LogOddsParams) -> Self {
        let n = geometry.len();
        Self {
            geometry,
            params,
            log_odds: vec![0.0; n],
            values: vec![value_of(0.0); n],
        }
    }

    /// Rebuilds a grid from stored cell values (log-odds recovered through
    /// the inverse value mapping).
    pub fn from_values(
        geometry: GridGeometry,
        params: LogOddsParams,
        values: Vec<u8>,
    ) -> Result<Self, MapError> {
        if values.len() != geometry.len() {
            return Err(MapError::Format(format!(
                "cell payload holds {} values for a {}x{} grid",
                values.len(),
                geometry.width,
                geometry.height
            )));
        }
        let log_odds = values
            .iter()
            .map(|&v| log_odds_of_value(v, params.l_clamp))
            .collect();
        Ok(Self {
            geometry,
            params,
            log_odds,
            values,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn params(&self) -> &LogOddsParams {
        &self.params
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn value_at(&self, i: u32, j: u32) -> u8 {
        self.values[self.geometry.index(i, j)]
    }

    pub fn log_odds_at(&self, i: u32, j: u32) -> f64 {
        self.log_odds[self.geometry.index(i, j)]
    }

    #[inline]
    fn bump(&mut self, idx: usize, delta: f64) {
        let l = (self.log_odds[idx] + delta).clamp(-self.params.l_clamp, self.params.l_clamp);
        self.log_odds[idx] = l;
        self.values[idx] = value_of(l);
    }
}

/// Linear probability reading of a cell value: 0 -> 0.0, 255 -> 1.0.
#[inline]
pub fn cell_probability(value: u8) -> f64 {
    value as f64 / 255.0
}

/// A 2D scan: one bearing (radians, robot frame, CCW positive) and range
/// per image column. `None` marks no return; free space is still cleared
/// out to `max_range` along such beams.
#[derive(Debug, Clone)]
pub struct Scan2D {
    pub bearings: Vec<f64>,
    pub ranges: Vec<Option<f64>>,
    pub max_range: f64,
}

/// Collapses a depth image into a planar scan: per column, the minimum
/// planar range over the rows within `band_half_height` pixels of the
/// principal row. Bearings come from the column rays.
pub fn depth_to_scan(depth: &DepthImage, cam: &CameraModel, band_half_height: u32) -> Scan2D {
    let b = band_half_height as f64;
    let v0 = (cam.cy - b).ceil().max(0.0) as u32;
    let v1 = (cam.cy + b).floor().min(cam.height as f64 - 1.0) as u32;

    let mut bearings = Vec::with_capacity(cam.width as usize);
    let mut ranges = Vec::with_capacity(cam.width as usize);
    for u in 0..cam.width {
        // camera x right maps to robot -y, so positive pixel offset turns
        // the bearing clockwise
        bearings.push((-(u as f64 - cam.cx)).atan2(cam.fx));
        let mut best: Option<f64> = None;
        for v in v0..=v1 {
            if let Some(d) = depth.get(u, v) {
                if let Ok(p) = back_project((u as f64, v as f64), d, cam) {
                    let planar = p.x.hypot(p.z);
                    best = Some(best.map_or(planar, |r: f64| r.min(planar)));
                }
            }
        }
        ranges.push(best);
    }
    Scan2D {
        bearings,
        ranges,
        max_range: cam.depth_max,
    }
}

/// Integrates one scan from the given pose: traversed cells get `l_free`,
/// the endpoint cell of a returning beam gets `l_occ`, and no-return beams
/// clear free space out to `max_range`.
pub fn integrate_scan(
    grid: &mut OccupancyGrid,
    pose: &RobotPose2D,
    scan: &Scan2D,
) -> Result<(), MapError> {
    let Some(origin_cell) = grid.geometry.world_to_cell([pose.x, pose.y]) else {
        return Err(MapError::PoseOutsideGrid);
    };
    debug_assert_eq!(scan.bearings.len(), scan.ranges.len());

    for (bearing, range) in scan.bearings.iter().zip(scan.ranges.iter()) {
        let (r, is_hit) = match range {
            Some(r) => (*r, true),
            None => (scan.max_range, false),
        };
        let angle = pose.theta + bearing;
        let end = [pose.x + r * angle.cos(), pose.y + r * angle.sin()];
        let end_cell_raw = [
            ((end[0] - grid.geometry.origin[0]) / grid.geometry.resolution).floor() as i64,
            ((end[1] - grid.geometry.origin[1]) / grid.geometry.resolution).floor() as i64,
        ];

        let cells = bresenham(
            (origin_cell.0 as i64, origin_cell.1 as i64),
            (end_cell_raw[0], end_cell_raw[1]),
        );
        let last = cells.len() - 1;
        for (k, (ci, cj)) in cells.into_iter().enumerate() {
            if ci < 0 || cj < 0 || ci >= grid.geometry.width as i64 || cj >= grid.geometry.height as i64
            {
                break; // the grid is convex; once out, the ray stays out
            }
            let idx = grid.geometry.index(ci as u32, cj as u32);
            if k == last && is_hit {
                grid.bump(idx, grid.params.l_occ);
            } else {
                grid.bump(idx, grid.params.l_free);
            }
        }
    }
    Ok(())
}

/// All integer cells on the line from `a` to `b`, inclusive.
pub fn bresenham(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push((x, y));
        if x == b.0 && y == b.1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}
