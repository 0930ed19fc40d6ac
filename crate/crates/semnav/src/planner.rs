//! A* path planning over the costmap and ground-truth collision checking
//! of the resulting trajectory against the true scene geometry.

use crate::map::{cell_probability, OccupancyGrid};
use crate::scene::SceneDescription;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no path between start and goal")]
    NoPath,
    #[error("start or goal is lethal or outside the grid")]
    StartOrGoalLethal,
}

#[derive(Debug, Clone)]
pub struct PlanRequest {
    /// Start and goal in map meters.
    pub start: [f64; 2],
    pub goal: [f64; 2],
    /// Cells at or above this value are impassable (after inflation).
    pub lethal_threshold: u8,
    /// Weight of the occupancy-probability term in the edge cost.
    pub cost_weight: f64,
    pub robot_radius: f64,
    /// UAV altitude used by collision validation, meters.
    pub flight_height: f64,
}

impl Default for PlanRequest {
    fn default() -> Self {
        Self {
            start: [0.0, 0.0],
            goal: [1.0, 1.0],
            lethal_threshold: 200,
            cost_weight: 3.0,
            robot_radius: 0.25,
            flight_height: 0.8,
        }
    }
}

/// A planned path: 8-connected cell-center waypoints and the accumulated
/// edge cost.
#[derive(Debug, Clone)]
pub struct Path {
    pub waypoints: Vec<[f64; 2]>,
    pub cells: Vec<(u32, u32)>,
    pub total_cost: f64,
}

/// Vertical half-extent of the vehicle for slab intersection tests.
pub const VEHICLE_HALF_HEIGHT: f64 = 0.10;

/// Marks every cell within `radius` of a lethal cell as lethal.
fn inflate_lethal(grid: &OccupancyGrid, lethal_threshold: u8, radius: f64) -> Vec<bool> {
    let geom = grid.geometry();
    let (w, h) = (geom.width as i64, geom.height as i64);
    let mut lethal = vec![false; geom.len()];

    let r_cells = (radius / geom.resolution).ceil() as i64;
    let mut disc = Vec::new();
    for dj in -r_cells..=r_cells {
        for di in -r_cells..=r_cells {
            let d = ((di * di + dj * dj) as f64).sqrt() * geom.resolution;
            if d <= radius {
                disc.push((di, dj));
            }
        }
    }

    for j in 0..h {
        for i in 0..w {
            if grid.values()[(j * w + i) as usize] < lethal_threshold {
                continue;
            }
            for &(di, dj) in &disc {
                let (ni, nj) = (i + di, j + dj);
                if ni >= 0 && nj >= 0 && ni < w && nj < h {
                    lethal[(nj * w + ni) as usize] = true;
                }
            }
        }
    }
    lethal
}

const NEIGHBORS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Plans an optimal 8-connected path on the costmap. Edge cost is the
/// Euclidean step length times `1 + cost_weight * p(destination)`; the
/// straight-line heuristic is admissible because that multiplier is never
/// below one. Obstacles are inflated by the robot radius plus half a cell
/// diagonal, since a surface cell's center can sit that far inside the
/// true obstacle boundary.
pub fn plan(costmap: &OccupancyGrid, request: &PlanRequest) -> Result<Path, PlanError> {
    let geom = costmap.geometry().clone();
    let quantization = geom.resolution * std::f64::consts::SQRT_2 / 2.0;
    let lethal = inflate_lethal(
        costmap,
        request.lethal_threshold,
        request.robot_radius + quantization,
    );

    let start = geom
        .world_to_cell(request.start)
        .ok_or(PlanError::StartOrGoalLethal)?;
    let goal = geom
        .world_to_cell(request.goal)
        .ok_or(PlanError::StartOrGoalLethal)?;
    if lethal[geom.index(start.0, start.1)] || lethal[geom.index(goal.0, goal.1)] {
        return Err(PlanError::StartOrGoalLethal);
    }

    let (w, h) = (geom.width as i64, geom.height as i64);
    let idx = |i: i64, j: i64| (j * w + i) as usize;
    let heuristic = |i: i64, j: i64| {
        let di = (i - goal.0 as i64) as f64;
        let dj = (j - goal.1 as i64) as f64;
        di.hypot(dj) * geom.resolution
    };

    let mut best_g = vec![f64::INFINITY; geom.len()];
    let mut parent: Vec<u32> = vec![u32::MAX; geom.len()];
    let start_idx = idx(start.0 as i64, start.1 as i64);
    best_g[start_idx] = 0.0;

    // (Reverse(f-cost bits), tie-break index) keeps the expansion order
    // deterministic
    let mut open: BinaryHeap<(Reverse<OrderedF64>, Reverse<usize>)> = BinaryHeap::new();
    open.push((
        Reverse(OrderedF64(heuristic(start.0 as i64, start.1 as i64))),
        Reverse(start_idx),
    ));

    let goal_idx = idx(goal.0 as i64, goal.1 as i64);
    while let Some((Reverse(OrderedF64(f)), Reverse(current))) = open.pop() {
        let (ci, cj) = ((current as i64) % w, (current as i64) / w);
        let g = best_g[current];
        if f > g + heuristic(ci, cj) + 1e-12 {
            continue; // stale heap entry
        }
        if current == goal_idx {
            return Ok(reconstruct(&geom, &parent, start_idx, goal_idx, g));
        }
        for (di, dj) in NEIGHBORS {
            let (ni, nj) = (ci + di, cj + dj);
            if ni < 0 || nj < 0 || ni >= w || nj >= h {
                continue;
            }
            let n_idx = idx(ni, nj);
            if lethal[n_idx] {
                continue;
            }
            let step = ((di * di + dj * dj) as f64).sqrt() * geom.resolution;
            let cost = step * (1.0 + request.cost_weight * cell_probability(costmap.values()[n_idx]));
            let cand = g + cost;
            if cand + 1e-15 < best_g[n_idx] {
                best_g[n_idx] = cand;
                parent[n_idx] = current as u32;
                open.push((Reverse(OrderedF64(cand + heuristic(ni, nj))), Reverse(n_idx)));
            }
        }
    }
    Err(PlanError::NoPath)
}

fn reconstruct(
    geom: &crate::map::GridGeometry,
    parent: &[u32],
    start_idx: usize,
    goal_idx: usize,
    total_cost: f64,
) -> Path {
    let mut cells_rev = vec![goal_idx];
    let mut cur = goal_idx;
    while cur != start_idx {
        cur = parent[cur] as usize;
        cells_rev.push(cur);
    }
    cells_rev.reverse();
    let cells: Vec<(u32, u32)> = cells_rev
        .into_iter()
        .map(|k| ((k as u32) % geom.width, (k as u32) / geom.width))
        .collect();
    let waypoints = cells.iter().map(|&(i, j)| geom.cell_center(i, j)).collect();
    Path {
        waypoints,
        cells,
        total_cost,
    }
}

#[derive(PartialEq, PartialOrd)]
struct OrderedF64(f64);

impl Eq for OrderedF64 {}

#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Outcome of sweeping the vehicle disc along a path at flight height.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionReport {
    pub collided: bool,
    /// Index of the waypoint at or just before the first colliding sample.
    pub first_collision_waypoint: Option<usize>,
    /// Offending object id; `None` for walls.
    pub offending_object: Option<u32>,
}

impl CollisionReport {
    fn clear() -> Self {
        Self {
            collided: false,
            first_collision_waypoint: None,
            offending_object: None,
        }
    }
}

/// Sweeps a disc of `robot_radius` at `flight_height` along the path
/// (sampled at half the waypoint spacing) against the true scene boxes.
/// A sample collides when the vehicle's vertical slab overlaps a box's
/// height interval and the disc reaches its footprint.
pub fn validate_path(
    path: &Path,
    scene: &SceneDescription,
    flight_height: f64,
    robot_radius: f64,
) -> CollisionReport {
    debug_assert!(flight_height > 0.0);
    let boxes = scene.all_boxes();
    let z_lo = flight_height - VEHICLE_HALF_HEIGHT;
    let z_hi = flight_height + VEHICLE_HALF_HEIGHT;

    let hit = |p: [f64; 2]| -> Option<Option<u32>> {
        for b in &boxes {
            if b.obox.z_max < z_lo || b.obox.z_min > z_hi {
                continue;
            }
            if b.obox.horizontal_distance(p) <= robot_radius {
                return Some(b.object_id);
            }
        }
        None
    };

    if path.waypoints.is_empty() {
        return CollisionReport::clear();
    }
    if path.waypoints.len() == 1 {
        return match hit(path.waypoints[0]) {
            Some(obj) => CollisionReport {
                collided: true,
                first_collision_waypoint: Some(0),
                offending_object: obj,
            },
            None => CollisionReport::clear(),
        };
    }

    let min_spacing = path
        .waypoints
        .windows(2)
        .map(|w| crate::poly::dist(w[0], w[1]))
        .fold(f64::INFINITY, f64::min);
    let step = (min_spacing / 2.0).max(1e-6);

    for (wi, seg) in path.waypoints.windows(2).enumerate() {
        let len = crate::poly::dist(seg[0], seg[1]);
        let samples = (len / step).ceil().max(1.0) as usize;
        for k in 0..=samples {
            // skip the segment start except on the very first segment
            if k == 0 && wi > 0 {
                continue;
            }
            let f = k as f64 / samples as f64;
            let p = [
                seg[0][0] + f * (seg[1][0] - seg[0][0]),
                seg[0][1] + f * (seg[1][1] - seg[0][1]),
            ];
            if let Some(obj) = hit(p) {
                return CollisionReport {
                    collided: true,
                    first_collision_waypoint: Some(wi),
                    offending_object: obj,
                };
            }
        }
    }
    CollisionReport::clear()
}
