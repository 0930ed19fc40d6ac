//! The map state: log-odds metric occupancy grid, object registry, the
//! semantic footprint layer and the composed 0-255 costmap, plus their
//! on-disk formats.
//!
//! The three pieces form one mutable map with a single-writer contract;
//! all types are `Clone` so read-only snapshots can be taken freely.

mod grid;
mod io;
mod registry;
mod semantic;

pub use grid::{
    bresenham, cell_probability, depth_to_scan, integrate_scan, GridGeometry, LogOddsParams,
    OccupancyGrid, Scan2D,
};
pub use io::{
    load_grid, load_map, read_pgm, registry_from_json, registry_to_json, save_map,
    write_map_sidecar, write_pgm, MAP_SCHEMA_VERSION, REGISTRY_SCHEMA_VERSION,
};
pub use registry::{ObjectRecord, ObjectRegistry, Observation, DEFAULT_MERGE_RADIUS};
pub use semantic::{compose_costmap, stamp_semantic_footprint, SemanticLayer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("robot pose falls outside the grid")]
    PoseOutsideGrid,
    #[error("footprint does not intersect the grid")]
    FootprintOutsideGrid,
    #[error("grid geometries do not match")]
    GeometryMismatch,
    #[error("map format error: {0}")]
    Format(String),
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("map io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("map json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Default Gaussian safety margin around stamped footprints, meters.
pub const DEFAULT_DECAY_SIGMA: f64 = 0.15;
