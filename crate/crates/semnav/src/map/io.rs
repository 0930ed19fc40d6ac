//! Map persistence: binary PGM (P5) rasters with JSON sidecars, plus the
//! registry JSON. All formats carry `"schema": 1`.
//!
//! PGM rows are written north-up: the top image row is the grid's highest
//! y row. Sidecars record resolution and origin; the semantic sidecar also
//! carries the sparse cell-owner table.

use super::grid::{GridGeometry, LogOddsParams, OccupancyGrid};
use super::registry::{ObjectRecord, ObjectRegistry, DEFAULT_MERGE_RADIUS};
use super::semantic::SemanticLayer;
use super::MapError;
use crate::poly::Polygon;
use crate::scene::ObjectClass;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const MAP_SCHEMA_VERSION: u32 = 1;
pub const REGISTRY_SCHEMA_VERSION: u32 = 1;

pub fn write_pgm(path: &Path, geom: &GridGeometry, values: &[u8]) -> Result<(), MapError> {
    debug_assert_eq!(values.len(), geom.len());
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(file, "P5\n{} {}\n255\n", geom.width, geom.height)?;
    for j in (0..geom.height).rev() {
        let start = geom.index(0, j);
        file.write_all(&values[start..start + geom.width as usize])?;
    }
    file.flush()?;
    Ok(())
}

/// Reads a P5 PGM with maxval 255; returns (width, height, row-major cells
/// with row 0 at the grid's south edge).
pub fn read_pgm(path: &Path) -> Result<(u32, u32, Vec<u8>), MapError> {
    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;
    let mut cursor = 0usize;

    let mut token = |raw: &[u8]| -> Result<String, MapError> {
        while cursor < raw.len() && raw[cursor].is_ascii_whitespace() {
            cursor += 1;
        }
        if cursor < raw.len() && raw[cursor] == b'#' {
            while cursor < raw.len() && raw[cursor] != b'\n' {
                cursor += 1;
            }
            while cursor < raw.len() && raw[cursor].is_ascii_whitespace() {
                cursor += 1;
            }
        }
        let start = cursor;
        while cursor < raw.len() && !raw[cursor].is_ascii_whitespace() {
            cursor += 1;
        }
        if start == cursor {
            return Err(MapError::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&raw[start..cursor]).into_owned())
    };

    let magic = token(&raw)?;
    if magic != "P5" {
        return Err(MapError::Format(format!(
            "bad PGM magic {magic:?} (expected P5)"
        )));
    }
    let width: u32 = token(&raw)?
        .parse()
        .map_err(|_| MapError::Format("bad PGM width".into()))?;
    let height: u32 = token(&raw)?
        .parse()
        .map_err(|_| MapError::Format("bad PGM height".into()))?;
    let maxval: u32 = token(&raw)?
        .parse()
        .map_err(|_| MapError::Format("bad PGM maxval".into()))?;
    if maxval != 255 {
        return Err(MapError::Format(format!(
            "unsupported PGM maxval {maxval} (expected 255)"
        )));
    }
    cursor += 1; // single whitespace after maxval

    let n = width as usize * height as usize;
    if raw.len() < cursor + n {
        return Err(MapError::Format("PGM payload shorter than header".into()));
    }
    let rows = &raw[cursor..cursor + n];
    // undo the north-up flip
    let mut values = vec![0u8; n];
    for img_row in 0..height as usize {
        let j = height as usize - 1 - img_row;
        values[j * width as usize..(j + 1) * width as usize]
            .copy_from_slice(&rows[img_row * width as usize..(img_row + 1) * width as usize]);
    }
    Ok((width, height, values))
}

#[derive(Debug, Serialize, Deserialize)]
struct MapSidecar {
    schema: u32,
    resolution: f64,
    origin: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    owners: Vec<(u64, u32)>,
}

fn check_schema(found: u32, expected: u32) -> Result<(), MapError> {
    if found != expected {
        return Err(MapError::SchemaVersion { found, expected });
    }
    Ok(())
}

fn write_sidecar(path: &Path, sidecar: &MapSidecar) -> Result<(), MapError> {
    Ok(std::fs::write(path, serde_json::to_string_pretty(sidecar)?)?)
}

/// Writes a plain geometry sidecar (no owner table) for a raster.
pub fn write_map_sidecar(path: &Path, geom: &GridGeometry) -> Result<(), MapError> {
    write_sidecar(
        path,
        &MapSidecar {
            schema: MAP_SCHEMA_VERSION,
            resolution: geom.resolution,
            origin: geom.origin,
            owners: vec![],
        },
    )
}

/// Reads a raster + sidecar pair into an occupancy grid (default log-odds
/// parameters; used by map rendering and external tooling).
pub fn load_grid(pgm: &Path) -> Result<OccupancyGrid, MapError> {
    let (w, h, values) = read_pgm(pgm)?;
    let sidecar = read_sidecar(&pgm.with_extension("json"))?;
    let geom = GridGeometry {
        resolution: sidecar.resolution,
        origin: sidecar.origin,
        width: w,
        height: h,
    };
    OccupancyGrid::from_values(geom, LogOddsParams::default(), values)
}

fn read_sidecar(path: &Path) -> Result<MapSidecar, MapError> {
    let sidecar: MapSidecar = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    check_schema(sidecar.schema, MAP_SCHEMA_VERSION)?;
    Ok(sidecar)
}

#[derive(Debug, Serialize, Deserialize)]
struct RegistryFile {
    schema: u32,
    objects: Vec<RecordDto>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordDto {
    id: u32,
    class: ObjectClass,
    x: f64,
    y: f64,
    height: f64,
    footprint: Vec<[f64; 2]>,
    count: u32,
    confidence: f64,
}

pub fn registry_to_json(registry: &ObjectRegistry) -> String {
    let file = RegistryFile {
        schema: REGISTRY_SCHEMA_VERSION,
        objects: registry
            .records()
            .iter()
            .map(|r| RecordDto {
                id: r.id,
                class: r.class,
                x: r.position[0],
                y: r.position[1],
                height: r.height,
                footprint: r.footprint.vertices().to_vec(),
                count: r.observation_count,
                confidence: r.confidence,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("registry serializes")
}

pub fn registry_from_json(text: &str) -> Result<ObjectRegistry, MapError> {
    let file: RegistryFile = serde_json::from_str(text)?;
    check_schema(file.schema, REGISTRY_SCHEMA_VERSION)?;
    let records = file
        .objects
        .into_iter()
        .map(|dto| ObjectRecord {
            id: dto.id,
            class: dto.class,
            position: [dto.x, dto.y],
            height: dto.height,
            footprint: Polygon::from_ccw_vertices(dto.footprint),
            observation_count: dto.count,
            confidence: dto.confidence,
        })
        .collect();
    Ok(ObjectRegistry::from_records(records, DEFAULT_MERGE_RADIUS))
}

/// Writes `metric.pgm/.json`, `semantic.pgm/.json` and `registry.json`
/// into the directory.
pub fn save_map(
    dir: &Path,
    metric: &OccupancyGrid,
    semantic: &SemanticLayer,
    registry: &ObjectRegistry,
) -> Result<(), MapError> {
    std::fs::create_dir_all(dir)?;
    let geom = metric.geometry();
    write_pgm(&dir.join("metric.pgm"), geom, metric.values())?;
    write_map_sidecar(&dir.join("metric.json"), geom)?;

    let sgeom = semantic.geometry();
    write_pgm(&dir.join("semantic.pgm"), sgeom, semantic.values())?;
    let owners: Vec<(u64, u32)> = semantic
        .owners()
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.map(|id| (i as u64, id)))
        .collect();
    write_sidecar(
        &dir.join("semantic.json"),
        &MapSidecar {
            schema: MAP_SCHEMA_VERSION,
            resolution: sgeom.resolution,
            origin: sgeom.origin,
            owners,
        },
    )?;

    std::fs::write(dir.join("registry.json"), registry_to_json(registry))?;
    Ok(())
}

/// Loads what [`save_map`] wrote. The metric grid's log-odds are rebuilt
/// from the quantized cells with default update parameters.
pub fn load_map(dir: &Path) -> Result<(OccupancyGrid, SemanticLayer, ObjectRegistry), MapError> {
    let (w, h, values) = read_pgm(&dir.join("metric.pgm"))?;
    let sidecar = read_sidecar(&dir.join("metric.json"))?;
    let geom = GridGeometry {
        resolution: sidecar.resolution,
        origin: sidecar.origin,
        width: w,
        height: h,
    };
    let metric = OccupancyGrid::from_values(geom, LogOddsParams::default(), values)?;

    let (sw, sh, svalues) = read_pgm(&dir.join("semantic.pgm"))?;
    let ssidecar = read_sidecar(&dir.join("semantic.json"))?;
    let sgeom = GridGeometry {
        resolution: ssidecar.resolution,
        origin: ssidecar.origin,
        width: sw,
        height: sh,
    };
    let mut owners = vec![None; sgeom.len()];
    for (idx, id) in ssidecar.owners {
        let idx = idx as usize;
        if idx >= owners.len() {
            return Err(MapError::Format(format!(
                "owner index {idx} outside the grid"
            )));
        }
        owners[idx] = Some(id);
    }
    let semantic = SemanticLayer::from_parts(sgeom, svalues, owners)?;

    let registry = registry_from_json(&std::fs::read_to_string(dir.join("registry.json"))?)?;
    Ok((metric, semantic, registry))
}
