//! The semantic layer: object footprints stamped with a Gaussian safety
//! margin, and the metric/semantic costmap composition.

use super::grid::{GridGeometry, OccupancyGrid};
use super::registry::ObjectRecord;
use super::MapError;

/// Grid aligned with the metric map carrying object-derived occupancy and
/// a single owning object id per cell. A cell's value is positive exactly
/// when it has an owner.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticLayer {
    geometry: GridGeometry,
    values: Vec<u8>,
    owners: Vec<Option<u32>>,
}

impl SemanticLayer {
    pub fn new(geometry: GridGeometry) -> Self {
        let n = geometry.len();
        Self {
            geometry,
            values: vec![0; n],
            owners: vec![None; n],
        }
    }

    pub fn from_parts(
        geometry: GridGeometry,
        values: Vec<u8>,
        owners: Vec<Option<u32>>,
    ) -> Result<Self, MapError> {
        if values.len() != geometry.len() || owners.len() != geometry.len() {
            return Err(MapError::Format(
                "semantic payload does not match grid geometry".into(),
            ));
        }
        for (v, o) in values.iter().zip(owners.iter()) {
            if (*v > 0) != o.is_some() {
                return Err(MapError::Format(
                    "semantic cell value/owner invariant violated".into(),
                ));
            }
        }
        Ok(Self {
            geometry,
            values,
            owners,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn owners(&self) -> &[Option<u32>] {
        &self.owners
    }

    pub fn value_at(&self, i: u32, j: u32) -> u8 {
        self.values[self.geometry.index(i, j)]
    }

    pub fn owner_at(&self, i: u32, j: u32) -> Option<u32> {
        self.owners[self.geometry.index(i, j)]
    }
}

/// Stamps a registered object's footprint: cells whose centers fall inside
/// the polygon go to 255; cells within 3 sigma outside take the Gaussian
/// tail `round(255 * exp(-d^2 / 2 sigma^2))` where d is the distance to the
/// polygon. Existing higher values win, and the owner id is recorded
/// wherever the value increased. Re-stamping an unchanged record is a
/// no-op.
pub fn stamp_semantic_footprint(
    layer: &mut SemanticLayer,
    record: &ObjectRecord,
    sigma: f64,
) -> Result<(), MapError> {
    let geom = layer.geometry.clone();
    let (min, max) = record.footprint.bounding_box();
    let margin = 3.0 * sigma.max(0.0);

    let world_min = [min[0] - margin, min[1] - margin];
    let world_max = [max[0] + margin, max[1] + margin];
    let grid_max = [
        geom.origin[0] + geom.width as f64 * geom.resolution,
        geom.origin[1] + geom.height as f64 * geom.resolution,
    ];
    if world_max[0] < geom.origin[0]
        || world_max[1] < geom.origin[1]
        || world_min[0] > grid_max[0]
        || world_min[1] > grid_max[1]
    {
        return Err(MapError::FootprintOutsideGrid);
    }

    let cell_range = |lo: f64, hi: f64, origin: f64, count: u32| {
        let a = (((lo - origin) / geom.resolution).floor().max(0.0)) as u32;
        let b = (((hi - origin) / geom.resolution).ceil()).min(count as f64 - 1.0);
        (a, b.max(0.0) as u32)
    };
    let (i0, i1) = cell_range(world_min[0], world_max[0], geom.origin[0], geom.width);
    let (j0, j1) = cell_range(world_min[1], world_max[1], geom.origin[1], geom.height);

    for j in j0..=j1 {
        for i in i0..=i1 {
            let center = geom.cell_center(i, j);
            let candidate = if record.footprint.contains(center, 1e-9) {
                255u8
            } else if sigma > 0.0 {
                let d = record.footprint.distance_to_boundary(center);
                if d > margin {
                    continue;
                }
                (255.0 * (-d * d / (2.0 * sigma * sigma)).exp()).round() as u8
            } else {
                continue;
            };
            let idx = geom.index(i, j);
            if candidate > layer.values[idx] {
                layer.values[idx] = candidate;
                layer.owners[idx] = Some(record.id);
            }
        }
    }
    Ok(())
}

/// Per-cell max of the metric grid and the semantic layer. The result's
/// log-odds are rebuilt from the composed values.
pub fn compose_costmap(
    metric: &OccupancyGrid,
    semantic: &SemanticLayer,
) -> Result<OccupancyGrid, MapError> {
    if metric.geometry() != semantic.geometry() {
        return Err(MapError::GeometryMismatch);
    }
    let values: Vec<u8> = metric
        .values()
        .iter()
        .zip(semantic.values().iter())
        .map(|(m, s)| (*m).max(*s))
        .collect();
    OccupancyGrid::from_values(metric.geometry().clone(), *metric.params(), values)
}
