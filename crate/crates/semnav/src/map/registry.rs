//! Object registry: spatial data association of per-frame observations
//! into persistent object records.

use crate::poly::{dist, hull_of_union, Polygon};
use crate::scene::ObjectClass;

/// A registered object on the map.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRecord {
    pub id: u32,
    pub class: ObjectClass,
    /// Map position, meters (the projected object position with z dropped).
    pub position: [f64; 2],
    /// Top height above the ground plane, meters.
    pub height: f64,
    pub footprint: Polygon,
    pub observation_count: u32,
    /// Mean observation confidence; stored directly so serialization
    /// round-trips bit-exactly.
    pub confidence: f64,
}

/// One frame's worth of evidence for an object.
#[derive(Debug, Clone)]
pub struct Observation {
    pub class: ObjectClass,
    pub position: [f64; 2],
    pub height: f64,
    pub footprint: Polygon,
    pub confidence: f64,
}

pub const DEFAULT_MERGE_RADIUS: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ObjectRegistry {
    records: Vec<ObjectRecord>,
    next_id: u32,
    merge_radius: f64,
}

impl Default for ObjectRegistry {
    fn default() -> Self {
        Self::new(DEFAULT_MERGE_RADIUS)
    }
}

impl ObjectRegistry {
    pub fn new(merge_radius: f64) -> Self {
        Self {
            records: Vec::new(),
            next_id: 1,
            merge_radius,
        }
    }

    pub fn from_records(records: Vec<ObjectRecord>, merge_radius: f64) -> Self {
        let next_id = records.iter().map(|r| r.id).max().unwrap_or(0) + 1;
        Self {
            records,
            next_id,
            merge_radius,
        }
    }

    pub fn records(&self) -> &[ObjectRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&ObjectRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Drops records that never accumulated enough observations.
    pub fn prune_below(&mut self, min_observations: u32) {
        self.records
            .retain(|r| r.observation_count >= min_observations);
    }

    /// Folds an observation into the nearest same-class record within the
    /// merge radius (confidence-weighted running means for position and
    /// height, hull-of-union for the footprint), or opens a fresh record.
    /// Returns the record id.
    pub fn register(&mut self, obs: Observation) -> u32 {
        debug_assert!(!obs.footprint.is_empty());
        let nearest = self
            .records
            .iter_mut()
            .filter(|r| r.class == obs.class)
            .map(|r| (dist(r.position, obs.position), r))
            .filter(|(d, _)| *d <= self.merge_radius)
            .min_by(|(a, _), (b, _)| a.total_cmp(b));

        if let Some((_, rec)) = nearest {
            let w_old = rec.confidence * rec.observation_count as f64;
            let w_new = obs.confidence.max(f64::MIN_POSITIVE);
            let w_total = w_old + w_new;
            rec.position = [
                (rec.position[0] * w_old + obs.position[0] * w_new) / w_total,
                (rec.position[1] * w_old + obs.position[1] * w_new) / w_total,
            ];
            rec.height = (rec.height * w_old + obs.height * w_new) / w_total;
            rec.footprint = hull_of_union(&rec.footprint, &obs.footprint);
            rec.observation_count += 1;
            rec.confidence = w_total / rec.observation_count as f64;
            return rec.id;
        }

        let id = self.next_id;
        self.next_id += 1;
        self.records.push(ObjectRecord {
            id,
            class: obs.class,
            position: obs.position,
            height: obs.height,
            footprint: obs.footprint,
            observation_count: 1,
            confidence: obs.confidence.max(f64::MIN_POSITIVE),
        });
        id
    }
}
