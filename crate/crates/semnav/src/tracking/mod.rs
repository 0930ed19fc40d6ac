//! Multi-object tracking over oracle detections: constant-velocity Kalman
//! filters associated frame-to-frame by class-gated IoU with an optimal
//! assignment step.

mod assignment;
mod kalman;

pub use assignment::{associate, iou, Association};
pub use kalman::{
    kf_predict, kf_update, KfUpdate, Measurement, MeasurementNoise, ProcessNoise, TrackState,
    MIN_BOX_SIZE,
};

use crate::geometry::BoundingBox;
use crate::scene::{Detection, ObjectClass};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

/// Snapshot of a confirmed track emitted to the mapping stages.
#[derive(Debug, Clone)]
pub struct Track {
    pub track_id: u64,
    pub class: ObjectClass,
    pub bbox: BoundingBox,
    pub status: TrackStatus,
    pub hits: u32,
    /// Confidence of the detection matched this frame.
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TrackerParams {
    pub iou_min: f64,
    /// Consecutive hits required before a track is confirmed.
    pub n_init: u32,
    /// Consecutive misses after which a confirmed track is deleted.
    pub max_age: u32,
    pub process_noise: ProcessNoise,
    pub measurement_noise: MeasurementNoise,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            iou_min: 0.3,
            n_init: 3,
            max_age: 5,
            process_noise: ProcessNoise::default(),
            measurement_noise: MeasurementNoise::default(),
        }
    }
}

struct TrackEntry {
    id: u64,
    class: ObjectClass,
    state: TrackState,
    status: TrackStatus,
    hits: u32,
    consecutive_hits: u32,
    misses: u32,
    last_confidence: f64,
}

/// Tracker state owned by one pipeline worker; steps are strictly
/// sequential per run. Track ids are never reused.
pub struct Tracker {
    params: TrackerParams,
    tracks: Vec<TrackEntry>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
        }
    }

    /// Number of live (tentative or confirmed) tracks.
    pub fn live_tracks(&self) -> usize {
        self.tracks.len()
    }

    /// Predict, associate, update, manage lifecycles; returns the confirmed
    /// tracks that were matched this frame. Frame indices must be strictly
    /// increasing.
    pub fn step(&mut self, detections: &[Detection], frame: u64) -> Vec<Track> {
        let dt = match self.last_frame {
            None => 1,
            Some(last) => {
                assert!(frame > last, "frame indices must be strictly increasing");
                frame - last
            }
        };
        self.last_frame = Some(frame);
        let mut emitted: Vec<u64> = Vec::new();

        for t in &mut self.tracks {
            t.state = kf_predict(&t.state, dt, &self.params.process_noise);
        }

        let track_boxes: Vec<(ObjectClass, BoundingBox)> = self
            .tracks
            .iter()
            .map(|t| (t.class, state_bbox(&t.state)))
            .collect();
        let det_boxes: Vec<(ObjectClass, BoundingBox)> =
            detections.iter().map(|d| (d.class, d.bbox)).collect();
        let assoc = associate(&track_boxes, &det_boxes, self.params.iou_min);

        for &(ti, di) in &assoc.matches {
            let det = &detections[di];
            let z = Measurement {
                x: det.bbox.cx,
                y: det.bbox.cy,
                w: det.bbox.w,
                h: det.bbox.h,
            };
            let t = &mut self.tracks[ti];
            t.state = kf_update(&t.state, &z, &self.params.measurement_noise).state;
            t.hits += 1;
            t.consecutive_hits += 1;
            t.misses = 0;
            t.last_confidence = det.confidence;
            if t.status == TrackStatus::Tentative && t.consecutive_hits >= self.params.n_init {
                t.status = TrackStatus::Confirmed;
            }
            if t.status == TrackStatus::Confirmed {
                emitted.push(t.id);
            }
        }

        for &ti in &assoc.unmatched_tracks {
            let t = &mut self.tracks[ti];
            t.misses += 1;
            t.consecutive_hits = 0;
            match t.status {
                // a tentative track must hit every frame until confirmation
                TrackStatus::Tentative => t.status = TrackStatus::Deleted,
                TrackStatus::Confirmed if t.misses >= self.params.max_age => {
                    t.status = TrackStatus::Deleted
                }
                _ => {}
            }
        }

        for &di in &assoc.unmatched_detections {
            let det = &detections[di];
            let z = Measurement {
                x: det.bbox.cx,
                y: det.bbox.cy,
                w: det.bbox.w,
                h: det.bbox.h,
            };
            let status = if self.params.n_init <= 1 {
                TrackStatus::Confirmed
            } else {
                TrackStatus::Tentative
            };
            if status == TrackStatus::Confirmed {
                emitted.push(self.next_id);
            }
            self.tracks.push(TrackEntry {
                id: self.next_id,
                class: det.class,
                state: TrackState::from_measurement(&z, &self.params.process_noise),
                status,
                hits: 1,
                consecutive_hits: 1,
                misses: 0,
                last_confidence: det.confidence,
            });
            self.next_id += 1;
        }

        // Only confirmed tracks with a fresh measurement feed the mapping
        // stage; a coasting track's predicted box no longer lines up with
        // the current depth image.
        let out = self
            .tracks
            .iter()
            .filter(|t| emitted.contains(&t.id))
            .map(|t| Track {
                track_id: t.id,
                class: t.class,
                bbox: state_bbox(&t.state),
                status: t.status,
                hits: t.hits,
                confidence: t.last_confidence,
            })
            .collect();

        self.tracks.retain(|t| t.status != TrackStatus::Deleted);
        out
    }
}

fn state_bbox(state: &TrackState) -> BoundingBox {
    let b = state.bbox();
    BoundingBox::new(b.x, b.y, b.w.max(MIN_BOX_SIZE), b.h.max(MIN_BOX_SIZE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn det(class: ObjectClass, cx: f64, cy: f64, w: f64, h: f64) -> Detection {
        Detection {
            bbox: BoundingBox::new(cx, cy, w, h),
            class,
            confidence: 0.9,
        }
    }

    #[test]
    fn first_detection_spawns_tentative_track() {
        let mut tracker = Tracker::new(TrackerParams::default());
        let out = tracker.step(&[det(ObjectClass::Chair, 100.0, 100.0, 40.0, 40.0)], 0);
        assert!(out.is_empty(), "tentative tracks are not emitted");
        assert_eq!(tracker.live_tracks(), 1);
    }

    #[test]
    fn confirmation_after_n_init_consecutive_hits() {
        let mut tracker = Tracker::new(TrackerParams::default());
        for frame in 0..2 {
            let out = tracker.step(&[det(ObjectClass::Chair, 100.0, 100.0, 40.0, 40.0)], frame);
            assert!(out.is_empty(), "frame {frame}");
        }
        let out = tracker.step(&[det(ObjectClass::Chair, 100.0, 100.0, 40.0, 40.0)], 2);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].track_id, 1);
        assert_eq!(out[0].status, TrackStatus::Confirmed);
    }

    #[test]
    fn confirmed_track_deleted_after_max_age_misses() {
        let params = TrackerParams::default();
        let mut tracker = Tracker::new(params);
        for frame in 0..3 {
            tracker.step(&[det(ObjectClass::Chair, 100.0, 100.0, 40.0, 40.0)], frame);
        }
        assert_eq!(tracker.live_tracks(), 1);
        for frame in 3..(3 + params.max_age as u64) {
            tracker.step(&[], frame);
        }
        assert_eq!(tracker.live_tracks(), 0, "track retired after max_age");

        // a new detection now gets a fresh id, never a reused one
        for frame in 20..23 {
            let out = tracker.step(&[det(ObjectClass::Chair, 100.0, 100.0, 40.0, 40.0)], frame);
            if frame == 22 {
                assert_eq!(out[0].track_id, 2);
            }
        }
    }

    #[test]
    fn tentative_track_dies_on_first_miss() {
        let mut tracker = Tracker::new(TrackerParams::default());
        tracker.step(&[det(ObjectClass::Chair, 100.0, 100.0, 40.0, 40.0)], 0);
        tracker.step(&[], 1);
        assert_eq!(tracker.live_tracks(), 0);
    }

    #[test]
    fn noisy_constant_velocity_object_keeps_one_id_over_50_frames() {
        let mut tracker = Tracker::new(TrackerParams::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        let noise = Normal::new(0.0, 2.0).unwrap();
        let mut ids = std::collections::HashSet::new();
        for frame in 0..50u64 {
            let cx = 60.0 + 4.0 * frame as f64 + noise.sample(&mut rng);
            let cy = 120.0 + 1.5 * frame as f64 + noise.sample(&mut rng);
            let w = 40.0 + noise.sample(&mut rng);
            let h = 40.0 + noise.sample(&mut rng);
            for t in tracker.step(&[det(ObjectClass::Desk, cx, cy, w, h)], frame) {
                ids.insert(t.track_id);
            }
        }
        assert_eq!(ids.len(), 1, "expected exactly one confirmed id, got {ids:?}");
    }

    #[test]
    fn two_objects_keep_distinct_ids() {
        let mut tracker = Tracker::new(TrackerParams::default());
        let mut seen: std::collections::HashMap<u64, ObjectClass> = Default::default();
        for frame in 0..10u64 {
            let dets = [
                det(ObjectClass::Chair, 100.0 + frame as f64, 100.0, 40.0, 40.0),
                det(ObjectClass::Desk, 400.0 - frame as f64, 200.0, 60.0, 50.0),
            ];
            for t in tracker.step(&dets, frame) {
                seen.insert(t.track_id, t.class);
            }
        }
        assert_eq!(seen.len(), 2);
        assert!(seen.values().any(|c| *c == ObjectClass::Chair));
        assert!(seen.values().any(|c| *c == ObjectClass::Desk));
    }
}
