//! Ground-truth detection oracle: a pluggable stand-in for a learned
//! detector, with visibility decided by depth-buffer comparison so that
//! occlusion is honored.

use super::render::{render_boxes, render_boxes_rect};
use super::{ObjectClass, SceneDescription};
use crate::geometry::{apply_transform, project_point, BoundingBox, CameraModel, Point3, RigidTransform3};

/// One detected object in image space.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub class: ObjectClass,
    /// Fraction of the object's unoccluded projection that is actually the
    /// nearest visible surface.
    pub confidence: f64,
}

const VISIBILITY_DEPTH_TOL: f32 = 1e-4;

/// Emits a detection for every object whose visible projection covers at
/// least `min_pixels` pixels. The bounding box is the image-clipped pixel
/// extent of the object's visible surface (a detector boxes the evidence
/// it can see, and a box spanning occluded extents would hand the
/// downstream ROI the occluder's depth pixels); confidence is the visible
/// fraction of the unoccluded projection. The `_seed` parameter is
/// reserved for detector noise models; the oracle itself is exact.
pub fn oracle_detect(
    scene: &SceneDescription,
    camera_pose: &RigidTransform3,
    cam: &CameraModel,
    min_pixels: usize,
    _seed: u64,
) -> Vec<Detection> {
    let all_boxes = scene.all_boxes();
    let full = render_boxes(&all_boxes, camera_pose, cam, 0.0, 0);
    let cam_from_world = camera_pose.inverse();

    let mut detections = Vec::new();
    for obj in &scene.objects {
        let obj_boxes: Vec<_> = all_boxes
            .iter()
            .filter(|b| b.object_id == Some(obj.id))
            .copied()
            .collect();
        let Some(rect) = projection_rect(&obj_boxes, &cam_from_world, cam) else {
            continue;
        };
        let own = render_boxes_rect(&obj_boxes, camera_pose, cam, rect);

        let (u0, v0, u1, v1) = rect;
        let rw = (u1 - u0 + 1) as usize;
        let rh = (v1 - v0 + 1) as usize;
        let mut occupied = 0usize;
        let mut visible_mask = vec![false; rw * rh];
        for v in v0..=v1 {
            for u in u0..=u1 {
                let d_own = own.at(u, v);
                if d_own <= 0.0 {
                    continue;
                }
                occupied += 1;
                let d_full = full.at(u, v);
                if d_full > 0.0 && (d_own - d_full).abs() <= VISIBILITY_DEPTH_TOL {
                    visible_mask[(v - v0) as usize * rw + (u - u0) as usize] = true;
                }
            }
        }
        let visible = visible_mask.iter().filter(|m| **m).count();
        // box the largest connected visible fragment: an object split by an
        // occluder must not produce a box spanning the occluder, or the
        // downstream ROI inherits the occluder's depth pixels
        let Some(component) = largest_visible_component(&visible_mask, rw, rh) else {
            continue;
        };
        if occupied == 0 || component.pixels < min_pixels.max(1) {
            continue;
        }
        detections.push(Detection {
            bbox: BoundingBox::from_pixel_bounds(
                u0 + component.u_min,
                v0 + component.v_min,
                u0 + component.u_max,
                v0 + component.v_max,
            ),
            class: obj.class,
            confidence: visible as f64 / occupied as f64,
        });
    }
    detections
}

struct VisibleComponent {
    pixels: usize,
    u_min: u32,
    v_min: u32,
    u_max: u32,
    v_max: u32,
}

/// Largest 4-connected component of the visibility mask within the rect.
fn largest_visible_component(mask: &[bool], rw: usize, rh: usize) -> Option<VisibleComponent> {
    let mut seen = vec![false; mask.len()];
    let mut best: Option<VisibleComponent> = None;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut component = VisibleComponent {
            pixels: 0,
            u_min: u32::MAX,
            v_min: u32::MAX,
            u_max: 0,
            v_max: 0,
        };
        stack.push(start);
        seen[start] = true;
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % rw, idx / rw);
            component.pixels += 1;
            component.u_min = component.u_min.min(x as u32);
            component.v_min = component.v_min.min(y as u32);
            component.u_max = component.u_max.max(x as u32);
            component.v_max = component.v_max.max(y as u32);
            let mut push = |nx: usize, ny: usize| {
                let n = ny * rw + nx;
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < rw {
                push(x + 1, y);
            }
            if y > 0 {
                push(x, y - 1);
            }
            if y + 1 < rh {
                push(x, y + 1);
            }
        }
        if best.as_ref().is_none_or(|b| component.pixels > b.pixels) {
            best = Some(component);
        }
    }
    best
}

/// Conservative image-clipped pixel rectangle covering the projection of
/// the given boxes: the projected corner bounds (the boxes are convex, so
/// their projections lie inside the corner hull). Falls back to the full
/// image when a corner sits behind the camera. `None` when nothing can be
/// visible.
fn projection_rect(
    boxes: &[super::shapes::SceneBox],
    cam_from_world: &RigidTransform3,
    cam: &CameraModel,
) -> Option<(u32, u32, u32, u32)> {
    let mut u_min = f64::INFINITY;
    let mut v_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    let mut any_in_front = false;
    let mut any_behind = false;

    for b in boxes {
        for c in b.obox.corners() {
            let p = apply_transform(cam_from_world, Point3::new(c[0], c[1], c[2]));
            if p.z <= 1e-9 {
                any_behind = true;
                continue;
            }
            any_in_front = true;
            let (u, v) = project_point(p, cam).expect("z > 0");
            u_min = u_min.min(u);
            v_min = v_min.min(v);
            u_max = u_max.max(u);
            v_max = v_max.max(v);
        }
    }
    if !any_in_front {
        return None;
    }
    if any_behind {
        // part of the object wraps behind the image plane; be safe
        return Some((0, 0, cam.width - 1, cam.height - 1));
    }
    let u0 = u_min.floor().max(0.0) as u32;
    let v0 = v_min.floor().max(0.0) as u32;
    if u_max < 0.0 || v_max < 0.0 || u0 >= cam.width || v0 >= cam.height {
        return None;
    }
    let u1 = (u_max.ceil() as u32).min(cam.width - 1);
    let v1 = (v_max.ceil() as u32).min(cam.height - 1);
    (u0 <= u1 && v0 <= v1).then_some((u0, v0, u1, v1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compose, RobotPose2D};
    use crate::scene::{Bounds, SceneObject, Wall};

    fn camera() -> (CameraModel, RigidTransform3) {
        (
            CameraModel::default_rgbd(),
            compose(
                &RobotPose2D::new(0.0, 0.0, 0.0).to_transform(),
                &RigidTransform3::camera_mount(0.3),
            ),
        )
    }

    fn room() -> SceneDescription {
        SceneDescription::new(
            Bounds {
                min: [-10.0, -10.0],
                max: [10.0, 10.0],
            },
            vec![Wall {
                min: [8.0, -10.0, 0.0],
                max: [8.2, 10.0, 2.5],
            }],
            vec![],
        )
    }

    #[test]
    fn fully_visible_table_bbox_matches_rendered_extent() {
        let (cam, pose) = camera();
        let mut scene = room();
        scene
            .objects
            .push(SceneObject::new(1, ObjectClass::Desk, 2.5, 0.0, 0.0));

        let dets = oracle_detect(&scene, &pose, &cam, 50, 0);
        assert_eq!(dets.len(), 1);
        let det = &dets[0];
        assert_eq!(det.class, ObjectClass::Desk);
        assert!((det.confidence - 1.0).abs() < 1e-12);

        // oracle bbox equals the pixel extent of the desk in the full render
        let img = super::super::render::render_depth(&scene, &pose, &cam, 0.0, 0);
        let wall_depth = 8.0;
        let (mut u_min, mut v_min, mut u_max, mut v_max) = (u32::MAX, u32::MAX, 0u32, 0u32);
        for v in 0..cam.height {
            for u in 0..cam.width {
                if let Some(d) = img.get(u, v) {
                    if d < wall_depth - 0.5 {
                        u_min = u_min.min(u);
                        v_min = v_min.min(v);
                        u_max = u_max.max(u);
                        v_max = v_max.max(v);
                    }
                }
            }
        }
        let expected = BoundingBox::from_pixel_bounds(u_min, v_min, u_max, v_max);
        assert_eq!(det.bbox, expected);
    }

    #[test]
    fn object_outside_fov_yields_no_detection() {
        let (cam, pose) = camera();
        let mut scene = room();
        // directly behind the camera
        scene
            .objects
            .push(SceneObject::new(1, ObjectClass::Chair, -3.0, 0.0, 0.0));
        assert!(oracle_detect(&scene, &pose, &cam, 50, 0).is_empty());
    }

    #[test]
    fn two_objects_two_detections_with_distinct_classes() {
        let (cam, pose) = camera();
        let mut scene = room();
        scene
            .objects
            .push(SceneObject::new(1, ObjectClass::Chair, 2.5, -0.9, 0.0));
        scene
            .objects
            .push(SceneObject::new(2, ObjectClass::Desk, 2.5, 0.9, 0.0));
        let dets = oracle_detect(&scene, &pose, &cam, 50, 0);
        assert_eq!(dets.len(), 2);
        let classes: Vec<_> = dets.iter().map(|d| d.class).collect();
        assert!(classes.contains(&ObjectClass::Chair));
        assert!(classes.contains(&ObjectClass::Desk));
    }

    #[test]
    fn split_visibility_boxes_the_largest_fragment() {
        let (cam, pose) = camera();
        let mut scene = room();
        // a tall edge-on whiteboard cuts a full-height stripe out of the
        // wide table behind it, splitting its visibility into two
        // fragments; the table's box must hug the larger fragment instead
        // of spanning the occluder
        scene.objects.push(SceneObject::new(
            1,
            ObjectClass::ConferenceTable,
            4.0,
            0.0,
            std::f64::consts::FRAC_PI_2,
        ));
        scene
            .objects
            .push(SceneObject::new(2, ObjectClass::Whiteboard, 2.0, 0.0, 0.0));
        let dets = oracle_detect(&scene, &pose, &cam, 50, 0);
        let table = dets
            .iter()
            .find(|d| d.class == ObjectClass::ConferenceTable)
            .expect("side fragments stay detectable");
        let board = dets
            .iter()
            .find(|d| d.class == ObjectClass::Whiteboard)
            .unwrap();
        assert!(table.confidence < 1.0);
        let overlap = iou_overlap(&table.bbox, &board.bbox);
        assert!(
            overlap < 0.25,
            "table box spans the occluder (overlap {overlap:.2})"
        );
    }

    fn iou_overlap(a: &BoundingBox, b: &BoundingBox) -> f64 {
        let (ax0, ay0, ax1, ay1) = a.corners();
        let (bx0, by0, bx1, by1) = b.corners();
        let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
        let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
        iw * ih / (a.w * a.h)
    }

    #[test]
    fn occluded_object_confidence_drops_and_min_pixels_gates() {
        let (cam, pose) = camera();
        let mut scene = room();
        // sofa in front of the desk, partially hiding it
        scene
            .objects
            .push(SceneObject::new(1, ObjectClass::Desk, 4.0, 0.0, 0.0));
        scene
            .objects
            .push(SceneObject::new(2, ObjectClass::Sofa, 2.0, -0.5, 0.0));
        let dets = oracle_detect(&scene, &pose, &cam, 50, 0);
        let desk = dets.iter().find(|d| d.class == ObjectClass::Desk).unwrap();
        assert!(desk.confidence < 1.0);
        let sofa = dets.iter().find(|d| d.class == ObjectClass::Sofa).unwrap();
        assert!((sofa.confidence - 1.0).abs() < 1e-12);

        // an absurd min_pixels threshold suppresses everything
        assert!(oracle_detect(&scene, &pose, &cam, 10_000_000, 0).is_empty());
    }
}
