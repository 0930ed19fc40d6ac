//! Ray-cast depth rendering against the scene's box union.
//!
//! Depth is the distance along the optical axis (z-depth), not the ray
//! length, so `back_project(u, v, depth)` reconstructs the exact hit point.

use super::shapes::SceneBox;
use super::SceneDescription;
use crate::geometry::{CameraModel, RigidTransform3};
use crate::seeding::mix_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Sentinel for pixels with no return. Kept at 0 so depth buffers stay
/// NaN-free and portable.
pub const DEPTH_NO_RETURN: f32 = 0.0;

/// Row-major z-depth image in meters; 0 marks no return.
#[derive(Debug, Clone)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub depths: Vec<f32>,
}

impl DepthImage {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            depths: vec![DEPTH_NO_RETURN; (width * height) as usize],
        }
    }

    #[inline]
    pub fn at(&self, u: u32, v: u32) -> f32 {
        self.depths[(v * self.width + u) as usize]
    }

    /// Depth at a pixel, or `None` on no-return.
    #[inline]
    pub fn get(&self, u: u32, v: u32) -> Option<f64> {
        let d = self.at(u, v);
        (d > 0.0).then_some(d as f64)
    }

    pub fn valid_count(&self) -> usize {
        self.depths.iter().filter(|d| **d > 0.0).count()
    }
}

struct RayContext<'a> {
    boxes: &'a [SceneBox],
    origin: [f64; 3],
    rot: [[f64; 3]; 3],
    cam: CameraModel,
}

impl RayContext<'_> {
    #[inline]
    fn pixel_ray(&self, u: f64, v: f64) -> [f64; 3] {
        let dc = [
            (u - self.cam.cx) / self.cam.fx,
            (v - self.cam.cy) / self.cam.fy,
            1.0,
        ];
        let r = &self.rot;
        [
            r[0][0] * dc[0] + r[0][1] * dc[1] + r[0][2] * dc[2],
            r[1][0] * dc[0] + r[1][1] * dc[1] + r[1][2] * dc[2],
            r[2][0] * dc[0] + r[2][1] * dc[1] + r[2][2] * dc[2],
        ]
    }

    /// Nearest z-depth at a pixel, before range gating.
    #[inline]
    fn trace(&self, u: f64, v: f64) -> Option<f64> {
        let dir = self.pixel_ray(u, v);
        let mut best = f64::INFINITY;
        for b in self.boxes {
            if let Some(t) = b.obox.ray_intersect(self.origin, dir, 1e-9) {
                if t < best {
                    best = t;
                }
            }
        }
        best.is_finite().then_some(best)
    }

    fn render_row(&self, v: u32, sigma: f64, seed: u64, row: &mut [f32]) {
        let mut rng = (sigma > 0.0).then(|| {
            let normal = Normal::new(0.0, sigma).expect("sigma >= 0");
            (ChaCha8Rng::seed_from_u64(mix_seed(seed, v as u64)), normal)
        });
        for (u, out) in row.iter_mut().enumerate() {
            *out = DEPTH_NO_RETURN;
            if let Some(depth) = self.trace(u as f64, v as f64) {
                if depth >= self.cam.depth_min && depth <= self.cam.depth_max {
                    let noisy = match rng.as_mut() {
                        Some((rng, normal)) => {
                            (depth + normal.sample(rng)).clamp(self.cam.depth_min, self.cam.depth_max)
                        }
                        None => depth,
                    };
                    *out = noisy as f32;
                }
            }
        }
    }
}

fn make_context<'a>(
    boxes: &'a [SceneBox],
    camera_pose: &RigidTransform3,
    cam: &CameraModel,
) -> RayContext<'a> {
    let r = camera_pose.rotation();
    let t = camera_pose.translation();
    RayContext {
        boxes,
        origin: [t.x, t.y, t.z],
        rot: [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ],
        cam: cam.clone(),
    }
}

/// Renders the scene into a depth image. Additive Gaussian noise with the
/// given sigma is applied per pixel (seeded per row, so results do not
/// depend on thread scheduling) and the result clamped back into the valid
/// depth range. Dispatches to the rayon path when the `parallel` feature is
/// enabled.
pub fn render_depth(
    scene: &SceneDescription,
    camera_pose: &RigidTransform3,
    cam: &CameraModel,
    noise_sigma: f64,
    seed: u64,
) -> DepthImage {
    let boxes = scene.all_boxes();
    render_boxes(&boxes, camera_pose, cam, noise_sigma, seed)
}

pub(super) fn render_boxes(
    boxes: &[SceneBox],
    camera_pose: &RigidTransform3,
    cam: &CameraModel,
    noise_sigma: f64,
    seed: u64,
) -> DepthImage {
    #[cfg(feature = "parallel")]
    {
        render_boxes_par(boxes, camera_pose, cam, noise_sigma, seed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        render_boxes_seq(boxes, camera_pose, cam, noise_sigma, seed)
    }
}

/// Sequential fallback renderer; always available.
pub fn render_depth_seq(
    scene: &SceneDescription,
    camera_pose: &RigidTransform3,
    cam: &CameraModel,
    noise_sigma: f64,
    seed: u64,
) -> DepthImage {
    let boxes = scene.all_boxes();
    render_boxes_seq(&boxes, camera_pose, cam, noise_sigma, seed)
}

pub(super) fn render_boxes_seq(
    boxes: &[SceneBox],
    camera_pose: &RigidTransform3,
    cam: &CameraModel,
    noise_sigma: f64,
    seed: u64,
) -> DepthImage {
    let ctx = make_context(boxes, camera_pose, cam);
    let mut img = DepthImage::empty(cam.width, cam.height);
    let w = cam.width as usize;
    for (v, row) in img.depths.chunks_mut(w).enumerate() {
        ctx.render_row(v as u32, noise_sigma, seed, row);
    }
    img
}

/// Rayon renderer: rows are rendered in parallel.
#[cfg(feature = "parallel")]
pub fn render_depth_par(
    scene: &SceneDescription,
    camera_pose: &RigidTransform3,
    cam: &CameraModel,
    noise_sigma: f64,
    seed: u64,
) -> DepthImage {
    let boxes = scene.all_boxes();
    render_boxes_par(&boxes, camera_pose, cam, noise_sigma, seed)
}

#[cfg(feature = "parallel")]
pub(super) fn render_boxes_par(
    boxes: &[SceneBox],
    camera_pose: &RigidTransform3,
    cam: &CameraModel,
    noise_sigma: f64,
    seed: u64,
) -> DepthImage {
    use rayon::prelude::*;
    let ctx = make_context(boxes, camera_pose, cam);
    let mut img = DepthImage::empty(cam.width, cam.height);
    let w = cam.width as usize;
    img.depths
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(v, row)| ctx.render_row(v as u32, noise_sigma, seed, row));
    img
}

/// Renders only the given boxes over a pixel rectangle; used by the
/// detection oracle for per-object visibility buffers. Pixels outside the
/// rectangle stay no-return.
pub(super) fn render_boxes_rect(
    boxes: &[SceneBox],
    camera_pose: &RigidTransform3,
    cam: &CameraModel,
    rect: (u32, u32, u32, u32),
) -> DepthImage {
    let ctx = make_context(boxes, camera_pose, cam);
    let (u0, v0, u1, v1) = rect;
    let mut img = DepthImage::empty(cam.width, cam.height);
    for v in v0..=v1 {
        for u in u0..=u1 {
            if let Some(depth) = ctx.trace(u as f64, v as f64) {
                if depth >= cam.depth_min && depth <= cam.depth_max {
                    img.depths[(v * cam.width + u) as usize] = depth as f32;
                }
            }
        }
    }
    img
}
