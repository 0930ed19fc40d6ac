//! Oriented boxes and the box unions making up each furniture piece.

use super::{SceneObject, Structure, Wall};

/// Which part of an object a box represents; used by collision reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxPart {
    Slab,
    Leg,
    Pedestal,
    Body,
    Wall,
}

/// A yaw-oriented box: rectangle in the xy plane at `(cx, cy)` rotated by
/// `yaw`, extruded over `[z_min, z_max]`.
#[derive(Debug, Clone, Copy)]
pub struct OrientedBox {
    pub cx: f64,
    pub cy: f64,
    pub half_w: f64,
    pub half_d: f64,
    pub yaw: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl OrientedBox {
    pub fn from_wall(w: &Wall) -> Self {
        Self {
            cx: (w.min[0] + w.max[0]) / 2.0,
            cy: (w.min[1] + w.max[1]) / 2.0,
            half_w: (w.max[0] - w.min[0]) / 2.0,
            half_d: (w.max[1] - w.min[1]) / 2.0,
            yaw: 0.0,
            z_min: w.min[2],
            z_max: w.max[2],
        }
    }

    /// Nearest intersection parameter `t >= t_min` of the ray
    /// `origin + t * dir` with the box, or `None`. `dir` need not be
    /// normalized; `t` is in units of `dir`.
    pub fn ray_intersect(&self, origin: [f64; 3], dir: [f64; 3], t_min: f64) -> Option<f64> {
        // Rotate the ray into the box frame (yaw only).
        let (sin, cos) = (-self.yaw).sin_cos();
        let ox = origin[0] - self.cx;
        let oy = origin[1] - self.cy;
        let o = [ox * cos - oy * sin, ox * sin + oy * cos, origin[2]];
        let d = [
            dir[0] * cos - dir[1] * sin,
            dir[0] * sin + dir[1] * cos,
            dir[2],
        ];

        let mut t_enter = f64::NEG_INFINITY;
        let mut t_exit = f64::INFINITY;
        let bounds = [
            (-self.half_w, self.half_w),
            (-self.half_d, self.half_d),
            (self.z_min, self.z_max),
        ];
        for axis in 0..3 {
            let (lo, hi) = bounds[axis];
            if d[axis] == 0.0 {
                if o[axis] < lo || o[axis] > hi {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d[axis];
            let (t1, t2) = ((lo - o[axis]) * inv, (hi - o[axis]) * inv);
            t_enter = t_enter.max(t1.min(t2));
            t_exit = t_exit.min(t1.max(t2));
            if t_enter > t_exit {
                return None;
            }
        }
        if t_exit < t_min {
            return None;
        }
        Some(t_enter.max(t_min))
    }

    /// Horizontal distance from a 2D point to the box footprint (0 inside).
    pub fn horizontal_distance(&self, p: [f64; 2]) -> f64 {
        let (sin, cos) = (-self.yaw).sin_cos();
        let px = p[0] - self.cx;
        let py = p[1] - self.cy;
        let lx = (px * cos - py * sin).abs();
        let ly = (px * sin + py * cos).abs();
        let dx = (lx - self.half_w).max(0.0);
        let dy = (ly - self.half_d).max(0.0);
        dx.hypot(dy)
    }

    /// The eight corner points in the map frame.
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let (sin, cos) = self.yaw.sin_cos();
        let mut out = [[0.0; 3]; 8];
        let mut i = 0;
        for &sx in &[-1.0, 1.0] {
            for &sy in &[-1.0, 1.0] {
                for &z in &[self.z_min, self.z_max] {
                    let lx = sx * self.half_w;
                    let ly = sy * self.half_d;
                    out[i] = [
                        self.cx + lx * cos - ly * sin,
                        self.cy + lx * sin + ly * cos,
                        z,
                    ];
                    i += 1;
                }
            }
        }
        out
    }
}

/// A box together with where it came from.
#[derive(Debug, Clone, Copy)]
pub struct SceneBox {
    pub obox: OrientedBox,
    pub object_id: Option<u32>,
    pub part: BoxPart,
}

pub(super) fn object_boxes(obj: &SceneObject) -> Vec<(OrientedBox, BoxPart)> {
    let s = obj.shape();
    let make = |lx: f64, ly: f64, half_w: f64, half_d: f64, z_min: f64, z_max: f64| {
        let (sin, cos) = obj.yaw.sin_cos();
        OrientedBox {
            cx: obj.x + lx * cos - ly * sin,
            cy: obj.y + lx * sin + ly * cos,
            half_w,
            half_d,
            yaw: obj.yaw,
            z_min,
            z_max,
        }
    };

    match obj.class.structure() {
        Structure::Solid => {
            vec![(
                make(0.0, 0.0, s.slab_width / 2.0, s.slab_depth / 2.0, 0.0, s.slab_top_height),
                BoxPart::Body,
            )]
        }
        Structure::HollowBottom | Structure::PartlyHollow => {
            let slab_bottom = s.slab_top_height - s.slab_thickness;
            let mut boxes = vec![(
                make(
                    0.0,
                    0.0,
                    s.slab_width / 2.0,
                    s.slab_depth / 2.0,
                    slab_bottom,
                    s.slab_top_height,
                ),
                BoxPart::Slab,
            )];
            if s.leg_size > 0.0 {
                let lx = s.slab_width / 2.0 - s.leg_size / 2.0;
                let ly = s.slab_depth / 2.0 - s.leg_size / 2.0;
                let half = s.leg_size / 2.0;
                for &(px, py) in &[(-lx, -ly), (lx, -ly), (lx, ly), (-lx, ly)] {
                    boxes.push((make(px, py, half, half, 0.0, slab_bottom), BoxPart::Leg));
                }
            }
            if obj.class.structure() == Structure::PartlyHollow && s.pedestal_width > 0.0 {
                boxes.push((
                    make(
                        0.0,
                        0.0,
                        s.pedestal_width / 2.0,
                        s.pedestal_depth / 2.0,
                        0.0,
                        slab_bottom,
                    ),
                    BoxPart::Pedestal,
                ));
            }
            boxes
        }
    }
}
